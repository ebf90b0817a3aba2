#pragma once

namespace vmtu {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace vmtu
