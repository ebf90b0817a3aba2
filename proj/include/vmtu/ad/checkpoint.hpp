#pragma once

#include "vmtu/ad/tensor.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace vmtu::ad {

/// Parameter file layout (all integers little-endian):
///   8 bytes  magic "VMTUCKPT"
///   u32      format version (1)
///   u64      length of the JSON config block, then the UTF-8 JSON bytes
///   u32      tensor count
///   per tensor: u32 name length, name bytes, 4 x i32 shape (n,c,h,w),
///               n*c*h*w IEEE-754 binary64 values
struct Checkpoint {
    nlohmann::json config = nlohmann::json::object();
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor* find(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws IoError when the file cannot be opened, DecodeError on a malformed file.
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace vmtu::ad
