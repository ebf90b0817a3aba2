#include "vmtu/simd/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace vmtu::simd {

#if defined(VMTU_HAVE_AVX2)
const KernelTable* avx2_kernels_impl();
#endif

const KernelTable* avx2_kernels()
{
#if defined(VMTU_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? avx2_kernels_impl() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& kernels()
{
    static const KernelTable& selected = [] () -> const KernelTable& {
        const char* forced = std::getenv("VMTU_ISA");
        if (forced != nullptr && std::strcmp(forced, "scalar") == 0)
            return scalar_kernels();
        if (const KernelTable* avx2 = avx2_kernels())
            return *avx2;
        return scalar_kernels();
    }();
    return selected;
}

}  // namespace vmtu::simd
