#include "sblt/simd.hpp"

#include <cstdlib>

namespace sblt::simd {

#if defined(__x86_64__) || defined(_M_X64)
const Kernels& avx2_kernels();
#endif

const Kernels& kernels() {
    static const Kernels* chosen = [] {
        if (const char* f = std::getenv("SBLT_FORCE_SCALAR"); f && f[0] == '1')
            return &scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
        if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
            return &avx2_kernels();
#endif
        return &scalar_kernels();
    }();
    return *chosen;
}

}  // namespace sblt::simd
