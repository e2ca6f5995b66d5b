#include <cstdlib>
#include <cstring>

#include "smilansky/kernels.hpp"

namespace smilansky {

const KernelTable& avx2_table();

const KernelTable* avx2_kernels() {
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok ? &avx2_table() : nullptr;
}

const KernelTable& kernels() {
    static const KernelTable* chosen = [] {
        const char* env = std::getenv("SMILANSKY_SIMD");
        if (env && std::strcmp(env, "scalar") == 0) return &scalar_kernels();
        const KernelTable* v = avx2_kernels();
        return v ? v : &scalar_kernels();
    }();
    return *chosen;
}

}  // namespace smilansky
