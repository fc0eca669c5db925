#include "parseq/kernels.hpp"

#include <stdexcept>

namespace parseq::kernels {

const Ops* avx2_ops_table();  // kernels_avx2.cpp; null when not compiled in

bool avx2_available() {
#if defined(__x86_64__)
    static const bool ok = avx2_ops_table() != nullptr &&
                           __builtin_cpu_supports("avx2") &&
                           __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

const Ops& avx2_ops() {
    if (!avx2_available()) throw std::runtime_error("avx2 kernels unavailable");
    return *avx2_ops_table();
}

const Ops& active_ops() {
    static const Ops& selected = avx2_available() ? *avx2_ops_table() : scalar_ops();
    return selected;
}

}  // namespace parseq::kernels
