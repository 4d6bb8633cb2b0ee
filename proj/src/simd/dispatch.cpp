#include <cstdlib>
#include <string_view>

#include "advs/simd/kernels.hpp"

namespace advs::kernels {

namespace {

void conv_fwd(const ConvGeom& g, const float* in, const float* k, const float* b, float* out) {
    conv2d_forward_ref(g, in, k, b, out);
}
void conv_din(const ConvGeom& g, const float* dout, const float* k, float* din) {
    conv2d_input_grad_ref(g, dout, k, din);
}
void conv_dk(const ConvGeom& g, const float* in, const float* dout, float* dk) {
    conv2d_kernel_grad_ref(g, in, dout, dk);
}
void dense_fwd(std::size_t m, std::size_t n, const float* x, const float* w, const float* b, float* out) {
    dense_forward_ref(m, n, x, w, b, out);
}
void dense_dx(std::size_t m, std::size_t n, const float* w, const float* grad, float* dx) {
    dense_input_grad_ref(m, n, w, grad, dx);
}

constexpr KernelTable kScalar{"scalar", conv_fwd, conv_din, conv_dk, dense_fwd, dense_dx};

}  // namespace

#if defined(__x86_64__) && defined(ADVS_HAVE_AVX2)
const KernelTable& avx2_table_unchecked();
#endif

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if defined(__x86_64__) && defined(ADVS_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &avx2_table_unchecked() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable& chosen = [] () -> const KernelTable& {
        const char* env = std::getenv("ADVS_KERNELS");
        if (env && std::string_view(env) == "scalar") return kScalar;
        if (const KernelTable* t = avx2_table()) return *t;
        return kScalar;
    }();
    return chosen;
}

}  // namespace advs::kernels
