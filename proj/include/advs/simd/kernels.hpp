#pragma once

// Inner-loop kernels behind conv2d and dense.
//
// Every kernel accumulates in double and visits the reduction terms in one
// fixed order per output element. The AVX2 variants only vectorize across
// independent output elements, so for float storage they produce results
// bitwise-identical to the scalar reference.

#include <cstddef>

namespace advs::kernels {

struct ConvGeom {
    std::size_t cin, h, w;     // input
    std::size_t cout, kh, kw;  // kernel
    std::size_t stride, pad;
    std::size_t oh, ow;  // output

    static ConvGeom make(std::size_t cin, std::size_t h, std::size_t w, std::size_t cout, std::size_t kh,
                         std::size_t kw, std::size_t stride, std::size_t pad) {
        return {cin, h, w, cout, kh, kw, stride, pad, (h + 2 * pad - kh) / stride + 1, (w + 2 * pad - kw) / stride + 1};
    }
};

// ---------------------------------------------------------------------------
// Scalar reference. Term order per output element:
//   conv forward      out[co,oy,ox] = sum_{ci,ky,kx} in * k, then + bias
//   conv input grad   din[ci,iy,ix] = sum_{co,ky,kx} dout * k
//   conv kernel grad  dk[co,ci,ky,kx] = sum_{oy,ox} dout * in
//   dense forward     out[i] = sum_j w[i,j] * x[j], then + b[i]
//   dense input grad  dx[j] = sum_i g[i] * w[i,j]
// Terms that fall into zero padding are skipped; adding an exact zero to a
// non-negative-zero accumulator does not change it, so padded variants agree.
// ---------------------------------------------------------------------------

template <typename T>
void conv2d_forward_ref(const ConvGeom& g, const T* in, const T* kernel, const T* bias, T* out) {
    for (std::size_t co = 0; co < g.cout; ++co)
        for (std::size_t oy = 0; oy < g.oh; ++oy)
            for (std::size_t ox = 0; ox < g.ow; ++ox) {
                double acc = 0.0;
                for (std::size_t ci = 0; ci < g.cin; ++ci)
                    for (std::size_t ky = 0; ky < g.kh; ++ky) {
                        const std::ptrdiff_t iy = std::ptrdiff_t(oy * g.stride + ky) - std::ptrdiff_t(g.pad);
                        if (iy < 0 || iy >= std::ptrdiff_t(g.h)) continue;
                        for (std::size_t kx = 0; kx < g.kw; ++kx) {
                            const std::ptrdiff_t ix = std::ptrdiff_t(ox * g.stride + kx) - std::ptrdiff_t(g.pad);
                            if (ix < 0 || ix >= std::ptrdiff_t(g.w)) continue;
                            acc += double(in[(ci * g.h + iy) * g.w + ix]) *
                                   double(kernel[((co * g.cin + ci) * g.kh + ky) * g.kw + kx]);
                        }
                    }
                out[(co * g.oh + oy) * g.ow + ox] = T(acc + double(bias[co]));
            }
}

template <typename T>
void conv2d_input_grad_ref(const ConvGeom& g, const T* dout, const T* kernel, T* din) {
    for (std::size_t ci = 0; ci < g.cin; ++ci)
        for (std::size_t iy = 0; iy < g.h; ++iy)
            for (std::size_t ix = 0; ix < g.w; ++ix) {
                double acc = 0.0;
                for (std::size_t co = 0; co < g.cout; ++co)
                    for (std::size_t ky = 0; ky < g.kh; ++ky) {
                        const std::ptrdiff_t ny = std::ptrdiff_t(iy + g.pad) - std::ptrdiff_t(ky);
                        if (ny < 0 || ny % std::ptrdiff_t(g.stride) != 0) continue;
                        const std::size_t oy = std::size_t(ny) / g.stride;
                        if (oy >= g.oh) continue;
                        for (std::size_t kx = 0; kx < g.kw; ++kx) {
                            const std::ptrdiff_t nx = std::ptrdiff_t(ix + g.pad) - std::ptrdiff_t(kx);
                            if (nx < 0 || nx % std::ptrdiff_t(g.stride) != 0) continue;
                            const std::size_t ox = std::size_t(nx) / g.stride;
                            if (ox >= g.ow) continue;
                            acc += double(dout[(co * g.oh + oy) * g.ow + ox]) *
                                   double(kernel[((co * g.cin + ci) * g.kh + ky) * g.kw + kx]);
                        }
                    }
                din[(ci * g.h + iy) * g.w + ix] = T(acc);
            }
}

template <typename T>
void conv2d_kernel_grad_ref(const ConvGeom& g, const T* in, const T* dout, T* dkernel) {
    for (std::size_t co = 0; co < g.cout; ++co)
        for (std::size_t ci = 0; ci < g.cin; ++ci)
            for (std::size_t ky = 0; ky < g.kh; ++ky)
                for (std::size_t kx = 0; kx < g.kw; ++kx) {
                    double acc = 0.0;
                    for (std::size_t oy = 0; oy < g.oh; ++oy) {
                        const std::ptrdiff_t iy = std::ptrdiff_t(oy * g.stride + ky) - std::ptrdiff_t(g.pad);
                        if (iy < 0 || iy >= std::ptrdiff_t(g.h)) continue;
                        for (std::size_t ox = 0; ox < g.ow; ++ox) {
                            const std::ptrdiff_t ix = std::ptrdiff_t(ox * g.stride + kx) - std::ptrdiff_t(g.pad);
                            if (ix < 0 || ix >= std::ptrdiff_t(g.w)) continue;
                            acc += double(dout[(co * g.oh + oy) * g.ow + ox]) * double(in[(ci * g.h + iy) * g.w + ix]);
                        }
                    }
                    dkernel[((co * g.cin + ci) * g.kh + ky) * g.kw + kx] = T(acc);
                }
}

template <typename T>
void dense_forward_ref(std::size_t m, std::size_t n, const T* x, const T* w, const T* b, T* out) {
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += double(w[i * n + j]) * double(x[j]);
        out[i] = T(acc + double(b[i]));
    }
}

template <typename T>
void dense_input_grad_ref(std::size_t m, std::size_t n, const T* w, const T* grad, T* dx) {
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += double(grad[i]) * double(w[i * n + j]);
        dx[j] = T(acc);
    }
}

// ---------------------------------------------------------------------------
// Runtime-selected float kernels.
// ---------------------------------------------------------------------------

struct KernelTable {
    const char* name;
    void (*conv2d_forward)(const ConvGeom&, const float* in, const float* kernel, const float* bias, float* out);
    void (*conv2d_input_grad)(const ConvGeom&, const float* dout, const float* kernel, float* din);
    void (*conv2d_kernel_grad)(const ConvGeom&, const float* in, const float* dout, float* dkernel);
    void (*dense_forward)(std::size_t m, std::size_t n, const float* x, const float* w, const float* b, float* out);
    void (*dense_input_grad)(std::size_t m, std::size_t n, const float* w, const float* grad, float* dx);
};

const KernelTable& scalar_table();

/// nullptr when the build has no AVX2 variant or the CPU lacks AVX2.
const KernelTable* avx2_table();

/// Chosen once: AVX2 when available, unless ADVS_KERNELS=scalar is set.
const KernelTable& active();

}  // namespace advs::kernels
