#if defined(__x86_64__) && defined(ADVS_HAVE_AVX2)

#include <immintrin.h>

#include <vector>

#include "advs/simd/kernels.hpp"

#define ADVS_AVX2 __attribute__((target("avx2")))

namespace advs::kernels {

namespace {

// Zero-padded copy of a [c,h,w] float map widened to double.
std::vector<double> pad_to_double(const float* src, std::size_t c, std::size_t h, std::size_t w, std::size_t py,
                                  std::size_t px) {
    const std::size_t hp = h + 2 * py, wp = w + 2 * px;
    std::vector<double> dst(c * hp * wp, 0.0);
    for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t y = 0; y < h; ++y) {
            const float* s = src + (ci * h + y) * w;
            double* d = dst.data() + (ci * hp + y + py) * wp + px;
            for (std::size_t x = 0; x < w; ++x) d[x] = s[x];
        }
    return dst;
}

ADVS_AVX2 inline __m256d load4(const float* p) { return _mm256_cvtps_pd(_mm_loadu_ps(p)); }

ADVS_AVX2 inline void store4(float* p, __m256d v) { _mm_storeu_ps(p, _mm256_cvtpd_ps(v)); }

ADVS_AVX2 void conv_fwd(const ConvGeom& g, const float* in, const float* kernel, const float* bias, float* out) {
    if (g.stride != 1) return conv2d_forward_ref(g, in, kernel, bias, out);
    const std::size_t hp = g.h + 2 * g.pad, wp = g.w + 2 * g.pad;
    const std::vector<double> pin = pad_to_double(in, g.cin, g.h, g.w, g.pad, g.pad);
    const std::vector<double> kd(kernel, kernel + g.cout * g.cin * g.kh * g.kw);
    const std::size_t ksz = g.kh * g.kw;

    for (std::size_t co = 0; co < g.cout; ++co) {
        const double* kc = kd.data() + co * g.cin * ksz;
        const double b = bias[co];
        const __m256d vb = _mm256_set1_pd(b);
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
            float* orow = out + (co * g.oh + oy) * g.ow;
            std::size_t ox = 0;
            for (; ox + 8 <= g.ow; ox += 8) {
                __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
                for (std::size_t ci = 0; ci < g.cin; ++ci)
                    for (std::size_t ky = 0; ky < g.kh; ++ky) {
                        const double* r = pin.data() + (ci * hp + oy + ky) * wp + ox;
                        const double* kr = kc + ci * ksz + ky * g.kw;
                        for (std::size_t kx = 0; kx < g.kw; ++kx) {
                            const __m256d kv = _mm256_set1_pd(kr[kx]);
                            a0 = _mm256_add_pd(a0, _mm256_mul_pd(_mm256_loadu_pd(r + kx), kv));
                            a1 = _mm256_add_pd(a1, _mm256_mul_pd(_mm256_loadu_pd(r + kx + 4), kv));
                        }
                    }
                store4(orow + ox, _mm256_add_pd(a0, vb));
                store4(orow + ox + 4, _mm256_add_pd(a1, vb));
            }
            for (; ox + 4 <= g.ow; ox += 4) {
                __m256d a0 = _mm256_setzero_pd();
                for (std::size_t ci = 0; ci < g.cin; ++ci)
                    for (std::size_t ky = 0; ky < g.kh; ++ky) {
                        const double* r = pin.data() + (ci * hp + oy + ky) * wp + ox;
                        const double* kr = kc + ci * ksz + ky * g.kw;
                        for (std::size_t kx = 0; kx < g.kw; ++kx)
                            a0 = _mm256_add_pd(a0, _mm256_mul_pd(_mm256_loadu_pd(r + kx), _mm256_set1_pd(kr[kx])));
                    }
                store4(orow + ox, _mm256_add_pd(a0, vb));
            }
            for (; ox < g.ow; ++ox) {
                double acc = 0.0;
                for (std::size_t ci = 0; ci < g.cin; ++ci)
                    for (std::size_t ky = 0; ky < g.kh; ++ky) {
                        const double* r = pin.data() + (ci * hp + oy + ky) * wp + ox;
                        const double* kr = kc + ci * ksz + ky * g.kw;
                        for (std::size_t kx = 0; kx < g.kw; ++kx) acc += r[kx] * kr[kx];
                    }
                orow[ox] = float(acc + b);
            }
        }
    }
}

ADVS_AVX2 void conv_din(const ConvGeom& g, const float* dout, const float* kernel, float* din) {
    if (g.stride != 1) return conv2d_input_grad_ref(g, dout, kernel, din);
    const std::size_t py = g.kh - 1, px = g.kw - 1;
    const std::size_t dh = g.oh + 2 * py, dw = g.ow + 2 * px;
    const std::vector<double> pd = pad_to_double(dout, g.cout, g.oh, g.ow, py, px);
    const std::vector<double> kd(kernel, kernel + g.cout * g.cin * g.kh * g.kw);
    const std::size_t ksz = g.kh * g.kw;

    // dout[co, iy+pad-ky, ix+pad-kx] lives at pd[co, iy+pad-ky+py, ix+pad-kx+px].
    auto row_of = [&](std::size_t co, std::size_t iy, std::size_t ky, std::size_t ix) {
        return pd.data() + (co * dh + iy + g.pad + py - ky) * dw + (ix + g.pad + px);
    };

    for (std::size_t ci = 0; ci < g.cin; ++ci)
        for (std::size_t iy = 0; iy < g.h; ++iy) {
            float* drow = din + (ci * g.h + iy) * g.w;
            std::size_t ix = 0;
            for (; ix + 8 <= g.w; ix += 8) {
                __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
                for (std::size_t co = 0; co < g.cout; ++co)
                    for (std::size_t ky = 0; ky < g.kh; ++ky) {
                        const double* r = row_of(co, iy, ky, ix);
                        const double* kr = kd.data() + (co * g.cin + ci) * ksz + ky * g.kw;
                        for (std::size_t kx = 0; kx < g.kw; ++kx) {
                            const __m256d kv = _mm256_set1_pd(kr[kx]);
                            a0 = _mm256_add_pd(a0, _mm256_mul_pd(_mm256_loadu_pd(r - kx), kv));
                            a1 = _mm256_add_pd(a1, _mm256_mul_pd(_mm256_loadu_pd(r - kx + 4), kv));
                        }
                    }
                store4(drow + ix, a0);
                store4(drow + ix + 4, a1);
            }
            for (; ix + 4 <= g.w; ix += 4) {
                __m256d a0 = _mm256_setzero_pd();
                for (std::size_t co = 0; co < g.cout; ++co)
                    for (std::size_t ky = 0; ky < g.kh; ++ky) {
                        const double* r = row_of(co, iy, ky, ix);
                        const double* kr = kd.data() + (co * g.cin + ci) * ksz + ky * g.kw;
                        for (std::size_t kx = 0; kx < g.kw; ++kx)
                            a0 = _mm256_add_pd(a0, _mm256_mul_pd(_mm256_loadu_pd(r - kx), _mm256_set1_pd(kr[kx])));
                    }
                store4(drow + ix, a0);
            }
            for (; ix < g.w; ++ix) {
                double acc = 0.0;
                for (std::size_t co = 0; co < g.cout; ++co)
                    for (std::size_t ky = 0; ky < g.kh; ++ky) {
                        const double* r = row_of(co, iy, ky, ix);
                        const double* kr = kd.data() + (co * g.cin + ci) * ksz + ky * g.kw;
                        for (std::size_t kx = 0; kx < g.kw; ++kx) acc += r[-std::ptrdiff_t(kx)] * kr[kx];
                    }
                drow[ix] = float(acc);
            }
        }
}

ADVS_AVX2 void conv_dk(const ConvGeom& g, const float* in, const float* dout, float* dkernel) {
    if (g.stride != 1) return conv2d_kernel_grad_ref(g, in, dout, dkernel);
    const std::size_t hp = g.h + 2 * g.pad, wp = g.w + 2 * g.pad;
    const std::vector<double> pin = pad_to_double(in, g.cin, g.h, g.w, g.pad, g.pad);
    const std::size_t npos = g.oh * g.ow;

    // Position-major copy of dout so that consecutive output channels are contiguous.
    std::vector<double> dt(npos * g.cout);
    for (std::size_t co = 0; co < g.cout; ++co)
        for (std::size_t p = 0; p < npos; ++p) dt[p * g.cout + co] = dout[co * npos + p];

    const std::size_t ksz = g.kh * g.kw;
    auto dk_at = [&](std::size_t co, std::size_t ci, std::size_t ky, std::size_t kx) -> float& {
        return dkernel[(co * g.cin + ci) * ksz + ky * g.kw + kx];
    };

    for (std::size_t ci = 0; ci < g.cin; ++ci)
        for (std::size_t ky = 0; ky < g.kh; ++ky)
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
                std::size_t co = 0;
                for (; co + 16 <= g.cout; co += 16) {
                    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
                    __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
                    for (std::size_t oy = 0; oy < g.oh; ++oy) {
                        const double* r = pin.data() + (ci * hp + oy + ky) * wp + kx;
                        const double* d = dt.data() + oy * g.ow * g.cout + co;
                        for (std::size_t ox = 0; ox < g.ow; ++ox, d += g.cout) {
                            const __m256d v = _mm256_set1_pd(r[ox]);
                            a0 = _mm256_add_pd(a0, _mm256_mul_pd(_mm256_loadu_pd(d), v));
                            a1 = _mm256_add_pd(a1, _mm256_mul_pd(_mm256_loadu_pd(d + 4), v));
                            a2 = _mm256_add_pd(a2, _mm256_mul_pd(_mm256_loadu_pd(d + 8), v));
                            a3 = _mm256_add_pd(a3, _mm256_mul_pd(_mm256_loadu_pd(d + 12), v));
                        }
                    }
                    alignas(32) double tmp[16];
                    _mm256_store_pd(tmp, a0);
                    _mm256_store_pd(tmp + 4, a1);
                    _mm256_store_pd(tmp + 8, a2);
                    _mm256_store_pd(tmp + 12, a3);
                    for (std::size_t l = 0; l < 16; ++l) dk_at(co + l, ci, ky, kx) = float(tmp[l]);
                }
                for (; co + 4 <= g.cout; co += 4) {
                    __m256d a0 = _mm256_setzero_pd();
                    for (std::size_t oy = 0; oy < g.oh; ++oy) {
                        const double* r = pin.data() + (ci * hp + oy + ky) * wp + kx;
                        const double* d = dt.data() + oy * g.ow * g.cout + co;
                        for (std::size_t ox = 0; ox < g.ow; ++ox, d += g.cout)
                            a0 = _mm256_add_pd(a0, _mm256_mul_pd(_mm256_loadu_pd(d), _mm256_set1_pd(r[ox])));
                    }
                    alignas(32) double tmp[4];
                    _mm256_store_pd(tmp, a0);
                    for (std::size_t l = 0; l < 4; ++l) dk_at(co + l, ci, ky, kx) = float(tmp[l]);
                }
                for (; co < g.cout; ++co) {
                    double acc = 0.0;
                    for (std::size_t oy = 0; oy < g.oh; ++oy) {
                        const double* r = pin.data() + (ci * hp + oy + ky) * wp + kx;
                        const double* d = dt.data() + oy * g.ow * g.cout + co;
                        for (std::size_t ox = 0; ox < g.ow; ++ox, d += g.cout) acc += d[0] * r[ox];
                    }
                    dk_at(co, ci, ky, kx) = float(acc);
                }
            }
}

ADVS_AVX2 void dense_fwd(std::size_t m, std::size_t n, const float* x, const float* w, const float* b, float* out) {
    const int ni = static_cast<int>(n);
    const __m128i rows = _mm_setr_epi32(0, ni, 2 * ni, 3 * ni);
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        __m256d acc = _mm256_setzero_pd();
        const float* wi = w + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const __m256d wv = _mm256_cvtps_pd(_mm_i32gather_ps(wi + j, rows, 4));
            acc = _mm256_add_pd(acc, _mm256_mul_pd(wv, _mm256_set1_pd(double(x[j]))));
        }
        store4(out + i, _mm256_add_pd(acc, load4(b + i)));
    }
    for (; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += double(w[i * n + j]) * double(x[j]);
        out[i] = float(acc + double(b[i]));
    }
}

ADVS_AVX2 void dense_dx(std::size_t m, std::size_t n, const float* w, const float* grad, float* dx) {
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
        for (std::size_t i = 0; i < m; ++i) {
            const __m256d gv = _mm256_set1_pd(double(grad[i]));
            a0 = _mm256_add_pd(a0, _mm256_mul_pd(gv, load4(w + i * n + j)));
            a1 = _mm256_add_pd(a1, _mm256_mul_pd(gv, load4(w + i * n + j + 4)));
        }
        store4(dx + j, a0);
        store4(dx + j + 4, a1);
    }
    for (; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += double(grad[i]) * double(w[i * n + j]);
        dx[j] = float(acc);
    }
}

constexpr KernelTable kAvx2{"avx2", conv_fwd, conv_din, conv_dk, dense_fwd, dense_dx};

}  // namespace

const KernelTable& avx2_table_unchecked() { return kAvx2; }

}  // namespace advs::kernels

#endif
