#pragma once

// Convolution and GEMM kernels.
//
// Two implementations of every convolution primitive:
//   kernels::ref  — serial direct loops, the reference used by tests
//   kernels::fast — im2col + GEMM, OpenMP-parallel, BLAS-backed when available
//
// The fast path is the production path; set_backend(Backend::reference) routes
// all layer code through the reference kernels instead. Every output element is
// accumulated in a fixed order by a single thread, so results are deterministic
// for any thread count.

#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#ifdef EGO2FRONT_USE_BLAS
extern "C" {
#include <cblas.h>
}
#endif

#include "ego2front/tensor.hpp"

namespace ego2front::nn {

enum class Backend { fast, reference };

inline Backend& backend_slot() {
    static Backend b = Backend::fast;
    return b;
}
inline void set_backend(Backend b) { backend_slot() = b; }
inline Backend backend() { return backend_slot(); }

// Geometry of one conv application (shared by forward and backward passes).
struct ConvSpec {
    int64_t in_c = 0, in_h = 0, in_w = 0;
    int64_t out_c = 0;
    int64_t k = 4, stride = 2, pad = 1;

    int64_t out_h() const { return (in_h + 2 * pad - k) / stride + 1; }
    int64_t out_w() const { return (in_w + 2 * pad - k) / stride + 1; }
};

// Transposed conv geometry: out = (in-1)*stride - 2*pad + k.
struct ConvTransposeSpec {
    int64_t in_c = 0, in_h = 0, in_w = 0;
    int64_t out_c = 0;
    int64_t k = 4, stride = 2, pad = 1;

    int64_t out_h() const { return (in_h - 1) * stride - 2 * pad + k; }
    int64_t out_w() const { return (in_w - 1) * stride - 2 * pad + k; }
};

namespace kernels {

// ---------------------------------------------------------------------------
// GEMM, row-major. C = alpha*op(A)*op(B) + beta*C.
// ---------------------------------------------------------------------------

template <typename T>
void gemm_serial(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
                 T alpha, const T* a, int64_t lda, const T* b, int64_t ldb,
                 T beta, T* c, int64_t ldc) {
    for (int64_t i = 0; i < m; ++i) {
        T* crow = c + i * ldc;
        if (beta == T(0)) {
            for (int64_t j = 0; j < n; ++j) crow[j] = T(0);
        } else if (beta != T(1)) {
            for (int64_t j = 0; j < n; ++j) crow[j] *= beta;
        }
        for (int64_t p = 0; p < k; ++p) {
            T av = trans_a ? a[p * lda + i] : a[i * lda + p];
            av *= alpha;
            if (av == T(0)) continue;
            if (trans_b) {
                for (int64_t j = 0; j < n; ++j) crow[j] += av * b[j * ldb + p];
            } else {
                const T* brow = b + p * ldb;
                for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    }
}

template <typename T>
void gemm_omp(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
              T alpha, const T* a, int64_t lda, const T* b, int64_t ldb,
              T beta, T* c, int64_t ldc) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < m; ++i) {
        gemm_serial(trans_a, trans_b, 1, n, k, alpha,
                    trans_a ? a + i : a + i * lda, lda, b, ldb, beta,
                    c + i * ldc, ldc);
    }
}

#ifdef EGO2FRONT_USE_BLAS
inline void gemm_blas(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
                      float alpha, const float* a, int64_t lda, const float* b,
                      int64_t ldb, float beta, float* c, int64_t ldc) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, (int)m, (int)n, (int)k,
                alpha, a, (int)lda, b, (int)ldb, beta, c, (int)ldc);
}
inline void gemm_blas(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
                      double alpha, const double* a, int64_t lda, const double* b,
                      int64_t ldb, double beta, double* c, int64_t ldc) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, (int)m, (int)n, (int)k,
                alpha, a, (int)lda, b, (int)ldb, beta, c, (int)ldc);
}
#endif

template <typename T>
void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k, T alpha,
          const T* a, int64_t lda, const T* b, int64_t ldb, T beta, T* c,
          int64_t ldc) {
#ifdef EGO2FRONT_USE_BLAS
    gemm_blas(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
#else
    gemm_omp(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
#endif
}

// ---------------------------------------------------------------------------
// im2col / col2im. Column layout: rows indexed by (ci, kh, kw), columns by
// (oy, ox). col2im is written gather-style so it parallelizes without atomics.
// ---------------------------------------------------------------------------

template <typename T>
void im2col(const T* x, const ConvSpec& s, T* cols) {
    const int64_t oh = s.out_h(), ow = s.out_w();
    const int64_t plane = s.in_h * s.in_w;
#pragma omp parallel for schedule(static)
    for (int64_t ci = 0; ci < s.in_c; ++ci) {
        for (int64_t kh = 0; kh < s.k; ++kh) {
            for (int64_t kw = 0; kw < s.k; ++kw) {
                T* dst = cols + ((ci * s.k + kh) * s.k + kw) * oh * ow;
                const T* src = x + ci * plane;
                for (int64_t oy = 0; oy < oh; ++oy) {
                    int64_t iy = oy * s.stride - s.pad + kh;
                    if (iy < 0 || iy >= s.in_h) {
                        for (int64_t ox = 0; ox < ow; ++ox) dst[oy * ow + ox] = T(0);
                        continue;
                    }
                    for (int64_t ox = 0; ox < ow; ++ox) {
                        int64_t ix = ox * s.stride - s.pad + kw;
                        dst[oy * ow + ox] =
                            (ix >= 0 && ix < s.in_w) ? src[iy * s.in_w + ix] : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im(const T* cols, const ConvSpec& s, T* x) {
    const int64_t oh = s.out_h(), ow = s.out_w();
#pragma omp parallel for schedule(static)
    for (int64_t ci = 0; ci < s.in_c; ++ci) {
        for (int64_t iy = 0; iy < s.in_h; ++iy) {
            for (int64_t ix = 0; ix < s.in_w; ++ix) {
                T acc = T(0);
                for (int64_t kh = 0; kh < s.k; ++kh) {
                    int64_t num = iy + s.pad - kh;
                    if (num < 0 || num % s.stride != 0) continue;
                    int64_t oy = num / s.stride;
                    if (oy >= oh) continue;
                    for (int64_t kw = 0; kw < s.k; ++kw) {
                        int64_t numx = ix + s.pad - kw;
                        if (numx < 0 || numx % s.stride != 0) continue;
                        int64_t ox = numx / s.stride;
                        if (ox >= ow) continue;
                        acc += cols[(((ci * s.k + kh) * s.k + kw) * oh + oy) * ow + ox];
                    }
                }
                x[(ci * s.in_h + iy) * s.in_w + ix] = acc;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Reference kernels: direct convolution loops, serial.
// Weight layout: conv W[out_c][in_c][kh][kw]; transposed conv W[in_c][out_c][kh][kw].
// ---------------------------------------------------------------------------

namespace ref {

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, const ConvSpec& s, T* y) {
    const int64_t oh = s.out_h(), ow = s.out_w();
    for (int64_t co = 0; co < s.out_c; ++co) {
        for (int64_t oy = 0; oy < oh; ++oy) {
            for (int64_t ox = 0; ox < ow; ++ox) {
                T acc = bias ? bias[co] : T(0);
                for (int64_t ci = 0; ci < s.in_c; ++ci) {
                    for (int64_t kh = 0; kh < s.k; ++kh) {
                        int64_t iy = oy * s.stride - s.pad + kh;
                        if (iy < 0 || iy >= s.in_h) continue;
                        for (int64_t kw = 0; kw < s.k; ++kw) {
                            int64_t ix = ox * s.stride - s.pad + kw;
                            if (ix < 0 || ix >= s.in_w) continue;
                            acc += x[(ci * s.in_h + iy) * s.in_w + ix] *
                                   w[((co * s.in_c + ci) * s.k + kh) * s.k + kw];
                        }
                    }
                }
                y[(co * oh + oy) * ow + ox] = acc;
            }
        }
    }
}

template <typename T>
void conv2d_backward_input(const T* gy, const T* w, const ConvSpec& s, T* gx) {
    const int64_t oh = s.out_h(), ow = s.out_w();
    for (int64_t ci = 0; ci < s.in_c; ++ci) {
        for (int64_t iy = 0; iy < s.in_h; ++iy) {
            for (int64_t ix = 0; ix < s.in_w; ++ix) {
                T acc = T(0);
                for (int64_t co = 0; co < s.out_c; ++co) {
                    for (int64_t kh = 0; kh < s.k; ++kh) {
                        int64_t num = iy + s.pad - kh;
                        if (num < 0 || num % s.stride != 0) continue;
                        int64_t oy = num / s.stride;
                        if (oy >= oh) continue;
                        for (int64_t kw = 0; kw < s.k; ++kw) {
                            int64_t numx = ix + s.pad - kw;
                            if (numx < 0 || numx % s.stride != 0) continue;
                            int64_t ox = numx / s.stride;
                            if (ox >= ow) continue;
                            acc += gy[(co * oh + oy) * ow + ox] *
                                   w[((co * s.in_c + ci) * s.k + kh) * s.k + kw];
                        }
                    }
                }
                gx[(ci * s.in_h + iy) * s.in_w + ix] = acc;
            }
        }
    }
}

// accumulates into gw / gbias
template <typename T>
void conv2d_backward_weight(const T* x, const T* gy, const ConvSpec& s, T* gw, T* gbias) {
    const int64_t oh = s.out_h(), ow = s.out_w();
    for (int64_t co = 0; co < s.out_c; ++co) {
        if (gbias) {
            T acc = T(0);
            for (int64_t i = 0; i < oh * ow; ++i) acc += gy[co * oh * ow + i];
            gbias[co] += acc;
        }
        for (int64_t ci = 0; ci < s.in_c; ++ci) {
            for (int64_t kh = 0; kh < s.k; ++kh) {
                for (int64_t kw = 0; kw < s.k; ++kw) {
                    T acc = T(0);
                    for (int64_t oy = 0; oy < oh; ++oy) {
                        int64_t iy = oy * s.stride - s.pad + kh;
                        if (iy < 0 || iy >= s.in_h) continue;
                        for (int64_t ox = 0; ox < ow; ++ox) {
                            int64_t ix = ox * s.stride - s.pad + kw;
                            if (ix < 0 || ix >= s.in_w) continue;
                            acc += gy[(co * oh + oy) * ow + ox] *
                                   x[(ci * s.in_h + iy) * s.in_w + ix];
                        }
                    }
                    gw[((co * s.in_c + ci) * s.k + kh) * s.k + kw] += acc;
                }
            }
        }
    }
}

template <typename T>
void conv_transpose2d_forward(const T* x, const T* w, const T* bias,
                              const ConvTransposeSpec& s, T* y) {
    const int64_t oh = s.out_h(), ow = s.out_w();
    for (int64_t co = 0; co < s.out_c; ++co) {
        for (int64_t oy = 0; oy < oh; ++oy) {
            for (int64_t ox = 0; ox < ow; ++ox) {
                T acc = bias ? bias[co] : T(0);
                for (int64_t ci = 0; ci < s.in_c; ++ci) {
                    for (int64_t kh = 0; kh < s.k; ++kh) {
                        int64_t num = oy + s.pad - kh;
                        if (num < 0 || num % s.stride != 0) continue;
                        int64_t iy = num / s.stride;
                        if (iy >= s.in_h) continue;
                        for (int64_t kw = 0; kw < s.k; ++kw) {
                            int64_t numx = ox + s.pad - kw;
                            if (numx < 0 || numx % s.stride != 0) continue;
                            int64_t ix = numx / s.stride;
                            if (ix >= s.in_w) continue;
                            acc += x[(ci * s.in_h + iy) * s.in_w + ix] *
                                   w[((ci * s.out_c + co) * s.k + kh) * s.k + kw];
                        }
                    }
                }
                y[(co * oh + oy) * ow + ox] = acc;
            }
        }
    }
}

template <typename T>
void conv_transpose2d_backward_input(const T* gy, const T* w,
                                     const ConvTransposeSpec& s, T* gx) {
    const int64_t oh = s.out_h(), ow = s.out_w();
    for (int64_t ci = 0; ci < s.in_c; ++ci) {
        for (int64_t iy = 0; iy < s.in_h; ++iy) {
            for (int64_t ix = 0; ix < s.in_w; ++ix) {
                T acc = T(0);
                for (int64_t co = 0; co < s.out_c; ++co) {
                    for (int64_t kh = 0; kh < s.k; ++kh) {
                        int64_t oy = iy * s.stride - s.pad + kh;
                        if (oy < 0 || oy >= oh) continue;
                        for (int64_t kw = 0; kw < s.k; ++kw) {
                            int64_t ox = ix * s.stride - s.pad + kw;
                            if (ox < 0 || ox >= ow) continue;
                            acc += gy[(co * oh + oy) * ow + ox] *
                                   w[((ci * s.out_c + co) * s.k + kh) * s.k + kw];
                        }
                    }
                }
                gx[(ci * s.in_h + iy) * s.in_w + ix] = acc;
            }
        }
    }
}

template <typename T>
void conv_transpose2d_backward_weight(const T* x, const T* gy,
                                      const ConvTransposeSpec& s, T* gw, T* gbias) {
    const int64_t oh = s.out_h(), ow = s.out_w();
    if (gbias) {
        for (int64_t co = 0; co < s.out_c; ++co) {
            T acc = T(0);
            for (int64_t i = 0; i < oh * ow; ++i) acc += gy[co * oh * ow + i];
            gbias[co] += acc;
        }
    }
    for (int64_t ci = 0; ci < s.in_c; ++ci) {
        for (int64_t co = 0; co < s.out_c; ++co) {
            for (int64_t kh = 0; kh < s.k; ++kh) {
                for (int64_t kw = 0; kw < s.k; ++kw) {
                    T acc = T(0);
                    for (int64_t iy = 0; iy < s.in_h; ++iy) {
                        int64_t oy = iy * s.stride - s.pad + kh;
                        if (oy < 0 || oy >= oh) continue;
                        for (int64_t ix = 0; ix < s.in_w; ++ix) {
                            int64_t ox = ix * s.stride - s.pad + kw;
                            if (ox < 0 || ox >= ow) continue;
                            acc += x[(ci * s.in_h + iy) * s.in_w + ix] *
                                   gy[(co * oh + oy) * ow + ox];
                        }
                    }
                    gw[((ci * s.out_c + co) * s.k + kh) * s.k + kw] += acc;
                }
            }
        }
    }
}

}  // namespace ref

// ---------------------------------------------------------------------------
// Fast kernels: im2col + GEMM. `cols` is caller-provided scratch of size
// in_c*k*k*out_h*out_w (plus out_c*k*k*in_h*in_w for the transposed variants).
// ---------------------------------------------------------------------------

namespace fast {

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, const ConvSpec& s, T* y,
                    std::vector<T>& cols) {
    const int64_t oh = s.out_h(), ow = s.out_w();
    const int64_t kk = s.in_c * s.k * s.k, n = oh * ow;
    cols.resize(static_cast<size_t>(kk * n));
    im2col(x, s, cols.data());
    gemm<T>(false, false, s.out_c, n, kk, T(1), w, kk, cols.data(), n, T(0), y, n);
    if (bias) {
#pragma omp parallel for schedule(static)
        for (int64_t co = 0; co < s.out_c; ++co) {
            T* row = y + co * n;
            for (int64_t i = 0; i < n; ++i) row[i] += bias[co];
        }
    }
}

template <typename T>
void conv2d_backward_input(const T* gy, const T* w, const ConvSpec& s, T* gx,
                           std::vector<T>& cols) {
    const int64_t oh = s.out_h(), ow = s.out_w();
    const int64_t kk = s.in_c * s.k * s.k, n = oh * ow;
    cols.resize(static_cast<size_t>(kk * n));
    gemm<T>(true, false, kk, n, s.out_c, T(1), w, kk, gy, n, T(0), cols.data(), n);
    col2im(cols.data(), s, gx);
}

template <typename T>
void conv2d_backward_weight(const T* x, const T* gy, const ConvSpec& s, T* gw,
                            T* gbias, std::vector<T>& cols) {
    const int64_t oh = s.out_h(), ow = s.out_w();
    const int64_t kk = s.in_c * s.k * s.k, n = oh * ow;
    cols.resize(static_cast<size_t>(kk * n));
    im2col(x, s, cols.data());
    gemm<T>(false, true, s.out_c, kk, n, T(1), gy, n, cols.data(), n, T(1), gw, kk);
    if (gbias) {
#pragma omp parallel for schedule(static)
        for (int64_t co = 0; co < s.out_c; ++co) {
            T acc = T(0);
            for (int64_t i = 0; i < n; ++i) acc += gy[co * n + i];
            gbias[co] += acc;
        }
    }
}

// transposed conv as the adjoint of a stride-s conv that maps (out -> in)
inline ConvSpec adjoint_spec(const ConvTransposeSpec& s) {
    ConvSpec a;
    a.in_c = s.out_c;
    a.in_h = s.out_h();
    a.in_w = s.out_w();
    a.out_c = s.in_c;
    a.k = s.k;
    a.stride = s.stride;
    a.pad = s.pad;
    return a;
}

// weight view: Wconv[ci_t][co_t][kh][kw] == Wt[ci_t][co_t][kh][kw] already
// matches the adjoint conv layout (out_c_conv = in_c_t, in_c_conv = out_c_t).
template <typename T>
void conv_transpose2d_forward(const T* x, const T* w, const T* bias,
                              const ConvTransposeSpec& s, T* y, std::vector<T>& cols) {
    ConvSpec a = adjoint_spec(s);
    const int64_t oh = a.out_h(), ow = a.out_w();  // == s.in_h, s.in_w
    const int64_t kk = a.in_c * a.k * a.k, n = oh * ow;
    cols.resize(static_cast<size_t>(kk * n));
    // gcols = W^T * x, then scatter back to the (large) output grid
    gemm<T>(true, false, kk, n, a.out_c, T(1), w, kk, x, n, T(0), cols.data(), n);
    col2im(cols.data(), a, y);
    if (bias) {
        const int64_t plane = a.in_h * a.in_w;
#pragma omp parallel for schedule(static)
        for (int64_t co = 0; co < s.out_c; ++co) {
            T* row = y + co * plane;
            for (int64_t i = 0; i < plane; ++i) row[i] += bias[co];
        }
    }
}

template <typename T>
void conv_transpose2d_backward_input(const T* gy, const T* w,
                                     const ConvTransposeSpec& s, T* gx,
                                     std::vector<T>& cols) {
    // adjoint of the adjoint: a plain conv forward over gy
    ConvSpec a = adjoint_spec(s);
    fast::conv2d_forward(gy, w, static_cast<const T*>(nullptr), a, gx, cols);
}

template <typename T>
void conv_transpose2d_backward_weight(const T* x, const T* gy,
                                      const ConvTransposeSpec& s, T* gw, T* gbias,
                                      std::vector<T>& cols) {
    // dW of the adjoint conv with input=gy and output-grad=x
    ConvSpec a = adjoint_spec(s);
    fast::conv2d_backward_weight(gy, x, a, gw, static_cast<T*>(nullptr), cols);
    if (gbias) {
        const int64_t plane = s.out_h() * s.out_w();
#pragma omp parallel for schedule(static)
        for (int64_t co = 0; co < s.out_c; ++co) {
            T acc = T(0);
            for (int64_t i = 0; i < plane; ++i) acc += gy[co * plane + i];
            gbias[co] += acc;
        }
    }
}

}  // namespace fast
}  // namespace kernels
}  // namespace ego2front::nn
