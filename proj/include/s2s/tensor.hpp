#pragma once

#include <cblas.h>

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace s2s::nn {

// Initialize BLAS for reproducible single-threaded execution. Called once
// before the first gemm; summation order is then fixed for a given build.
inline void init_blas() {
    static const bool done = [] {
        openblas_set_num_threads(1);
        return true;
    }();
    (void)done;
}

// Dense CHW tensor.
template <class T>
struct Tensor {
    int c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int c_, int h_, int w_)
        : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, T(0)) {
        if (c_ < 1 || h_ < 1 || w_ < 1) throw std::invalid_argument("tensor dimensions must be positive");
    }

    T& at(int ci, int zi, int xi) { return v[(static_cast<std::size_t>(ci) * h + zi) * w + xi]; }
    T at(int ci, int zi, int xi) const { return v[(static_cast<std::size_t>(ci) * h + zi) * w + xi]; }
    std::size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }
};

// C := alpha * op(A) * op(B) + beta * C, row-major.
inline void gemm(bool ta, bool tb, int m, int n, int k, float alpha, const float* a, int lda,
                 const float* b, int ldb, float beta, float* c, int ldc) {
    init_blas();
    cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n,
                k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void gemm(bool ta, bool tb, int m, int n, int k, double alpha, const double* a, int lda,
                 const double* b, int ldb, double beta, double* c, int ldc) {
    init_blas();
    cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, m, n,
                k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// 3x3 convolution lowering, pad 1, stride s.
// col is (in_c*9) x (out_h*out_w) row-major.
template <class T>
void im2col3(const Tensor<T>& x, int stride, std::vector<T>& col, int& out_h, int& out_w) {
    out_h = (x.h + 2 - 3) / stride + 1;
    out_w = (x.w + 2 - 3) / stride + 1;
    const std::size_t n = static_cast<std::size_t>(out_h) * out_w;
    col.assign(static_cast<std::size_t>(x.c) * 9 * n, T(0));
    for (int ci = 0; ci < x.c; ++ci)
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                T* row = col.data() + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * n;
                for (int oz = 0; oz < out_h; ++oz) {
                    const int iz = oz * stride + ky - 1;
                    if (iz < 0 || iz >= x.h) continue;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride + kx - 1;
                        if (ix >= 0 && ix < x.w) row[static_cast<std::size_t>(oz) * out_w + ox] = x.at(ci, iz, ix);
                    }
                }
            }
}

// Scatter-add transpose of im2col3: accumulates col gradients back into dx.
template <class T>
void col2im3(const std::vector<T>& col, int stride, Tensor<T>& dx, int out_h, int out_w) {
    const std::size_t n = static_cast<std::size_t>(out_h) * out_w;
    for (int ci = 0; ci < dx.c; ++ci)
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
                const T* row = col.data() + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * n;
                for (int oz = 0; oz < out_h; ++oz) {
                    const int iz = oz * stride + ky - 1;
                    if (iz < 0 || iz >= dx.h) continue;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride + kx - 1;
                        if (ix >= 0 && ix < dx.w) dx.at(ci, iz, ix) += row[static_cast<std::size_t>(oz) * out_w + ox];
                    }
                }
            }
}

}  // namespace s2s::nn
