#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "image.hpp"

namespace s2s::img {

enum class InterpKind { Bilinear, Area, Bicubic };

namespace detail {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Catmull-Rom style cubic kernel, a = -0.5
inline double cubic_weight(double t) {
    constexpr double a = -0.5;
    t = std::fabs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

// One separable pass along x. Works on raw row-major buffers so the same
// routine serves both axes (the y pass runs on a transposed view).
template <class WeightFn>
void resample_axis(const std::vector<double>& src, int src_w, int src_h,
                   std::vector<double>& dst, int dst_w, int support,
                   WeightFn&& weights_for) {
    dst.assign(static_cast<std::size_t>(dst_w) * src_h, 0.0);
    // precompute taps per destination column
    std::vector<int> base(dst_w);
    std::vector<double> w(static_cast<std::size_t>(dst_w) * support);
    for (int x = 0; x < dst_w; ++x) weights_for(x, &base[x], &w[static_cast<std::size_t>(x) * support]);
    for (int y = 0; y < src_h; ++y) {
        const double* srow = &src[static_cast<std::size_t>(y) * src_w];
        double* drow = &dst[static_cast<std::size_t>(y) * dst_w];
        for (int x = 0; x < dst_w; ++x) {
            const double* wx = &w[static_cast<std::size_t>(x) * support];
            double acc = 0.0;
            for (int k = 0; k < support; ++k) {
                int sx = clampi(base[x] + k, 0, src_w - 1);
                acc += wx[k] * srow[sx];
            }
            drow[x] = acc;
        }
    }
}

inline void transpose(const std::vector<double>& src, int w, int h, std::vector<double>& dst) {
    dst.resize(src.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            dst[static_cast<std::size_t>(x) * h + y] = src[static_cast<std::size_t>(y) * w + x];
}

// Box overlap weights for one axis: destination pixel x covers
// [x*scale, (x+1)*scale) in source coordinates; each source pixel contributes
// its covered fraction. Same rule for down- and upsampling.
struct AreaAxis {
    double scale;  // src / dst
    int support;
    void operator()(int x, int* base, double* w) const {
        double lo = x * scale, hi = (x + 1) * scale;
        int first = static_cast<int>(std::floor(lo));
        *base = first;
        double inv = 1.0 / (hi - lo);
        for (int k = 0; k < support; ++k) {
            double a = std::max(lo, static_cast<double>(first + k));
            double b = std::min(hi, static_cast<double>(first + k + 1));
            w[k] = b > a ? (b - a) * inv : 0.0;
        }
    }
};

struct LinearAxis {
    double scale;  // src / dst
    void operator()(int x, int* base, double* w) const {
        double sx = (x + 0.5) * scale - 0.5;
        double fl = std::floor(sx);
        double t = sx - fl;
        *base = static_cast<int>(fl);
        w[0] = 1.0 - t;
        w[1] = t;
    }
};

struct CubicAxis {
    double scale;  // src / dst
    void operator()(int x, int* base, double* w) const {
        double sx = (x + 0.5) * scale - 0.5;
        double fl = std::floor(sx);
        double t = sx - fl;
        *base = static_cast<int>(fl) - 1;
        double sum = 0.0;
        for (int k = 0; k < 4; ++k) {
            w[k] = cubic_weight(t + 1.0 - k);
            sum += w[k];
        }
        for (int k = 0; k < 4; ++k) w[k] /= sum;
    }
};

inline void resize_buffer(const std::vector<double>& src, int sw, int sh,
                          std::vector<double>& out, int dw, int dh, InterpKind kind) {
    std::vector<double> pass1, pass1t, pass2;
    auto run = [&](const std::vector<double>& in, int in_w, int in_h, std::vector<double>& res, int out_w) {
        double scale = static_cast<double>(in_w) / out_w;
        switch (kind) {
            case InterpKind::Area: {
                int support = static_cast<int>(std::ceil(scale)) + 1;
                resample_axis(in, in_w, in_h, res, out_w, support, AreaAxis{scale, support});
                break;
            }
            case InterpKind::Bilinear:
                resample_axis(in, in_w, in_h, res, out_w, 2, LinearAxis{scale});
                break;
            case InterpKind::Bicubic:
                resample_axis(in, in_w, in_h, res, out_w, 4, CubicAxis{scale});
                break;
        }
    };
    run(src, sw, sh, pass1, dw);           // x pass: sw x sh -> dw x sh
    transpose(pass1, dw, sh, pass1t);      // dw x sh -> sh x dw
    run(pass1t, sh, dw, pass2, dh);        // y pass on transposed rows
    transpose(pass2, dh, dw, out);         // back to dw x dh
}

}  // namespace detail

// Resize an unbounded raster; no clamping.
inline Plane resize(const Plane& src, int out_w, int out_h, InterpKind kind) {
    if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize: zero target dimension");
    if (out_w == src.width && out_h == src.height) return src;
    Plane out(out_w, out_h);
    detail::resize_buffer(src.data, src.width, src.height, out.data, out_w, out_h, kind);
    out.spacing = src.spacing;
    return out;
}

// Resize an image; result clamped back into [0,1] (bicubic may overshoot).
inline Image resize(const Image& src, int out_w, int out_h, InterpKind kind) {
    if (out_w < 1 || out_h < 1) throw std::invalid_argument("resize: zero target dimension");
    if (out_w == src.width() && out_h == src.height()) return src;
    std::vector<double> out;
    detail::resize_buffer(src.pixels(), src.width(), src.height(), out, out_w, out_h, kind);
    Image res = Image::from_clamped(out_w, out_h, out);
    if (src.spacing()) res.set_spacing(*src.spacing());
    return res;
}

// sigma tied to kernel size
inline double gaussian_sigma_for(int ksize) {
    return 0.3 * ((ksize - 1) * 0.5 - 1.0) + 0.8;
}

inline std::vector<double> gaussian_kernel(int ksize) {
    if (ksize < 1 || ksize % 2 == 0) throw std::invalid_argument("gaussian_kernel: ksize must be odd and >= 1");
    std::vector<double> k(ksize);
    if (ksize == 1) {
        k[0] = 1.0;
        return k;
    }
    const double sigma = gaussian_sigma_for(ksize);
    const int c = ksize / 2;
    double sum = 0.0;
    for (int i = 0; i < ksize; ++i) {
        double d = i - c;
        k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

namespace detail {

// reflect with edge duplication: -1 -> 0, -2 -> 1, n -> n-1
inline int reflect(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

inline void blur_pass(const std::vector<double>& src, int w, int h,
                      const std::vector<double>& kern, std::vector<double>& dst) {
    const int r = static_cast<int>(kern.size()) / 2;
    dst.resize(src.size());
    for (int y = 0; y < h; ++y) {
        const double* srow = &src[static_cast<std::size_t>(y) * w];
        double* drow = &dst[static_cast<std::size_t>(y) * w];
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) acc += kern[k + r] * srow[reflect(x + k, w)];
            drow[x] = acc;
        }
    }
}

}  // namespace detail

inline Image gaussian_blur(const Image& src, int ksize) {
    if (ksize < 1 || ksize % 2 == 0) throw std::invalid_argument("gaussian_blur: ksize must be odd and >= 1");
    if (ksize == 1) return src;
    const std::vector<double> kern = gaussian_kernel(ksize);
    std::vector<double> tmp, tmpt, out, outt;
    detail::blur_pass(src.pixels(), src.width(), src.height(), kern, tmp);
    detail::transpose(tmp, src.width(), src.height(), tmpt);
    detail::blur_pass(tmpt, src.height(), src.width(), kern, out);
    detail::transpose(out, src.height(), src.width(), outt);
    Image res = Image::from_clamped(src.width(), src.height(), outt);
    if (src.spacing()) res.set_spacing(*src.spacing());
    return res;
}

}
