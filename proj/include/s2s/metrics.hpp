#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "image.hpp"

namespace s2s::metrics {

// 10 log10(range^2 / MSE); identical images give +inf (rendered "inf")
inline double psnr(const img::Image& a, const img::Image& b, double data_range = 1.0) {
    if (a.width() != b.width() || a.height() != b.height())
        throw std::invalid_argument("psnr: dimension mismatch");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(data_range * data_range / mse);
}

struct SsimConfig {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;
};

namespace detail {

inline std::vector<double> ssim_kernel(const SsimConfig& cfg) {
    std::vector<double> k(cfg.window);
    const int c = cfg.window / 2;
    double sum = 0.0;
    for (int i = 0; i < cfg.window; ++i) {
        const double d = i - c;
        k[i] = std::exp(-d * d / (2.0 * cfg.sigma * cfg.sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

// separable weighted filtering, valid region only
inline std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                        const std::vector<double>& k, int* vw, int* vh) {
    const int r = static_cast<int>(k.size()) / 2;
    const int ow = w - 2 * r, oh = h - 2 * r;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k.size(); ++t) acc += k[t] * src[static_cast<std::size_t>(y) * w + x + t];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k.size(); ++t) acc += k[t] * tmp[(static_cast<std::size_t>(y) + t) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    *vw = ow;
    *vh = oh;
    return out;
}

}  // namespace detail

// Gaussian-windowed SSIM, mean over the valid local map.
inline double ssim(const img::Image& a, const img::Image& b, const SsimConfig& cfg = {}) {
    if (a.width() != b.width() || a.height() != b.height())
        throw std::invalid_argument("ssim: dimension mismatch");
    if (a.width() < cfg.window || a.height() < cfg.window)
        throw std::invalid_argument("ssim: image smaller than window");
    const auto k = detail::ssim_kernel(cfg);
    const int w = a.width(), h = a.height();
    const auto& pa = a.pixels();
    const auto& pb = b.pixels();
    std::vector<double> aa(pa.size()), bb(pa.size()), ab(pa.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        aa[i] = pa[i] * pa[i];
        bb[i] = pb[i] * pb[i];
        ab[i] = pa[i] * pb[i];
    }
    int vw = 0, vh = 0;
    const auto mu_a = detail::filter_valid(pa, w, h, k, &vw, &vh);
    const auto mu_b = detail::filter_valid(pb, w, h, k, &vw, &vh);
    const auto e_aa = detail::filter_valid(aa, w, h, k, &vw, &vh);
    const auto e_bb = detail::filter_valid(bb, w, h, k, &vw, &vh);
    const auto e_ab = detail::filter_valid(ab, w, h, k, &vw, &vh);
    const double c1 = (cfg.k1 * cfg.data_range) * (cfg.k1 * cfg.data_range);
    const double c2 = (cfg.k2 * cfg.data_range) * (cfg.k2 * cfg.data_range);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double va = e_aa[i] - mu_a[i] * mu_a[i];
        const double vb = e_bb[i] - mu_b[i] * mu_b[i];
        const double cov = e_ab[i] - mu_a[i] * mu_b[i];
        const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
        const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
        total += num / den;
    }
    return total / static_cast<double>(mu_a.size());
}

struct GlcmConfig {
    int levels = 32;
    std::vector<std::pair<int, int>> offsets = {{1, 0}, {0, 1}};  // (dx, dz)
    bool symmetric = true;
    bool normalized = true;
};

// homogeneity = sum P(i,j) / (1 + |i-j|), averaged over offsets
inline double glcm_homogeneity(const img::Image& im, const GlcmConfig& cfg = {}) {
    if (cfg.levels < 2) throw std::invalid_argument("glcm: levels must be >= 2");
    if (cfg.offsets.empty()) throw std::invalid_argument("glcm: need at least one offset");
    const int L = cfg.levels;
    std::vector<int> q(im.size());
    for (std::size_t i = 0; i < im.size(); ++i)
        q[i] = std::min(L - 1, static_cast<int>(im[i] * L));
    double homogeneity_sum = 0.0;
    std::vector<double> mat(static_cast<std::size_t>(L) * L);
    for (const auto& [dx, dz] : cfg.offsets) {
        if (dx == 0 && dz == 0) throw std::invalid_argument("glcm: zero offset");
        std::fill(mat.begin(), mat.end(), 0.0);
        double count = 0.0;
        for (int z = 0; z < im.height(); ++z) {
            const int z2 = z + dz;
            if (z2 < 0 || z2 >= im.height()) continue;
            for (int x = 0; x < im.width(); ++x) {
                const int x2 = x + dx;
                if (x2 < 0 || x2 >= im.width()) continue;
                const int i = q[static_cast<std::size_t>(z) * im.width() + x];
                const int j = q[static_cast<std::size_t>(z2) * im.width() + x2];
                mat[static_cast<std::size_t>(i) * L + j] += 1.0;
                count += 1.0;
                if (cfg.symmetric) {
                    mat[static_cast<std::size_t>(j) * L + i] += 1.0;
                    count += 1.0;
                }
            }
        }
        if (count == 0.0) throw std::invalid_argument("glcm: offset leaves no pixel pairs");
        double hom = 0.0;
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j) {
                const double p = cfg.normalized ? mat[static_cast<std::size_t>(i) * L + j] / count
                                                : mat[static_cast<std::size_t>(i) * L + j];
                hom += p / (1.0 + std::abs(i - j));
            }
        homogeneity_sum += hom;
    }
    return homogeneity_sum / static_cast<double>(cfg.offsets.size());
}

}
