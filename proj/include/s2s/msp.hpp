#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fftutil.hpp"
#include "image.hpp"
#include "resample.hpp"

// Multi-scale perturbation: downsample by s then upsample back, preserving
// anatomy while decorrelating the speckle pattern, plus the frequency-band
// diagnostics used to study it.

namespace s2s::msp {

inline const std::vector<double>& default_scales() {
    static const std::vector<double> s{1.0, 0.5, 0.25};
    return s;
}

struct VariantSet {
    std::vector<double> scales;
    std::vector<img::Image> variants;  // same dimensions as origin
    img::InterpKind interp = img::InterpKind::Bilinear;
    img::Image origin;
};

struct BandPair {
    img::Plane low;
    img::Plane high;
    int mask_half_width = 0;
};

struct CorrReport {
    // row-major K x K; entries may be NaN where a band is constant
    std::vector<double> low_corr;
    std::vector<double> high_corr;
    int k = 0;

    double low(int i, int j) const { return low_corr[static_cast<std::size_t>(i) * k + j]; }
    double high(int i, int j) const { return high_corr[static_cast<std::size_t>(i) * k + j]; }
};

inline img::Image msp_perturb(const img::Image& im, double s, img::InterpKind kind) {
    if (s <= 0.0 || s > 1.0) throw std::invalid_argument("msp_perturb: scale must be in (0,1]");
    if (s == 1.0) return im;
    const int dw = static_cast<int>(std::llround(s * im.width()));
    const int dh = static_cast<int>(std::llround(s * im.height()));
    if (dw < 1 || dh < 1) throw std::invalid_argument("msp_perturb: scale collapses a dimension");
    return img::resize(img::resize(im, dw, dh, kind), im.width(), im.height(), kind);
}

inline VariantSet msp_variants(const img::Image& im, const std::vector<double>& scales,
                               img::InterpKind kind) {
    if (scales.empty()) throw std::invalid_argument("msp_variants: empty scale list");
    VariantSet vs;
    vs.scales = scales;
    vs.interp = kind;
    vs.origin = im;
    vs.variants.reserve(scales.size());
    for (double s : scales) vs.variants.push_back(msp_perturb(im, s, kind));
    return vs;
}

inline int default_mask_half_width(int w, int h) {
    return std::max(1, static_cast<int>(std::llround(0.06 * std::min(w, h))));
}

// Split around the centered spectrum: low keeps the (2m+1)^2 central square,
// high is the complement; low + high reconstructs the input.
inline BandPair band_split(const img::Image& im, int mask_half_width) {
    const int w = im.width(), h = im.height();
    if (mask_half_width < 1 || mask_half_width >= std::min(w, h) / 2)
        throw std::invalid_argument("band_split: mask_half_width must be in [1, min(w,h)/2)");
    fft::Fft2d fwd(w, h, FFTW_FORWARD), inv(w, h, FFTW_BACKWARD);
    auto* in = fwd.in();
    for (std::size_t i = 0; i < im.size(); ++i) in[i] = {im[i], 0.0};
    fwd.run();
    // distance from DC along each axis is min(k, n-k), so no explicit shift
    auto* spec = inv.in();
    const auto* f = fwd.out();
    const int m = mask_half_width;
    for (int z = 0; z < h; ++z) {
        const int fz = std::min(z, h - z);
        for (int x = 0; x < w; ++x) {
            const int fx = std::min(x, w - x);
            const std::size_t i = static_cast<std::size_t>(z) * w + x;
            spec[i] = (fx <= m && fz <= m) ? f[i] : 0.0;
        }
    }
    inv.run();
    BandPair bp;
    bp.mask_half_width = m;
    bp.low = img::Plane(w, h);
    bp.high = img::Plane(w, h);
    const auto* lo = inv.out();
    const double scale = 1.0 / (static_cast<double>(w) * h);
    for (std::size_t i = 0; i < im.size(); ++i) {
        bp.low.data[i] = lo[i].real() * scale;
        bp.high.data[i] = im[i] - bp.low.data[i];
    }
    return bp;
}

namespace detail {

// Pearson over raw buffers; NaN when either side is constant.
inline double pearson_or_nan(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) return std::nan("");
    double r = sab / std::sqrt(saa * sbb);
    return r < -1.0 ? -1.0 : (r > 1.0 ? 1.0 : r);
}

}  // namespace detail

// Cross-scale Pearson matrices of the low and high bands of each variant.
inline CorrReport cross_scale_corr(const VariantSet& vs, int mask_half_width) {
    const int k = static_cast<int>(vs.variants.size());
    if (k < 1) throw std::invalid_argument("cross_scale_corr: empty variant set");
    std::vector<BandPair> bands;
    bands.reserve(k);
    for (const auto& v : vs.variants) bands.push_back(band_split(v, mask_half_width));
    CorrReport rep;
    rep.k = k;
    rep.low_corr.assign(static_cast<std::size_t>(k) * k, 1.0);
    rep.high_corr.assign(static_cast<std::size_t>(k) * k, 1.0);
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
            const double rl = detail::pearson_or_nan(bands[i].low.data, bands[j].low.data);
            const double rh = detail::pearson_or_nan(bands[i].high.data, bands[j].high.data);
            rep.low_corr[static_cast<std::size_t>(i) * k + j] = rl;
            rep.low_corr[static_cast<std::size_t>(j) * k + i] = rl;
            rep.high_corr[static_cast<std::size_t>(i) * k + j] = rh;
            rep.high_corr[static_cast<std::size_t>(j) * k + i] = rh;
        }
    return rep;
}

inline double mean_off_diagonal(const std::vector<double>& mat, int k) {
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            if (i == j) continue;
            const double v = mat[static_cast<std::size_t>(i) * k + j];
            if (std::isnan(v)) continue;
            sum += v;
            ++n;
        }
    if (n == 0) throw std::domain_error("mean_off_diagonal: no defined entries");
    return sum / n;
}

// Low-pass-filter variants for comparison against MSP; scales recorded as 1.0.
inline VariantSet lpf_variants(const img::Image& im, const std::vector<int>& ksizes) {
    if (ksizes.empty()) throw std::invalid_argument("lpf_variants: empty kernel list");
    VariantSet vs;
    vs.interp = img::InterpKind::Bilinear;
    vs.origin = im;
    for (int k : ksizes) {
        vs.variants.push_back(img::gaussian_blur(im, k));
        vs.scales.push_back(1.0);
    }
    return vs;
}

}
