#pragma once
// Classical despeckling baselines: speckle-reducing anisotropic diffusion
// and patchwise non-local means.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "s2s/image.hpp"
#include "s2s/resample.hpp"
#include "s2s/threading.hpp"

namespace s2s::baseline {

struct Roi {
    int x = 0, z = 0, w = 0, h = 0;  // w or h == 0 selects the whole image
};

struct SradConfig {
    int iterations = 100;
    double dt = 0.05;
    Roi homogeneous_roi;  // noise-scale estimation region

    void validate() const {
        if (iterations < 1) throw std::invalid_argument("srad: iterations must be >= 1");
        if (!(dt > 0.0) || dt > 0.25)
            throw std::invalid_argument("srad: dt must be in (0, 0.25] for a stable explicit step");
    }
};

namespace detail {

inline constexpr double kSradFloor = 1e-6;

// Coefficient of variation of the region, squared. The work buffer is
// floored away from zero, so the mean is always positive.
inline double q0_squared(const std::vector<double>& v, int w, const Roi& roi) {
    double sum = 0.0, sum2 = 0.0;
    long n = 0;
    for (int z = roi.z; z < roi.z + roi.h; ++z)
        for (int x = roi.x; x < roi.x + roi.w; ++x) {
            const double p = v[static_cast<std::size_t>(z) * w + x];
            sum += p;
            sum2 += p * p;
            ++n;
        }
    const double mean = sum / n;
    const double var = std::max(0.0, sum2 / n - mean * mean);
    return var / (mean * mean);
}

}  // namespace detail

inline img::Image srad(const img::Image& im, const SradConfig& cfg) {
    cfg.validate();
    const int w = im.width(), h = im.height();
    Roi roi = cfg.homogeneous_roi;
    if (roi.w <= 0 || roi.h <= 0) roi = {0, 0, w, h};
    if (roi.x < 0 || roi.z < 0 || roi.x + roi.w > w || roi.z + roi.h > h)
        throw std::out_of_range("srad: roi outside image bounds");

    std::vector<double> cur(im.pixels());
    for (auto& p : cur) p = std::max(p, detail::kSradFloor);
    std::vector<double> c(cur.size()), next(cur.size());
    auto at = [&](const std::vector<double>& v, int x, int z) {
        x = std::clamp(x, 0, w - 1);  // Neumann boundaries
        z = std::clamp(z, 0, h - 1);
        return v[static_cast<std::size_t>(z) * w + x];
    };

    for (int it = 0; it < cfg.iterations; ++it) {
        const double q0_2 = detail::q0_squared(cur, w, roi);
        for (int z = 0; z < h; ++z)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(z) * w + x;
                const double p = cur[i];
                const double dn = at(cur, x, z - 1) - p;
                const double ds = at(cur, x, z + 1) - p;
                const double de = at(cur, x + 1, z) - p;
                const double dw = at(cur, x - 1, z) - p;
                const double g2 = (dn * dn + ds * ds + de * de + dw * dw) / (p * p);
                const double lap = (dn + ds + de + dw) / p;
                const double den = (1.0 + 0.25 * lap) * (1.0 + 0.25 * lap);
                const double q2 = (0.5 * g2 - lap * lap / 16.0) / std::max(den, 1e-12);
                double ci = q0_2 < 1e-12 ? 1.0 : 1.0 / (1.0 + (q2 - q0_2) / (q0_2 * (1.0 + q0_2)));
                c[i] = std::clamp(ci, 0.0, 1.0);
            }
        for (int z = 0; z < h; ++z)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(z) * w + x;
                const double p = cur[i];
                // forward differences carry the neighbor's coefficient,
                // backward differences the pixel's own
                const double div = at(c, x, z + 1) * (at(cur, x, z + 1) - p) +
                                   c[i] * (at(cur, x, z - 1) - p) +
                                   at(c, x + 1, z) * (at(cur, x + 1, z) - p) +
                                   c[i] * (at(cur, x - 1, z) - p);
                next[i] = std::max(p + cfg.dt / 4.0 * div, detail::kSradFloor);
            }
        cur.swap(next);
    }
    for (auto& p : cur) p = std::clamp(p, 0.0, 1.0);
    return img::Image(w, h, std::move(cur));
}

struct NlmConfig {
    double h = 0.08;  // filtering strength
    int patch = 7;
    int window = 21;

    void validate() const {
        if (!(h > 0.0)) throw std::invalid_argument("nlm: h must be positive");
        if (patch < 1 || patch % 2 == 0 || window < 1 || window % 2 == 0)
            throw std::invalid_argument("nlm: patch and window must be odd");
        if (patch > window) throw std::invalid_argument("nlm: patch must not exceed window");
    }
};

// Noise level from the median absolute deviation of the 5-point Laplacian
// residual; the Laplacian of iid noise has variance 20 sigma^2.
inline double noise_sigma(const img::Image& im) {
    const int w = im.width(), h = im.height();
    if (w < 3 || h < 3) return 0.0;
    std::vector<double> r;
    r.reserve(static_cast<std::size_t>(w - 2) * (h - 2));
    for (int z = 1; z < h - 1; ++z)
        for (int x = 1; x < w - 1; ++x)
            r.push_back(im.at(x, z - 1) + im.at(x, z + 1) + im.at(x - 1, z) + im.at(x + 1, z) -
                        4.0 * im.at(x, z));
    auto median = [](std::vector<double> v) {
        const std::size_t n = v.size();
        auto mid = v.begin() + n / 2;
        std::nth_element(v.begin(), mid, v.end());
        if (n % 2 == 1) return *mid;
        const double hi = *mid;
        std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
        return 0.5 * (v[n / 2 - 1] + hi);
    };
    const double m = median(r);
    for (auto& v : r) v = std::fabs(v - m);
    return 1.4826 * median(r) / std::sqrt(20.0);
}

inline img::Image nlm(const img::Image& im, const NlmConfig& cfg) {
    cfg.validate();
    const int w = im.width(), h = im.height();
    if (cfg.window > w || cfg.window > h)
        throw std::invalid_argument("nlm: window larger than image");
    const int pr = cfg.patch / 2, wr = cfg.window / 2;
    const double sig = noise_sigma(im);
    const double noise_floor = 2.0 * sig * sig;
    const double inv_h2 = 1.0 / (cfg.h * cfg.h);
    const double inv_p = 1.0 / (static_cast<double>(cfg.patch) * cfg.patch);

    // reflect-padded copy so patch distances are defined at the borders
    const int pw = w + 2 * pr;
    std::vector<double> pad(static_cast<std::size_t>(pw) * (h + 2 * pr));
    for (int z = 0; z < h + 2 * pr; ++z)
        for (int x = 0; x < pw; ++x)
            pad[static_cast<std::size_t>(z) * pw + x] =
                im.at(img::detail::reflect(x - pr, w), img::detail::reflect(z - pr, h));

    std::vector<double> out(static_cast<std::size_t>(w) * h);
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
        const int z = static_cast<int>(row);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - wr), x1 = std::min(w - 1, x + wr);
            const int z0 = std::max(0, z - wr), z1 = std::min(h - 1, z + wr);
            double best = 0.0, total = 0.0, acc = 0.0;
            for (int qz = z0; qz <= z1; ++qz)
                for (int qx = x0; qx <= x1; ++qx) {
                    if (qx == x && qz == z) continue;
                    double d2 = 0.0;
                    for (int dz = 0; dz < cfg.patch; ++dz) {
                        const double* ra = &pad[static_cast<std::size_t>(z + dz) * pw + x];
                        const double* rb = &pad[static_cast<std::size_t>(qz + dz) * pw + qx];
                        for (int dx = 0; dx < cfg.patch; ++dx) {
                            const double d = ra[dx] - rb[dx];
                            d2 += d * d;
                        }
                    }
                    d2 *= inv_p;
                    const double wgt = std::exp(-std::max(0.0, d2 - noise_floor) * inv_h2);
                    best = std::max(best, wgt);
                    total += wgt;
                    acc += wgt * im.at(qx, qz);
                }
            total += best;  // center weight: largest neighbor weight
            acc += best * im.at(x, z);
            out[static_cast<std::size_t>(z) * w + x] = total > 0.0 ? acc / total : im.at(x, z);
        }
    });
    return img::Image::from_clamped(w, h, out);
}

}  // namespace s2s::baseline
