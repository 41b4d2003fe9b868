#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "image.hpp"

namespace s2s::metrics {

struct SingularSpectrum {
    std::vector<double> values;  // descending, non-negative
    int patch_size = 0;
};

// One-sided Jacobi (Hestenes) on the patch columns; singular values are the
// column norms after the rotations converge.
inline SingularSpectrum singular_spectrum(const img::Image& patch) {
    if (patch.width() != patch.height())
        throw std::invalid_argument("singular_spectrum: patch must be square");
    const int n = patch.width();
    // column-major copy: col j holds patch(:, j)
    std::vector<double> a(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(j) * n + i] = patch.at(j, i);
    auto col = [&](int j) { return a.data() + static_cast<std::size_t>(j) * n; };
    const double tol = 1e-14;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                const double *cp = col(p), *cq = col(q);
                for (int i = 0; i < n; ++i) {
                    app += cp[i] * cp[i];
                    aqq += cq[i] * cq[i];
                    apq += cp[i] * cq[i];
                }
                if (std::fabs(apq) <= tol * std::sqrt(app * aqq)) continue;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                double *wp = col(p), *wq = col(q);
                for (int i = 0; i < n; ++i) {
                    const double vp = wp[i], vq = wq[i];
                    wp[i] = c * vp - s * vq;
                    wq[i] = s * vp + c * vq;
                }
                rotated = true;
            }
        if (!rotated) break;
    }
    SingularSpectrum out;
    out.patch_size = n;
    out.values.resize(n);
    for (int j = 0; j < n; ++j) {
        double norm = 0.0;
        const double* cj = col(j);
        for (int i = 0; i < n; ++i) norm += cj[i] * cj[i];
        out.values[j] = std::sqrt(norm);
    }
    std::sort(out.values.begin(), out.values.end(), std::greater<double>());
    return out;
}

// fraction of squared spectral energy in the leading k values
inline double spectral_energy_topk(const SingularSpectrum& s, int k) {
    if (k < 1) throw std::invalid_argument("spectral_energy_topk: k must be >= 1");
    double total = 0.0, top = 0.0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        const double e = s.values[i] * s.values[i];
        total += e;
        if (static_cast<int>(i) < k) top += e;
    }
    if (total == 0.0) throw std::domain_error("spectral_energy_topk: all-zero spectrum");
    return top / total;
}

}
