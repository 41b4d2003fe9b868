#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fftutil.hpp"
#include "image.hpp"
#include "resample.hpp"
#include "rng.hpp"
#include "threading.hpp"

// Convolutional plane-wave B-mode simulator: a seeded scatterer field drawn
// from a grayscale target is convolved with a pulse-shaped PSF per tilt angle,
// envelope-detected, compounded across tilts and log-compressed.

namespace s2s::sim {

inline constexpr double speed_of_sound_mm_s = 1540.0e3;  // 1540 m/s

struct SimConfig {
    double f_c_mhz = 7.5;                // central frequency
    double frac_bandwidth = 0.6;         // -6 dB fractional pulse bandwidth
    double lateral_sigma_mm = 0.45;      // beam width
    std::vector<double> tilt_angles_deg = default_tilts();
    int n_compound = 9;
    double dynamic_range_db = 50.0;
    double scatterer_density = 20.0;     // per mm^2
    double field_width_mm = 32.0;
    double field_depth_mm = 32.0;
    int grid_w = 128;
    int grid_h = 128;
    std::uint64_t seed = 0;

    static std::vector<double> default_tilts() {
        std::vector<double> t(9);
        for (int i = 0; i < 9; ++i) t[i] = -2.0 + 4.0 * i / 8.0;
        return t;
    }

    void validate() const {
        if (f_c_mhz <= 0.0) throw std::invalid_argument("SimConfig: f_c must be > 0");
        if (frac_bandwidth <= 0.0 || frac_bandwidth > 1.0)
            throw std::invalid_argument("SimConfig: frac_bandwidth must be in (0,1]");
        if (dynamic_range_db <= 0.0) throw std::invalid_argument("SimConfig: dynamic_range must be > 0");
        if (scatterer_density <= 0.0) throw std::invalid_argument("SimConfig: scatterer_density must be > 0");
        if (lateral_sigma_mm <= 0.0) throw std::invalid_argument("SimConfig: lateral_sigma must be > 0");
        if (field_width_mm <= 0.0 || field_depth_mm <= 0.0)
            throw std::invalid_argument("SimConfig: field extent must be > 0");
        if (grid_w < 1 || grid_h < 1) throw std::invalid_argument("SimConfig: grid must be >= 1");
        if (tilt_angles_deg.empty() || static_cast<int>(tilt_angles_deg.size()) != n_compound)
            throw std::invalid_argument("SimConfig: n_compound must equal the tilt list length");
        for (double t : tilt_angles_deg)
            if (t < -10.0 || t > 10.0) throw std::invalid_argument("SimConfig: tilt angles limited to [-10,10] degrees");
    }

    // axial RF sampling: f_s = 4 f_c, depth step c / (8 f_c)
    double dz_rf_mm() const { return speed_of_sound_mm_s / (8.0 * f_c_mhz * 1e6); }
    double dx_mm() const { return field_width_mm / grid_w; }
};

struct Scatterer {
    double x_mm;
    double z_mm;
    double amplitude;
};

struct ScattererField {
    std::vector<Scatterer> scatterers;
    double width_mm = 0.0;
    double depth_mm = 0.0;
};

// bilinear lookup of the target at physical position, half-pixel centers
inline double target_lookup(const img::Image& target, double x_mm, double z_mm,
                            double width_mm, double depth_mm) {
    const double u = x_mm / width_mm * target.width() - 0.5;
    const double v = z_mm / depth_mm * target.height() - 0.5;
    const int x0 = static_cast<int>(std::floor(u)), z0 = static_cast<int>(std::floor(v));
    const double fx = u - x0, fz = v - z0;
    auto px = [&](int x, int z) {
        x = x < 0 ? 0 : (x >= target.width() ? target.width() - 1 : x);
        z = z < 0 ? 0 : (z >= target.height() ? target.height() - 1 : z);
        return target.at(x, z);
    };
    return (1 - fx) * (1 - fz) * px(x0, z0) + fx * (1 - fz) * px(x0 + 1, z0) +
           (1 - fx) * fz * px(x0, z0 + 1) + fx * fz * px(x0 + 1, z0 + 1);
}

// Scatterer count = round(density * area); positions uniform over the field;
// amplitude = sqrt(local target intensity) * unit-scale Rayleigh draw.
inline ScattererField make_scatterers(const img::Image& target, const SimConfig& cfg) {
    cfg.validate();
    ScattererField field;
    field.width_mm = cfg.field_width_mm;
    field.depth_mm = cfg.field_depth_mm;
    const auto count = static_cast<std::size_t>(
        std::llround(cfg.scatterer_density * cfg.field_width_mm * cfg.field_depth_mm));
    field.scatterers.reserve(count);
    Rng rng(cfg.seed);
    for (std::size_t i = 0; i < count; ++i) {
        const double x = rng.uniform(0.0, cfg.field_width_mm);
        const double z = rng.uniform(0.0, cfg.field_depth_mm);
        const double r = rng.rayleigh();
        const double inten = target_lookup(target, x, z, cfg.field_width_mm, cfg.field_depth_mm);
        field.scatterers.push_back({x, z, std::sqrt(inten) * r});
    }
    return field;
}

// pulse envelope in time: -6 dB spectral full width = frac_bandwidth * f_c
inline double pulse_sigma_t_s(const SimConfig& cfg) {
    return 2.0 * std::sqrt(std::log(2.0) / 2.0) / (3.14159265358979323846 * cfg.frac_bandwidth * cfg.f_c_mhz * 1e6);
}

// pulse extent mapped to depth (two-way travel)
inline double pulse_sigma_z_mm(const SimConfig& cfg) {
    return speed_of_sound_mm_s * pulse_sigma_t_s(cfg) / 2.0;
}

// continuous PSF value at physical offset (x,z) mm from the scatterer, tilted
inline double psf_value(const SimConfig& cfg, double tilt_deg, double x_mm, double z_mm) {
    const double th = tilt_deg * 3.14159265358979323846 / 180.0;
    const double u = std::cos(th) * x_mm - std::sin(th) * z_mm;   // lateral
    const double v = std::sin(th) * x_mm + std::cos(th) * z_mm;   // axial
    const double sz = pulse_sigma_z_mm(cfg);
    const double sl = cfg.lateral_sigma_mm;
    const double carrier = std::cos(2.0 * 3.14159265358979323846 * (2.0 * cfg.f_c_mhz * 1e6 / speed_of_sound_mm_s) * v);
    return carrier * std::exp(-0.5 * v * v / (sz * sz)) * std::exp(-0.5 * u * u / (sl * sl));
}

struct Psf {
    int w = 0, h = 0;       // odd dimensions, center at (w/2, h/2)
    std::vector<double> k;  // row-major, sum of squares = 1

    double at(int x, int z) const { return k[static_cast<std::size_t>(z) * w + x]; }
};

// Sampled on the RF grid (dx lateral, dz_rf axial), energy-normalized.
inline Psf render_psf(const SimConfig& cfg, double tilt_deg) {
    cfg.validate();
    if (tilt_deg < -10.0 || tilt_deg > 10.0) throw std::invalid_argument("render_psf: |tilt| must be <= 10 degrees");
    const double sz = pulse_sigma_z_mm(cfg), sl = cfg.lateral_sigma_mm;
    const double th = std::fabs(tilt_deg) * 3.14159265358979323846 / 180.0;
    const double half_x = 3.0 * (sl * std::cos(th) + sz * std::sin(th));
    const double half_z = 3.0 * (sl * std::sin(th) + sz * std::cos(th));
    const double dx = cfg.dx_mm(), dz = cfg.dz_rf_mm();
    const int hx = std::max(1, static_cast<int>(std::ceil(half_x / dx)));
    const int hz = std::max(1, static_cast<int>(std::ceil(half_z / dz)));
    Psf psf;
    psf.w = 2 * hx + 1;
    psf.h = 2 * hz + 1;
    psf.k.resize(static_cast<std::size_t>(psf.w) * psf.h);
    double energy = 0.0;
    for (int iz = -hz; iz <= hz; ++iz)
        for (int ix = -hx; ix <= hx; ++ix) {
            const double v = psf_value(cfg, tilt_deg, ix * dx, iz * dz);
            psf.k[static_cast<std::size_t>(iz + hz) * psf.w + (ix + hx)] = v;
            energy += v * v;
        }
    const double scale = 1.0 / std::sqrt(energy);
    for (double& v : psf.k) v *= scale;
    return psf;
}

// Coherent RF frame: scatterers binned (amplitude accumulation) onto the fine
// grid, then zero-padded FFT convolution with the PSF, cropped center-aligned.
inline img::Plane simulate_rf(const ScattererField& field, const Psf& psf, const SimConfig& cfg) {
    cfg.validate();
    const double dx = cfg.dx_mm(), dz = cfg.dz_rf_mm();
    const int w = cfg.grid_w;
    const int h = std::max(1, static_cast<int>(std::ceil(cfg.field_depth_mm / dz)));
    if (psf.w > w || psf.h > h)
        throw std::invalid_argument("simulate_rf: grid too small for PSF support");
    std::vector<double> grid(static_cast<std::size_t>(w) * h, 0.0);
    for (const auto& s : field.scatterers) {
        int ix = static_cast<int>(std::floor(s.x_mm / dx));
        int iz = static_cast<int>(std::floor(s.z_mm / dz));
        if (ix < 0) ix = 0;
        if (iz < 0) iz = 0;
        if (ix >= w) ix = w - 1;
        if (iz >= h) iz = h - 1;
        grid[static_cast<std::size_t>(iz) * w + ix] += s.amplitude;
    }
    int cw = 0, ch = 0;
    std::vector<double> full = fft::conv2_full(grid, w, h, psf.k, psf.w, psf.h, &cw, &ch);
    img::Plane rf(w, h);
    const int ox = psf.w / 2, oz = psf.h / 2;
    for (int z = 0; z < h; ++z)
        for (int x = 0; x < w; ++x)
            rf.at(x, z) = full[static_cast<std::size_t>(z + oz) * cw + (x + ox)];
    rf.spacing = img::Spacing{dx, dz};
    return rf;
}

// Per lateral line, magnitude of the axial analytic signal.
inline img::Plane envelope(const img::Plane& rf) {
    if (rf.height < 4) throw std::invalid_argument("envelope: axial length must be >= 4 samples");
    img::Plane env(rf.width, rf.height);
    env.spacing = rf.spacing;
    fft::Fft1d fwd(rf.height, FFTW_FORWARD), inv(rf.height, FFTW_BACKWARD);
    std::vector<double> line(rf.height), out(rf.height);
    for (int x = 0; x < rf.width; ++x) {
        for (int z = 0; z < rf.height; ++z) line[z] = rf.at(x, z);
        fft::hilbert_envelope_line(fwd, inv, line.data(), rf.height, out.data());
        for (int z = 0; z < rf.height; ++z) env.at(x, z) = out[z];
    }
    return env;
}

// p = clamp(1 + 20 log10(env / env_max) / DR, 0, 1); all-zero input stays zero
inline img::Image log_compress(const img::Plane& env, double dynamic_range_db) {
    if (dynamic_range_db <= 0.0) throw std::invalid_argument("log_compress: dynamic_range must be > 0");
    double env_max = 0.0;
    for (double v : env.data) env_max = std::max(env_max, v);
    std::vector<double> px(env.size(), 0.0);
    if (env_max > 0.0) {
        for (std::size_t i = 0; i < env.size(); ++i) {
            const double v = env.data[i];
            if (v > 0.0) px[i] = 1.0 + 20.0 * std::log10(v / env_max) / dynamic_range_db;
        }
    }
    img::Image out = img::Image::from_clamped(env.width, env.height, px);
    if (env.spacing) out.set_spacing(*env.spacing);
    return out;
}

// pixel-wise arithmetic mean
inline img::Image compound(const std::vector<img::Image>& images) {
    if (images.empty()) throw std::invalid_argument("compound: empty list");
    const int w = images[0].width(), h = images[0].height();
    std::vector<double> acc(static_cast<std::size_t>(w) * h, 0.0);
    for (const auto& im : images) {
        if (im.width() != w || im.height() != h) throw std::invalid_argument("compound: dimension mismatch");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += im[i];
    }
    for (double& v : acc) v /= static_cast<double>(images.size());
    img::Image out(w, h, std::move(acc));
    if (images[0].spacing()) out.set_spacing(*images[0].spacing());
    return out;
}

inline img::Plane compound_planes(const std::vector<img::Plane>& planes) {
    if (planes.empty()) throw std::invalid_argument("compound: empty list");
    img::Plane out(planes[0].width, planes[0].height);
    out.spacing = planes[0].spacing;
    for (const auto& p : planes) {
        if (p.width != out.width || p.height != out.height)
            throw std::invalid_argument("compound: dimension mismatch");
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += p.data[i];
    }
    for (double& v : out.data) v /= static_cast<double>(planes.size());
    return out;
}

// Full pipeline: scatterers -> per-tilt RF/envelope -> compound -> compress.
// Per-tilt renders run in parallel; the mean is taken in tilt-list order.
inline img::Image simulate_bmode(const img::Image& target, const SimConfig& cfg) {
    cfg.validate();
    const ScattererField field = make_scatterers(target, cfg);
    std::vector<img::Plane> envs(cfg.tilt_angles_deg.size());
    parallel_for(cfg.tilt_angles_deg.size(), [&](std::size_t i) {
        const Psf psf = render_psf(cfg, cfg.tilt_angles_deg[i]);
        envs[i] = envelope(simulate_rf(field, psf, cfg));
    });
    img::Plane env = compound_planes(envs);
    img::Plane env_grid = img::resize(env, cfg.grid_w, cfg.grid_h, img::InterpKind::Area);
    img::Image out = log_compress(env_grid, cfg.dynamic_range_db);
    out.set_spacing(img::Spacing{cfg.field_width_mm / cfg.grid_w, cfg.field_depth_mm / cfg.grid_h});
    return out;
}

// ---- synthetic clean targets -------------------------------------------

// Smooth background plus seeded ellipses; values kept inside [lo, hi] so a
// positive dynamic range survives log compression.
inline img::Image make_phantom(int w, int h, std::uint64_t seed, double lo = 0.08, double hi = 0.92) {
    Rng rng(seed);
    std::vector<double> px(static_cast<std::size_t>(w) * h);
    const double bg = rng.uniform(0.35, 0.65);
    const double gx = rng.uniform(-0.15, 0.15), gz = rng.uniform(-0.15, 0.15);
    for (int z = 0; z < h; ++z)
        for (int x = 0; x < w; ++x)
            px[static_cast<std::size_t>(z) * w + x] = bg + gx * (x / double(w) - 0.5) + gz * (z / double(h) - 0.5);
    const int n_ellipses = 3 + static_cast<int>(rng.below(4));
    for (int e = 0; e < n_ellipses; ++e) {
        const double cx = rng.uniform(0.15, 0.85) * w, cz = rng.uniform(0.15, 0.85) * h;
        const double rx = rng.uniform(0.06, 0.22) * w, rz = rng.uniform(0.06, 0.22) * h;
        const double level = rng.uniform() < 0.5 ? rng.uniform(lo, 0.3) : rng.uniform(0.7, hi);
        for (int z = 0; z < h; ++z)
            for (int x = 0; x < w; ++x) {
                const double dx = (x - cx) / rx, dz = (z - cz) / rz;
                if (dx * dx + dz * dz <= 1.0) px[static_cast<std::size_t>(z) * w + x] = level;
            }
    }
    for (double& v : px) v = v < lo ? lo : (v > hi ? hi : v);
    return img::Image(w, h, std::move(px));
}

// Dark disk centered in a homogeneous field; used by the vessel segmentation
// check. true_mask receives the analytic disk.
inline img::Image make_vessel_phantom(int w, int h, double radius_frac, std::vector<std::uint8_t>* true_mask,
                                      double lumen = 0.05, double tissue = 0.6) {
    std::vector<double> px(static_cast<std::size_t>(w) * h, tissue);
    if (true_mask) true_mask->assign(px.size(), 0);
    const double cx = (w - 1) / 2.0, cz = (h - 1) / 2.0;
    const double r = radius_frac * std::min(w, h);
    for (int z = 0; z < h; ++z)
        for (int x = 0; x < w; ++x) {
            const double dx = x - cx, dz = z - cz;
            if (dx * dx + dz * dz <= r * r) {
                px[static_cast<std::size_t>(z) * w + x] = lumen;
                if (true_mask) (*true_mask)[static_cast<std::size_t>(z) * w + x] = 1;
            }
        }
    return img::Image(w, h, std::move(px));
}

}
