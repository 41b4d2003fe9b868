#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace s2s::img {

// Physical pixel spacing, mm per pixel in x (lateral) and z (axial).
struct Spacing {
    double dx_mm = 0.0;
    double dz_mm = 0.0;
};

// Unbounded row-major raster. Used for RF frames, envelopes and frequency
// bands, where values are signed or exceed 1.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<double> data;
    std::optional<Spacing> spacing;

    Plane() = default;
    Plane(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
        if (w < 1 || h < 1) throw std::invalid_argument("Plane: dimensions must be >= 1");
    }

    double& at(int x, int z) { return data[static_cast<std::size_t>(z) * width + x]; }
    double at(int x, int z) const { return data[static_cast<std::size_t>(z) * width + x]; }
    std::size_t size() const { return data.size(); }
};

// Grayscale image, row-major, every pixel finite and in [0,1].
class Image {
public:
    Image() = default;

    Image(int w, int h, double fill = 0.0) : width_(w), height_(h) {
        check_dims(w, h);
        check_value(fill);
        pixels_.assign(static_cast<std::size_t>(w) * h, fill);
    }

    Image(int w, int h, std::vector<double> pixels) : width_(w), height_(h), pixels_(std::move(pixels)) {
        check_dims(w, h);
        if (pixels_.size() != static_cast<std::size_t>(w) * h)
            throw std::invalid_argument("Image: pixel count does not match dimensions");
        for (double p : pixels_) check_value(p);
    }

    // Clamps into [0,1]; non-finite input is an error.
    static Image from_clamped(int w, int h, const std::vector<double>& raw) {
        check_dims(w, h);
        if (raw.size() != static_cast<std::size_t>(w) * h)
            throw std::invalid_argument("Image: pixel count does not match dimensions");
        std::vector<double> px(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (!std::isfinite(raw[i])) throw std::invalid_argument("Image: non-finite pixel");
            px[i] = raw[i] < 0.0 ? 0.0 : (raw[i] > 1.0 ? 1.0 : raw[i]);
        }
        Image out;
        out.width_ = w;
        out.height_ = h;
        out.pixels_ = std::move(px);
        return out;
    }

    static Image from_plane_clamped(const Plane& p) {
        Image out = from_clamped(p.width, p.height, p.data);
        out.spacing_ = p.spacing;
        return out;
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return pixels_.size(); }

    double at(int x, int z) const { return pixels_[static_cast<std::size_t>(z) * width_ + x]; }
    double operator[](std::size_t i) const { return pixels_[i]; }

    void set(int x, int z, double v) {
        check_value(v);
        pixels_[static_cast<std::size_t>(z) * width_ + x] = v;
    }

    const std::vector<double>& pixels() const { return pixels_; }

    const std::optional<Spacing>& spacing() const { return spacing_; }
    void set_spacing(Spacing s) { spacing_ = s; }

    Plane to_plane() const {
        Plane p(width_, height_);
        p.data = pixels_;
        p.spacing = spacing_;
        return p;
    }

private:
    static void check_dims(int w, int h) {
        if (w < 1 || h < 1) throw std::invalid_argument("Image: dimensions must be >= 1");
    }
    static void check_value(double v) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw std::invalid_argument("Image: pixel value outside [0,1]");
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> pixels_;
    std::optional<Spacing> spacing_;
};

inline Image extract_patch(const Image& im, int x0, int z0, int w, int h) {
    if (w < 1 || h < 1) throw std::invalid_argument("extract_patch: empty rectangle");
    if (x0 < 0 || z0 < 0 || x0 + w > im.width() || z0 + h > im.height())
        throw std::out_of_range("extract_patch: rectangle outside image bounds");
    std::vector<double> px(static_cast<std::size_t>(w) * h);
    for (int z = 0; z < h; ++z)
        for (int x = 0; x < w; ++x)
            px[static_cast<std::size_t>(z) * w + x] = im.at(x0 + x, z0 + z);
    Image out(w, h, std::move(px));
    if (im.spacing()) out.set_spacing(*im.spacing());
    return out;
}

// Sample Pearson correlation over all pixels.
inline double pearson(const Image& a, const Image& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw std::invalid_argument("pearson: dimension mismatch");
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
    if (saa == 0.0 || sbb == 0.0) throw std::domain_error("undefined correlation");
    double r = sab / std::sqrt(saa * sbb);
    return r < -1.0 ? -1.0 : (r > 1.0 ? 1.0 : r);
}

inline double mean_of(const Image& im) {
    double s = 0.0;
    for (std::size_t i = 0; i < im.size(); ++i) s += im[i];
    return s / static_cast<double>(im.size());
}

}
