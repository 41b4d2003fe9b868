#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "image.hpp"

namespace s2s::metrics {

struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // 0 or 1

    Mask() = default;
    Mask(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

    std::uint8_t at(int x, int z) const { return data[static_cast<std::size_t>(z) * width + x]; }
    std::size_t area() const {
        std::size_t n = 0;
        for (auto v : data) n += v;
        return n;
    }
};

// 4-connected region of pixels within tol of the seed value
inline Mask flood_fill(const img::Image& im, int seed_x, int seed_z, double tol) {
    if (seed_x < 0 || seed_z < 0 || seed_x >= im.width() || seed_z >= im.height())
        throw std::out_of_range("flood_fill: seed outside image");
    if (tol < 0.0 || tol >= 1.0) throw std::invalid_argument("flood_fill: tol must be in [0,1)");
    Mask mask(im.width(), im.height());
    const double ref = im.at(seed_x, seed_z);
    std::vector<std::pair<int, int>> stack{{seed_x, seed_z}};
    mask.data[static_cast<std::size_t>(seed_z) * im.width() + seed_x] = 1;
    while (!stack.empty()) {
        auto [x, z] = stack.back();
        stack.pop_back();
        constexpr int nx[4] = {1, -1, 0, 0};
        constexpr int nz[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            const int x2 = x + nx[d], z2 = z + nz[d];
            if (x2 < 0 || z2 < 0 || x2 >= im.width() || z2 >= im.height()) continue;
            auto& m = mask.data[static_cast<std::size_t>(z2) * im.width() + x2];
            if (m) continue;
            if (std::fabs(im.at(x2, z2) - ref) <= tol) {
                m = 1;
                stack.emplace_back(x2, z2);
            }
        }
    }
    return mask;
}

// |a n b| / |a u b|; both empty defined as 1
inline double iou(const Mask& a, const Mask& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("iou: dimension mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const bool va = a.data[i] != 0, vb = b.data[i] != 0;
        inter += va && vb;
        uni += va || vb;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}
