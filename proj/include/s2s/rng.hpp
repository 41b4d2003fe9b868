#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

// Seeded RNG helpers. std::mt19937_64 is bit-portable, but the std
// distributions are not, so uniforms/normals are derived by hand here to keep
// runs byte-identical across standard libraries.

namespace s2s {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0,1) with 53-bit resolution
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one value per call, cache holds the second
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

    // Rayleigh with unit scale parameter
    double rayleigh() {
        double u = uniform();
        while (u >= 1.0) u = uniform();
        return std::sqrt(-2.0 * std::log(1.0 - u));
    }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // rejection-free is fine here: n is tiny next to 2^64, bias < 2^-40
        return eng_() % n;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}
