#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "s2s/metrics.hpp"
#include "s2s/rng.hpp"
#include "s2s/segment.hpp"
#include "s2s/svd.hpp"

using namespace s2s;
using img::Image;

namespace {

Image random_image(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    Rng rng(seed);
    std::vector<double> px(static_cast<std::size_t>(w) * h);
    for (auto& p : px) p = rng.uniform(lo, hi);
    return Image(w, h, std::move(px));
}

// independent spectrum oracle: eigenvalues of the Gram matrix A^T A via
// classical two-sided Jacobi, square-rooted
std::vector<double> gram_spectrum(const Image& patch) {
    const int n = patch.width();
    std::vector<double> g(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int r = 0; r < n; ++r) s += patch.at(i, r) * patch.at(j, r);
            g[static_cast<std::size_t>(i) * n + j] = s;
        }
    auto at = [&](int i, int j) -> double& { return g[static_cast<std::size_t>(i) * n + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
        if (off < 1e-22) break;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::fabs(at(p, q)) < 1e-18) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t), s = c * t;
                for (int r = 0; r < n; ++r) {
                    const double grp = at(r, p), grq = at(r, q);
                    at(r, p) = c * grp - s * grq;
                    at(r, q) = s * grp + c * grq;
                }
                for (int r = 0; r < n; ++r) {
                    const double gpr = at(p, r), gqr = at(q, r);
                    at(p, r) = c * gpr - s * gqr;
                    at(q, r) = s * gpr + c * gqr;
                }
            }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = std::sqrt(std::max(0.0, at(i, i)));
    std::sort(ev.begin(), ev.end(), std::greater<double>());
    return ev;
}

}  // namespace

TEST_CASE("psnr oracles") {
    Image a = random_image(16, 16, 1);
    CHECK(std::isinf(metrics::psnr(a, a)));

    std::vector<double> off(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) off[i] = a[i] * 0.8 + 16.0 / 255.0;
    std::vector<double> base(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) base[i] = a[i] * 0.8;
    const double p = metrics::psnr(Image(16, 16, base), Image(16, 16, off));
    CHECK(p == Catch::Approx(20.0 * std::log10(255.0 / 16.0)).margin(1e-9));
    CHECK(p == Catch::Approx(24.05).margin(0.01));

    // brute-force MSE oracle on a fixture
    Image b = random_image(16, 16, 2);
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
    mse /= static_cast<double>(a.size());
    CHECK(metrics::psnr(a, b) == Catch::Approx(10.0 * std::log10(1.0 / mse)).margin(1e-12));
    CHECK(metrics::psnr(a, b) == Catch::Approx(metrics::psnr(b, a)).margin(1e-12));
    CHECK_THROWS(metrics::psnr(a, Image(8, 8, 0.5)));
}

TEST_CASE("ssim oracles and properties") {
    Image a = random_image(32, 32, 3);
    CHECK(metrics::ssim(a, a) == 1.0);  // exact

    Image b = random_image(32, 32, 4);
    CHECK(metrics::ssim(a, b) == Catch::Approx(metrics::ssim(b, a)).margin(1e-12));
    CHECK_THROWS(metrics::ssim(random_image(8, 8, 5), random_image(8, 8, 6)));

    // contrast inversion drives the structure term negative
    std::vector<double> checker(32 * 32), inv(32 * 32);
    for (int z = 0; z < 32; ++z)
        for (int x = 0; x < 32; ++x) {
            const double v = ((x / 4 + z / 4) % 2) ? 0.8 : 0.2;
            checker[z * 32 + x] = v;
            inv[z * 32 + x] = 1.0 - v;
        }
    CHECK(metrics::ssim(Image(32, 32, checker), Image(32, 32, inv)) < 0.0);
}

TEST_CASE("ssim under a simultaneous constant offset") {
    // the luminance term only grows when both means shift up together, so the
    // index is monotone; exact invariance would contradict its definition
    Image a = random_image(24, 24, 7, 0.1, 0.6);
    Image b = random_image(24, 24, 8, 0.1, 0.6);
    const double base = metrics::ssim(a, b);
    for (double c : {0.05, 0.2, 0.35}) {
        std::vector<double> ac(a.size()), bc(b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            ac[i] = a[i] + c;
            bc[i] = b[i] + c;
        }
        const double shifted = metrics::ssim(Image(24, 24, ac), Image(24, 24, bc));
        CHECK(shifted >= base - 1e-9);
    }
}

TEST_CASE("glcm homogeneity oracles") {
    CHECK(metrics::glcm_homogeneity(Image(8, 8, 0.37)) == Catch::Approx(1.0).margin(1e-12));

    // {0,1; 0,1}, levels 2, single offset (1,0), symmetric -> 0.5
    Image tiny(2, 2, std::vector<double>{0.0, 1.0, 0.0, 1.0});
    metrics::GlcmConfig cfg;
    cfg.levels = 2;
    cfg.offsets = {{1, 0}};
    CHECK(metrics::glcm_homogeneity(tiny, cfg) == Catch::Approx(0.5).margin(1e-15));

    // transposition invariance with the default two offsets
    Image a = random_image(20, 14, 9);
    std::vector<double> tr(a.size());
    for (int z = 0; z < 14; ++z)
        for (int x = 0; x < 20; ++x) tr[static_cast<std::size_t>(x) * 14 + z] = a.at(x, z);
    Image at(14, 20, tr);
    CHECK(metrics::glcm_homogeneity(a) == Catch::Approx(metrics::glcm_homogeneity(at)).margin(1e-12));

    CHECK_THROWS(metrics::glcm_homogeneity(a, metrics::GlcmConfig{1, {{1, 0}}, true, true}));
    CHECK_THROWS(metrics::glcm_homogeneity(a, metrics::GlcmConfig{32, {{0, 0}}, true, true}));
}

TEST_CASE("singular spectrum oracles") {
    // rank-1 outer product
    const int n = 12;
    std::vector<double> u(n), v(n), px(n * n);
    Rng rng(11);
    for (auto& x : u) x = rng.uniform(0.2, 1.0);
    for (auto& x : v) x = rng.uniform(0.2, 1.0);
    for (int z = 0; z < n; ++z)
        for (int x = 0; x < n; ++x) px[z * n + x] = u[z] * v[x] / 2.0;
    auto s1 = metrics::singular_spectrum(Image(n, n, px));
    CHECK(s1.values[0] > 0.1);
    for (int i = 1; i < n; ++i) CHECK(s1.values[i] < 1e-9);

    // diagonal ones
    std::vector<double> eye(n * n, 0.0);
    for (int i = 0; i < n; ++i) eye[i * n + i] = 1.0;
    auto s2 = metrics::singular_spectrum(Image(n, n, eye));
    for (int i = 0; i < n; ++i) CHECK(s2.values[i] == Catch::Approx(1.0).margin(1e-12));

    // random fixture vs the Gram-matrix eigenvalue oracle
    Image patch = random_image(16, 16, 13);
    auto s3 = metrics::singular_spectrum(patch);
    auto oracle = gram_spectrum(patch);
    REQUIRE(s3.values.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i)
        CHECK(s3.values[i] == Catch::Approx(oracle[i]).margin(1e-8));

    // Frobenius identity
    double fro2 = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < patch.size(); ++i) fro2 += patch[i] * patch[i];
    for (double s : s3.values) sum2 += s * s;
    CHECK(sum2 == Catch::Approx(fro2).epsilon(1e-6));

    // descending order
    for (std::size_t i = 1; i < s3.values.size(); ++i) CHECK(s3.values[i] <= s3.values[i - 1]);

    CHECK_THROWS(metrics::singular_spectrum(random_image(8, 12, 14)));
}

TEST_CASE("spectral energy topk") {
    metrics::SingularSpectrum rank1{{2.5, 0.0, 0.0}, 3};
    CHECK(metrics::spectral_energy_topk(rank1, 1) == Catch::Approx(1.0).margin(1e-15));

    metrics::SingularSpectrum flat{{1.0, 1.0, 1.0, 1.0, 1.0}, 5};
    CHECK(metrics::spectral_energy_topk(flat, 2) == Catch::Approx(2.0 / 5.0).margin(1e-15));

    metrics::SingularSpectrum fix{{3.0, 2.0, 1.0}, 3};
    CHECK(metrics::spectral_energy_topk(fix, 2) == Catch::Approx(13.0 / 14.0).margin(1e-15));
    CHECK(metrics::spectral_energy_topk(fix, 10) == Catch::Approx(1.0).margin(1e-15));

    metrics::SingularSpectrum zero{{0.0, 0.0}, 2};
    CHECK_THROWS(metrics::spectral_energy_topk(zero, 1));
    CHECK_THROWS(metrics::spectral_energy_topk(fix, 0));
}

TEST_CASE("flood fill") {
    Image flat(9, 9, 0.5);
    auto full = metrics::flood_fill(flat, 4, 4, 0.1);
    CHECK(full.area() == 81);

    Image distinct(3, 3, std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
    auto single = metrics::flood_fill(distinct, 1, 1, 0.0);
    CHECK(single.area() == 1);
    CHECK(single.at(1, 1) == 1);

    // 4-connectivity: diagonal-only neighbors excluded
    Image diag(3, 3, std::vector<double>{0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9});
    auto m = metrics::flood_fill(diag, 0, 0, 0.05);
    CHECK(m.area() == 1);

    CHECK_THROWS(metrics::flood_fill(flat, 9, 0, 0.1));
    CHECK_THROWS(metrics::flood_fill(flat, 0, 0, 1.0));
}

TEST_CASE("iou") {
    metrics::Mask a(4, 4), b(4, 4);
    for (int z = 0; z < 2; ++z)
        for (int x = 0; x < 4; ++x) a.data[z * 4 + x] = 1;
    CHECK(metrics::iou(a, a) == 1.0);

    for (int z = 1; z < 3; ++z)
        for (int x = 0; x < 4; ++x) b.data[z * 4 + x] = 1;
    // overlap 4, union 12
    CHECK(metrics::iou(a, b) == Catch::Approx(1.0 / 3.0).margin(1e-15));

    metrics::Mask c(4, 4);
    for (int x = 0; x < 4; ++x) c.data[3 * 4 + x] = 1;
    CHECK(metrics::iou(a, c) == 0.0);

    metrics::Mask e1(4, 4), e2(4, 4);
    CHECK(metrics::iou(e1, e2) == 1.0);
    CHECK_THROWS(metrics::iou(a, metrics::Mask(3, 3)));
}
