#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "s2s/losses.hpp"
#include "s2s/msp.hpp"
#include "s2s/net.hpp"
#include "s2s/rng.hpp"

using namespace s2s;
using nn::ArchConfig;
using nn::Model;
using nn::Tensor;

namespace {

ArchConfig tiny_arch() {
    ArchConfig a;
    a.n_branches = 3;
    a.base_channels = 1;
    a.enc_conv_blocks = 2;
    a.enc_res_blocks = 1;
    a.dec_conv_blocks = 2;
    a.dec_res_blocks = 1;
    return a;
}

img::Image random_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> px(static_cast<std::size_t>(w) * h);
    for (auto& p : px) p = 0.05 + 0.9 * rng.uniform();
    return img::Image::from_clamped(w, h, px);
}

// Direct-summation 3x3 convolution, written independently of the
// im2col/gemm path in the library.
template <class T>
Tensor<T> naive_conv3(const Tensor<T>& x, const nn::Conv2d<T>& c) {
    const int oh = (x.h + 2 - 3) / c.stride + 1;
    const int ow = (x.w + 2 - 3) / c.stride + 1;
    Tensor<T> y(c.out_c, oh, ow);
    for (int oc = 0; oc < c.out_c; ++oc)
        for (int oz = 0; oz < oh; ++oz)
            for (int ox = 0; ox < ow; ++ox) {
                T acc = c.b[oc];
                for (int ic = 0; ic < c.in_c; ++ic)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            const int iz = oz * c.stride + ky - 1;
                            const int ix = ox * c.stride + kx - 1;
                            if (iz < 0 || iz >= x.h || ix < 0 || ix >= x.w) continue;
                            acc += c.W[(static_cast<std::size_t>(oc) * c.in_c + ic) * 9 + ky * 3 + kx] *
                                   x.at(ic, iz, ix);
                        }
                y.at(oc, oz, ox) = acc;
            }
    return y;
}

template <class T>
Tensor<T> naive_relu(Tensor<T> t) {
    for (auto& v : t.v) v = v > T(0) ? v : T(0);
    return t;
}

template <class T>
Tensor<T> naive_res(const Tensor<T>& x, const nn::ResBlock<T>& r) {
    Tensor<T> a = naive_relu(naive_conv3(x, r.c1));
    Tensor<T> y = naive_conv3(a, r.c2);
    for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += x.v[i];
    return naive_relu(std::move(y));
}

template <class T>
Tensor<T> naive_forward(const Model<T>& m, const Tensor<T>& x, int branch) {
    Tensor<T> cur = x;
    for (const auto& c : m.encoders[branch - 1].convs) cur = naive_relu(naive_conv3(cur, c));
    for (const auto& r : m.encoders[branch - 1].res) cur = naive_res(cur, r);
    for (const auto& r : m.decoder.res) cur = naive_res(cur, r);
    for (const auto& c : m.decoder.ups) {
        Tensor<T> up(cur.c, cur.h * 2, cur.w * 2);
        for (int ci = 0; ci < cur.c; ++ci)
            for (int z = 0; z < up.h; ++z)
                for (int xx = 0; xx < up.w; ++xx) up.at(ci, z, xx) = cur.at(ci, z / 2, xx / 2);
        cur = naive_relu(naive_conv3(up, c));
    }
    cur = naive_conv3(cur, m.decoder.head);
    for (auto& v : cur.v) v = T(1) / (T(1) + std::exp(-v));
    return cur;
}

// Flat views of every parameter / gradient scalar, in checkpoint order.
template <class T>
std::vector<T*> flat_params(Model<T>& m) {
    std::vector<T*> out;
    m.visit([&](nn::Conv2d<T>& c) {
        for (auto& w : c.W) out.push_back(&w);
        for (auto& b : c.b) out.push_back(&b);
    });
    return out;
}

// Distance of every ReLU input to its kink, plus how many units are off.
struct KinkStats {
    double min_dist = 1e9;
    long dead = 0;
    void note(const Tensor<double>& pre) {
        for (double v : pre.v) {
            min_dist = std::min(min_dist, std::abs(v));
            if (v <= 0.0) ++dead;
        }
    }
};

void branch_kink_stats(const Model<double>& m, const Tensor<double>& x, int branch, KinkStats& st) {
    Tensor<double> cur = x;
    auto res_pass = [&](const nn::ResBlock<double>& r) {
        Tensor<double> a = naive_conv3(cur, r.c1);
        st.note(a);
        a = naive_relu(std::move(a));
        Tensor<double> y = naive_conv3(a, r.c2);
        for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += cur.v[i];
        st.note(y);
        cur = naive_relu(std::move(y));
    };
    for (const auto& c : m.encoders[branch - 1].convs) {
        cur = naive_conv3(cur, c);
        st.note(cur);
        cur = naive_relu(std::move(cur));
    }
    for (const auto& r : m.encoders[branch - 1].res) res_pass(r);
    for (const auto& r : m.decoder.res) res_pass(r);
    for (const auto& c : m.decoder.ups) {
        Tensor<double> up(cur.c, cur.h * 2, cur.w * 2);
        for (int ci = 0; ci < cur.c; ++ci)
            for (int z = 0; z < up.h; ++z)
                for (int xx = 0; xx < up.w; ++xx) up.at(ci, z, xx) = cur.at(ci, z / 2, xx / 2);
        cur = naive_conv3(up, c);
        st.note(cur);
        cur = naive_relu(std::move(cur));
    }
    // the head feeds a sigmoid, which is smooth
}

}  // namespace

TEST_CASE("build_model is deterministic and seed-sensitive") {
    auto a = nn::build_model<float>(tiny_arch(), 99);
    auto b = nn::build_model<float>(tiny_arch(), 99);
    auto c = nn::build_model<float>(tiny_arch(), 100);
    auto pa = flat_params(a), pb = flat_params(b), pc = flat_params(c);
    REQUIRE(pa.size() == pb.size());
    bool same = true, diff = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        same = same && *pa[i] == *pb[i];
        diff = diff || *pa[i] != *pc[i];
    }
    CHECK(same);
    CHECK(diff);
}

TEST_CASE("parameter counts match the architecture") {
    // single 3x3 conv, 1 -> 8 channels with bias
    nn::Conv2d<float> lone(1, 8, 1);
    CHECK(lone.W.size() + lone.b.size() == 80);

    CHECK(nn::param_count(nn::build_model<float>(tiny_arch(), 1)) == 433);

    ArchConfig desk;  // defaults: K=3, base 16, blocks 4/3/4/4
    CHECK(nn::param_count(nn::build_model<float>(desk, 1)) == 335921);

    ArchConfig full = desk;
    full.base_channels = 48;
    const double n = static_cast<double>(nn::param_count(nn::build_model<float>(full, 1)));
    CHECK(std::abs(n - 3e6) / 3e6 < 0.2);

    ArchConfig half = desk;
    half.base_channels = 8;
    const double n8 = static_cast<double>(nn::param_count(nn::build_model<float>(half, 1)));
    ArchConfig dbl = desk;  // base 16 is double of 8
    const double n16 = static_cast<double>(nn::param_count(nn::build_model<float>(dbl, 1)));
    CHECK(n16 / n8 == Catch::Approx(4.0).margin(0.4));
}

TEST_CASE("arch validation") {
    ArchConfig a = tiny_arch();
    a.n_branches = 0;
    CHECK_THROWS_AS(nn::build_model<float>(a, 1), std::invalid_argument);
    a = tiny_arch();
    a.base_channels = 0;
    CHECK_THROWS_AS(nn::build_model<float>(a, 1), std::invalid_argument);
    a = tiny_arch();
    a.dec_conv_blocks = 3;
    CHECK_THROWS_AS(nn::build_model<float>(a, 1), std::invalid_argument);
}

TEST_CASE("forward preserves shape and stays in (0,1)") {
    ArchConfig a;
    a.base_channels = 4;
    auto m = nn::build_model<float>(a, 7);
    for (int dim : {16, 32, 48}) {
        img::Image in = random_image(dim, dim, 11u + static_cast<unsigned>(dim));
        img::Image out = nn::forward(m, in, 2);
        REQUIRE(out.width() == dim);
        REQUIRE(out.height() == dim);
        for (std::size_t i = 0; i < out.size(); ++i) {
            REQUIRE(out[i] > 0.0);
            REQUIRE(out[i] < 1.0);
        }
    }
    img::Image in = random_image(64, 32, 5);
    img::Image out = nn::forward(m, in, 1);
    CHECK(out.width() == 64);
    CHECK(out.height() == 32);
}

TEST_CASE("forward rejects bad dimensions and branches") {
    auto m = nn::build_model<float>(tiny_arch(), 3);  // total stride 4
    CHECK_THROWS_WITH(nn::forward(m, random_image(18, 16, 1), 1),
                      Catch::Matchers::ContainsSubstring("divisible"));
    CHECK_THROWS_WITH(nn::forward(m, random_image(16, 16, 1), 4),
                      Catch::Matchers::ContainsSubstring("branch"));
    CHECK_THROWS_WITH(nn::forward(m, random_image(16, 16, 1), 0),
                      Catch::Matchers::ContainsSubstring("branch"));
}

TEST_CASE("zeroed head gives constant one-half output") {
    auto m = nn::build_model<float>(tiny_arch(), 21);
    std::fill(m.decoder.head.W.begin(), m.decoder.head.W.end(), 0.0f);
    std::fill(m.decoder.head.b.begin(), m.decoder.head.b.end(), 0.0f);
    img::Image out = nn::forward(m, random_image(16, 16, 2), 1);
    for (std::size_t i = 0; i < out.size(); ++i) REQUIRE(out[i] == 0.5);
}

TEST_CASE("forward matches an independent direct-summation reference") {
    ArchConfig a = tiny_arch();
    a.base_channels = 2;  // fixed tiny model, 16x16 input
    auto m = nn::build_model<double>(a, 1234);
    Tensor<double> x = nn::image_to_tensor<double>(random_image(16, 16, 77));
    for (int branch = 1; branch <= 3; ++branch) {
        Tensor<double> got = nn::forward_tensor(m, x, branch);
        Tensor<double> want = naive_forward(m, x, branch);
        REQUIRE(got.same_shape(want));
        for (std::size_t i = 0; i < got.v.size(); ++i)
            REQUIRE(got.v[i] == Catch::Approx(want.v[i]).margin(1e-12));
    }
}

TEST_CASE("branch independence and decoder sharing") {
    auto m = nn::build_model<float>(tiny_arch(), 8);
    img::Image in = random_image(16, 16, 4);
    img::Image base1 = nn::forward(m, in, 1);
    img::Image base2 = nn::forward(m, in, 2);
    img::Image base3 = nn::forward(m, in, 3);

    auto perturbed = m;
    perturbed.encoders[0].convs[0].W[0] += 0.25f;
    img::Image p2 = nn::forward(perturbed, in, 2);
    img::Image p3 = nn::forward(perturbed, in, 3);
    for (std::size_t i = 0; i < p2.size(); ++i) REQUIRE(p2[i] == base2[i]);
    for (std::size_t i = 0; i < p3.size(); ++i) REQUIRE(p3[i] == base3[i]);
    bool changed1 = false;
    img::Image p1 = nn::forward(perturbed, in, 1);
    for (std::size_t i = 0; i < p1.size(); ++i) changed1 = changed1 || p1[i] != base1[i];
    CHECK(changed1);

    auto shared = m;
    shared.decoder.res[0].c1.W[0] += 0.25f;
    for (int branch = 1; branch <= 3; ++branch) {
        img::Image p = nn::forward(shared, in, branch);
        const img::Image& base = branch == 1 ? base1 : branch == 2 ? base2 : base3;
        bool changed = false;
        for (std::size_t i = 0; i < p.size(); ++i) changed = changed || p[i] != base[i];
        CHECK(changed);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    ArchConfig a = tiny_arch();
    auto m = nn::build_model<double>(a, 4242);
    REQUIRE(nn::param_count(m) <= 500);

    // Central differences break down when a ReLU input sits within h of its
    // kink, and a bias step moves a whole channel at once. Zero-init biases
    // over the nearly constant low-scale variant leave entire channels
    // straddling zero, so offset the biases and then assert the margin.
    m.visit([](nn::Conv2d<double>& c) {
        for (std::size_t i = 0; i < c.b.size(); ++i) c.b[i] = i % 2 == 0 ? 0.03 : -0.03;
    });

    img::Image in = random_image(16, 16, 31);
    msp::VariantSet vs = msp::msp_variants(in, {1.0, 0.5, 0.25}, img::InterpKind::Bilinear);
    std::vector<Tensor<double>> inputs, targets;
    for (const auto& v : vs.variants) {
        inputs.push_back(nn::image_to_tensor<double>(v));
        targets.push_back(nn::image_to_tensor<double>(v));
    }

    KinkStats st;
    for (int k = 1; k <= 3; ++k) branch_kink_stats(m, inputs[k - 1], k, st);
    INFO("kink distance " << st.min_dist << ", dead units " << st.dead);
    REQUIRE(st.min_dist > 1e-4);  // every ReLU input is >= 10 steps from its kink
    CHECK(st.dead >= 1);          // the masking path is actually exercised

    auto loss_value = [&](const Model<double>& model, train::LossConfig cfg) {
        std::vector<Tensor<double>> outs;
        for (int k = 0; k < 3; ++k) outs.push_back(nn::forward_tensor(model, inputs[k], k + 1));
        std::vector<Tensor<double>> g;
        return train::total_loss_grad(outs, targets, cfg, g).total;
    };

    // Only the smooth configs differentiate cleanly through the whole model:
    // an L1 term kinks wherever branch outputs cross each other or the
    // target, and some pixel always sits near such a crossing. The L1
    // gradients are finite-difference checked at the loss level instead, on
    // residuals with controlled margins.
    for (train::LossConfig cfg : {train::LossConfig::MseRecMseCon, train::LossConfig::MseRecOnly}) {
        INFO("loss config " << train::loss_config_name(cfg));

        // analytic
        auto grads = nn::make_zero_like(m);
        std::vector<typename nn::Encoder<double>::Trace> etr(3);
        std::vector<typename nn::Decoder<double>::Trace> dtr(3);
        std::vector<Tensor<double>> outs(3);
        for (int k = 0; k < 3; ++k) {
            Tensor<double> z = m.encoders[k].forward(inputs[k], etr[k]);
            outs[k] = m.decoder.forward(z, dtr[k]);
        }
        std::vector<Tensor<double>> douts;
        train::total_loss_grad(outs, targets, cfg, douts);
        for (int k = 0; k < 3; ++k) {
            Tensor<double> dz = m.decoder.backward(dtr[k], std::move(douts[k]), grads.decoder);
            m.encoders[k].backward(etr[k], std::move(dz), grads.encoders[k]);
        }

        auto mp = m;
        auto pp = flat_params(mp);
        auto pg = flat_params(grads);
        REQUIRE(pp.size() == nn::param_count(m));
        const double h = 1e-5;
        double worst = 0.0;
        for (std::size_t i = 0; i < pp.size(); ++i) {
            const double keep = *pp[i];
            *pp[i] = keep + h;
            const double fp = loss_value(mp, cfg);
            *pp[i] = keep - h;
            const double fm = loss_value(mp, cfg);
            *pp[i] = keep;
            const double gn = (fp - fm) / (2.0 * h);
            const double ga = *pg[i];
            const double rel = std::abs(ga - gn) / std::max(1e-6, std::abs(ga) + std::abs(gn));
            worst = std::max(worst, rel);
        }
        INFO("worst relative error " << worst);
        CHECK(worst < 1e-3);
    }
}
