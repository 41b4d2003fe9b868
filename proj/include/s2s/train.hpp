#pragma once

#include <chrono>
#include <cstdio>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "s2s/image.hpp"
#include "s2s/losses.hpp"
#include "s2s/msp.hpp"
#include "s2s/net.hpp"
#include "s2s/optimizer.hpp"
#include "s2s/resample.hpp"
#include "s2s/rng.hpp"
#include "s2s/threading.hpp"

namespace s2s::train {

enum class TrainMode { Speckle2Self, Noise2True, Noise2Noise };

inline std::string train_mode_name(TrainMode m) {
    switch (m) {
        case TrainMode::Speckle2Self: return "speckle2self";
        case TrainMode::Noise2True: return "noise2true";
        case TrainMode::Noise2Noise: return "noise2noise";
    }
    throw std::logic_error("unreachable");
}

inline TrainMode train_mode_from_name(const std::string& s) {
    for (TrainMode m : {TrainMode::Speckle2Self, TrainMode::Noise2True, TrainMode::Noise2Noise})
        if (train_mode_name(m) == s) return m;
    throw std::invalid_argument("unknown training mode: " + s);
}

// Which perturbation scales feed which encoder. H=1.0, M=0.5, L=0.25;
// OneEncoder sends all three scales through a single shared encoder.
enum class BranchConfig { HML, HL, ML, HM, OneEncoder };

inline std::string branch_config_name(BranchConfig b) {
    switch (b) {
        case BranchConfig::HML: return "hml";
        case BranchConfig::HL: return "hl";
        case BranchConfig::ML: return "ml";
        case BranchConfig::HM: return "hm";
        case BranchConfig::OneEncoder: return "one_encoder";
    }
    throw std::logic_error("unreachable");
}

inline BranchConfig branch_config_from_name(const std::string& s) {
    for (BranchConfig b : {BranchConfig::HML, BranchConfig::HL, BranchConfig::ML, BranchConfig::HM,
                           BranchConfig::OneEncoder})
        if (branch_config_name(b) == s) return b;
    throw std::invalid_argument("unknown branch config: " + s);
}

inline std::vector<double> scales_for(BranchConfig b) {
    switch (b) {
        case BranchConfig::HML: return {1.0, 0.5, 0.25};
        case BranchConfig::HL: return {1.0, 0.25};
        case BranchConfig::ML: return {0.5, 0.25};
        case BranchConfig::HM: return {1.0, 0.5};
        case BranchConfig::OneEncoder: return {1.0, 0.5, 0.25};
    }
    throw std::logic_error("unreachable");
}

inline int n_branches_for(BranchConfig b) {
    return b == BranchConfig::OneEncoder ? 1 : static_cast<int>(scales_for(b).size());
}

struct TrainConfig {
    TrainMode mode = TrainMode::Speckle2Self;
    LossConfig loss = LossConfig::MseRecL1Con;
    BranchConfig branches = BranchConfig::HML;
    img::InterpKind interp = img::InterpKind::Bilinear;
    double lr = 0.001;
    int batch_size = 16;
    int epochs = 1;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const {
        if (lr <= 0.0) throw std::invalid_argument("lr must be positive");
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    }
};

struct TrainHistoryRow {
    int epoch = 0;
    double total_loss = 0.0, rec_loss = 0.0, con_loss = 0.0, wall_seconds = 0.0;
};

struct TrainHistory {
    std::vector<TrainHistoryRow> rows;

    // wall_seconds stays off the CSV so a replayed run reproduces it byte-for-byte
    void write_csv(std::ostream& os) const {
        os << "epoch,total_loss,rec_loss,con_loss\n";
        char buf[160];
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", r.epoch, r.total_loss,
                          r.rec_loss, r.con_loss);
            os << buf;
        }
    }
};

// Training dataset: targets are clean pairs (Noise2True) or second noisy
// realizations (Noise2Noise); unused for Speckle2Self.
struct TrainData {
    std::vector<img::Image> noisy;
    std::vector<img::Image> targets;
};

struct AbortError : std::runtime_error {
    nn::Model<float> last_good;
    TrainHistory history;
    AbortError(const std::string& what, nn::Model<float> m, TrainHistory h)
        : std::runtime_error(what), last_good(std::move(m)), history(std::move(h)) {}
};

struct TrainCallbacks {
    std::function<void(const TrainHistoryRow&, const nn::Model<float>&)> on_epoch;
};

namespace detail {

// Per-image precomputed branch inputs and loss targets.
struct Sample {
    std::vector<nn::Tensor<float>> inputs;   // one per branch output
    std::vector<nn::Tensor<float>> targets;  // same length for S2S; single for N2T/N2N
};

inline Sample make_sample(const img::Image& noisy, const img::Image* target, const TrainConfig& cfg) {
    Sample s;
    if (cfg.mode == TrainMode::Speckle2Self) {
        msp::VariantSet vs = msp::msp_variants(noisy, scales_for(cfg.branches), cfg.interp);
        for (const auto& v : vs.variants) {
            s.inputs.push_back(nn::image_to_tensor<float>(v));
            s.targets.push_back(nn::image_to_tensor<float>(v));
        }
    } else {
        if (target == nullptr) throw std::invalid_argument("paired targets required for this training mode");
        s.inputs.push_back(nn::image_to_tensor<float>(noisy));
        s.targets.push_back(nn::image_to_tensor<float>(*target));
    }
    return s;
}

inline int encoder_index(const TrainConfig& cfg, std::size_t variant) {
    if (cfg.mode != TrainMode::Speckle2Self) return 0;
    return cfg.branches == BranchConfig::OneEncoder ? 0 : static_cast<int>(variant);
}

}  // namespace detail

// Mean per-image loss of the model on the dataset under cfg, without training.
inline LossValue<float> evaluate_loss(const nn::Model<float>& model, const TrainData& data,
                                      const TrainConfig& cfg) {
    cfg.validate();
    LossValue<float> acc;
    for (std::size_t i = 0; i < data.noisy.size(); ++i) {
        const img::Image* tgt = data.targets.empty() ? nullptr : &data.targets[i];
        detail::Sample s = detail::make_sample(data.noisy[i], tgt, cfg);
        std::vector<nn::Tensor<float>> outs;
        for (std::size_t k = 0; k < s.inputs.size(); ++k)
            outs.push_back(nn::forward_tensor(model, s.inputs[k], detail::encoder_index(cfg, k) + 1));
        LossValue<float> v;
        if (cfg.mode == TrainMode::Speckle2Self) {
            std::vector<nn::Tensor<float>> grads;
            v = total_loss_grad(outs, s.targets, cfg.loss, grads);
        } else {
            nn::Tensor<float> g;
            v = mse_loss_grad(outs[0], s.targets[0], g);
        }
        acc.total += v.total;
        acc.rec += v.rec;
        acc.con += v.con;
    }
    const double inv = 1.0 / static_cast<double>(data.noisy.size());
    acc.total *= inv;
    acc.rec *= inv;
    acc.con *= inv;
    return acc;
}

// Runs the training loop, mutating the model in place. Deterministic given
// (model seed, dataset order, cfg). Throws AbortError carrying the last
// finite parameter snapshot if a loss or gradient turns non-finite.
inline TrainHistory train(nn::Model<float>& model, const TrainData& data, const TrainConfig& cfg,
                          const TrainCallbacks& callbacks = {}) {
    cfg.validate();
    if (data.noisy.empty()) throw std::invalid_argument("dataset must be non-empty");
    if (cfg.mode != TrainMode::Speckle2Self && data.targets.size() != data.noisy.size())
        throw std::invalid_argument("paired targets required for this training mode");
    const int stride = model.arch.total_stride();
    for (const auto& im : data.noisy) nn::check_forward_dims(model, im.width(), im.height());
    (void)stride;
    if (cfg.mode == TrainMode::Speckle2Self) {
        const int need = n_branches_for(cfg.branches);
        if (static_cast<int>(model.encoders.size()) != need)
            throw std::invalid_argument("model has " + std::to_string(model.encoders.size()) +
                                        " encoders but branch config needs " + std::to_string(need));
    }

    // Branch inputs are deterministic per image; build them once up front.
    std::vector<detail::Sample> samples(data.noisy.size());
    parallel_for(data.noisy.size(), [&](std::size_t i) {
        const img::Image* tgt = data.targets.empty() ? nullptr : &data.targets[i];
        samples[i] = detail::make_sample(data.noisy[i], tgt, cfg);
    });

    Adam<float> opt(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(data.noisy.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainHistory history;
    nn::Model<float> last_good = model;
    nn::Model<float> grads = nn::make_zero_like(model);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        rng.shuffle(order);
        double ep_total = 0.0, ep_rec = 0.0, ep_con = 0.0;

        for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
            nn::zero_params(grads);
            for (std::size_t oi = b0; oi < b1; ++oi) {
                const detail::Sample& s = samples[order[oi]];
                const std::size_t K = s.inputs.size();
                std::vector<typename nn::Encoder<float>::Trace> enc_tr(K);
                std::vector<typename nn::Decoder<float>::Trace> dec_tr(K);
                std::vector<nn::Tensor<float>> outs(K);
                for (std::size_t k = 0; k < K; ++k) {
                    const int e = detail::encoder_index(cfg, k);
                    nn::Tensor<float> z = model.encoders[e].forward(s.inputs[k], enc_tr[k]);
                    outs[k] = model.decoder.forward(z, dec_tr[k]);
                }
                LossValue<float> v;
                std::vector<nn::Tensor<float>> douts;
                if (cfg.mode == TrainMode::Speckle2Self) {
                    v = total_loss_grad(outs, s.targets, cfg.loss, douts);
                } else {
                    douts.resize(1);
                    v = mse_loss_grad(outs[0], s.targets[0], douts[0]);
                }
                if (!std::isfinite(v.total))
                    throw AbortError("non-finite loss at epoch " + std::to_string(epoch), last_good,
                                     history);
                ep_total += v.total;
                ep_rec += v.rec;
                ep_con += v.con;
                for (std::size_t k = 0; k < K; ++k) {
                    nn::Tensor<float> dz = model.decoder.backward(dec_tr[k], std::move(douts[k]), grads.decoder);
                    const int e = detail::encoder_index(cfg, k);
                    model.encoders[e].backward(enc_tr[k], std::move(dz), grads.encoders[e]);
                }
            }
            const float inv = 1.0f / static_cast<float>(b1 - b0);
            grads.visit([&](nn::Conv2d<float>& c) {
                for (auto& w : c.W) w *= inv;
                for (auto& bb : c.b) bb *= inv;
            });
            try {
                opt.step(model, grads);
            } catch (const OptimizerError& e) {
                throw AbortError(e.what(), last_good, history);
            }
        }

        const double n = static_cast<double>(order.size());
        TrainHistoryRow row;
        row.epoch = epoch;
        row.total_loss = ep_total / n;
        row.rec_loss = ep_rec / n;
        row.con_loss = ep_con / n;
        row.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.rows.push_back(row);
        last_good = model;
        if (callbacks.on_epoch) callbacks.on_epoch(row, model);
    }
    return history;
}

// Reflect-pads to the model stride, runs the scale-1.0 branch, crops back.
inline img::Image denoise(const nn::Model<float>& model, const img::Image& im) {
    const int s = model.arch.total_stride();
    const int w = im.width(), h = im.height();
    const int pw = (w + s - 1) / s * s;
    const int ph = (h + s - 1) / s * s;
    nn::Tensor<float> x(1, ph, pw);
    for (int z = 0; z < ph; ++z)
        for (int xx = 0; xx < pw; ++xx)
            x.at(0, z, xx) = static_cast<float>(im.at(img::detail::reflect(xx, w), img::detail::reflect(z, h)));
    nn::Tensor<float> y = nn::forward_tensor(model, x, 1);
    std::vector<double> px(static_cast<std::size_t>(w) * h);
    for (int z = 0; z < h; ++z)
        for (int xx = 0; xx < w; ++xx) px[static_cast<std::size_t>(z) * w + xx] = y.at(0, z, xx);
    return img::Image::from_clamped(w, h, px);
}

}  // namespace s2s::train
