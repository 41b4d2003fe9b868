#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "s2s/image.hpp"
#include "s2s/msp.hpp"
#include "s2s/tensor.hpp"

namespace s2s::train {

enum class LossFlavor { MSE, L1 };

// Reconstruction/consistency flavor pairs; MseRecOnly drops consistency.
enum class LossConfig { MseRecL1Con, MseRecMseCon, L1RecL1Con, MseRecOnly, L1RecMseCon };

inline LossFlavor rec_flavor(LossConfig c) {
    switch (c) {
        case LossConfig::L1RecL1Con:
        case LossConfig::L1RecMseCon: return LossFlavor::L1;
        default: return LossFlavor::MSE;
    }
}

inline bool has_consistency(LossConfig c) { return c != LossConfig::MseRecOnly; }

inline LossFlavor con_flavor(LossConfig c) {
    switch (c) {
        case LossConfig::MseRecMseCon:
        case LossConfig::L1RecMseCon: return LossFlavor::MSE;
        default: return LossFlavor::L1;
    }
}

inline std::string loss_config_name(LossConfig c) {
    switch (c) {
        case LossConfig::MseRecL1Con: return "mse_rec_l1_con";
        case LossConfig::MseRecMseCon: return "mse_rec_mse_con";
        case LossConfig::L1RecL1Con: return "l1_rec_l1_con";
        case LossConfig::MseRecOnly: return "mse_rec_only";
        case LossConfig::L1RecMseCon: return "l1_rec_mse_con";
    }
    throw std::logic_error("unreachable");
}

inline LossConfig loss_config_from_name(const std::string& s) {
    for (LossConfig c : {LossConfig::MseRecL1Con, LossConfig::MseRecMseCon, LossConfig::L1RecL1Con,
                         LossConfig::MseRecOnly, LossConfig::L1RecMseCon})
        if (loss_config_name(c) == s) return c;
    throw std::invalid_argument("unknown loss config: " + s);
}

namespace detail {

inline double pair_loss(const img::Image& a, const img::Image& b, LossFlavor f) {
    if (a.width() != b.width() || a.height() != b.height())
        throw std::invalid_argument("loss operands must share dimensions");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += f == LossFlavor::MSE ? d * d : std::abs(d);
    }
    return s / static_cast<double>(a.size());
}

}  // namespace detail

// Sum over branches of the mean per-pixel distance between each branch
// output and the perturbed variant it reconstructs.
inline double loss_rec(const std::vector<img::Image>& outputs, const msp::VariantSet& variants,
                       LossFlavor flavor) {
    if (outputs.size() != variants.variants.size())
        throw std::invalid_argument("outputs and variants must have matching lengths");
    double s = 0.0;
    for (std::size_t k = 0; k < outputs.size(); ++k)
        s += detail::pair_loss(outputs[k], variants.variants[k], flavor);
    return s;
}

// Sum over unordered branch pairs of the mean per-pixel distance.
inline double loss_con(const std::vector<img::Image>& outputs, LossFlavor flavor) {
    if (outputs.size() < 2) throw std::invalid_argument("consistency loss needs at least 2 outputs");
    double s = 0.0;
    for (std::size_t k = 0; k < outputs.size(); ++k)
        for (std::size_t l = k + 1; l < outputs.size(); ++l)
            s += detail::pair_loss(outputs[k], outputs[l], flavor);
    return s;
}

inline double total_loss(const std::vector<img::Image>& outputs, const msp::VariantSet& variants,
                         LossConfig cfg) {
    double s = loss_rec(outputs, variants, rec_flavor(cfg));
    if (has_consistency(cfg)) s += loss_con(outputs, con_flavor(cfg));
    return s;
}

// Supervised target loss (mean squared difference to the clean image).
inline double loss_n2c(const img::Image& output, const img::Image& clean) {
    return detail::pair_loss(output, clean, LossFlavor::MSE);
}

// Noise2Noise loss against a second independent noisy realization.
inline double loss_n2n(const img::Image& output, const img::Image& other_noisy) {
    return detail::pair_loss(output, other_noisy, LossFlavor::MSE);
}

// Tensor-level loss and gradient used by the training loop. Returns
// (total, rec, con) and fills grads[k] = d total / d outputs[k].
template <class T>
struct LossValue {
    double total = 0.0, rec = 0.0, con = 0.0;
};

template <class T>
LossValue<T> total_loss_grad(const std::vector<nn::Tensor<T>>& outputs,
                             const std::vector<nn::Tensor<T>>& targets, LossConfig cfg,
                             std::vector<nn::Tensor<T>>& grads) {
    const std::size_t K = outputs.size();
    if (targets.size() != K) throw std::invalid_argument("outputs and targets must have matching lengths");
    grads.clear();
    for (const auto& o : outputs) grads.emplace_back(o.c, o.h, o.w);

    LossValue<T> val;
    const LossFlavor rf = rec_flavor(cfg);
    for (std::size_t k = 0; k < K; ++k) {
        if (!outputs[k].same_shape(targets[k]))
            throw std::invalid_argument("loss operands must share dimensions");
        const double inv = 1.0 / static_cast<double>(outputs[k].size());
        double s = 0.0;
        for (std::size_t i = 0; i < outputs[k].v.size(); ++i) {
            const double d = static_cast<double>(outputs[k].v[i]) - static_cast<double>(targets[k].v[i]);
            if (rf == LossFlavor::MSE) {
                s += d * d;
                grads[k].v[i] += static_cast<T>(2.0 * d * inv);
            } else {
                s += std::abs(d);
                grads[k].v[i] += static_cast<T>((d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) * inv);
            }
        }
        val.rec += s * inv;
    }

    if (has_consistency(cfg) && K >= 2) {
        const LossFlavor cf = con_flavor(cfg);
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t l = k + 1; l < K; ++l) {
                const double inv = 1.0 / static_cast<double>(outputs[k].size());
                double s = 0.0;
                for (std::size_t i = 0; i < outputs[k].v.size(); ++i) {
                    const double d =
                        static_cast<double>(outputs[k].v[i]) - static_cast<double>(outputs[l].v[i]);
                    if (cf == LossFlavor::MSE) {
                        s += d * d;
                        grads[k].v[i] += static_cast<T>(2.0 * d * inv);
                        grads[l].v[i] -= static_cast<T>(2.0 * d * inv);
                    } else {
                        s += std::abs(d);
                        const double sg = d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0;
                        grads[k].v[i] += static_cast<T>(sg * inv);
                        grads[l].v[i] -= static_cast<T>(sg * inv);
                    }
                }
                val.con += s * inv;
            }
    }
    val.total = val.rec + val.con;
    return val;
}

// Plain MSE to a single target, with gradient (Noise2True / Noise2Noise).
template <class T>
LossValue<T> mse_loss_grad(const nn::Tensor<T>& output, const nn::Tensor<T>& target,
                           nn::Tensor<T>& grad) {
    if (!output.same_shape(target)) throw std::invalid_argument("loss operands must share dimensions");
    grad = nn::Tensor<T>(output.c, output.h, output.w);
    const double inv = 1.0 / static_cast<double>(output.size());
    double s = 0.0;
    for (std::size_t i = 0; i < output.v.size(); ++i) {
        const double d = static_cast<double>(output.v[i]) - static_cast<double>(target.v[i]);
        s += d * d;
        grad.v[i] = static_cast<T>(2.0 * d * inv);
    }
    LossValue<T> val;
    val.rec = s * inv;
    val.total = val.rec;
    return val;
}

}  // namespace s2s::train
