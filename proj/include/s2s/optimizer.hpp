#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "s2s/net.hpp"

namespace s2s::train {

struct OptimizerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Adaptive-moment optimizer with bias correction; epsilon is added outside
// the square root. Moments are kept in double regardless of the model type.
template <class T>
class Adam {
  public:
    Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        if (lr <= 0.0) throw std::invalid_argument("learning rate must be positive");
    }

    void step(nn::Model<T>& model, nn::Model<T>& grads) {
        ensure_state(model);
        check_finite(grads);
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        std::size_t blk = 0;
        auto update = [&](std::vector<T>& p, const std::vector<T>& g) {
            std::vector<double>& m = m_[blk];
            std::vector<double>& v = v_[blk];
            ++blk;
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double gi = static_cast<double>(g[i]);
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
                const double mh = m[i] / bc1;
                const double vh = v[i] / bc2;
                p[i] = static_cast<T>(static_cast<double>(p[i]) - lr_ * mh / (std::sqrt(vh) + eps_));
            }
        };
        std::vector<nn::Conv2d<T>*> pc, gc;
        model.visit([&](nn::Conv2d<T>& c) { pc.push_back(&c); });
        grads.visit([&](nn::Conv2d<T>& c) { gc.push_back(&c); });
        for (std::size_t i = 0; i < pc.size(); ++i) {
            update(pc[i]->W, gc[i]->W);
            update(pc[i]->b, gc[i]->b);
        }
    }

    long long step_count() const { return t_; }

  private:
    void ensure_state(nn::Model<T>& model) {
        if (!m_.empty()) return;
        model.visit([&](nn::Conv2d<T>& c) {
            m_.emplace_back(c.W.size(), 0.0);
            v_.emplace_back(c.W.size(), 0.0);
            m_.emplace_back(c.b.size(), 0.0);
            v_.emplace_back(c.b.size(), 0.0);
        });
    }

    static void check_finite(nn::Model<T>& grads) {
        grads.visit_named([](nn::Conv2d<T>& c, const std::string& name) {
            for (T w : c.W)
                if (!std::isfinite(static_cast<double>(w)))
                    throw OptimizerError("non-finite gradient in " + name + ".weight");
            for (T b : c.b)
                if (!std::isfinite(static_cast<double>(b)))
                    throw OptimizerError("non-finite gradient in " + name + ".bias");
        });
    }

    double lr_, beta1_, beta2_, eps_;
    long long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace s2s::train
