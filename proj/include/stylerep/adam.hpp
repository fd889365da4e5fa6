#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "stylerep/errors.hpp"

namespace stylerep {

/// Hyperparameters for Adam, shared by the linear-classifier trainer and the
/// style-transfer pixel optimizer.
struct AdamConfig {
    double step = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int epochs = 55;
    int batch = 32;
    std::uint64_t seed = 0;
    double l2 = 0.0;

    void validate() const {
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw DataError(str("adam: betas must lie in [0,1), got ", beta1, ", ", beta2));
        if (!(eps > 0.0)) throw DataError(str("adam: eps must be positive, got ", eps));
        if (!(step > 0.0)) throw DataError(str("adam: step must be positive, got ", step));
        if (l2 < 0.0) throw DataError(str("adam: l2 penalty must be nonnegative, got ", l2));
    }
};

/// Adam with bias-corrected moment estimates. Moments are kept in double so
/// the bias-corrected first step reduces to step * sign(gradient) to within
/// eps, independent of the parameter dtype.
template <typename T>
class AdamOptimizerT {
public:
    explicit AdamOptimizerT(std::size_t size, const AdamConfig& cfg = {})
        : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {
        cfg_.validate();
    }

    double step_size() const { return cfg_.step; }
    void set_step_size(double s) {
        if (!(s > 0.0)) throw DataError(str("adam: step must be positive, got ", s));
        cfg_.step = s;
    }

    /// One update in place; params and grads must match the construction size.
    void step(std::span<T> params, std::span<const T> grads) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw ShapeError(str("adam: got ", params.size(), " params / ", grads.size(),
                                 " grads for state of ", m_.size()));
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < m_.size(); ++i) {
            const double g = static_cast<double>(grads[i]);
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m_[i] / c1;
            const double vhat = v_[i] / c2;
            params[i] =
                static_cast<T>(static_cast<double>(params[i]) -
                               cfg_.step * mhat / (std::sqrt(vhat) + cfg_.eps));
        }
    }

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    std::int64_t t_ = 0;
};

using AdamOptimizer = AdamOptimizerT<float>;

} // namespace stylerep
