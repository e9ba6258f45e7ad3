#include "edformer/engine/adam.hpp"

#include <cmath>
#include <string>

#include "edformer/error.hpp"

namespace edformer::engine {

Adam::Adam(AdamOptions options) : options_(options) {
    // lr == 0 is allowed and leaves parameters unchanged.
    if (!(options_.learning_rate >= 0.0)) throw ConfigError("Adam learning rate must be >= 0");
    if (!(options_.beta1 >= 0.0 && options_.beta1 < 1.0) || !(options_.beta2 >= 0.0 && options_.beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(options_.eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

void Adam::step(std::span<Tensor> params, std::span<const Tensor> grads) {
    if (params.size() != grads.size()) {
        throw ShapeError("Adam: " + std::to_string(params.size()) + " parameters but " + std::to_string(grads.size()) +
                         " gradients");
    }
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].size(), 0.0);
            v_[i].assign(params[i].size(), 0.0);
        }
    } else if (m_.size() != params.size()) {
        throw ShapeError("Adam: parameter count changed between steps");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].shape() != grads[i].shape() || m_[i].size() != params[i].size()) {
            throw ShapeError("Adam: gradient " + std::to_string(i) + " has shape " + shape_string(grads[i].shape()) +
                             ", parameter has " + shape_string(params[i].shape()));
        }
    }

    ++t_;
    const auto& o = options_;
    const double correction1 = 1.0 - std::pow(o.beta1, static_cast<double>(t_));
    const double correction2 = 1.0 - std::pow(o.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i].data();
        const auto g = grads[i].data();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g[j];
            v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g[j] * g[j];
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            p[j] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.eps);
        }
    }
}

}  // namespace edformer::engine
