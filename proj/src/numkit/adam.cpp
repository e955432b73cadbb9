#include "icmvc/numkit/adam.hpp"

#include <cmath>
#include <string>

#include "icmvc/error.hpp"

namespace icmvc::numkit {

Adam::Adam(AdamConfig config) : config_(config) {
    if (!(config_.lr > 0.0)) throw ConfigError("Adam: learning rate must be positive");
    if (!(config_.beta1 > 0.0 && config_.beta1 < 1.0) || !(config_.beta2 > 0.0 && config_.beta2 < 1.0)) {
        throw ConfigError("Adam: betas must lie in (0, 1)");
    }
    if (!(config_.eps > 0.0)) throw ConfigError("Adam: eps must be positive");
}

void Adam::step(std::span<Matrix* const> params, std::span<const Matrix> grads) {
    if (params.size() != grads.size()) {
        throw DimensionError("Adam: " + std::to_string(params.size()) + " parameters but " +
                             std::to_string(grads.size()) + " gradients");
    }
    if (m_.empty()) {
        for (const Matrix* p : params) {
            m_.emplace_back(p->rows(), p->cols());
            v_.emplace_back(p->rows(), p->cols());
        }
    } else if (m_.size() != params.size()) {
        throw DimensionError("Adam: parameter list changed between steps");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (!params[k]->same_shape(grads[k]) || !m_[k].same_shape(grads[k])) {
            throw DimensionError("Adam: parameter " + std::to_string(k) + " is " +
                                 params[k]->shape_string() + ", gradient is " + grads[k].shape_string());
        }
    }

    ++steps_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& w = params[k]->data();
        const auto& g = grads[k].data();
        auto& m = m_[k].data();
        auto& v = v_[k].data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            w[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
}

}  // namespace icmvc::numkit
