#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "icmvc/numkit/matrix.hpp"

namespace icmvc::numkit {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed, ordered list of parameter matrices.
/// Moments are allocated on the first step from the parameter shapes.
class Adam {
public:
    explicit Adam(AdamConfig config);

    /// Applies one update in place. `grads[k]` belongs to `*params[k]`; the
    /// list must keep the same order and shapes across calls.
    void step(std::span<Matrix* const> params, std::span<const Matrix> grads);

    std::int64_t step_count() const { return steps_; }
    const AdamConfig& config() const { return config_; }
    const std::vector<Matrix>& first_moments() const { return m_; }
    const std::vector<Matrix>& second_moments() const { return v_; }

private:
    AdamConfig config_;
    std::int64_t steps_ = 0;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
};

}  // namespace icmvc::numkit
