#pragma once

// Small end-to-end model fixtures shared by the network, objective and
// acceptance tests.

#include <cstdint>
#include <vector>

#include "icmvc/network.hpp"
#include "icmvc/objectives.hpp"

namespace fixture {

using icmvc::Matrix;

enum class LossKind { ins, clu, hg, total };

struct Net {
    std::vector<Matrix> inputs;     // zero-filled view features
    std::vector<Matrix> operators;  // propagation operators
    icmvc::network::ModelConfig config;
    icmvc::network::ModelParams params;
    Matrix target;  // guidance target at the initial parameters
};

/// Two-view model on a random KNN graph with one missing row per view.
Net make_net(std::uint64_t seed, std::size_t n = 8, std::size_t clusters = 3, std::size_t width = 16);

/// Scalar loss for `params`, with the guidance target held at `net.target`.
double loss(const Net& net, const icmvc::network::ModelParams& params, LossKind kind);

/// Analytic gradient of loss() for every parameter, in ModelParams::named() order.
std::vector<Matrix> loss_gradients(const Net& net, LossKind kind);

/// Worst finite-difference relative error over all parameter blocks.
double model_gradcheck(const Net& net, LossKind kind);

}  // namespace fixture
