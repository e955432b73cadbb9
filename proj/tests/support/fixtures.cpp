#include "fixtures.hpp"

#include <algorithm>

#include "icmvc/dataio.hpp"
#include "icmvc/graphs.hpp"
#include "oracles.hpp"

namespace fixture {

namespace nk = icmvc::numkit;
namespace net = icmvc::network;
namespace obj = icmvc::objectives;

namespace {

obj::LossTerms run(nk::Tape& tape, const Net& fx, const net::ModelVars& vars) {
    std::vector<nk::Var> xs, ops;
    for (const auto& x : fx.inputs) xs.push_back(tape.constant(x));
    for (const auto& a : fx.operators) ops.push_back(tape.constant(a));
    const auto fp = net::forward(vars, xs, ops, fx.config);
    obj::LossInputs in{fp.embeddings, fp.assignments, fp.fused_assignment, fx.target.empty() ? nullptr : &fx.target};
    return obj::total_loss(in, 1.0, 0.5);
}

nk::Var pick(const obj::LossTerms& t, LossKind kind) {
    switch (kind) {
        case LossKind::ins: return t.ins;
        case LossKind::clu: return t.clu;
        case LossKind::hg: return t.hg;
        case LossKind::total: break;
    }
    return t.total;
}

}  // namespace

Net make_net(std::uint64_t seed, std::size_t n, std::size_t clusters, std::size_t width) {
    oracle::Gen g(seed);
    Net fx;
    fx.config.latent_dim = width;
    fx.config.embed_dim = width / 2;
    icmvc::ViewSet views{{g.normal_matrix(n, 5), g.normal_matrix(n, 4)}};
    icmvc::ObservationMask mask(n, 2);
    mask.set(0, 1, false);
    mask.set(n - 1, 0, false);
    icmvc::graphs::GraphConfig gc;
    gc.k = 2;
    const auto bundle = icmvc::graphs::build_graphs(views, mask, gc);
    for (const auto& p : bundle.operators) fx.operators.push_back(p.op);
    fx.inputs = icmvc::dataio::zero_fill(views, mask).views;
    const std::vector<std::size_t> dims{5, 4};
    fx.params = net::init_params(fx.config, dims, clusters, seed);

    nk::Tape tape;
    const auto vars = net::bind(tape, fx.params);
    fx.target = run(tape, fx, vars).target.p;
    return fx;
}

double loss(const Net& fx, const net::ModelParams& params, LossKind kind) {
    nk::Tape tape;
    const auto vars = net::bind(tape, params);
    return pick(run(tape, fx, vars), kind).value().item();
}

std::vector<Matrix> loss_gradients(const Net& fx, LossKind kind) {
    nk::Tape tape;
    const auto vars = net::bind(tape, fx.params);
    tape.backward(pick(run(tape, fx, vars), kind));
    std::vector<Matrix> out;
    for (const auto& v : vars.flat) out.push_back(v.grad());
    return out;
}

double model_gradcheck(const Net& fx, LossKind kind) {
    const auto grads = loss_gradients(fx, kind);
    const auto keys = fx.params.named();
    double worst = 0.0;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        auto f = [&](const Matrix& m) {
            net::ModelParams p = fx.params;
            *p.named()[k].second = m;
            return loss(fx, p, kind);
        };
        worst = std::max(worst, oracle::max_relative_error(f, *keys[k].second, grads[k]));
    }
    return worst;
}

}  // namespace fixture
