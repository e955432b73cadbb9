#include "icmvc/trainer.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "icmvc/dataio.hpp"
#include "icmvc/kmeans.hpp"
#include "icmvc/numkit/adam.hpp"
#include "icmvc/rng.hpp"

namespace icmvc::trainer {

namespace nk = icmvc::numkit;

namespace {

std::string describe(int epoch, const objectives::LossBreakdown& b) {
    return "loss diverged at epoch " + std::to_string(epoch) + " (l_ins=" + std::to_string(b.l_ins) +
           ", l_clu=" + std::to_string(b.l_clu) + ", l_hg=" + std::to_string(b.l_hg) +
           ", total=" + std::to_string(b.total) + ")";
}

bool finite(const objectives::LossBreakdown& b) {
    return std::isfinite(b.l_ins) && std::isfinite(b.l_clu) && std::isfinite(b.l_hg) && std::isfinite(b.total);
}

std::size_t cluster_count(const TrainConfig& config, const LabelVector* truth) {
    if (config.clusters > 0) return config.clusters;
    if (!truth || truth->empty()) throw ConfigError("cluster count is required when no labels are given");
    int top = 0;
    for (int l : *truth) {
        if (l < 0) throw DataError("negative label in truth vector");
        top = std::max(top, l);
    }
    return static_cast<std::size_t>(top) + 1;
}

}  // namespace

DivergenceError::DivergenceError(int epoch, const objectives::LossBreakdown& breakdown)
    : Error(describe(epoch, breakdown)), epoch_(epoch), breakdown_(breakdown) {}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(tau_i > 0.0) || !(tau_c > 0.0) || !(tau_att > 0.0)) throw ConfigError("temperatures must be positive");
    if (knn < 1) throw ConfigError("knn must be >= 1");
    if (bandwidth && !(*bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
    if (latent_dim == 0 || embed_dim == 0) throw ConfigError("dimensions must be positive");
    if (layers < 1) throw ConfigError("at least one GCN layer is required");
    if (target_interval < 1) throw ConfigError("target interval must be >= 1");
    if (kmeans_restarts < 1) throw ConfigError("k-means restarts must be >= 1");
    if (use_hg && !use_clu) throw ConfigError("the guidance term requires the clustering term");
}

network::ModelConfig TrainConfig::model() const {
    network::ModelConfig m;
    m.latent_dim = latent_dim;
    m.embed_dim = embed_dim;
    m.layers = layers;
    m.tau_att = tau_att;
    return m;
}

graphs::GraphConfig TrainConfig::graph() const {
    graphs::GraphConfig g;
    g.k = knn;
    g.bandwidth = bandwidth;
    g.rule = rule;
    return g;
}

Prepared prepare(const ViewSet& views, const ObservationMask& mask, const TrainConfig& config) {
    views.validate();
    mask.validate();
    if (mask.num_instances() != views.num_instances() || mask.num_views() != views.num_views()) {
        throw DataError("mask shape does not match the views");
    }
    Prepared p;
    p.graphs = graphs::build_graphs(views, mask, config.graph());
    for (const auto& op : p.graphs.operators) p.operators.push_back(op.op);
    p.inputs = dataio::zero_fill(views, mask);
    return p;
}

TrainResult train(const ViewSet& views, const ObservationMask& mask, const TrainConfig& config,
                  const LabelVector* truth) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    const std::size_t clusters = cluster_count(config, truth);
    if (truth && truth->size() != views.num_instances()) throw DataError("label count does not match instances");
    const Prepared prep = prepare(views, mask, config);
    const network::ModelConfig model = config.model();

    TrainResult result;
    result.config = config;
    result.params = network::init_params(model, views.dims(), clusters, derive_seed(config.seed, kInitStream));
    nk::Adam adam(nk::AdamConfig{.lr = config.lr});
    std::vector<Matrix*> slots;
    for (auto& [key, m] : result.params.named()) slots.push_back(m);

    const objectives::LossOptions loss_options{{config.include_self}, config.guidance};
    Matrix target;

    auto run_forward = [&](nk::Tape& tape) {
        const network::ModelVars vars = network::bind(tape, result.params);
        std::vector<nk::Var> inputs, ops;
        for (std::size_t v = 0; v < prep.inputs.num_views(); ++v) {
            inputs.push_back(tape.constant(prep.inputs.views[v]));
            ops.push_back(tape.constant(prep.operators[v]));
        }
        return std::make_pair(vars, network::forward(vars, inputs, ops, model));
    };

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        nk::Tape tape;
        auto [vars, pass] = run_forward(tape);
        objectives::LossInputs in{pass.embeddings, pass.assignments, pass.fused_assignment, nullptr};
        const bool refresh = (epoch - 1) % config.target_interval == 0;
        if (config.use_hg && !refresh) in.fixed_target = &target;
        const objectives::LossTerms loss = objectives::total_loss(in, config.tau_i, config.tau_c, config.weights(),
                                                                  loss_options);
        if (!finite(loss.breakdown)) throw DivergenceError(epoch, loss.breakdown);
        if (config.use_hg && refresh) target = loss.target.p;
        result.history.push_back(loss.breakdown);
        if (truth && config.use_clu) {
            const auto r = metrics::evaluate(metrics::labels_from_assignment(pass.fused_assignment.value()), *truth);
            result.epoch_metrics.push_back({r.acc, r.nmi, r.ari});
        }

        tape.backward(loss.total);
        std::vector<Matrix> grads;
        grads.reserve(vars.flat.size());
        for (const nk::Var& v : vars.flat) grads.push_back(v.grad());
        adam.step(slots, grads);
    }

    {
        nk::Tape tape;
        auto [vars, pass] = run_forward(tape);
        result.fused_assignment = pass.fused_assignment.value();
        for (const auto& y : pass.assignments) result.view_assignments.push_back(y.value());
        result.fused_latent = pass.fusion.fused.value();
        result.view_weights = pass.fusion.weights.value();
    }
    if (config.use_clu) {
        result.labels = metrics::labels_from_assignment(result.fused_assignment);
    } else {
        kmeans::KMeansOptions opts;
        opts.restarts = config.kmeans_restarts;
        result.labels =
            kmeans::kmeans(result.fused_latent, clusters, derive_seed(config.seed, kKMeansStream), opts).labels;
    }
    if (truth) result.final_metrics = metrics::evaluate(result.labels, *truth);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

TrainResult train_ablation(const ViewSet& views, const ObservationMask& mask, const TrainConfig& config,
                           const LabelVector* truth) {
    config.validate();
    return train(views, mask, config, truth);
}

metrics::MetricsReport baseline(const ViewSet& views, const ObservationMask& mask, const LabelVector& truth,
                                BaselineKind kind, std::uint64_t seed, int restarts) {
    if (truth.size() != views.num_instances()) throw DataError("label count does not match instances");
    const ViewSet filled = dataio::mean_impute(views, mask);
    const std::size_t clusters = cluster_count(TrainConfig{}, &truth);
    kmeans::KMeansOptions opts;
    opts.restarts = restarts;
    if (kind == BaselineKind::concat) {
        const Matrix joined = hconcat(filled.views);
        return metrics::evaluate(kmeans::kmeans(joined, clusters, seed, opts).labels, truth);
    }
    std::optional<metrics::MetricsReport> best;
    for (const Matrix& x : filled.views) {
        auto r = metrics::evaluate(kmeans::kmeans(x, clusters, seed, opts).labels, truth);
        if (!best || r.acc > best->acc) best = std::move(r);
    }
    return *best;
}

}  // namespace icmvc::trainer
