#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "icmvc/error.hpp"
#include "icmvc/graphs.hpp"
#include "icmvc/metrics.hpp"
#include "icmvc/network.hpp"
#include "icmvc/objectives.hpp"
#include "icmvc/types.hpp"

namespace icmvc::trainer {

struct TrainConfig {
    int knn = 10;
    std::optional<double> bandwidth;  // unset: median heuristic
    double lr = 0.001;
    int epochs = 500;
    double tau_i = 1.0;
    double tau_c = 0.5;
    double tau_att = 1.0;
    std::size_t latent_dim = 128;
    std::size_t embed_dim = 64;
    std::size_t layers = 2;
    std::uint64_t seed = 0;
    bool use_ins = true;
    bool use_clu = true;
    bool use_hg = true;
    graphs::TransferRule rule = graphs::TransferRule::copy;
    bool include_self = true;
    objectives::GuidanceReduction guidance = objectives::GuidanceReduction::mean;
    /// Epochs between recomputations of the guidance target.
    int target_interval = 1;
    /// 0 takes the count from the truth labels passed to train().
    std::size_t clusters = 0;
    int kmeans_restarts = 20;

    /// Throws ConfigError on out-of-range values or an illegal flag combination.
    void validate() const;
    network::ModelConfig model() const;
    graphs::GraphConfig graph() const;
    objectives::LossWeights weights() const { return {use_ins, use_clu, use_hg}; }
};

/// Non-finite loss during training.
class DivergenceError : public Error {
public:
    DivergenceError(int epoch, const objectives::LossBreakdown& breakdown);
    int epoch() const { return epoch_; }
    const objectives::LossBreakdown& breakdown() const { return breakdown_; }

private:
    int epoch_;
    objectives::LossBreakdown breakdown_;
};

struct Prepared {
    graphs::GraphBundle graphs;
    std::vector<Matrix> operators;
    ViewSet inputs;  // zero-filled
};

Prepared prepare(const ViewSet& views, const ObservationMask& mask, const TrainConfig& config);

struct EpochMetrics {
    double acc = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
};

struct TrainResult {
    LabelVector labels;
    Matrix fused_assignment;
    std::vector<Matrix> view_assignments;
    Matrix fused_latent;
    Matrix view_weights;  // N x V attention weights
    std::vector<objectives::LossBreakdown> history;
    /// One entry per epoch, filled only when truth labels are supplied and
    /// the pseudo-classifier is trained.
    std::vector<EpochMetrics> epoch_metrics;
    std::optional<metrics::MetricsReport> final_metrics;
    network::ModelParams params;
    TrainConfig config;
    double wall_seconds = 0.0;
};

TrainResult train(const ViewSet& views, const ObservationMask& mask, const TrainConfig& config,
                  const LabelVector* truth = nullptr);

/// train() with the flag combination checked up front; labels come from
/// k-means on the fused latent when the clustering term is off.
TrainResult train_ablation(const ViewSet& views, const ObservationMask& mask, const TrainConfig& config,
                           const LabelVector* truth = nullptr);

enum class BaselineKind { bsv, concat };

/// Mean-impute each view, then k-means: per view keeping the best ACC (bsv)
/// or on the concatenated views (concat).
metrics::MetricsReport baseline(const ViewSet& views, const ObservationMask& mask, const LabelVector& truth,
                                BaselineKind kind, std::uint64_t seed, int restarts = 20);

/// Seed streams derived from TrainConfig::seed.
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kKMeansStream = 2;

}  // namespace icmvc::trainer
