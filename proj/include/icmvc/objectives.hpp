#pragma once

#include <span>
#include <vector>

#include "icmvc/numkit/autodiff.hpp"
#include "icmvc/types.hpp"

namespace icmvc::objectives {

using numkit::Var;

/// Row-wise cosine similarities, entry (i, j) = cos(u_i, w_j).
/// A zero row has similarity 0 with everything.
Var cosine_similarity_matrix(Var u, Var w);

struct ContrastOptions {
    /// Keep the j == i term of the same-view sum in the denominator.
    bool include_self = true;
};

/// Cross-view contrastive loss over the rows of two views:
///   l_i^1 = -log( e^{s(a_i,b_i)/tau} / sum_j [e^{s(a_i,a_j)/tau} + e^{s(a_i,b_j)/tau}] )
/// with l_i^2 symmetric, averaged over both views and all rows.
Var instance_contrastive_loss(Var z1, Var z2, double tau, ContrastOptions options = {});

/// The same contrast applied to cluster columns (assignment statistics
/// vectors) minus the entropies of both views' cluster-size distributions.
Var cluster_contrastive_loss(Var y1, Var y2, double tau);

/// Entropy (natural log) of the column means of a row-stochastic matrix.
Var assignment_entropy(Var y);

struct TargetDistribution {
    Matrix q;  // elementwise max of the sources
    Matrix p;  // row-normalized squares of q
};

/// Built from plain values, so P never carries gradient.
TargetDistribution high_confidence_target(std::span<const Matrix> sources);
TargetDistribution high_confidence_target(const Matrix& y1, const Matrix& y2, const Matrix& y);

/// sum_ij p_ij * log(p_ij / y_ij), with 0 log 0 = 0 and y clamped at epsilon.
Var guidance_loss(Var y, const Matrix& p);

struct LossWeights {
    bool use_ins = true;
    bool use_clu = true;
    bool use_hg = true;
};

struct LossBreakdown {
    double l_ins = 0.0;
    double l_clu = 0.0;
    double l_hg = 0.0;
    double total = 0.0;
};

struct LossTerms {
    Var ins;  // unset when disabled
    Var clu;
    Var hg;
    Var total;
    TargetDistribution target;
    LossBreakdown breakdown;
};

struct LossInputs {
    std::vector<Var> embeddings;   // Z^v
    std::vector<Var> assignments;  // Y^v
    Var fused_assignment;          // Y
    /// When set, used as P instead of recomputing it from the assignments.
    const Matrix* fixed_target = nullptr;
};

enum class GuidanceReduction {
    mean,  // guidance_loss / N, on the same per-instance scale as the contrastive terms
    sum,   // guidance_loss as is
};

struct LossOptions {
    ContrastOptions contrast;
    GuidanceReduction guidance = GuidanceReduction::mean;
};

/// Unit-weighted sum of the enabled terms. For more than two views the
/// contrastive parts average over all view pairs and every view's entropy
/// is subtracted.
LossTerms total_loss(const LossInputs& inputs, double tau_i, double tau_c, LossWeights weights = {},
                     LossOptions options = {});

/// Throws ContractError unless every row sums to 1 within `tol`.
void require_row_stochastic(const Matrix& y, double tol = 1e-6);

}  // namespace icmvc::objectives
