#include "icmvc/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "icmvc/error.hpp"

namespace icmvc::objectives {

namespace nk = icmvc::numkit;

namespace {

Matrix off_diagonal_ones(std::size_t n) {
    Matrix m = Matrix::ones(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 0.0;
    return m;
}

// Per-row losses of rows of `a` against positives in `b`, given the scaled
// similarity matrices.
Var side_losses(Var same, Var cross, bool include_self) {
    Var same_exp = nk::exp(same);
    if (!include_self) {
        same_exp = nk::mul(same_exp, same.tape()->constant(off_diagonal_ones(same.rows())));
    }
    const Var denom = nk::add(nk::row_sum(same_exp), nk::row_sum(nk::exp(cross)));
    return nk::sub(nk::log(denom), nk::diagonal(cross));
}

Var pair_contrast(Var a, Var b, double tau, bool include_self) {
    if (!(tau > 0.0)) throw ConfigError("contrastive temperature must be positive");
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError("contrastive loss: views differ in shape " + a.value().shape_string() + " vs " +
                             b.value().shape_string());
    }
    const double inv_tau = 1.0 / tau;
    const Var an = nk::row_l2_normalize(a);
    const Var bn = nk::row_l2_normalize(b);
    const Var s_aa = nk::scale(nk::matmul(an, nk::transpose(an)), inv_tau);
    const Var s_ab = nk::scale(nk::matmul(an, nk::transpose(bn)), inv_tau);
    const Var s_bb = nk::scale(nk::matmul(bn, nk::transpose(bn)), inv_tau);
    const Var s_ba = nk::transpose(s_ab);
    const Var l1 = side_losses(s_aa, s_ab, include_self);
    const Var l2 = side_losses(s_bb, s_ba, include_self);
    return nk::scale(nk::add(nk::sum(l1), nk::sum(l2)), 1.0 / (2.0 * static_cast<double>(a.rows())));
}

Var cluster_contrast_part(Var y1, Var y2, double tau) {
    require_row_stochastic(y1.value());
    require_row_stochastic(y2.value());
    return pair_contrast(nk::transpose(y1), nk::transpose(y2), tau, true);
}

}  // namespace

void require_row_stochastic(const Matrix& y, double tol) {
    for (std::size_t i = 0; i < y.rows(); ++i) {
        double s = 0.0;
        for (double v : y.row(i)) s += v;
        if (!(std::abs(s - 1.0) <= tol)) {
            throw ContractError("row " + std::to_string(i) + " sums to " + std::to_string(s) + ", expected 1");
        }
    }
}

Var cosine_similarity_matrix(Var u, Var w) {
    if (u.cols() != w.cols()) {
        throw DimensionError("cosine_similarity_matrix: " + u.value().shape_string() + " vs " +
                             w.value().shape_string());
    }
    return nk::matmul(nk::row_l2_normalize(u), nk::transpose(nk::row_l2_normalize(w)));
}

Var instance_contrastive_loss(Var z1, Var z2, double tau, ContrastOptions options) {
    return pair_contrast(z1, z2, tau, options.include_self);
}

Var assignment_entropy(Var y) {
    const Var p = nk::scale(nk::col_sum(y), 1.0 / static_cast<double>(y.rows()));
    return nk::neg(nk::sum(nk::mul(p, nk::log(p))));
}

Var cluster_contrastive_loss(Var y1, Var y2, double tau) {
    const Var contrast = cluster_contrast_part(y1, y2, tau);
    return nk::sub(nk::sub(contrast, assignment_entropy(y1)), assignment_entropy(y2));
}

TargetDistribution high_confidence_target(std::span<const Matrix> sources) {
    if (sources.empty()) throw DimensionError("high_confidence_target: no sources");
    TargetDistribution t{sources.front(), Matrix()};
    for (const Matrix& s : sources.subspan(1)) {
        if (!s.same_shape(t.q)) throw DimensionError("high_confidence_target: sources differ in shape");
        for (std::size_t k = 0; k < s.size(); ++k) t.q.data()[k] = std::max(t.q.data()[k], s.data()[k]);
    }
    t.p = Matrix(t.q.rows(), t.q.cols());
    for (std::size_t i = 0; i < t.q.rows(); ++i) {
        double z = 0.0;
        for (double v : t.q.row(i)) z += v * v;
        for (std::size_t j = 0; j < t.q.cols(); ++j) t.p(i, j) = t.q(i, j) * t.q(i, j) / z;
    }
    return t;
}

TargetDistribution high_confidence_target(const Matrix& y1, const Matrix& y2, const Matrix& y) {
    const Matrix sources[] = {y1, y2, y};
    return high_confidence_target(sources);
}

Var guidance_loss(Var y, const Matrix& p) {
    if (!p.same_shape(y.value())) {
        throw DimensionError("guidance_loss: target " + p.shape_string() + " vs assignment " +
                             y.value().shape_string());
    }
    double plogp = 0.0;
    for (double v : p.data())
        if (v > 0.0) plogp += v * std::log(v);
    nk::Tape& tape = *y.tape();
    const Var cross = nk::sum(nk::mul(tape.constant(p), nk::log(y)));
    return nk::sub(tape.constant(Matrix::scalar(plogp)), cross);
}

LossTerms total_loss(const LossInputs& in, double tau_i, double tau_c, LossWeights weights,
                     LossOptions options) {
    const std::size_t views = in.embeddings.size();
    if (views < 2 || in.assignments.size() != views) {
        throw DimensionError("total_loss: need matching embeddings and assignments for >= 2 views");
    }
    if (!(tau_i > 0.0) || !(tau_c > 0.0)) throw ConfigError("total_loss: temperatures must be positive");
    nk::Tape& tape = *in.embeddings.front().tape();
    const double pair_weight = 2.0 / static_cast<double>(views * (views - 1));

    LossTerms t;
    std::vector<Var> parts;
    if (weights.use_ins) {
        for (std::size_t a = 0; a < views; ++a) {
            for (std::size_t b = a + 1; b < views; ++b) {
                const Var l = instance_contrastive_loss(in.embeddings[a], in.embeddings[b], tau_i, options.contrast);
                t.ins = t.ins.valid() ? nk::add(t.ins, l) : l;
            }
        }
        if (views > 2) t.ins = nk::scale(t.ins, pair_weight);
        t.breakdown.l_ins = t.ins.value().item();
        parts.push_back(t.ins);
    }
    if (weights.use_clu) {
        Var c;
        for (std::size_t a = 0; a < views; ++a) {
            for (std::size_t b = a + 1; b < views; ++b) {
                const Var l = cluster_contrast_part(in.assignments[a], in.assignments[b], tau_c);
                c = c.valid() ? nk::add(c, l) : l;
            }
        }
        if (views > 2) c = nk::scale(c, pair_weight);
        for (const Var& y : in.assignments) c = nk::sub(c, assignment_entropy(y));
        t.clu = c;
        t.breakdown.l_clu = t.clu.value().item();
        parts.push_back(t.clu);
    }
    if (weights.use_hg) {
        if (in.fixed_target) {
            t.target.p = *in.fixed_target;
        } else {
            std::vector<Matrix> sources;
            for (const Var& y : in.assignments) sources.push_back(y.value());
            sources.push_back(in.fused_assignment.value());
            t.target = high_confidence_target(sources);
        }
        t.hg = guidance_loss(in.fused_assignment, t.target.p);
        if (options.guidance == GuidanceReduction::mean) {
            t.hg = nk::scale(t.hg, 1.0 / static_cast<double>(in.fused_assignment.rows()));
        }
        t.breakdown.l_hg = t.hg.value().item();
        parts.push_back(t.hg);
    }
    if (parts.empty()) {
        t.total = tape.constant(Matrix::scalar(0.0));
    } else {
        t.total = parts.front();
        for (std::size_t k = 1; k < parts.size(); ++k) t.total = nk::add(t.total, parts[k]);
    }
    t.breakdown.total = t.total.value().item();
    return t;
}

}  // namespace icmvc::objectives
