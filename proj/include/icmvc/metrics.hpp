#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "icmvc/types.hpp"

namespace icmvc::metrics {

/// counts[t][p]: instances with true label t and predicted label p.
using Contingency = std::vector<std::vector<std::int64_t>>;

Contingency contingency(std::span<const int> pred, std::span<const int> truth);

struct AccuracyResult {
    double acc = 0.0;
    /// mapping[p] = true label matched to predicted cluster p, or -1.
    std::vector<int> mapping;
};

/// Fraction of instances correctly labeled under the best one-to-one
/// matching of predicted to true clusters.
AccuracyResult accuracy(std::span<const int> pred, std::span<const int> truth);

/// Mutual information over sqrt(H(pred) H(truth)), natural log.
double nmi(std::span<const int> pred, std::span<const int> truth);

/// Pair-counting adjusted Rand index.
double ari(std::span<const int> pred, std::span<const int> truth);

struct MetricsReport {
    double acc = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    Contingency confusion;
    std::vector<int> mapping;
};

MetricsReport evaluate(std::span<const int> pred, std::span<const int> truth);

/// Row argmax; ties go to the lowest column.
LabelVector labels_from_assignment(const Matrix& y);

/// Minimum-cost assignment of every row to a distinct column of a
/// rows <= cols cost matrix (Hungarian method). Returns the column per row.
std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace icmvc::metrics
