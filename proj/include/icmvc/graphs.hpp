#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icmvc/types.hpp"

namespace icmvc::graphs {

/// RBF similarities over the observed instances of one view.
/// Rows and columns of unobserved instances hold 0 and are flagged invalid.
struct SimilarityMatrix {
    Matrix values;
    std::vector<bool> valid;
    double bandwidth = 1.0;
};

/// Binary N x N adjacency of one view.
struct Adjacency {
    std::size_t n = 0;
    std::vector<std::uint8_t> edges;
    /// Row is defined (instance observed, or row filled by transfer).
    std::vector<bool> row_valid;
    /// Row was filled by relation transfer.
    std::vector<bool> transferred;

    Adjacency() = default;
    explicit Adjacency(std::size_t size)
        : n(size), edges(size * size, 0), row_valid(size, false), transferred(size, false) {}

    bool edge(std::size_t i, std::size_t j) const { return edges[i * n + j] != 0; }
    void set(std::size_t i, std::size_t j, bool on) { edges[i * n + j] = on ? 1 : 0; }
    std::size_t degree(std::size_t i) const;
    Matrix to_matrix() const;

    friend bool operator==(const Adjacency&, const Adjacency&) = default;
};

using AdjacencySet = std::vector<Adjacency>;

/// Symmetric-normalized operator D^-1/2 (A + I) D^-1/2.
struct PropagationOperator {
    Matrix op;
};

/// How rows of a missing view are rebuilt from the views an instance has.
/// With two views all rules coincide.
enum class TransferRule { copy, unite, intersect };

std::string to_string(TransferRule rule);
/// Accepts "copy", "union" and "intersection".
TransferRule parse_transfer_rule(std::string_view name);

/// Median of squared pairwise distances among observed instances. Falls back
/// to the mean, then to 1, when the data makes the median zero.
double median_bandwidth(const Matrix& x, const std::vector<bool>& observed);

SimilarityMatrix rbf_similarity(const Matrix& x, const std::vector<bool>& observed, double bandwidth);

/// Each valid row i links to its K most similar observed j != i. Equal
/// similarities resolve to the lower index. Not symmetrized.
Adjacency knn_adjacency(const SimilarityMatrix& s, int k);

/// Fills the rows of missing instances from their rows in observed views.
/// `copy` takes the first observed view's row.
AdjacencySet transfer_relations(const AdjacencySet& adjacencies, const ObservationMask& mask,
                                TransferRule rule);

/// OR-symmetrizes and clears the diagonal. Throws DegenerateGraphError if a
/// node is left without neighbors.
Adjacency finalize_adjacency(const Adjacency& a);

PropagationOperator normalize(const Adjacency& a);

struct GraphConfig {
    int k = 10;
    /// Unset selects the median heuristic per view.
    std::optional<double> bandwidth;
    TransferRule rule = TransferRule::copy;
};

struct GraphBundle {
    std::vector<double> bandwidths;
    AdjacencySet raw;
    AdjacencySet finalized;
    std::vector<PropagationOperator> operators;
};

/// similarity -> KNN -> transfer -> finalize -> normalize, for every view.
GraphBundle build_graphs(const ViewSet& views, const ObservationMask& mask, const GraphConfig& config);

/// 0/1 CSV dump for debugging.
void write_adjacency_csv(const Adjacency& a, const std::string& path);

}  // namespace icmvc::graphs
