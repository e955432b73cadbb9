#include "icmvc/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "icmvc/error.hpp"

namespace icmvc::graphs {

std::size_t Adjacency::degree(std::size_t i) const {
    std::size_t d = 0;
    for (std::size_t j = 0; j < n; ++j) d += edges[i * n + j];
    return d;
}

Matrix Adjacency::to_matrix() const {
    Matrix m(n, n);
    for (std::size_t k = 0; k < edges.size(); ++k) m.data()[k] = edges[k];
    return m;
}

std::string to_string(TransferRule rule) {
    switch (rule) {
        case TransferRule::copy: return "copy";
        case TransferRule::unite: return "union";
        case TransferRule::intersect: return "intersection";
    }
    return "copy";
}

TransferRule parse_transfer_rule(std::string_view name) {
    if (name == "copy") return TransferRule::copy;
    if (name == "union") return TransferRule::unite;
    if (name == "intersection") return TransferRule::intersect;
    throw ConfigError("unknown transfer rule '" + std::string(name) + "'");
}

namespace {

double squared_distance(const Matrix& x, std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
        const double d = x(i, c) - x(j, c);
        s += d * d;
    }
    return s;
}

std::vector<std::size_t> observed_indices(const std::vector<bool>& observed) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < observed.size(); ++i)
        if (observed[i]) idx.push_back(i);
    return idx;
}

}  // namespace

double median_bandwidth(const Matrix& x, const std::vector<bool>& observed) {
    const auto idx = observed_indices(observed);
    std::vector<double> d2;
    d2.reserve(idx.size() * (idx.size() - (idx.empty() ? 0 : 1)) / 2);
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b) d2.push_back(squared_distance(x, idx[a], idx[b]));
    if (d2.empty()) return 1.0;
    std::sort(d2.begin(), d2.end());
    const std::size_t m = d2.size();
    const double median = m % 2 == 1 ? d2[m / 2] : 0.5 * (d2[m / 2 - 1] + d2[m / 2]);
    if (median > 0.0) return median;
    const double mean = std::accumulate(d2.begin(), d2.end(), 0.0) / static_cast<double>(m);
    return mean > 0.0 ? mean : 1.0;
}

SimilarityMatrix rbf_similarity(const Matrix& x, const std::vector<bool>& observed, double bandwidth) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw ConfigError("rbf_similarity: bandwidth must be positive");
    }
    if (observed.size() != x.rows()) throw DimensionError("rbf_similarity: mask length != rows");
    const auto idx = observed_indices(observed);
    if (idx.size() < 2) throw DegenerateInputError("rbf_similarity: fewer than 2 observed instances");

    SimilarityMatrix s{Matrix(x.rows(), x.rows()), observed, bandwidth};
    for (std::size_t a = 0; a < idx.size(); ++a) {
        const std::size_t i = idx[a];
        s.values(i, i) = 1.0;
        for (std::size_t b = a + 1; b < idx.size(); ++b) {
            const std::size_t j = idx[b];
            const double v = std::exp(-squared_distance(x, i, j) / bandwidth);
            s.values(i, j) = v;
            s.values(j, i) = v;
        }
    }
    return s;
}

Adjacency knn_adjacency(const SimilarityMatrix& s, int k) {
    const std::size_t n = s.values.rows();
    const auto idx = observed_indices(s.valid);
    if (k < 1 || static_cast<std::size_t>(k) + 1 > idx.size()) {
        throw ConfigError("knn_adjacency: K=" + std::to_string(k) + " outside [1, " +
                          std::to_string(idx.size() == 0 ? 0 : idx.size() - 1) + "]");
    }
    Adjacency a(n);
    std::vector<std::size_t> candidates;
    candidates.reserve(idx.size());
    for (std::size_t i : idx) {
        candidates.clear();
        for (std::size_t j : idx)
            if (j != i) candidates.push_back(j);
        const auto more_similar = [&](std::size_t p, std::size_t q) {
            const double sp = s.values(i, p), sq = s.values(i, q);
            return sp != sq ? sp > sq : p < q;
        };
        std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end(), more_similar);
        for (int r = 0; r < k; ++r) a.set(i, candidates[r], true);
        a.row_valid[i] = true;
    }
    return a;
}

AdjacencySet transfer_relations(const AdjacencySet& adjacencies, const ObservationMask& mask,
                                TransferRule rule) {
    const std::size_t views = adjacencies.size();
    if (views != mask.num_views()) throw DimensionError("transfer_relations: view count mismatch");
    const std::size_t n = mask.num_instances();
    for (const auto& a : adjacencies)
        if (a.n != n) throw DimensionError("transfer_relations: adjacency size mismatch");
    mask.validate();

    AdjacencySet out = adjacencies;
    for (std::size_t v = 0; v < views; ++v) {
        for (std::size_t i = 0; i < n; ++i) {
            if (mask.observed(i, v)) continue;
            bool first = true;
            for (std::size_t u = 0; u < views; ++u) {
                if (u == v || !mask.observed(i, u)) continue;
                const Adjacency& src = adjacencies[u];
                if (!src.row_valid[i]) {
                    throw ContractError("transfer_relations: observed row " + std::to_string(i) +
                                        " of view " + std::to_string(u + 1) + " was never built");
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const bool e = src.edge(i, j);
                    if (first) {
                        out[v].set(i, j, e);
                    } else if (rule == TransferRule::unite) {
                        out[v].set(i, j, out[v].edge(i, j) || e);
                    } else if (rule == TransferRule::intersect) {
                        out[v].set(i, j, out[v].edge(i, j) && e);
                    }
                }
                first = false;
                if (rule == TransferRule::copy) break;
            }
            out[v].row_valid[i] = true;
            out[v].transferred[i] = true;
        }
    }
    return out;
}

Adjacency finalize_adjacency(const Adjacency& a) {
    for (std::size_t i = 0; i < a.n; ++i) {
        if (!a.row_valid[i]) {
            throw ContractError("finalize_adjacency: row " + std::to_string(i) + " has not been built");
        }
    }
    Adjacency out = a;
    for (std::size_t i = 0; i < a.n; ++i) {
        for (std::size_t j = 0; j < a.n; ++j) out.set(i, j, i != j && (a.edge(i, j) || a.edge(j, i)));
    }
    for (std::size_t i = 0; i < a.n; ++i) {
        if (out.degree(i) == 0) {
            throw DegenerateGraphError("finalize_adjacency: node " + std::to_string(i) + " has no neighbors");
        }
    }
    return out;
}

PropagationOperator normalize(const Adjacency& a) {
    const std::size_t n = a.n;
    std::vector<double> deg(n);
    for (std::size_t i = 0; i < n; ++i) deg[i] = 1.0 + static_cast<double>(a.degree(i) - (a.edge(i, i) ? 1 : 0));
    PropagationOperator p{Matrix(n, n)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const bool linked = i == j || a.edge(i, j);
            if (linked) p.op(i, j) = 1.0 / std::sqrt(deg[i] * deg[j]);
        }
    }
    return p;
}

GraphBundle build_graphs(const ViewSet& views, const ObservationMask& mask, const GraphConfig& config) {
    views.validate();
    if (mask.num_instances() != views.num_instances() || mask.num_views() != views.num_views()) {
        throw DimensionError("build_graphs: mask shape does not match the view set");
    }
    mask.validate();
    GraphBundle g;
    for (std::size_t v = 0; v < views.num_views(); ++v) {
        const auto observed = mask.view_column(v);
        const double t = config.bandwidth ? *config.bandwidth : median_bandwidth(views.views[v], observed);
        g.bandwidths.push_back(t);
        g.raw.push_back(knn_adjacency(rbf_similarity(views.views[v], observed, t), config.k));
    }
    const AdjacencySet transferred = transfer_relations(g.raw, mask, config.rule);
    for (const auto& a : transferred) {
        g.finalized.push_back(finalize_adjacency(a));
        g.operators.push_back(normalize(g.finalized.back()));
    }
    return g;
}

void write_adjacency_csv(const Adjacency& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (std::size_t i = 0; i < a.n; ++i) {
        for (std::size_t j = 0; j < a.n; ++j) {
            if (j) out << ',';
            out << (a.edge(i, j) ? '1' : '0');
        }
        out << '\n';
    }
}

}  // namespace icmvc::graphs
