#include "icmvc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "icmvc/error.hpp"

namespace icmvc::metrics {

namespace {

void check_labels(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) {
        throw ContractError("label vectors differ in length: " + std::to_string(pred.size()) + " vs " +
                            std::to_string(truth.size()));
    }
    if (pred.empty()) throw ContractError("label vectors are empty");
    for (int l : pred)
        if (l < 0) throw ContractError("negative predicted label");
    for (int l : truth)
        if (l < 0) throw ContractError("negative true label");
}

double entropy_of(const std::vector<std::int64_t>& counts, double n) {
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return h;
}

double choose2(std::int64_t k) { return 0.5 * static_cast<double>(k) * static_cast<double>(k - 1); }

// Partitions agree up to relabeling iff every nonempty row and column of the
// contingency table holds exactly one nonzero cell.
bool same_partition(const Contingency& c) {
    const std::size_t cols = c.empty() ? 0 : c.front().size();
    std::vector<int> col_hits(cols, 0);
    for (const auto& row : c) {
        int hits = 0;
        for (std::size_t j = 0; j < cols; ++j) {
            if (row[j] == 0) continue;
            ++hits;
            ++col_hits[j];
        }
        if (hits > 1) return false;
    }
    return std::all_of(col_hits.begin(), col_hits.end(), [](int h) { return h <= 1; });
}

}  // namespace

Contingency contingency(std::span<const int> pred, std::span<const int> truth) {
    check_labels(pred, truth);
    const int kp = *std::max_element(pred.begin(), pred.end()) + 1;
    const int kt = *std::max_element(truth.begin(), truth.end()) + 1;
    Contingency c(static_cast<std::size_t>(kt), std::vector<std::int64_t>(static_cast<std::size_t>(kp), 0));
    for (std::size_t i = 0; i < pred.size(); ++i) ++c[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(pred[i])];
    return c;
}

std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    if (n == 0) return {};
    const std::size_t m = cost.front().size();
    if (m < n) throw DimensionError("solve_assignment: more rows than columns");
    for (const auto& row : cost)
        if (row.size() != m) throw DimensionError("solve_assignment: ragged cost matrix");

    // Shortest augmenting path form with row/column potentials; 1-based.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> match(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> assignment(n, 0);
    for (std::size_t j = 1; j <= m; ++j)
        if (match[j] != 0) assignment[match[j] - 1] = j - 1;
    return assignment;
}

AccuracyResult accuracy(std::span<const int> pred, std::span<const int> truth) {
    const Contingency c = contingency(pred, truth);
    const std::size_t kt = c.size(), kp = c.front().size();
    AccuracyResult r;
    r.mapping.assign(kp, -1);
    std::int64_t matched = 0;
    // Put the smaller side on the rows; costs are negated counts.
    if (kp <= kt) {
        std::vector<std::vector<double>> cost(kp, std::vector<double>(kt));
        for (std::size_t p = 0; p < kp; ++p)
            for (std::size_t t = 0; t < kt; ++t) cost[p][t] = -static_cast<double>(c[t][p]);
        const auto a = solve_assignment(cost);
        for (std::size_t p = 0; p < kp; ++p) {
            r.mapping[p] = static_cast<int>(a[p]);
            matched += c[a[p]][p];
        }
    } else {
        std::vector<std::vector<double>> cost(kt, std::vector<double>(kp));
        for (std::size_t t = 0; t < kt; ++t)
            for (std::size_t p = 0; p < kp; ++p) cost[t][p] = -static_cast<double>(c[t][p]);
        const auto a = solve_assignment(cost);
        for (std::size_t t = 0; t < kt; ++t) {
            r.mapping[a[t]] = static_cast<int>(t);
            matched += c[t][a[t]];
        }
    }
    r.acc = static_cast<double>(matched) / static_cast<double>(pred.size());
    return r;
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
    const Contingency c = contingency(pred, truth);
    const double n = static_cast<double>(pred.size());
    std::vector<std::int64_t> rows(c.size(), 0), cols(c.front().size(), 0);
    for (std::size_t t = 0; t < c.size(); ++t)
        for (std::size_t p = 0; p < cols.size(); ++p) {
            rows[t] += c[t][p];
            cols[p] += c[t][p];
        }
    const double ht = entropy_of(rows, n);
    const double hp = entropy_of(cols, n);
    if (ht == 0.0 && hp == 0.0) return 1.0;
    if (ht == 0.0 || hp == 0.0) return 0.0;
    double mi = 0.0;
    for (std::size_t t = 0; t < c.size(); ++t) {
        for (std::size_t p = 0; p < cols.size(); ++p) {
            if (c[t][p] == 0) continue;
            const double nij = static_cast<double>(c[t][p]);
            mi += nij / n * std::log(n * nij / (static_cast<double>(rows[t]) * static_cast<double>(cols[p])));
        }
    }
    return std::clamp(mi / std::sqrt(ht * hp), 0.0, 1.0);
}

double ari(std::span<const int> pred, std::span<const int> truth) {
    const Contingency c = contingency(pred, truth);
    const std::int64_t n = static_cast<std::int64_t>(pred.size());
    std::vector<std::int64_t> rows(c.size(), 0), cols(c.front().size(), 0);
    double index = 0.0;
    for (std::size_t t = 0; t < c.size(); ++t)
        for (std::size_t p = 0; p < cols.size(); ++p) {
            rows[t] += c[t][p];
            cols[p] += c[t][p];
            index += choose2(c[t][p]);
        }
    double sum_rows = 0.0, sum_cols = 0.0;
    for (auto r : rows) sum_rows += choose2(r);
    for (auto k : cols) sum_cols += choose2(k);
    const double total = choose2(n);
    const double expected = total > 0.0 ? sum_rows * sum_cols / total : 0.0;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return same_partition(c) ? 1.0 : 0.0;
    return (index - expected) / (max_index - expected);
}

MetricsReport evaluate(std::span<const int> pred, std::span<const int> truth) {
    MetricsReport r;
    const AccuracyResult a = accuracy(pred, truth);
    r.acc = a.acc;
    r.mapping = a.mapping;
    r.nmi = nmi(pred, truth);
    r.ari = ari(pred, truth);
    r.confusion = contingency(pred, truth);
    return r;
}

LabelVector labels_from_assignment(const Matrix& y) {
    LabelVector labels(y.rows(), 0);
    for (std::size_t i = 0; i < y.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < y.cols(); ++j)
            if (y(i, j) > y(i, best)) best = j;
        labels[i] = static_cast<int>(best);
    }
    return labels;
}

}  // namespace icmvc::metrics
