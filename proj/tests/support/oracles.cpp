#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace oracle {

Grid to_grid(const Matrix& m) {
    Grid g(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
    return g;
}

Matrix from_grid(const Grid& g) {
    Matrix m(g.size(), g.empty() ? 0 : g[0].size());
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g[i].size(); ++j) m(i, j) = g[i][j];
    return m;
}

namespace {

std::vector<double> unit(const std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    std::vector<double> u(v.size(), 0.0);
    if (n < 1e-12) return u;
    for (std::size_t k = 0; k < v.size(); ++k) u[k] = v[k] / n;
    return u;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ua = unit(a), ub = unit(b);
    double s = 0.0;
    for (std::size_t k = 0; k < ua.size(); ++k) s += ua[k] * ub[k];
    return s;
}

// Loss of anchor rows in `a` whose positives sit at the same index in `b`.
double one_side(const Grid& a, const Grid& b, double tau, bool include_self) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double denom = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (j == i && !include_self) continue;
            denom += std::exp(cosine(a[i], a[j]) / tau);
        }
        for (std::size_t j = 0; j < b.size(); ++j) denom += std::exp(cosine(a[i], b[j]) / tau);
        const double pos = std::exp(cosine(a[i], b[i]) / tau);
        total += -std::log(pos / denom);
    }
    return total;
}

Grid columns(const Grid& y) {
    Grid c(y[0].size(), std::vector<double>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = 0; j < y[i].size(); ++j) c[j][i] = y[i][j];
    return c;
}

double entropy_of_means(const Grid& y) {
    double h = 0.0;
    for (std::size_t j = 0; j < y[0].size(); ++j) {
        double p = 0.0;
        for (const auto& row : y) p += row[j];
        p /= static_cast<double>(y.size());
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

}  // namespace

double instance_loss(const Grid& z1, const Grid& z2, double tau, bool include_self) {
    const double l1 = one_side(z1, z2, tau, include_self);
    const double l2 = one_side(z2, z1, tau, include_self);
    return (l1 + l2) / (2.0 * static_cast<double>(z1.size()));
}

double cluster_loss(const Grid& y1, const Grid& y2, double tau) {
    return instance_loss(columns(y1), columns(y2), tau, true) - entropy_of_means(y1) - entropy_of_means(y2);
}

double guidance_loss(const Grid& y, const Grid& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        for (std::size_t j = 0; j < y[i].size(); ++j)
            if (p[i][j] > 0.0) s += p[i][j] * std::log(p[i][j] / std::max(y[i][j], 1e-12));
    return s;
}

Grid target(const Grid& y1, const Grid& y2, const Grid& y) {
    Grid p = y;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < y[i].size(); ++j) {
            const double q = std::max({y1[i][j], y2[i][j], y[i][j]});
            p[i][j] = q * q;
            z += q * q;
        }
        for (double& v : p[i]) v /= z;
    }
    return p;
}

GraphResult graph_pipeline(const std::vector<Grid>& views, const std::vector<std::vector<bool>>& observed, int k,
                           icmvc::graphs::TransferRule rule, double bandwidth) {
    using icmvc::graphs::TransferRule;
    const std::size_t nv = views.size();
    const std::size_t n = views[0].size();
    auto d2 = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
        return s;
    };

    // raw[v][i] = set of neighbors, built only for observed rows
    std::vector<std::vector<std::set<std::size_t>>> raw(nv, std::vector<std::set<std::size_t>>(n));
    for (std::size_t v = 0; v < nv; ++v) {
        std::vector<std::size_t> obs;
        for (std::size_t i = 0; i < n; ++i)
            if (observed[i][v]) obs.push_back(i);
        double t = bandwidth;
        if (t <= 0.0) {
            std::vector<double> all;
            for (std::size_t a = 0; a < obs.size(); ++a)
                for (std::size_t b = a + 1; b < obs.size(); ++b) all.push_back(d2(views[v][obs[a]], views[v][obs[b]]));
            std::sort(all.begin(), all.end());
            const std::size_t m = all.size();
            t = m % 2 ? all[m / 2] : 0.5 * (all[m / 2 - 1] + all[m / 2]);
            if (t <= 0.0) {
                double mean = 0.0;
                for (double x : all) mean += x;
                t = mean > 0.0 ? mean / static_cast<double>(m) : 1.0;
            }
        }
        for (std::size_t i : obs) {
            // pick the K most similar one at a time
            std::set<std::size_t> chosen;
            for (int r = 0; r < k; ++r) {
                std::size_t best = n;
                double best_s = -1.0;
                for (std::size_t j : obs) {
                    if (j == i || chosen.count(j)) continue;
                    const double s = std::exp(-d2(views[v][i], views[v][j]) / t);
                    if (s > best_s) {
                        best_s = s;
                        best = j;
                    }
                }
                chosen.insert(best);
            }
            raw[v][i] = chosen;
        }
    }

    auto rows = raw;
    for (std::size_t v = 0; v < nv; ++v) {
        for (std::size_t i = 0; i < n; ++i) {
            if (observed[i][v]) continue;
            std::vector<std::size_t> sources;
            for (std::size_t u = 0; u < nv; ++u)
                if (u != v && observed[i][u]) sources.push_back(u);
            std::set<std::size_t> acc = raw[sources[0]][i];
            if (rule == TransferRule::unite) {
                for (std::size_t s = 1; s < sources.size(); ++s) acc.insert(raw[sources[s]][i].begin(), raw[sources[s]][i].end());
            } else if (rule == TransferRule::intersect) {
                for (std::size_t s = 1; s < sources.size(); ++s) {
                    std::set<std::size_t> keep;
                    for (auto j : acc)
                        if (raw[sources[s]][i].count(j)) keep.insert(j);
                    acc = keep;
                }
            }
            rows[v][i] = acc;
        }
    }

    GraphResult out;
    for (std::size_t v = 0; v < nv; ++v) {
        std::vector<std::vector<int>> a(n, std::vector<int>(n, 0));
        for (std::size_t i = 0; i < n; ++i)
            for (auto j : rows[v][i])
                if (j != i) a[i][j] = a[j][i] = 1;
        Grid op(n, std::vector<double>(n, 0.0));
        std::vector<double> deg(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            int d = 0;
            for (std::size_t j = 0; j < n; ++j) d += a[i][j];
            if (d == 0) out.degenerate = true;
            deg[i] += d;
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double aij = (i == j ? 1.0 : 0.0) + a[i][j];
                op[i][j] = (1.0 / std::sqrt(deg[i])) * aij * (1.0 / std::sqrt(deg[j]));
            }
        out.adjacency.push_back(a);
        out.operators.push_back(op);
    }
    return out;
}

namespace {

void search(const std::vector<std::vector<int>>& counts, std::size_t row, std::vector<bool>& used, int score,
            int& best) {
    if (row == counts.size()) {
        best = std::max(best, score);
        return;
    }
    for (std::size_t c = 0; c < used.size(); ++c) {
        if (used[c]) continue;
        used[c] = true;
        search(counts, row + 1, used, score + counts[row][c], best);
        used[c] = false;
    }
}

}  // namespace

double exhaustive_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
    const int kp = *std::max_element(pred.begin(), pred.end()) + 1;
    const int kt = *std::max_element(truth.begin(), truth.end()) + 1;
    const bool pred_rows = kp <= kt;
    const int r = pred_rows ? kp : kt, c = pred_rows ? kt : kp;
    std::vector<std::vector<int>> counts(r, std::vector<int>(c, 0));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred_rows) ++counts[pred[i]][truth[i]];
        else ++counts[truth[i]][pred[i]];
    }
    std::vector<bool> used(c, false);
    int best = 0;
    search(counts, 0, used, 0, best);
    return static_cast<double>(best) / static_cast<double>(pred.size());
}

double nmi_direct(const std::vector<int>& pred, const std::vector<int>& truth) {
    const double n = static_cast<double>(pred.size());
    std::map<int, double> pp, pt;
    std::map<std::pair<int, int>, double> joint;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        pp[pred[i]] += 1.0 / n;
        pt[truth[i]] += 1.0 / n;
        joint[{pred[i], truth[i]}] += 1.0 / n;
    }
    double hp = 0.0, ht = 0.0, mi = 0.0;
    for (const auto& [k, p] : pp) hp -= p * std::log(p);
    for (const auto& [k, p] : pt) ht -= p * std::log(p);
    if (pp.size() == 1 && pt.size() == 1) return 1.0;
    if (pp.size() == 1 || pt.size() == 1) return 0.0;
    for (const auto& [key, p] : joint) mi += p * std::log(p / (pp[key.first] * pt[key.second]));
    return mi / std::sqrt(hp * ht);
}

double ari_pairs(const std::vector<int>& pred, const std::vector<int>& truth) {
    double both = 0.0, same_pred = 0.0, same_truth = 0.0, total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t j = i + 1; j < pred.size(); ++j) {
            const bool a = pred[i] == pred[j], b = truth[i] == truth[j];
            both += a && b;
            same_pred += a;
            same_truth += b;
            total += 1.0;
        }
    }
    const double expected = total > 0.0 ? same_pred * same_truth / total : 0.0;
    const double top = 0.5 * (same_pred + same_truth);
    if (top == expected) return (both == same_pred && both == same_truth) ? 1.0 : 0.0;
    return (both - expected) / (top - expected);
}

double max_relative_error(const std::function<double(const Matrix&)>& f, const Matrix& x, const Matrix& analytic,
                          double h, double floor) {
    double worst = 0.0;
    Matrix probe = x;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double orig = probe.data()[k];
        probe.data()[k] = orig + h;
        const double up = f(probe);
        probe.data()[k] = orig - h;
        const double down = f(probe);
        probe.data()[k] = orig;
        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic.data()[k];
        const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
        worst = std::max(worst, err);
    }
    return worst;
}

Matrix Gen::normal_matrix(std::size_t r, std::size_t c, double scale) {
    Matrix m(r, c);
    for (double& v : m.data()) v = scale * normal();
    return m;
}

Matrix Gen::stochastic(std::size_t r, std::size_t c, double sharpness) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            m(i, j) = std::exp(sharpness * normal());
            z += m(i, j);
        }
        for (std::size_t j = 0; j < c; ++j) m(i, j) /= z;
    }
    return m;
}

std::vector<int> Gen::labels(std::size_t n, int k) {
    std::vector<int> l(n);
    for (auto& x : l) x = integer(0, k - 1);
    return l;
}

icmvc::ObservationMask Gen::mask(std::size_t n, std::size_t v, double missing_prob) {
    icmvc::ObservationMask m(n, v);
    for (std::size_t i = 0; i < n; ++i) {
        if (uniform() >= missing_prob) continue;
        m.set(i, static_cast<std::size_t>(integer(0, static_cast<int>(v) - 1)), false);
    }
    return m;
}

}  // namespace oracle
