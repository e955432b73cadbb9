#include "icmvc/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <span>
#include <string>

#include "icmvc/error.hpp"
#include "icmvc/rng.hpp"

namespace icmvc::kmeans {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

Matrix plus_plus_seeds(const Matrix& x, std::size_t clusters, SplitMix64& rng) {
    const std::size_t n = x.rows();
    Matrix centers(clusters, x.cols());
    auto set_center = [&](std::size_t c, std::size_t i) {
        for (std::size_t j = 0; j < x.cols(); ++j) centers(c, j) = x(i, j);
    };
    set_center(0, rng.below(n));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(x.row(i), centers.row(0));
    for (std::size_t c = 1; c < clusters; ++c) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = 0;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (r < acc && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.below(n);
        }
        set_center(c, pick);
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(x.row(i), centers.row(c)));
    }
    return centers;
}

bool assign(const Matrix& x, const Matrix& centers, LabelVector& labels) {
    bool changed = false;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers.rows(); ++c) {
            const double d = sq_dist(x.row(i), centers.row(c));
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        if (labels[i] != static_cast<int>(best)) {
            labels[i] = static_cast<int>(best);
            changed = true;
        }
    }
    return changed;
}

// Empty clusters keep their previous center.
void update(const Matrix& x, const LabelVector& labels, Matrix& centers) {
    Matrix sums(centers.rows(), centers.cols());
    std::vector<std::size_t> counts(centers.rows(), 0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        ++counts[c];
        for (std::size_t j = 0; j < x.cols(); ++j) sums(c, j) += x(i, j);
    }
    for (std::size_t c = 0; c < centers.rows(); ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t j = 0; j < x.cols(); ++j) centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
}

}  // namespace

double inertia(const Matrix& x, const LabelVector& labels, const Matrix& centers) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) s += sq_dist(x.row(i), centers.row(static_cast<std::size_t>(labels[i])));
    return s;
}

KMeansResult kmeans(const Matrix& x, std::size_t clusters, std::uint64_t seed, KMeansOptions options) {
    if (clusters == 0) throw ConfigError("kmeans: cluster count must be positive");
    if (clusters > x.rows()) {
        throw ConfigError("kmeans: " + std::to_string(clusters) + " clusters for " + std::to_string(x.rows()) +
                          " points");
    }
    if (options.restarts < 1 || options.max_iter < 1) throw ConfigError("kmeans: restarts and max_iter must be >= 1");

    SplitMix64 root(seed);
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < options.restarts; ++r) {
        SplitMix64 rng = root.split();
        KMeansResult run;
        run.centers = plus_plus_seeds(x, clusters, rng);
        run.labels.assign(x.rows(), -1);
        assign(x, run.centers, run.labels);
        for (run.iterations = 1; run.iterations < options.max_iter; ++run.iterations) {
            update(x, run.labels, run.centers);
            if (!assign(x, run.centers, run.labels)) break;
        }
        update(x, run.labels, run.centers);
        run.inertia = inertia(x, run.labels, run.centers);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    return best;
}

}  // namespace icmvc::kmeans
