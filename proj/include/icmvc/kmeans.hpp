#pragma once

#include <cstdint>

#include "icmvc/types.hpp"

namespace icmvc::kmeans {

struct KMeansResult {
    LabelVector labels;
    Matrix centers;
    double inertia = 0.0;
    int iterations = 0;  // of the winning restart
};

struct KMeansOptions {
    int restarts = 20;
    int max_iter = 300;
};

/// Lloyd's algorithm from k-means++ seeds; keeps the restart with the lowest
/// inertia (earliest on ties). Assignment ties go to the lowest center index.
KMeansResult kmeans(const Matrix& x, std::size_t clusters, std::uint64_t seed, KMeansOptions options = {});

/// Sum of squared distances from each row to the center of its label.
double inertia(const Matrix& x, const LabelVector& labels, const Matrix& centers);

}  // namespace icmvc::kmeans
