#include "icmvc/types.hpp"

#include <string>

#include "icmvc/error.hpp"

namespace icmvc {

std::vector<std::size_t> ViewSet::dims() const {
    std::vector<std::size_t> d;
    for (const auto& v : views) d.push_back(v.cols());
    return d;
}

void ViewSet::validate() const {
    if (views.empty()) throw DataError("view set is empty");
    const std::size_t n = views.front().rows();
    for (std::size_t v = 0; v < views.size(); ++v) {
        if (views[v].rows() != n) {
            throw DataError("view " + std::to_string(v + 1) + " has " + std::to_string(views[v].rows()) +
                            " rows, expected " + std::to_string(n));
        }
        if (!views[v].all_finite()) throw DataError("view " + std::to_string(v + 1) + " has non-finite values");
    }
}

ObservationMask::ObservationMask(std::size_t instances, std::size_t views)
    : n_(instances), v_(views), bits_(instances * views, 1) {}

std::size_t ObservationMask::observed_count_in_view(std::size_t v) const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n_; ++i) c += observed(i, v) ? 1 : 0;
    return c;
}

std::size_t ObservationMask::views_observed(std::size_t i) const {
    std::size_t c = 0;
    for (std::size_t v = 0; v < v_; ++v) c += observed(i, v) ? 1 : 0;
    return c;
}

std::size_t ObservationMask::incomplete_count() const {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n_; ++i) c += views_observed(i) < v_ ? 1 : 0;
    return c;
}

std::vector<bool> ObservationMask::view_column(std::size_t v) const {
    std::vector<bool> col(n_);
    for (std::size_t i = 0; i < n_; ++i) col[i] = observed(i, v);
    return col;
}

void ObservationMask::validate() const {
    for (std::size_t i = 0; i < n_; ++i) {
        if (views_observed(i) == 0) {
            throw DataError("instance " + std::to_string(i) + " is missing from every view");
        }
    }
}

}  // namespace icmvc
