#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "icmvc/numkit/matrix.hpp"

namespace icmvc {

using numkit::Matrix;

/// Class or cluster ids, one per instance, dense in [0, C).
using LabelVector = std::vector<int>;

/// Per-view feature matrices sharing the instance count.
struct ViewSet {
    std::vector<Matrix> views;

    std::size_t num_views() const { return views.size(); }
    std::size_t num_instances() const { return views.empty() ? 0 : views.front().rows(); }
    std::vector<std::size_t> dims() const;

    /// Throws DataError unless every view has the same row count and only
    /// finite entries.
    void validate() const;
};

/// N x V observation flags; true means instance i is present in view v.
class ObservationMask {
public:
    ObservationMask() = default;
    /// All-observed mask.
    ObservationMask(std::size_t instances, std::size_t views);

    std::size_t num_instances() const { return n_; }
    std::size_t num_views() const { return v_; }

    bool observed(std::size_t i, std::size_t v) const { return bits_[i * v_ + v] != 0; }
    void set(std::size_t i, std::size_t v, bool on) { bits_[i * v_ + v] = on ? 1 : 0; }

    std::size_t observed_count_in_view(std::size_t v) const;
    std::size_t views_observed(std::size_t i) const;
    /// Instances missing at least one view.
    std::size_t incomplete_count() const;
    bool is_complete() const { return incomplete_count() == 0; }
    std::vector<bool> view_column(std::size_t v) const;

    /// Throws DataError if any instance is missing from every view.
    void validate() const;

    friend bool operator==(const ObservationMask&, const ObservationMask&) = default;

private:
    std::size_t n_ = 0;
    std::size_t v_ = 0;
    std::vector<std::uint8_t> bits_;
};

}  // namespace icmvc
