#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "icmvc/types.hpp"

namespace icmvc::dataio {

namespace fs = std::filesystem;

/// Contents of a dataset directory:
///   view1.csv .. viewV.csv  comma-separated features, no header
///   labels.csv              one integer class id per line
///   mask.csv                optional N x V 0/1 observation flags
///   meta.json               N, V, C, dims
struct Dataset {
    ViewSet views;
    LabelVector labels;
    std::optional<ObservationMask> mask;
};

struct LoadOptions {
    /// Per-view min-max scaling of each feature to [0, 1], computed over
    /// observed rows.
    bool minmax_scale = true;
};

Dataset load_dataset(const fs::path& dir, const LoadOptions& options = {});
/// Writes the dataset files plus meta.json. Returns the written paths.
std::vector<fs::path> save_dataset(const fs::path& dir, const ViewSet& views, const LabelVector& labels,
                                   const ObservationMask* mask = nullptr);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

Matrix read_matrix_csv(const fs::path& path);
void write_matrix_csv(const fs::path& path, const Matrix& m);
LabelVector read_labels_csv(const fs::path& path);
void write_labels_csv(const fs::path& path, const LabelVector& labels);
ObservationMask read_mask_csv(const fs::path& path, std::size_t views);
void write_mask_csv(const fs::path& path, const ObservationMask& mask);

/// Writes through a temporary file and renames it into place.
void write_text_atomic(const fs::path& path, const std::string& content);

/// Number of incomplete instances for missing rate eta: floor(eta * n).
std::size_t incomplete_target(std::size_t n, double eta);

/// Picks floor(eta * n) instances uniformly without replacement and removes
/// exactly one uniformly chosen view from each.
ObservationMask make_mask(std::size_t n, std::size_t views, double eta, std::uint64_t seed);

struct SynthSpec {
    std::size_t n = 300;
    std::size_t views = 2;
    std::size_t clusters = 3;
    /// One entry per view, or a single entry shared by all views.
    std::vector<std::size_t> dims{10};
    double noise_sigma = 0.5;
    /// Standard deviation of the Gaussian the cluster centers are drawn from.
    double center_scale = 1.0;
    std::uint64_t seed = 1;
};

/// Gaussian blobs sharing one label partition across views. Centers are
/// drawn per view and kept at least 6 sigma apart; every view is rotated by
/// its own random orthogonal matrix.
std::pair<ViewSet, LabelVector> synth_blobs(const SynthSpec& spec);

/// Zeroes the rows of missing instances in each view.
ViewSet zero_fill(const ViewSet& views, const ObservationMask& mask);
/// Replaces missing rows with the mean of the view's observed rows.
ViewSet mean_impute(const ViewSet& views, const ObservationMask& mask);
/// In-place min-max scaling using observed rows only; constant features map to 0.
void minmax_scale(ViewSet& views, const ObservationMask* mask = nullptr);

}  // namespace icmvc::dataio
