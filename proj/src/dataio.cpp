#include "icmvc/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "icmvc/error.hpp"
#include "icmvc/rng.hpp"

namespace icmvc::dataio {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::vector<std::string>> read_cells(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

double parse_double(const std::string& cell, const fs::path& path, std::size_t line, std::size_t col) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
        throw ParseError(path.string(), line, col, "not a finite number: '" + cell + "'");
    }
    return v;
}

long long parse_int(const std::string& cell, const fs::path& path, std::size_t line, std::size_t col) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ParseError(path.string(), line, col, "not an integer: '" + cell + "'");
    }
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw DataError("format_double failed");
    return std::string(buf, ptr);
}

void write_text_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << content;
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

Matrix read_matrix_csv(const fs::path& path) {
    const auto rows = read_cells(path);
    if (rows.empty()) throw DataError(path.string() + " is empty");
    const std::size_t cols = rows.front().size();
    Matrix m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) {
            throw ParseError(path.string(), i + 1, rows[i].size(),
                             "expected " + std::to_string(cols) + " columns");
        }
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = parse_double(rows[i][j], path, i + 1, j + 1);
    }
    return m;
}

void write_matrix_csv(const fs::path& path, const Matrix& m) {
    std::string s;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) s += ',';
            s += format_double(m(i, j));
        }
        s += '\n';
    }
    write_text_atomic(path, s);
}

LabelVector read_labels_csv(const fs::path& path) {
    const auto rows = read_cells(path);
    LabelVector labels;
    labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != 1) throw ParseError(path.string(), i + 1, 2, "expected a single label");
        const long long v = parse_int(rows[i][0], path, i + 1, 1);
        if (v < 0 || v > std::numeric_limits<int>::max()) {
            throw ParseError(path.string(), i + 1, 1, "label out of range");
        }
        labels.push_back(static_cast<int>(v));
    }
    return labels;
}

void write_labels_csv(const fs::path& path, const LabelVector& labels) {
    std::string s;
    for (int l : labels) s += std::to_string(l) + '\n';
    write_text_atomic(path, s);
}

ObservationMask read_mask_csv(const fs::path& path, std::size_t views) {
    const auto rows = read_cells(path);
    ObservationMask mask(rows.size(), views);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != views) {
            throw ParseError(path.string(), i + 1, rows[i].size(),
                             "expected " + std::to_string(views) + " mask columns");
        }
        for (std::size_t v = 0; v < views; ++v) {
            const long long b = parse_int(rows[i][v], path, i + 1, v + 1);
            if (b != 0 && b != 1) throw ParseError(path.string(), i + 1, v + 1, "mask entries must be 0 or 1");
            mask.set(i, v, b == 1);
        }
        if (mask.views_observed(i) == 0) {
            throw DataError(path.string() + ":" + std::to_string(i + 1) + ": instance missing from every view");
        }
    }
    return mask;
}

void write_mask_csv(const fs::path& path, const ObservationMask& mask) {
    std::string s;
    for (std::size_t i = 0; i < mask.num_instances(); ++i) {
        for (std::size_t v = 0; v < mask.num_views(); ++v) {
            if (v) s += ',';
            s += mask.observed(i, v) ? '1' : '0';
        }
        s += '\n';
    }
    write_text_atomic(path, s);
}

Dataset load_dataset(const fs::path& dir, const LoadOptions& options) {
    if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
    Dataset ds;
    for (std::size_t k = 1;; ++k) {
        const fs::path p = dir / ("view" + std::to_string(k) + ".csv");
        if (!fs::exists(p)) break;
        ds.views.views.push_back(read_matrix_csv(p));
    }
    if (ds.views.views.empty()) throw DataError("no view1.csv in " + dir.string());
    const std::size_t n = ds.views.num_instances();
    for (std::size_t v = 0; v < ds.views.num_views(); ++v) {
        if (ds.views.views[v].rows() != n) {
            throw DataError("view" + std::to_string(v + 1) + ".csv has " +
                            std::to_string(ds.views.views[v].rows()) + " rows, view1.csv has " +
                            std::to_string(n));
        }
    }
    ds.labels = read_labels_csv(dir / "labels.csv");
    if (ds.labels.size() != n) {
        throw DataError("labels.csv has " + std::to_string(ds.labels.size()) + " rows, views have " +
                        std::to_string(n));
    }
    if (fs::exists(dir / "mask.csv")) {
        ds.mask = read_mask_csv(dir / "mask.csv", ds.views.num_views());
        if (ds.mask->num_instances() != n) throw DataError("mask.csv row count does not match the views");
    }
    if (fs::exists(dir / "meta.json")) {
        std::ifstream in(dir / "meta.json");
        nlohmann::json meta;
        try {
            in >> meta;
        } catch (const nlohmann::json::exception& e) {
            throw DataError("meta.json: " + std::string(e.what()));
        }
        if (meta.contains("N") && meta["N"].get<std::size_t>() != n) throw DataError("meta.json N disagrees with files");
        if (meta.contains("V") && meta["V"].get<std::size_t>() != ds.views.num_views()) {
            throw DataError("meta.json V disagrees with files");
        }
    }
    if (options.minmax_scale) minmax_scale(ds.views, ds.mask ? &*ds.mask : nullptr);
    if (ds.mask) ds.views = zero_fill(ds.views, *ds.mask);
    return ds;
}

std::vector<fs::path> save_dataset(const fs::path& dir, const ViewSet& views, const LabelVector& labels,
                                   const ObservationMask* mask) {
    views.validate();
    if (labels.size() != views.num_instances()) throw DataError("save_dataset: label count mismatch");
    fs::create_directories(dir);
    std::vector<fs::path> written;
    for (std::size_t v = 0; v < views.num_views(); ++v) {
        written.push_back(dir / ("view" + std::to_string(v + 1) + ".csv"));
        write_matrix_csv(written.back(), views.views[v]);
    }
    written.push_back(dir / "labels.csv");
    write_labels_csv(written.back(), labels);
    if (mask) {
        written.push_back(dir / "mask.csv");
        write_mask_csv(written.back(), *mask);
    }
    int classes = 0;
    for (int l : labels) classes = std::max(classes, l + 1);
    nlohmann::json meta = {{"N", views.num_instances()},
                           {"V", views.num_views()},
                           {"C", classes},
                           {"dims", views.dims()}};
    written.push_back(dir / "meta.json");
    write_text_atomic(written.back(), meta.dump(2) + "\n");
    return written;
}

std::size_t incomplete_target(std::size_t n, double eta) {
    // The small slack keeps decimal rates such as 0.29 * 100 from flooring one short.
    return static_cast<std::size_t>(std::floor(eta * static_cast<double>(n) + 1e-9));
}

ObservationMask make_mask(std::size_t n, std::size_t views, double eta, std::uint64_t seed) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("missing rate must lie in [0, 1]");
    if (views < 2) throw ConfigError("make_mask needs at least 2 views");
    ObservationMask mask(n, views);
    const std::size_t count = std::min(n, incomplete_target(n, eta));
    SplitMix64 rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t pick = k + static_cast<std::size_t>(rng.below(n - k));
        std::swap(order[k], order[pick]);
        mask.set(order[k], static_cast<std::size_t>(rng.below(views)), false);
    }
    return mask;
}

namespace {

// Orthonormal rows via Gram-Schmidt on a Gaussian matrix.
Matrix random_rotation(std::size_t d, SplitMix64& rng) {
    while (true) {
        Matrix q(d, d);
        for (double& x : q.data()) x = rng.normal();
        bool ok = true;
        for (std::size_t i = 0; i < d && ok; ++i) {
            for (std::size_t k = 0; k < i; ++k) {
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += q(i, j) * q(k, j);
                for (std::size_t j = 0; j < d; ++j) q(i, j) -= dot * q(k, j);
            }
            double norm = 0.0;
            for (std::size_t j = 0; j < d; ++j) norm += q(i, j) * q(i, j);
            norm = std::sqrt(norm);
            if (norm < 1e-8) {
                ok = false;
                break;
            }
            for (std::size_t j = 0; j < d; ++j) q(i, j) /= norm;
        }
        if (ok) return q;
    }
}

}  // namespace

std::pair<ViewSet, LabelVector> synth_blobs(const SynthSpec& spec) {
    if (spec.views < 1 || spec.clusters < 1) throw ConfigError("synth_blobs: views and clusters must be >= 1");
    if (spec.n < spec.clusters * spec.views) throw ConfigError("synth_blobs: need N >= C * V");
    if (!(spec.noise_sigma >= 0.0)) throw ConfigError("synth_blobs: noise_sigma must be >= 0");
    if (!(spec.center_scale > 0.0)) throw ConfigError("synth_blobs: center_scale must be positive");
    if (spec.dims.empty() || (spec.dims.size() != 1 && spec.dims.size() != spec.views)) {
        throw ConfigError("synth_blobs: give one dimension or one per view");
    }
    for (std::size_t d : spec.dims)
        if (d == 0) throw ConfigError("synth_blobs: dimensions must be positive");

    SplitMix64 root(spec.seed);
    SplitMix64 label_rng = root.split();

    LabelVector labels(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) labels[i] = static_cast<int>(i % spec.clusters);
    for (std::size_t i = spec.n; i > 1; --i) {
        std::swap(labels[i - 1], labels[static_cast<std::size_t>(label_rng.below(i))]);
    }

    ViewSet views;
    const double min_gap = 6.0 * spec.noise_sigma;
    for (std::size_t v = 0; v < spec.views; ++v) {
        SplitMix64 rng = root.split();
        const std::size_t d = spec.dims.size() == 1 ? spec.dims[0] : spec.dims[v];
        Matrix centers;
        bool feasible = false;
        for (int attempt = 0; attempt < 100 && !feasible; ++attempt) {
            centers = Matrix(spec.clusters, d);
            for (double& x : centers.data()) x = spec.center_scale * rng.normal();
            feasible = true;
            for (std::size_t a = 0; a < spec.clusters && feasible; ++a) {
                for (std::size_t b = a + 1; b < spec.clusters; ++b) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < d; ++j) s += (centers(a, j) - centers(b, j)) * (centers(a, j) - centers(b, j));
                    if (std::sqrt(s) < min_gap) {
                        feasible = false;
                        break;
                    }
                }
            }
        }
        if (!feasible) {
            throw GenerationError("synth_blobs: could not place centers " + std::to_string(min_gap) +
                                  " apart in view " + std::to_string(v + 1) + " after 100 attempts");
        }
        const Matrix rotation = random_rotation(d, rng);
        Matrix raw(spec.n, d);
        for (std::size_t i = 0; i < spec.n; ++i) {
            const auto c = static_cast<std::size_t>(labels[i]);
            for (std::size_t j = 0; j < d; ++j) raw(i, j) = centers(c, j) + spec.noise_sigma * rng.normal();
        }
        views.views.push_back(numkit::matmul(raw, rotation));
    }
    return {std::move(views), std::move(labels)};
}

ViewSet zero_fill(const ViewSet& views, const ObservationMask& mask) {
    if (mask.num_instances() != views.num_instances() || mask.num_views() != views.num_views()) {
        throw DimensionError("zero_fill: mask shape does not match the view set");
    }
    ViewSet out = views;
    for (std::size_t v = 0; v < out.num_views(); ++v) {
        for (std::size_t i = 0; i < out.num_instances(); ++i) {
            if (mask.observed(i, v)) continue;
            for (double& x : out.views[v].row(i)) x = 0.0;
        }
    }
    return out;
}

ViewSet mean_impute(const ViewSet& views, const ObservationMask& mask) {
    if (mask.num_instances() != views.num_instances() || mask.num_views() != views.num_views()) {
        throw DimensionError("mean_impute: mask shape does not match the view set");
    }
    ViewSet out = views;
    for (std::size_t v = 0; v < out.num_views(); ++v) {
        Matrix& x = out.views[v];
        std::vector<double> mean(x.cols(), 0.0);
        std::size_t count = 0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (!mask.observed(i, v)) continue;
            ++count;
            for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += x(i, j);
        }
        if (count == 0) throw DataError("mean_impute: view " + std::to_string(v + 1) + " has no observed rows");
        for (double& m : mean) m /= static_cast<double>(count);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (mask.observed(i, v)) continue;
            std::copy(mean.begin(), mean.end(), x.row(i).begin());
        }
    }
    return out;
}

void minmax_scale(ViewSet& views, const ObservationMask* mask) {
    for (std::size_t v = 0; v < views.num_views(); ++v) {
        Matrix& x = views.views[v];
        for (std::size_t j = 0; j < x.cols(); ++j) {
            double lo = INFINITY, hi = -INFINITY;
            for (std::size_t i = 0; i < x.rows(); ++i) {
                if (mask && !mask->observed(i, v)) continue;
                lo = std::min(lo, x(i, j));
                hi = std::max(hi, x(i, j));
            }
            if (!(hi >= lo)) continue;
            const double range = hi - lo;
            for (std::size_t i = 0; i < x.rows(); ++i) x(i, j) = range > 0.0 ? (x(i, j) - lo) / range : 0.0;
        }
    }
}

}  // namespace icmvc::dataio
