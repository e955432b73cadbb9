#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "icmvc/dataio.hpp"
#include "icmvc/error.hpp"
#include "icmvc/kmeans.hpp"
#include "icmvc/metrics.hpp"
#include "oracles.hpp"

using namespace icmvc;
using namespace icmvc::dataio;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("icmvc_dataio_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("load a small directory") {
    TempDir d("toy");
    write(d.path / "view1.csv", "1,2\n3,4\n5,6\n7,8\n");
    write(d.path / "view2.csv", "1,2,3\n4,5,6\n7,8,9\n1,1,1\n");
    write(d.path / "labels.csv", "0\n1\n0\n1\n");
    const Dataset ds = load_dataset(d.path, {.minmax_scale = false});
    REQUIRE(ds.views.num_views() == 2);
    CHECK(ds.views.views[0].rows() == 4);
    CHECK(ds.views.views[0].cols() == 2);
    CHECK(ds.views.views[1].cols() == 3);
    CHECK(ds.labels == LabelVector{0, 1, 0, 1});
    CHECK_FALSE(ds.mask.has_value());

    const Dataset scaled = load_dataset(d.path);
    CHECK(scaled.views.views[0](0, 0) == 0.0);
    CHECK(scaled.views.views[0](3, 1) == 1.0);
}

TEST_CASE("format errors") {
    TempDir d("bad");
    write(d.path / "header.csv", "a,b\n1,2\n");
    try {
        read_matrix_csv(d.path / "header.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 1);
        CHECK(e.column() == 1);
    }
    write(d.path / "cell.csv", "1,2\n3,x\n");
    try {
        read_matrix_csv(d.path / "cell.csv");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 2);
    }
    write(d.path / "ragged.csv", "1,2\n3\n");
    CHECK_THROWS_AS(read_matrix_csv(d.path / "ragged.csv"), ParseError);

    write(d.path / "view1.csv", "1\n2\n3\n");
    write(d.path / "view2.csv", "1\n2\n");
    write(d.path / "labels.csv", "0\n1\n0\n");
    CHECK_THROWS_AS(load_dataset(d.path), DataError);

    write(d.path / "view2.csv", "1\n2\n3\n");
    write(d.path / "mask.csv", "1,1\n0,0\n1,0\n");
    CHECK_THROWS_AS(load_dataset(d.path), DataError);

    CHECK_THROWS_AS(load_dataset(d.path / "nowhere"), DataError);
}

TEST_CASE("save and load round trip bit-exactly") {
    oracle::Gen g(8);
    ViewSet vs{{g.normal_matrix(6, 3, 1e3), g.normal_matrix(6, 2, 1e-7)}};
    vs.views[0](0, 0) = 0.1;
    vs.views[0](0, 1) = 1.0 / 3.0;
    vs.views[1](0, 0) = -0.0;
    const LabelVector labels{0, 1, 2, 0, 1, 2};
    ObservationMask mask(6, 2);
    mask.set(3, 1, false);
    TempDir d("roundtrip");
    const auto files = save_dataset(d.path, vs, labels, &mask);
    CHECK(files.size() == 5);
    const Dataset back = load_dataset(d.path, {.minmax_scale = false});
    // rows absent from the mask come back zeroed
    const ViewSet want = zero_fill(vs, mask);
    for (std::size_t v = 0; v < 2; ++v) CHECK(back.views.views[v] == want.views[v]);
    CHECK(read_matrix_csv(d.path / "view2.csv") == vs.views[1]);
    CHECK(back.labels == labels);
    REQUIRE(back.mask.has_value());
    CHECK(*back.mask == mask);
}

TEST_CASE("shortest decimal formatting") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    oracle::Gen g(2);
    for (int i = 0; i < 1000; ++i) {
        const double x = g.normal() * std::pow(10.0, g.integer(-30, 30));
        CHECK(std::stod(format_double(x)) == x);
    }
}

TEST_CASE("masks") {
    SUBCASE("boundaries") {
        CHECK(make_mask(10, 2, 0.0, 1).is_complete());
        const auto all = make_mask(10, 2, 1.0, 1);
        for (std::size_t i = 0; i < 10; ++i) CHECK(all.views_observed(i) == 1);
        CHECK_THROWS_AS(make_mask(10, 2, 1.5, 1), ConfigError);
        CHECK_THROWS_AS(make_mask(10, 2, -0.1, 1), ConfigError);
    }
    SUBCASE("exact counts over seeds") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const auto m = make_mask(10, 3, 0.3, seed);
            CHECK(m.incomplete_count() == 3);
            for (std::size_t i = 0; i < 10; ++i) CHECK(m.views_observed(i) >= 2);
        }
    }
    SUBCASE("realized rate is floor(eta n)") {
        oracle::Gen g(6);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = static_cast<std::size_t>(g.integer(1, 200));
            const std::size_t v = static_cast<std::size_t>(g.integer(2, 4));
            const double eta = g.uniform();
            const auto m = make_mask(n, v, eta, static_cast<std::uint64_t>(trial));
            CHECK(m.incomplete_count() == static_cast<std::size_t>(std::floor(eta * static_cast<double>(n))));
            CHECK_NOTHROW(m.validate());
        }
        CHECK(incomplete_target(10, 0.3) == 3);
        CHECK(incomplete_target(100, 0.29) == 29);
    }
    SUBCASE("same seed, same mask") {
        CHECK(make_mask(50, 2, 0.5, 42) == make_mask(50, 2, 0.5, 42));
        CHECK_FALSE(make_mask(50, 2, 0.5, 42) == make_mask(50, 2, 0.5, 43));
    }
}

TEST_CASE("synthetic blobs") {
    SynthSpec spec;
    spec.seed = 3;
    const auto [a, la] = synth_blobs(spec);
    const auto [b, lb] = synth_blobs(spec);
    CHECK(la == lb);
    for (std::size_t v = 0; v < 2; ++v) CHECK(a.views[v] == b.views[v]);
    CHECK(a.views[0].rows() == 300);
    CHECK(a.views[1].cols() == 10);

    SynthSpec clean = spec;
    clean.noise_sigma = 0.0;
    clean.n = 60;
    const auto [c, lc] = synth_blobs(clean);
    for (std::size_t v = 0; v < 2; ++v) {
        const auto km = kmeans::kmeans(c.views[v], 3, 1);
        CHECK(metrics::accuracy(km.labels, lc).acc == 1.0);
    }

    SynthSpec bad = spec;
    bad.clusters = 0;
    CHECK_THROWS_AS(synth_blobs(bad), ConfigError);
    bad = spec;
    bad.dims = {10, 10, 10};
    CHECK_THROWS_AS(synth_blobs(bad), ConfigError);
}

TEST_CASE("concatenated k-means separates the default blobs") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthSpec spec;
        spec.seed = seed;
        auto [vs, labels] = synth_blobs(spec);
        const Matrix joined = hconcat(vs.views);
        const auto km = kmeans::kmeans(joined, 3, seed);
        CHECK(metrics::accuracy(km.labels, labels).acc >= 0.95);
    }
}

TEST_CASE("filling missing rows") {
    const ViewSet vs{{Matrix{{1, 2}, {3, 4}, {5, 6}, {7, 8}}, Matrix{{1}, {2}, {3}, {4}}}};
    CHECK(zero_fill(vs, ObservationMask(4, 2)).views == vs.views);

    ObservationMask m(4, 2);
    m.set(3, 1, false);
    const ViewSet z = zero_fill(vs, m);
    CHECK(z.views[1](3, 0) == 0.0);
    CHECK(z.views[0] == vs.views[0]);
    CHECK(zero_fill(z, m).views == z.views);

    m.set(0, 0, false);
    const ViewSet mi = mean_impute(vs, m);
    CHECK(mi.views[0](0, 0) == 5.0);
    CHECK(mi.views[0](0, 1) == 6.0);
    CHECK(mi.views[1](3, 0) == 2.0);
}

TEST_CASE("min-max scaling uses observed rows") {
    ViewSet vs{{Matrix{{0, 5}, {10, 5}, {100, 5}}}};
    ObservationMask m(3, 1);
    m.set(2, 0, false);
    minmax_scale(vs, &m);
    CHECK(vs.views[0](0, 0) == 0.0);
    CHECK(vs.views[0](1, 0) == 1.0);
    CHECK(vs.views[0](0, 1) == 0.0);
}

TEST_CASE("atomic text writes") {
    TempDir d("atomic");
    write_text_atomic(d.path / "a.txt", "hello\n");
    write_text_atomic(d.path / "a.txt", "world\n");
    CHECK(slurp(d.path / "a.txt") == "world\n");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(d.path)) ++entries;
    CHECK(entries == 1);
}
