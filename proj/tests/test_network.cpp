#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "icmvc/error.hpp"
#include "icmvc/network.hpp"
#include "oracles.hpp"

using namespace icmvc;
using namespace icmvc::network;
namespace nk = icmvc::numkit;

namespace {

LinearVars linear_vars(Tape& t, const Matrix& w, const Matrix& b) {
    return {t.variable(w), t.variable(b)};
}

}  // namespace

TEST_CASE("gcn layer") {
    Tape t;
    const Matrix h{{2, 0}, {0, 2}};
    Var id = gcn_layer(t.constant(h), t.constant(Matrix::identity(2)), t.variable(Matrix::identity(2)),
                       Activation::relu);
    CHECK(id.value() == h);
    Var avg = gcn_layer(t.constant(h), t.constant(Matrix{{.5, .5}, {.5, .5}}), t.variable(Matrix::identity(2)),
                        Activation::relu);
    CHECK(avg.value() == Matrix{{1, 1}, {1, 1}});
    CHECK_THROWS_AS(gcn_layer(t.constant(h), t.constant(Matrix::identity(3)), t.variable(Matrix::identity(2)),
                              Activation::relu),
                    DimensionError);

    oracle::Gen g(4);
    const Matrix x = g.normal_matrix(4, 3), op = g.normal_matrix(4, 4), w = g.normal_matrix(3, 5);
    auto f = [&](const Matrix& wm) {
        Tape tp;
        return nk::sum(nk::square(gcn_layer(tp.constant(x), tp.constant(op), tp.variable(wm), Activation::relu)))
            .value()
            .item();
    };
    Tape tp;
    Var wv = tp.variable(w);
    tp.backward(nk::sum(nk::square(gcn_layer(tp.constant(x), tp.constant(op), wv, Activation::relu))));
    CHECK(oracle::max_relative_error(f, w, wv.grad()) < 1e-5);
}

TEST_CASE("encode view") {
    SUBCASE("aggregation fills a missing row") {
        Tape t;
        const Matrix x{{0, 0}, {1, 2}};
        const Matrix op{{.5, .5}, {.5, .5}};
        Var h = encode_view(t.constant(x), t.constant(op), std::vector<Var>{t.variable(Matrix{{1, 0}, {0, 1}})},
                            Activation::relu);
        CHECK(h.value()(0, 0) == 0.5);
        CHECK(h.value()(0, 1) == 1.0);
    }
    SUBCASE("isolated zero row stays zero") {
        oracle::Gen g(1);
        Tape t;
        Matrix x = g.normal_matrix(4, 3);
        for (double& v : x.row(2)) v = 0.0;
        std::vector<Var> ws{t.variable(g.normal_matrix(3, 6)), t.variable(g.normal_matrix(6, 6)),
                            t.variable(g.normal_matrix(6, 6))};
        Var h = encode_view(t.constant(x), t.constant(Matrix::identity(4)), ws, Activation::relu);
        for (double v : h.value().row(2)) CHECK(v == 0.0);
    }
    SUBCASE("matches a straight-line reimplementation") {
        oracle::Gen g(9);
        const Matrix x = g.normal_matrix(4, 3);
        const Matrix a{{0, 1, 0, 1}, {1, 0, 1, 0}, {0, 1, 0, 0}, {1, 0, 0, 0}};
        // D^-1/2 (A + I) D^-1/2 by hand
        Matrix op(4, 4);
        std::vector<double> d(4, 1.0);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) d[i] += a(i, j);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) op(i, j) = ((i == j) + a(i, j)) / std::sqrt(d[i] * d[j]);
        const Matrix w1 = g.normal_matrix(3, 5), w2 = g.normal_matrix(5, 5);

        auto relu_mm = [](const Matrix& p, const Matrix& h, const Matrix& w) {
            Matrix out(p.rows(), w.cols());
            for (std::size_t i = 0; i < p.rows(); ++i)
                for (std::size_t c = 0; c < w.cols(); ++c) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < p.cols(); ++j)
                        for (std::size_t k = 0; k < w.rows(); ++k) s += p(i, j) * h(j, k) * w(k, c);
                    out(i, c) = std::max(s, 0.0);
                }
            return out;
        };
        const Matrix h1 = relu_mm(op, x, w1);
        const Matrix want = relu_mm(op, h1, w2) + h1;

        Tape t;
        Var got = encode_view(t.constant(x), t.constant(op), std::vector<Var>{t.variable(w1), t.variable(w2)},
                              Activation::relu);
        CHECK(max_abs_diff(got.value(), want) < 1e-12);
    }
    SUBCASE("no layers") {
        Tape t;
        CHECK_THROWS_AS(encode_view(t.constant(Matrix(2, 2)), t.constant(Matrix::identity(2)), {}, Activation::relu),
                        ConfigError);
    }
}

TEST_CASE("attention fusion") {
    SUBCASE("equal scores give equal weights") {
        Tape t;
        const Matrix h1{{1, 2}, {3, 4}}, h2{{5, 6}, {7, 8}}, h3{{0, 1}, {1, 0}};
        std::vector<Var> hs{t.constant(h1), t.constant(h2), t.constant(h3)};
        const auto f = attention_fuse(hs, linear_vars(t, Matrix(6, 4), Matrix(1, 4)),
                                      linear_vars(t, Matrix(4, 3), Matrix(1, 3)), 1.0);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t v = 0; v < 3; ++v) CHECK(f.weights.value()(i, v) == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("saturated scores") {
        Tape t;
        std::vector<Var> hs{t.constant(Matrix{{2, 4}}), t.constant(Matrix{{0, 0}})};
        // bias drives sigmoid to (1, 0)
        const auto f = attention_fuse(hs, linear_vars(t, Matrix(4, 1), Matrix(1, 1)),
                                      linear_vars(t, Matrix(1, 2), Matrix{{800, -800}}), 1.0);
        CHECK(f.weights.value()(0, 0) == doctest::Approx(0.731058578630005).epsilon(1e-12));
        CHECK(f.weights.value()(0, 1) == doctest::Approx(0.268941421369995).epsilon(1e-12));
    }
    SUBCASE("convex combination") {
        Tape t;
        std::vector<Var> hs{t.constant(Matrix{{2, 4}}), t.constant(Matrix{{0, 0}})};
        const auto f = attention_fuse(hs, linear_vars(t, Matrix(4, 1), Matrix(1, 1)),
                                      linear_vars(t, Matrix(1, 2), Matrix(1, 2)), 1.0);
        CHECK(f.fused.value() == Matrix{{1, 2}});
    }
    SUBCASE("random inputs stay on the simplex") {
        oracle::Gen g(13);
        for (int trial = 0; trial < 20; ++trial) {
            Tape t;
            const std::size_t views = static_cast<std::size_t>(g.integer(2, 4));
            std::vector<Var> hs;
            std::vector<Matrix> raw;
            for (std::size_t v = 0; v < views; ++v) hs.push_back(t.constant(raw.emplace_back(g.normal_matrix(5, 3))));
            const double tau = g.uniform(0.3, 2.0);
            const auto f = attention_fuse(hs, linear_vars(t, g.normal_matrix(3 * views, 4), g.normal_matrix(1, 4)),
                                          linear_vars(t, g.normal_matrix(4, views), g.normal_matrix(1, views)), tau);
            for (std::size_t i = 0; i < 5; ++i) {
                double s = 0.0;
                std::vector<double> rebuilt(3, 0.0);
                for (std::size_t v = 0; v < views; ++v) {
                    const double l = f.weights.value()(i, v);
                    CHECK(l > 0.0);
                    CHECK(l < 1.0);
                    s += l;
                    for (std::size_t c = 0; c < 3; ++c) rebuilt[c] += l * raw[v](i, c);
                }
                CHECK(std::abs(s - 1.0) < 1e-9);
                for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(rebuilt[c] - f.fused.value()(i, c)) < 1e-9);
            }
        }
    }
    SUBCASE("temperature must be positive") {
        Tape t;
        std::vector<Var> hs{t.constant(Matrix{{1}}), t.constant(Matrix{{1}})};
        CHECK_THROWS_AS(attention_fuse(hs, linear_vars(t, Matrix(2, 1), Matrix(1, 1)),
                                       linear_vars(t, Matrix(1, 2), Matrix(1, 2)), 0.0),
                        ConfigError);
    }
}

TEST_CASE("instance heads") {
    Tape t;
    const Matrix h{{1, 2}, {0, 3}};
    CHECK(project_instances(t.constant(h), linear_vars(t, Matrix(2, 2), Matrix(1, 2)),
                            linear_vars(t, Matrix(2, 3), Matrix(1, 3)))
              .value() == Matrix(2, 3));
    CHECK(project_instances(t.constant(h), linear_vars(t, Matrix::identity(2), Matrix(1, 2)),
                            linear_vars(t, Matrix::identity(2), Matrix(1, 2)))
              .value() == h);

    oracle::Gen g(17);
    const Matrix x = g.normal_matrix(5, 4), w1 = g.normal_matrix(4, 6), b1 = g.normal_matrix(1, 6),
                 w2 = g.normal_matrix(6, 3);
    auto f = [&](const Matrix& w) {
        Tape tp;
        return nk::sum(nk::square(project_instances(tp.constant(x), linear_vars(tp, w, b1),
                                                    linear_vars(tp, w2, Matrix(1, 3)))))
            .value()
            .item();
    };
    Tape tp;
    Var wv = tp.variable(w1);
    tp.backward(nk::sum(nk::square(project_instances(tp.constant(x), {wv, tp.variable(b1)},
                                                     linear_vars(tp, w2, Matrix(1, 3))))));
    CHECK(oracle::max_relative_error(f, w1, wv.grad()) < 1e-5);
}

TEST_CASE("shared classifier") {
    Tape t;
    const Matrix h = oracle::Gen(3).normal_matrix(6, 4);
    const Matrix uniform = classify(t.constant(h), linear_vars(t, Matrix(4, 3), Matrix(1, 3))).value();
    for (double v : uniform.data()) CHECK(v == doctest::Approx(1.0 / 3.0));

    oracle::Gen g(5);
    const auto cls = linear_vars(t, g.normal_matrix(4, 3), g.normal_matrix(1, 3));
    const Matrix y1 = classify(t.constant(h), cls).value();
    const Matrix y2 = classify(t.constant(h), cls).value();
    CHECK(y1 == y2);
    for (std::size_t i = 0; i < 6; ++i) {
        double s = 0.0;
        for (double v : y1.row(i)) s += v;
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("parameter initialization") {
    ModelConfig cfg;
    cfg.latent_dim = 8;
    cfg.embed_dim = 4;
    cfg.layers = 3;
    const std::vector<std::size_t> dims{5, 7};
    const ModelParams p = init_params(cfg, dims, 3, 11);
    CHECK(p.num_views() == 2);
    CHECK(p.num_clusters() == 3);
    REQUIRE(p.encoders[1].size() == 3);
    CHECK(p.encoders[1][0].rows() == 7);
    CHECK(p.encoders[1][2].rows() == 8);
    CHECK(p.fusion_hidden.weight.rows() == 16);
    CHECK(p.fusion_out.weight.cols() == 2);
    CHECK(p.head_out[0].weight.cols() == 4);
    for (double b : p.classifier.bias.data()) CHECK(b == 0.0);
    const double bound = 1.0 / std::sqrt(5.0);
    for (double w : p.encoders[0][0].data()) CHECK(std::abs(w) <= bound);

    const ModelParams again = init_params(cfg, dims, 3, 11);
    CHECK(again.encoders == p.encoders);
    CHECK_FALSE(init_params(cfg, dims, 3, 12).encoders == p.encoders);

    ModelConfig bad = cfg;
    bad.layers = 0;
    CHECK_THROWS_AS(init_params(bad, dims, 3, 1), ConfigError);
    CHECK_THROWS_AS(init_params(cfg, dims, 0, 1), ConfigError);
}

TEST_CASE("forward shapes and weight sharing") {
    auto fx = fixture::make_net(3, 8, 3, 16);
    Tape t;
    const auto vars = bind(t, fx.params);
    std::vector<Var> xs, ops;
    for (const auto& x : fx.inputs) xs.push_back(t.constant(x));
    for (const auto& a : fx.operators) ops.push_back(t.constant(a));
    const auto fp = forward(vars, xs, ops, fx.config);
    CHECK(fp.latents[0].rows() == 8);
    CHECK(fp.latents[1].cols() == 16);
    CHECK(fp.embeddings[0].cols() == 8);
    CHECK(fp.assignments[1].cols() == 3);
    CHECK(fp.fusion.weights.cols() == 2);
    CHECK(fp.fused_assignment.rows() == 8);
    CHECK(vars.flat.size() == fx.params.named().size());

    // perturbing the classifier moves every assignment; one encoder leaves the other view alone
    auto rerun = [&](const ModelParams& p) {
        Tape tp;
        const auto v = bind(tp, p);
        std::vector<Var> x2, o2;
        for (const auto& x : fx.inputs) x2.push_back(tp.constant(x));
        for (const auto& a : fx.operators) o2.push_back(tp.constant(a));
        const auto f = forward(v, x2, o2, fx.config);
        return std::vector<Matrix>{f.latents[0].value(), f.latents[1].value(), f.assignments[0].value(),
                                   f.assignments[1].value(), f.fused_assignment.value()};
    };
    const auto base = rerun(fx.params);
    ModelParams p = fx.params;
    p.classifier.weight(0, 0) += 0.5;
    const auto moved = rerun(p);
    CHECK_FALSE(moved[2] == base[2]);
    CHECK_FALSE(moved[3] == base[3]);
    CHECK_FALSE(moved[4] == base[4]);
    p = fx.params;
    for (double& w : p.encoders[0][1].data()) w += 0.1;
    const auto enc = rerun(p);
    CHECK_FALSE(enc[0] == base[0]);
    CHECK(enc[1] == base[1]);
}

TEST_CASE("full model gradients") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto fx = fixture::make_net(seed);
        CHECK(fixture::model_gradcheck(fx, fixture::LossKind::total) < 1e-4);
    }
}

TEST_CASE("checkpoint round trip") {
    const auto fx = fixture::make_net(2);
    const auto dir = std::filesystem::temp_directory_path() / "icmvc_ckpt_test";
    std::filesystem::remove_all(dir);
    save_checkpoint(dir, fx.params, "abc123");
    std::string hash;
    const auto values = load_checkpoint(dir, &hash);
    CHECK(hash == "abc123");
    CHECK(values.size() == fx.params.named().size());
    ModelParams restored = init_params(fx.config, std::vector<std::size_t>{5, 4}, 3, 999);
    restore(restored, values);
    const auto a = restored.named();
    const auto b = fx.params.named();
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(*a[k].second == *b[k].second);

    ModelParams wrong = init_params(fx.config, std::vector<std::size_t>{5, 4}, 4, 1);
    CHECK_THROWS_AS(restore(wrong, values), DataError);
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(load_checkpoint(dir), DataError);
}
