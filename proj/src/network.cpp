#include "icmvc/network.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "icmvc/dataio.hpp"
#include "icmvc/error.hpp"
#include "icmvc/rng.hpp"

namespace icmvc::network {

namespace nk = icmvc::numkit;

namespace {

Matrix uniform_init(std::size_t fan_in, std::size_t fan_out, SplitMix64& rng) {
    Matrix w(fan_in, fan_out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : w.data()) x = rng.uniform(-bound, bound);
    return w;
}

Linear make_linear(std::size_t in, std::size_t out, SplitMix64& rng) {
    return Linear{uniform_init(in, out, rng), Matrix(1, out)};
}

template <typename Params, typename Out>
void collect(Params& p, Out& out) {
    for (std::size_t v = 0; v < p.encoders.size(); ++v)
        for (std::size_t m = 0; m < p.encoders[v].size(); ++m)
            out.emplace_back("encoder." + std::to_string(v) + ".layer." + std::to_string(m) + ".weight",
                             &p.encoders[v][m]);
    out.emplace_back("fusion.hidden.weight", &p.fusion_hidden.weight);
    out.emplace_back("fusion.hidden.bias", &p.fusion_hidden.bias);
    out.emplace_back("fusion.out.weight", &p.fusion_out.weight);
    out.emplace_back("fusion.out.bias", &p.fusion_out.bias);
    for (std::size_t v = 0; v < p.head_hidden.size(); ++v) {
        const std::string prefix = "head." + std::to_string(v);
        out.emplace_back(prefix + ".hidden.weight", &p.head_hidden[v].weight);
        out.emplace_back(prefix + ".hidden.bias", &p.head_hidden[v].bias);
        out.emplace_back(prefix + ".out.weight", &p.head_out[v].weight);
        out.emplace_back(prefix + ".out.bias", &p.head_out[v].bias);
    }
    out.emplace_back("classifier.weight", &p.classifier.weight);
    out.emplace_back("classifier.bias", &p.classifier.bias);
}

}  // namespace

std::vector<std::pair<std::string, Matrix*>> ModelParams::named() {
    std::vector<std::pair<std::string, Matrix*>> out;
    collect(*this, out);
    return out;
}

std::vector<std::pair<std::string, const Matrix*>> ModelParams::named() const {
    std::vector<std::pair<std::string, const Matrix*>> out;
    collect(*this, out);
    return out;
}

ModelParams init_params(const ModelConfig& config, std::span<const std::size_t> input_dims,
                        std::size_t clusters, std::uint64_t seed) {
    if (config.layers < 1) throw ConfigError("network: at least one GCN layer is required");
    if (input_dims.empty()) throw ConfigError("network: no views");
    if (clusters < 1) throw ConfigError("network: cluster count must be positive");
    if (config.latent_dim == 0 || config.embed_dim == 0) throw ConfigError("network: widths must be positive");
    if (!(config.tau_att > 0.0)) throw ConfigError("network: tau_att must be positive");

    SplitMix64 rng(seed);
    const std::size_t views = input_dims.size();
    const std::size_t d = config.latent_dim;
    ModelParams p;
    for (std::size_t v = 0; v < views; ++v) {
        std::vector<Matrix> layers;
        layers.push_back(uniform_init(input_dims[v], d, rng));
        for (std::size_t m = 1; m < config.layers; ++m) layers.push_back(uniform_init(d, d, rng));
        p.encoders.push_back(std::move(layers));
    }
    p.fusion_hidden = make_linear(views * d, config.fusion_width(), rng);
    p.fusion_out = make_linear(config.fusion_width(), views, rng);
    for (std::size_t v = 0; v < views; ++v) {
        p.head_hidden.push_back(make_linear(d, config.head_width(), rng));
        p.head_out.push_back(make_linear(config.head_width(), config.embed_dim, rng));
    }
    p.classifier = make_linear(d, clusters, rng);
    return p;
}

ModelVars bind(Tape& tape, const ModelParams& params) {
    ModelVars vars;
    auto leaf = [&](const Matrix& m) {
        Var v = tape.variable(m);
        vars.flat.push_back(v);
        return v;
    };
    auto leaf_linear = [&](const Linear& l) {
        LinearVars lv;
        lv.weight = leaf(l.weight);
        lv.bias = leaf(l.bias);
        return lv;
    };
    // Registration order must match ModelParams::named().
    for (const auto& enc : params.encoders) {
        std::vector<Var> layers;
        for (const auto& w : enc) layers.push_back(leaf(w));
        vars.encoders.push_back(std::move(layers));
    }
    vars.fusion_hidden = leaf_linear(params.fusion_hidden);
    vars.fusion_out = leaf_linear(params.fusion_out);
    for (std::size_t v = 0; v < params.head_hidden.size(); ++v) {
        vars.head_hidden.push_back(leaf_linear(params.head_hidden[v]));
        vars.head_out.push_back(leaf_linear(params.head_out[v]));
    }
    vars.classifier = leaf_linear(params.classifier);
    return vars;
}

Var linear(Var x, const LinearVars& layer) { return nk::add(nk::matmul(x, layer.weight), layer.bias); }

Var gcn_layer(Var h_in, Var op, Var w, Activation activation) {
    if (op.rows() != op.cols() || op.cols() != h_in.rows()) {
        throw DimensionError("gcn_layer: operator " + op.value().shape_string() + " vs features " +
                             h_in.value().shape_string());
    }
    if (h_in.cols() != w.rows()) {
        throw DimensionError("gcn_layer: features " + h_in.value().shape_string() + " vs weight " +
                             w.value().shape_string());
    }
    // Same product either way; pick the association with fewer flops.
    const Var pre = h_in.cols() <= w.cols() ? nk::matmul(nk::matmul(op, h_in), w)
                                            : nk::matmul(op, nk::matmul(h_in, w));
    return activation == Activation::relu ? nk::relu(pre) : pre;
}

Var encode_view(Var x, Var op, std::span<const Var> weights, Activation activation) {
    if (weights.empty()) throw ConfigError("encode_view: at least one layer is required");
    Var h = gcn_layer(x, op, weights[0], activation);
    for (std::size_t m = 1; m < weights.size(); ++m) {
        Var next = gcn_layer(h, op, weights[m], activation);
        h = next.cols() == h.cols() ? nk::add(next, h) : next;
    }
    return h;
}

Fusion attention_fuse(std::span<const Var> latents, const LinearVars& hidden, const LinearVars& out,
                      double tau_att) {
    if (!(tau_att > 0.0)) throw ConfigError("attention_fuse: tau_att must be positive");
    if (latents.empty()) throw DimensionError("attention_fuse: no views");
    for (const Var& h : latents) {
        if (h.rows() != latents[0].rows() || h.cols() != latents[0].cols()) {
            throw DimensionError("attention_fuse: view latents differ in shape");
        }
    }
    const Var stacked = nk::concat_cols(latents);
    const Var scores = linear(nk::relu(linear(stacked, hidden)), out);
    if (scores.cols() != latents.size()) throw DimensionError("attention_fuse: score width != view count");
    Fusion f;
    f.weights = nk::row_softmax(nk::sigmoid(scores), tau_att);
    for (std::size_t v = 0; v < latents.size(); ++v) {
        f.lambdas.push_back(nk::slice_cols(f.weights, v, 1));
        const Var term = nk::mul(f.lambdas.back(), latents[v]);
        f.fused = v == 0 ? term : nk::add(f.fused, term);
    }
    return f;
}

Var project_instances(Var h, const LinearVars& hidden, const LinearVars& out) {
    return linear(nk::relu(linear(h, hidden)), out);
}

Var classify(Var h, const LinearVars& classifier) { return nk::row_softmax(linear(h, classifier), 1.0); }

ForwardPass forward(const ModelVars& vars, std::span<const Var> inputs, std::span<const Var> operators,
                    const ModelConfig& config) {
    const std::size_t views = vars.encoders.size();
    if (inputs.size() != views || operators.size() != views) {
        throw DimensionError("forward: expected " + std::to_string(views) + " views");
    }
    ForwardPass fp;
    for (std::size_t v = 0; v < views; ++v) {
        fp.latents.push_back(encode_view(inputs[v], operators[v], vars.encoders[v], config.activation));
        fp.embeddings.push_back(project_instances(fp.latents[v], vars.head_hidden[v], vars.head_out[v]));
        fp.assignments.push_back(classify(fp.latents[v], vars.classifier));
    }
    fp.fusion = attention_fuse(fp.latents, vars.fusion_hidden, vars.fusion_out, config.tau_att);
    fp.fused_assignment = classify(fp.fusion.fused, vars.classifier);
    return fp;
}

void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params, const std::string& config_hash) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["config_hash"] = config_hash;
    manifest["format"] = "csv-shortest-roundtrip";
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [key, m] : params.named()) {
        const std::string file = key + ".csv";
        dataio::write_matrix_csv(dir / file, *m);
        entries.push_back({{"key", key}, {"file", file}, {"rows", m->rows()}, {"cols", m->cols()}});
    }
    manifest["parameters"] = entries;
    dataio::write_text_atomic(dir / "checkpoint.json", manifest.dump(2) + "\n");
}

std::map<std::string, Matrix> load_checkpoint(const std::filesystem::path& dir, std::string* config_hash) {
    std::ifstream in(dir / "checkpoint.json");
    if (!in) throw DataError("no checkpoint.json in " + dir.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint.json: " + std::string(e.what()));
    }
    if (config_hash) *config_hash = manifest.value("config_hash", "");
    std::map<std::string, Matrix> out;
    for (const auto& e : manifest.at("parameters")) {
        Matrix m = dataio::read_matrix_csv(dir / e.at("file").get<std::string>());
        if (m.rows() != e.at("rows").get<std::size_t>() || m.cols() != e.at("cols").get<std::size_t>()) {
            throw DataError("checkpoint: shape of " + e.at("key").get<std::string>() + " disagrees with manifest");
        }
        out.emplace(e.at("key").get<std::string>(), std::move(m));
    }
    return out;
}

void restore(ModelParams& params, const std::map<std::string, Matrix>& values) {
    for (auto& [key, m] : params.named()) {
        const auto it = values.find(key);
        if (it == values.end()) throw DataError("checkpoint is missing " + key);
        if (!it->second.same_shape(*m)) throw DataError("checkpoint shape mismatch for " + key);
        *m = it->second;
    }
}

}  // namespace icmvc::network
