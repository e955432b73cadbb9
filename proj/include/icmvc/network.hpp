#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "icmvc/numkit/autodiff.hpp"
#include "icmvc/types.hpp"

namespace icmvc::network {

using numkit::Tape;
using numkit::Var;

enum class Activation { relu, identity };

struct ModelConfig {
    std::size_t latent_dim = 128;   // d, shared width of every view encoder
    std::size_t embed_dim = 64;     // d_z, contrastive head output
    std::size_t layers = 2;         // GCN layers per view
    std::size_t fusion_hidden = 0;  // 0 means latent_dim
    std::size_t head_hidden = 0;    // 0 means latent_dim
    double tau_att = 1.0;
    Activation activation = Activation::relu;

    std::size_t fusion_width() const { return fusion_hidden ? fusion_hidden : latent_dim; }
    std::size_t head_width() const { return head_hidden ? head_hidden : latent_dim; }
};

/// Affine map x * weight + bias, bias is 1 x out.
struct Linear {
    Matrix weight;
    Matrix bias;
};

struct ModelParams {
    /// encoders[v][m] is the weight of GCN layer m of view v.
    std::vector<std::vector<Matrix>> encoders;
    /// f_u: concatenated view latents -> hidden -> one score per view.
    Linear fusion_hidden;
    Linear fusion_out;
    /// Per-view instance-level contrastive heads.
    std::vector<Linear> head_hidden;
    std::vector<Linear> head_out;
    /// Pseudo-classifier shared by every view and the fused path.
    Linear classifier;

    std::size_t num_views() const { return encoders.size(); }
    std::size_t num_clusters() const { return classifier.weight.cols(); }

    /// Stable flat key -> matrix view, e.g. "encoder.1.layer.0.weight".
    std::vector<std::pair<std::string, Matrix*>> named();
    std::vector<std::pair<std::string, const Matrix*>> named() const;
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
ModelParams init_params(const ModelConfig& config, std::span<const std::size_t> input_dims,
                        std::size_t clusters, std::uint64_t seed);

struct LinearVars {
    Var weight;
    Var bias;
};

/// ModelParams registered as trainable leaves on one tape.
struct ModelVars {
    std::vector<std::vector<Var>> encoders;
    LinearVars fusion_hidden;
    LinearVars fusion_out;
    std::vector<LinearVars> head_hidden;
    std::vector<LinearVars> head_out;
    LinearVars classifier;
    /// Same order as ModelParams::named().
    std::vector<Var> flat;
};

ModelVars bind(Tape& tape, const ModelParams& params);

Var linear(Var x, const LinearVars& layer);

/// activation(op * h_in * w). The operator is a constant of the tape.
Var gcn_layer(Var h_in, Var op, Var w, Activation activation);

/// Stacked GCN layers. Layer 1 changes width and has no residual; later
/// layers add their input after the activation.
Var encode_view(Var x, Var op, std::span<const Var> weights, Activation activation);

struct Fusion {
    Var fused;                 // N x d
    Var weights;               // N x V attention coefficients
    std::vector<Var> lambdas;  // V columns of `weights`
};

/// Instance-level attention: scores = f_u([H^1..H^V]),
/// lambda = softmax(sigmoid(scores) / tau_att), H = sum_v lambda^v * H^v.
Fusion attention_fuse(std::span<const Var> latents, const LinearVars& hidden, const LinearVars& out,
                      double tau_att);

/// Two affine layers with a ReLU between them.
Var project_instances(Var h, const LinearVars& hidden, const LinearVars& out);

/// Row softmax of the shared affine classifier.
Var classify(Var h, const LinearVars& classifier);

struct ForwardPass {
    std::vector<Var> latents;      // H^v
    std::vector<Var> embeddings;   // Z^v
    std::vector<Var> assignments;  // Y^v
    Fusion fusion;                 // H and lambda
    Var fused_assignment;          // Y
};

ForwardPass forward(const ModelVars& vars, std::span<const Var> inputs, std::span<const Var> operators,
                    const ModelConfig& config);

void save_checkpoint(const std::filesystem::path& dir, const ModelParams& params, const std::string& config_hash);
/// Reads back the key -> matrix map written by save_checkpoint.
std::map<std::string, Matrix> load_checkpoint(const std::filesystem::path& dir, std::string* config_hash = nullptr);
/// Copies matrices into `params` by key; throws DataError on missing keys or shapes.
void restore(ModelParams& params, const std::map<std::string, Matrix>& values);

}  // namespace icmvc::network
