#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "atomize/atom.hpp"
#include "atomize/autodiff.hpp"
#include "atomize/matrix.hpp"

#include <json.hpp>

namespace atomize {

// Two linear layers. Layer 1 (2 -> 3) runs on each of the five features;
// hidden column 0 is both the pooling weight and the charge pre-activation,
// columns 1..2 are the feature embedding. Layer 2 (2 -> 2) maps the pooled
// point embedding to logits.
struct MlpParams {
    Matrix w1 = Matrix(2, 3);
    Matrix b1 = Matrix(1, 3);
    Matrix w2 = Matrix(2, 2);
    Matrix b2 = Matrix(1, 2);
    std::uint64_t seed = 0;

    bool all_finite() const;
    bool operator==(const MlpParams&) const = default;
};

enum class Pooling { raw, softmax };

struct ModelOptions {
    Pooling pooling = Pooling::raw;
    // Index of the hidden layer read as particle embeddings. This model has a
    // single hidden layer, so only 1 is accepted.
    int atomized_layer = 1;
    int p_norm = 2;

    void validate() const;
};

std::string_view pooling_name(Pooling p);
Pooling parse_pooling(std::string_view name);

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer.
MlpParams init_params(std::uint64_t seed);

struct ParamVars {
    Var w1, b1, w2, b2;
};

// Leaves (trainable) or constants, depending on `trainable`.
ParamVars bind(Graph& g, const MlpParams& params, bool trainable);

struct ForwardTrace {
    Var hidden;      // 5 x 3
    Var weights;     // 5 x 1
    Var embeddings;  // 5 x 2
    Var z;           // 1 x 2
    Var logits;      // 1 x 2
};

// `point` must be 5 x 2.
ForwardTrace forward(const ParamVars& params, Var point, const ModelOptions& options = {});
// Atom whose charges come from hidden column 0 and positions from 1..2.
Atom atom_view(const ForwardTrace& trace, const ModelOptions& options = {});

// -log softmax(logits)[label], log-sum-exp stabilized. logits is 1 x 2.
Var cross_entropy(Var logits, int label);

// Graph-free conveniences for evaluation.
struct PointOutputs {
    Matrix z;
    Matrix logits;
    int prediction = 0;
};
PointOutputs predict(const MlpParams& params, const Matrix& point, const ModelOptions& options = {});

// Checkpoint: {w1, b1, w2, b2, seed, config_hash, ...extra}.
nlohmann::json params_to_json(const MlpParams& params);
MlpParams params_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace atomize
