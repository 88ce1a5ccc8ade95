#include "atomize/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "atomize/errors.hpp"
#include "atomize/rng.hpp"

namespace atomize {

bool MlpParams::all_finite() const {
    return w1.all_finite() && b1.all_finite() && w2.all_finite() && b2.all_finite();
}

void ModelOptions::validate() const {
    if (atomized_layer != 1) {
        throw ConfigError("atomized layer must be 1 for the two-layer model, got " +
                          std::to_string(atomized_layer));
    }
    if (p_norm != 1 && p_norm != 2) {
        throw ConfigError("p_norm must be 1 or 2");
    }
}

std::string_view pooling_name(Pooling p) { return p == Pooling::raw ? "raw" : "softmax"; }

Pooling parse_pooling(std::string_view name) {
    if (name == "raw") return Pooling::raw;
    if (name == "softmax") return Pooling::softmax;
    throw ConfigError("unknown pooling '" + std::string(name) + "'; expected raw or softmax");
}

MlpParams init_params(std::uint64_t seed) {
    MlpParams p;
    p.seed = seed;
    Stream stream = Stream::derive(seed, "init");
    auto fill = [&stream](Matrix& m, double bound) {
        for (double& v : m.values()) v = (2.0 * stream.uniform() - 1.0) * bound;
    };
    const double bound1 = 1.0 / std::sqrt(2.0);  // fan_in of both layers is 2
    const double bound2 = 1.0 / std::sqrt(2.0);
    fill(p.w1, bound1);
    fill(p.b1, bound1);
    fill(p.w2, bound2);
    fill(p.b2, bound2);
    return p;
}

ParamVars bind(Graph& g, const MlpParams& params, bool trainable) {
    auto make = [&](const Matrix& m, std::string_view name) {
        return trainable ? g.leaf(m, name) : g.constant(m);
    };
    return ParamVars{make(params.w1, "w1"), make(params.b1, "b1"), make(params.w2, "w2"),
                     make(params.b2, "b2")};
}

namespace {

// Softmax down a column vector.
Var softmax_column(Var a) {
    const Matrix& x = a.value();
    const double top = *std::max_element(x.values().begin(), x.values().end());
    Matrix out(x.rows(), 1);
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        out[i] = std::exp(x[i] - top);
        total += out[i];
    }
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] /= total;
    const auto slot = static_cast<std::uint32_t>(a.graph->size());
    return a.graph->record("softmax", std::move(out), {a},
                           [ai = a.id, slot](Graph& g, const Matrix& go) {
                               const Matrix& y = g.value(Var{&g, slot});
                               double dot = 0.0;
                               for (std::size_t i = 0; i < y.size(); ++i) dot += go[i] * y[i];
                               Matrix d(y.rows(), 1);
                               for (std::size_t i = 0; i < y.size(); ++i) d[i] = y[i] * (go[i] - dot);
                               g.accumulate(Var{&g, ai}, d);
                           });
}

}  // namespace

ForwardTrace forward(const ParamVars& params, Var point, const ModelOptions& options) {
    if (point.rows() != 5 || point.cols() != 2) {
        throw DimensionError("forward: point must be 5x2, got " + point.value().shape_string());
    }
    Graph& g = *point.graph;
    ForwardTrace t;
    Var ones = g.constant(Matrix(point.rows(), 1, 1.0));
    t.hidden = add(matmul(point, params.w1), matmul(ones, params.b1));
    t.weights = slice(t.hidden, 0, 5, 0, 1);
    t.embeddings = slice(t.hidden, 0, 5, 1, 2);
    Var pool = options.pooling == Pooling::softmax ? softmax_column(t.weights) : t.weights;
    t.z = matmul(transpose(pool), t.embeddings);
    t.logits = add(matmul(t.z, params.w2), params.b2);
    return t;
}

Atom atom_view(const ForwardTrace& trace, const ModelOptions& options) {
    return make_atom(trace.hidden, options.p_norm);
}

Var cross_entropy(Var logits, int label) {
    const Matrix& x = logits.value();
    if (x.size() != 2) {
        throw DimensionError("cross_entropy: expected 2 logits, got " + x.shape_string());
    }
    if (label != 0 && label != 1) {
        throw std::invalid_argument("cross_entropy: label must be 0 or 1");
    }
    const double top = std::max(x[0], x[1]);
    const double lse = top + std::log(std::exp(x[0] - top) + std::exp(x[1] - top));
    const auto l = static_cast<std::size_t>(label);
    return logits.graph->record("cross_entropy", Matrix::scalar(lse - x[l]), {logits},
                                [li = logits.id, l, lse](Graph& g, const Matrix& go) {
                                    const Matrix& x = g.value(Var{&g, li});
                                    Matrix d(x.rows(), x.cols());
                                    for (std::size_t i = 0; i < x.size(); ++i) {
                                        d[i] = go[0] * (std::exp(x[i] - lse) - (i == l ? 1.0 : 0.0));
                                    }
                                    g.accumulate(Var{&g, li}, d);
                                });
}

PointOutputs predict(const MlpParams& params, const Matrix& point, const ModelOptions& options) {
    Graph g;
    auto vars = bind(g, params, false);
    auto trace = forward(vars, g.constant(point), options);
    PointOutputs out;
    out.z = trace.z.value();
    out.logits = trace.logits.value();
    out.prediction = out.logits[1] > out.logits[0] ? 1 : 0;
    return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        throw ConfigError("expected a nested array for a matrix");
    }
    Matrix m(j.size(), j[0].size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (j[i].size() != m.cols()) throw ConfigError("ragged matrix in JSON");
        for (std::size_t c = 0; c < m.cols(); ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

namespace {

nlohmann::json row_to_json(const Matrix& m) {
    nlohmann::json out = nlohmann::json::array();
    for (double v : m.values()) out.push_back(v);
    return out;
}

Matrix row_from_json(const nlohmann::json& j, std::size_t expected, const char* name) {
    if (!j.is_array() || j.size() != expected) {
        throw ConfigError(std::string("checkpoint field ") + name + " must have " +
                          std::to_string(expected) + " entries");
    }
    Matrix m(1, expected);
    for (std::size_t i = 0; i < expected; ++i) m[i] = j[i].get<double>();
    return m;
}

void expect_shape(const Matrix& m, std::size_t r, std::size_t c, const char* name) {
    if (m.rows() != r || m.cols() != c) {
        throw ConfigError(std::string("checkpoint field ") + name + " has shape " + m.shape_string());
    }
}

}  // namespace

nlohmann::json params_to_json(const MlpParams& params) {
    nlohmann::json j;
    j["w1"] = matrix_to_json(params.w1);
    j["b1"] = row_to_json(params.b1);
    j["w2"] = matrix_to_json(params.w2);
    j["b2"] = row_to_json(params.b2);
    j["seed"] = params.seed;
    return j;
}

MlpParams params_from_json(const nlohmann::json& j) {
    MlpParams p;
    try {
        p.w1 = matrix_from_json(j.at("w1"));
        p.b1 = row_from_json(j.at("b1"), 3, "b1");
        p.w2 = matrix_from_json(j.at("w2"));
        p.b2 = row_from_json(j.at("b2"), 2, "b2");
        p.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed checkpoint: ") + e.what());
    }
    expect_shape(p.w1, 2, 3, "w1");
    expect_shape(p.w2, 2, 2, "w2");
    if (!p.all_finite()) {
        throw ConfigError("checkpoint contains non-finite parameters");
    }
    return p;
}

}  // namespace atomize
