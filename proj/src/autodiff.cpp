#include "atomize/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "atomize/errors.hpp"

namespace atomize {

const Matrix& Var::value() const { return graph->value(*this); }
const Matrix& Var::grad() const { return graph->grad(*this); }

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

Var Graph::push(std::string_view op, Matrix value, bool needs_grad, BackwardFn backward) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    if (!nonfinite_node_ && !value.all_finite()) {
        nonfinite_node_ = std::string(op) + "#" + std::to_string(id);
    }
    nodes_.push_back(Node{op, std::move(value), Matrix{}, needs_grad ? std::move(backward) : nullptr,
                          needs_grad});
    return Var{this, id};
}

Var Graph::leaf(Matrix value, std::string_view name) {
    return push(name, std::move(value), true, nullptr);
}

Var Graph::constant(Matrix value) { return push("constant", std::move(value), false, nullptr); }

Var Graph::record(std::string_view op, Matrix value, std::initializer_list<Var> inputs,
                  BackwardFn backward) {
    return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
}

Var Graph::record(std::string_view op, Matrix value, std::span<const Var> inputs,
                  BackwardFn backward) {
    bool needs = false;
    for (const Var& in : inputs) {
        if (in.graph != this) {
            throw std::logic_error("Graph::record: operand from a different graph");
        }
        needs = needs || nodes_[in.id].needs_grad;
    }
    return push(op, std::move(value), needs, std::move(backward));
}

const Matrix& Graph::grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.empty() && !n.value.empty()) {
        // Untouched by backward: the gradient is zero. Materialize lazily.
        auto& mut = const_cast<Node&>(n);
        mut.grad = Matrix(n.value.rows(), n.value.cols());
    }
    return n.grad;
}

void Graph::accumulate(Var target, const Matrix& delta) {
    Node& n = nodes_[target.id];
    if (!n.needs_grad) {
        return;
    }
    if (!delta.same_shape(n.value)) {
        throw DimensionError("Graph::accumulate: gradient " + delta.shape_string() +
                             " for value " + n.value.shape_string());
    }
    if (n.grad.empty()) {
        n.grad = delta;
        return;
    }
    for (std::size_t i = 0; i < delta.size(); ++i) {
        n.grad[i] += delta[i];
    }
}

void Graph::accumulate_at(Var target, std::size_t r, std::size_t c, double delta) {
    Node& n = nodes_[target.id];
    if (!n.needs_grad) {
        return;
    }
    if (n.grad.empty()) {
        n.grad = Matrix(n.value.rows(), n.value.cols());
    }
    n.grad(r, c) += delta;
}

void Graph::backward(Var root) {
    if (backward_done_) {
        throw std::logic_error("Graph::backward called twice without zero_grad()");
    }
    if (root.graph != this) {
        throw std::logic_error("Graph::backward: root from a different graph");
    }
    const Matrix& rv = nodes_[root.id].value;
    if (rv.rows() != 1 || rv.cols() != 1) {
        throw DimensionError("Graph::backward: root must be 1x1, got " + rv.shape_string());
    }
    backward_done_ = true;
    if (!nodes_[root.id].needs_grad) {
        return;
    }
    accumulate(root, Matrix::scalar(1.0));
    for (std::size_t i = root.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.empty() || !n.backward) {
            continue;
        }
        n.backward(*this, n.grad);
    }
}

void Graph::zero_grad() {
    for (Node& n : nodes_) {
        n.grad = Matrix{};
    }
    backward_done_ = false;
}

void Graph::clear() {
    nodes_.clear();
    backward_done_ = false;
    kink_node_.reset();
    nonfinite_node_.reset();
}

void Graph::note_kink(std::string_view op) {
    if (!kink_node_) {
        kink_node_ = std::string(op) + "#" + std::to_string(nodes_.size());
    }
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

namespace {

void require_same_shape(const char* op, Var a, Var b) {
    if (a.graph != b.graph) {
        throw std::logic_error(std::string(op) + ": operands from different graphs");
    }
    if (!a.value().same_shape(b.value())) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.value().shape_string() +
                             " vs " + b.value().shape_string());
    }
}

template <typename F>
Matrix map(const Matrix& m, F f) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) {
        out[i] = f(m[i]);
    }
    return out;
}

// Gradient of a unary elementwise op: delta_i = g_i * local(x_i, y_i).
template <typename F>
Graph::BackwardFn unary_backward(Var a, Var out_slot, F local) {
    return [ai = a.id, oi = out_slot.id, local](Graph& g, const Matrix& go) {
        const Matrix& x = g.value(Var{&g, ai});
        const Matrix& y = g.value(Var{&g, oi});
        Matrix d(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.size(); ++i) {
            d[i] = go[i] * local(x[i], y[i]);
        }
        g.accumulate(Var{&g, ai}, d);
    };
}

// The id the next recorded node will receive; lets a backward closure refer
// to its own output value.
Var next_slot(Var a) { return Var{a.graph, static_cast<std::uint32_t>(a.graph->size())}; }

}  // namespace

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
    const Matrix& x = a.value();
    const Matrix& y = b.value();
    if (a.graph != b.graph) {
        throw std::logic_error("matmul: operands from different graphs");
    }
    if (x.cols() != y.rows()) {
        throw DimensionError("matmul: inner dimensions differ " + x.shape_string() + " * " +
                             y.shape_string());
    }
    const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
    Matrix out(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double xv = x(i, p);
            for (std::size_t j = 0; j < n; ++j) {
                out(i, j) += xv * y(p, j);
            }
        }
    }
    return a.graph->record("matmul", std::move(out), {a, b},
                           [ai = a.id, bi = b.id](Graph& g, const Matrix& go) {
                               Var av{&g, ai}, bv{&g, bi};
                               const Matrix& x = g.value(av);
                               const Matrix& y = g.value(bv);
                               const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
                               if (g.needs_grad(av)) {
                                   Matrix da(m, k);  // g * y^T
                                   for (std::size_t i = 0; i < m; ++i)
                                       for (std::size_t p = 0; p < k; ++p) {
                                           double s = 0.0;
                                           for (std::size_t j = 0; j < n; ++j) s += go(i, j) * y(p, j);
                                           da(i, p) = s;
                                       }
                                   g.accumulate(av, da);
                               }
                               if (g.needs_grad(bv)) {
                                   Matrix db(k, n);  // x^T * g
                                   for (std::size_t i = 0; i < m; ++i)
                                       for (std::size_t p = 0; p < k; ++p) {
                                           const double xv = x(i, p);
                                           for (std::size_t j = 0; j < n; ++j) db(p, j) += xv * go(i, j);
                                       }
                                   g.accumulate(bv, db);
                               }
                           });
}

Var transpose(Var a) {
    const Matrix& x = a.value();
    Matrix out(x.cols(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
    return a.graph->record("transpose", std::move(out), {a}, [ai = a.id](Graph& g, const Matrix& go) {
        Matrix d(go.cols(), go.rows());
        for (std::size_t i = 0; i < go.rows(); ++i)
            for (std::size_t j = 0; j < go.cols(); ++j) d(j, i) = go(i, j);
        g.accumulate(Var{&g, ai}, d);
    });
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

Var add(Var a, Var b) {
    require_same_shape("add", a, b);
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
    return a.graph->record("add", std::move(out), {a, b},
                           [ai = a.id, bi = b.id](Graph& g, const Matrix& go) {
                               g.accumulate(Var{&g, ai}, go);
                               g.accumulate(Var{&g, bi}, go);
                           });
}

Var sub(Var a, Var b) {
    require_same_shape("sub", a, b);
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
    return a.graph->record("sub", std::move(out), {a, b},
                           [ai = a.id, bi = b.id](Graph& g, const Matrix& go) {
                               g.accumulate(Var{&g, ai}, go);
                               g.accumulate(Var{&g, bi}, map(go, [](double v) { return -v; }));
                           });
}

Var mul(Var a, Var b) {
    require_same_shape("mul", a, b);
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    return a.graph->record("mul", std::move(out), {a, b},
                           [ai = a.id, bi = b.id](Graph& g, const Matrix& go) {
                               Var av{&g, ai}, bv{&g, bi};
                               const Matrix& x = g.value(av);
                               const Matrix& y = g.value(bv);
                               Matrix da(x.rows(), x.cols()), db(x.rows(), x.cols());
                               for (std::size_t i = 0; i < x.size(); ++i) {
                                   da[i] = go[i] * y[i];
                                   db[i] = go[i] * x[i];
                               }
                               g.accumulate(av, da);
                               g.accumulate(bv, db);
                           });
}

Var neg(Var a) {
    return a.graph->record("neg", map(a.value(), [](double v) { return -v; }), {a},
                           [ai = a.id](Graph& g, const Matrix& go) {
                               g.accumulate(Var{&g, ai}, map(go, [](double v) { return -v; }));
                           });
}

Var sigmoid(Var a) {
    auto slot = next_slot(a);
    Matrix out = map(a.value(), [](double v) {
        // Branching keeps exp() from overflowing for large |v|.
        if (v >= 0.0) {
            return 1.0 / (1.0 + std::exp(-v));
        }
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
    return a.graph->record("sigmoid", std::move(out), {a},
                           unary_backward(a, slot, [](double, double y) { return y * (1.0 - y); }));
}

Var max_scalar(Var a, double s) {
    const double radius = a.graph->kink_radius();
    if (radius > 0.0) {
        for (double v : a.value().values()) {
            if (std::abs(v - s) < radius) {
                a.graph->note_kink("max_scalar");
                break;
            }
        }
    }
    auto slot = next_slot(a);
    return a.graph->record("max_scalar", map(a.value(), [s](double v) { return v > s ? v : s; }),
                           {a}, unary_backward(a, slot, [s](double x, double) {
                               return x > s ? 1.0 : 0.0;
                           }));
}

Var square(Var a) {
    auto slot = next_slot(a);
    return a.graph->record("square", map(a.value(), [](double v) { return v * v; }), {a},
                           unary_backward(a, slot, [](double x, double) { return 2.0 * x; }));
}

Var sqrt(Var a) {
    for (double v : a.value().values()) {
        if (!(v >= 0.0)) {
            throw DomainError("sqrt: negative operand " + std::to_string(v));
        }
    }
    auto slot = next_slot(a);
    return a.graph->record("sqrt", map(a.value(), [](double v) { return std::sqrt(v); }), {a},
                           unary_backward(a, slot, [](double, double y) {
                               return 0.5 / (y > 0.0 ? y : std::sqrt(kNormEpsilon));
                           }));
}

Var reciprocal(Var a) {
    for (double v : a.value().values()) {
        if (v == 0.0) {
            throw DomainError("reciprocal: zero operand");
        }
    }
    auto slot = next_slot(a);
    return a.graph->record("reciprocal", map(a.value(), [](double v) { return 1.0 / v; }), {a},
                           unary_backward(a, slot, [](double, double y) { return -y * y; }));
}

Var scale(Var a, double s) {
    return a.graph->record("scale", map(a.value(), [s](double v) { return v * s; }), {a},
                           [ai = a.id, s](Graph& g, const Matrix& go) {
                               g.accumulate(Var{&g, ai}, map(go, [s](double v) { return v * s; }));
                           });
}

Var add_scalar(Var a, double s) {
    return a.graph->record("add_scalar", map(a.value(), [s](double v) { return v + s; }), {a},
                           [ai = a.id](Graph& g, const Matrix& go) { g.accumulate(Var{&g, ai}, go); });
}

Var add_n(std::span<const Var> terms) {
    if (terms.empty()) {
        throw DimensionError("add_n: no operands");
    }
    Matrix out = terms[0].value();
    for (std::size_t t = 1; t < terms.size(); ++t) {
        require_same_shape("add_n", terms[0], terms[t]);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += terms[t].value()[i];
    }
    std::vector<std::uint32_t> ids;
    ids.reserve(terms.size());
    for (const Var& t : terms) ids.push_back(t.id);
    return terms[0].graph->record("add_n", std::move(out), terms,
                                  [ids = std::move(ids)](Graph& g, const Matrix& go) {
                                      for (auto id : ids) g.accumulate(Var{&g, id}, go);
                                  });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

namespace {

std::pair<std::size_t, std::size_t> reduced_shape(const Matrix& x, Axis axis, const char* op) {
    if (x.empty()) {
        throw DimensionError(std::string(op) + ": reduction over an empty axis");
    }
    switch (axis) {
        case Axis::over_rows: return {1, x.cols()};
        case Axis::over_cols: return {x.rows(), 1};
        case Axis::all: break;
    }
    return {1, 1};
}

// Output slot that element (i, j) of the input reduces into.
std::size_t reduced_index(std::size_t i, std::size_t j, std::size_t cols, Axis axis) {
    switch (axis) {
        case Axis::over_rows: return j;
        case Axis::over_cols: return i;
        case Axis::all: break;
    }
    (void)cols;
    return 0;
}

// Generic reduction: out[k] = post(sum over members of term(x)); gradient
// via dterm(x, out) * go[k].
template <typename Term, typename Post, typename DTerm>
Var reduce(const char* op, Var a, Axis axis, Term term, Post post, DTerm dterm) {
    const Matrix& x = a.value();
    auto [r, c] = reduced_shape(x, axis, op);
    Matrix out(r, c);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out[reduced_index(i, j, x.cols(), axis)] += term(x(i, j));
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = post(out[k]);
    auto slot = next_slot(a);
    return a.graph->record(op, std::move(out), {a},
                           [ai = a.id, oi = slot.id, axis, dterm](Graph& g, const Matrix& go) {
                               const Matrix& x = g.value(Var{&g, ai});
                               const Matrix& y = g.value(Var{&g, oi});
                               Matrix d(x.rows(), x.cols());
                               for (std::size_t i = 0; i < x.rows(); ++i)
                                   for (std::size_t j = 0; j < x.cols(); ++j) {
                                       const std::size_t k = reduced_index(i, j, x.cols(), axis);
                                       d(i, j) = go[k] * dterm(x(i, j), y[k]);
                                   }
                               g.accumulate(Var{&g, ai}, d);
                           });
}

std::size_t reduced_count(const Matrix& x, Axis axis) {
    switch (axis) {
        case Axis::over_rows: return x.rows();
        case Axis::over_cols: return x.cols();
        case Axis::all: break;
    }
    return x.size();
}

}  // namespace

Var sum(Var a, Axis axis) {
    return reduce(
        "sum", a, axis, [](double v) { return v; }, [](double s) { return s; },
        [](double, double) { return 1.0; });
}

Var mean(Var a, Axis axis) {
    const Matrix& x = a.value();
    if (x.empty()) {
        throw DimensionError("mean: reduction over an empty axis");
    }
    const double inv = 1.0 / static_cast<double>(reduced_count(x, axis));
    return reduce(
        "mean", a, axis, [](double v) { return v; }, [inv](double s) { return s * inv; },
        [inv](double, double) { return inv; });
}

Var pnorm(Var a, int p, Axis axis) {
    const double radius = a.graph->kink_radius();
    if (p == 1) {
        if (radius > 0.0) {
            for (double v : a.value().values()) {
                if (std::abs(v) < radius) {
                    a.graph->note_kink("pnorm1");
                    break;
                }
            }
        }
        return reduce(
            "pnorm1", a, axis, [](double v) { return std::abs(v); }, [](double s) { return s; },
            [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
    }
    if (p == 2) {
        Var out = reduce(
            "pnorm2", a, axis, [](double v) { return v * v; },
            [](double s) { return std::sqrt(s + kNormEpsilon); },
            [](double x, double y) { return x / y; });
        if (radius > 0.0) {
            for (double v : out.value().values()) {
                if (v < radius) {
                    a.graph->note_kink("pnorm2");
                    break;
                }
            }
        }
        return out;
    }
    throw ConfigError("pnorm: p must be 1 or 2, got " + std::to_string(p));
}

// ---------------------------------------------------------------------------
// Indexing
// ---------------------------------------------------------------------------

Var slice(Var a, std::size_t r0, std::size_t rows, std::size_t c0, std::size_t cols) {
    const Matrix& x = a.value();
    if (r0 + rows > x.rows() || c0 + cols > x.cols()) {
        throw DimensionError("slice: block out of range for " + x.shape_string());
    }
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out(i, j) = x(r0 + i, c0 + j);
    return a.graph->record("slice", std::move(out), {a},
                           [ai = a.id, r0, c0](Graph& g, const Matrix& go) {
                               Var av{&g, ai};
                               for (std::size_t i = 0; i < go.rows(); ++i)
                                   for (std::size_t j = 0; j < go.cols(); ++j)
                                       g.accumulate_at(av, r0 + i, c0 + j, go(i, j));
                           });
}

Var element(Var a, std::size_t r, std::size_t c) { return slice(a, r, 1, c, 1); }

Var operator+(Var a, Var b) { return add(a, b); }
Var operator-(Var a, Var b) { return sub(a, b); }
Var operator*(Var a, Var b) { return mul(a, b); }
Var operator-(Var a) { return neg(a); }

}  // namespace atomize
