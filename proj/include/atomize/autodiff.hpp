#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "atomize/matrix.hpp"

namespace atomize {

// Added under every 2-norm square root so the gradient stays finite at the
// zero vector. Value error is at most sqrt(kNormEpsilon) = 1e-6 absolute.
inline constexpr double kNormEpsilon = 1e-12;

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while its Graph lives and
// has not been cleared.
struct Var {
    Graph* graph = nullptr;
    std::uint32_t id = 0;

    const Matrix& value() const;
    const Matrix& grad() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    double item() const { return value().item(); }
};

// Reduction direction. over_rows collapses rows (result 1 x cols), over_cols
// collapses columns (result rows x 1), all yields 1 x 1.
enum class Axis { over_rows, over_cols, all };

// Reverse-mode tape. Nodes are appended in evaluation order, which is a
// topological order; backward() walks it in exact reverse.
//
// A Graph is not thread-safe. Independent graphs share no state.
class Graph {
public:
    // Called during backward with this node's incoming gradient. Accumulate
    // into inputs via Graph::accumulate.
    using BackwardFn = std::function<void(Graph&, const Matrix& grad_out)>;

    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // Trainable input; receives a gradient.
    Var leaf(Matrix value, std::string_view name = "leaf");
    // Input that never receives a gradient.
    Var constant(Matrix value);

    // Records an op. `inputs` decide whether the node needs a gradient;
    // when none do, `backward` is dropped.
    Var record(std::string_view op, Matrix value, std::initializer_list<Var> inputs,
               BackwardFn backward);
    Var record(std::string_view op, Matrix value, std::span<const Var> inputs,
               BackwardFn backward);

    // Seeds d(root)/d(root) = 1 (root must be 1x1) and propagates. Calling it
    // a second time without zero_grad() throws std::logic_error.
    void backward(Var root);
    // Clears every gradient and re-arms backward().
    void zero_grad();
    // Drops every node (invalidating all Vars) but keeps the storage.
    void clear();

    void accumulate(Var target, const Matrix& delta);
    // Adds `delta` into the (r, c) entry of target's gradient.
    void accumulate_at(Var target, std::size_t r, std::size_t c, double delta);

    const Matrix& value(Var v) const { return nodes_[v.id].value; }
    const Matrix& grad(Var v) const;
    std::string_view op_name(Var v) const { return nodes_[v.id].op; }
    std::size_t size() const { return nodes_.size(); }
    bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

    // Ops that have a non-differentiable point (max, 1-norm, 2-norm at zero)
    // report when an operand lies within `radius` of it. 0 disables.
    void set_kink_radius(double radius) { kink_radius_ = radius; }
    double kink_radius() const { return kink_radius_; }
    void note_kink(std::string_view op);
    const std::optional<std::string>& kink_node() const { return kink_node_; }

    // First node whose forward value contained NaN/Inf, as "op#id".
    const std::optional<std::string>& nonfinite_node() const { return nonfinite_node_; }

private:
    struct Node {
        std::string_view op;
        Matrix value;
        Matrix grad;  // empty until touched by backward
        BackwardFn backward;
        bool needs_grad = false;
    };

    Var push(std::string_view op, Matrix value, bool needs_grad, BackwardFn backward);

    std::vector<Node> nodes_;
    bool backward_done_ = false;
    double kink_radius_ = 0.0;
    std::optional<std::string> kink_node_;
    std::optional<std::string> nonfinite_node_;
};

// ---------------------------------------------------------------------------
// Ops. Binary elementwise ops require equal shapes; the only broadcasting is
// scalar-with-tensor through scale() and add_scalar().
// ---------------------------------------------------------------------------

Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var neg(Var a);
Var sigmoid(Var a);
// max(a, s) elementwise; subgradient 0 w.r.t. a where a == s.
Var max_scalar(Var a, double s);
Var square(Var a);
// Requires a >= 0. The derivative at exactly 0 uses sqrt(kNormEpsilon).
Var sqrt(Var a);
// Requires a != 0.
Var reciprocal(Var a);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
// Sum of equally shaped operands.
Var add_n(std::span<const Var> terms);

Var sum(Var a, Axis axis = Axis::all);
Var mean(Var a, Axis axis = Axis::all);
// p in {1, 2}. 2-norm is sqrt(sum v^2 + kNormEpsilon); 1-norm subgradient at
// 0 is 0.
Var pnorm(Var a, int p, Axis axis = Axis::all);

// Sub-block [r0, r0+rows) x [c0, c0+cols).
Var slice(Var a, std::size_t r0, std::size_t rows, std::size_t c0, std::size_t cols);
Var element(Var a, std::size_t r, std::size_t c);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator-(Var a);

}  // namespace atomize
