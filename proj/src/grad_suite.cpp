#include "atomize/grad_suite.hpp"

#include <cmath>
#include <exception>
#include <utility>

#include "atomize/losses.hpp"
#include "atomize/mlp.hpp"
#include "atomize/rng.hpp"
#include "atomize/synthetic.hpp"
#include "atomize/trainer.hpp"

namespace atomize {

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi, Stream& s) {
    Matrix m(rows, cols);
    for (double& v : m.values()) v = lo + (hi - lo) * s.uniform();
    return m;
}

// Magnitude in [lo, hi] with a random sign.
Matrix signed_matrix(std::size_t rows, std::size_t cols, double lo, double hi, Stream& s) {
    Matrix m = uniform_matrix(rows, cols, lo, hi, s);
    for (double& v : m.values())
        if (s.uniform() < 0.5) v = -v;
    return m;
}

// Contracts a tensor against fixed random weights so every entry receives a
// distinct upstream gradient.
Var contract(Var v, const Matrix& weights) {
    Graph& g = *v.graph;
    return sum(mul(v, g.constant(weights)));
}

// Weights take the output shape, which is the input's unless given.
void add_unary(std::vector<NamedCheck>& out, std::string name, Var (*op)(Var), Matrix x, Stream& s,
               std::size_t out_rows = 0, std::size_t out_cols = 0) {
    if (out_rows == 0) {
        out_rows = x.rows();
        out_cols = x.cols();
    }
    const Matrix w = uniform_matrix(out_rows, out_cols, -2.0, 2.0, s);
    out.push_back({std::move(name),
                   [op, w](Graph&, std::span<const Var> in) { return contract(op(in[0]), w); },
                   {std::move(x)}});
}

void add_binary(std::vector<NamedCheck>& out, std::string name, Var (*op)(Var, Var), Matrix a, Matrix b,
                Stream& s) {
    const Matrix w = uniform_matrix(a.rows(), a.cols(), -2.0, 2.0, s);
    out.push_back({std::move(name),
                   [op, w](Graph&, std::span<const Var> in) { return contract(op(in[0], in[1]), w); },
                   {std::move(a), std::move(b)}});
}

void add_op_checks(std::vector<NamedCheck>& out, Stream& s) {
    auto rnd = [&](std::size_t r, std::size_t c) { return uniform_matrix(r, c, -2.0, 2.0, s); };

    {
        Matrix a = rnd(3, 4), b = rnd(4, 2);
        const Matrix w = rnd(3, 2);
        out.push_back({"op/matmul",
                       [w](Graph&, std::span<const Var> in) { return contract(matmul(in[0], in[1]), w); },
                       {std::move(a), std::move(b)}});
    }
    add_unary(out, "op/transpose", [](Var a) { return transpose(a); }, rnd(3, 4), s, 4, 3);
    add_binary(out, "op/add", [](Var a, Var b) { return add(a, b); }, rnd(3, 3), rnd(3, 3), s);
    add_binary(out, "op/sub", [](Var a, Var b) { return sub(a, b); }, rnd(3, 3), rnd(3, 3), s);
    add_binary(out, "op/mul", [](Var a, Var b) { return mul(a, b); }, rnd(3, 3), rnd(3, 3), s);
    add_unary(out, "op/neg", [](Var a) { return neg(a); }, rnd(3, 3), s);
    add_unary(out, "op/sigmoid", [](Var a) { return sigmoid(a); }, rnd(3, 3), s);
    add_unary(out, "op/max_scalar", [](Var a) { return max_scalar(a, 0.25); }, rnd(3, 3), s);
    add_unary(out, "op/square", [](Var a) { return square(a); }, rnd(3, 3), s);
    add_unary(out, "op/sqrt", [](Var a) { return sqrt(a); }, uniform_matrix(3, 3, 0.5, 2.0, s), s);
    add_unary(out, "op/reciprocal", [](Var a) { return reciprocal(a); }, signed_matrix(3, 3, 0.5, 2.0, s), s);
    add_unary(out, "op/scale", [](Var a) { return scale(a, -1.7); }, rnd(3, 3), s);
    add_unary(out, "op/add_scalar", [](Var a) { return add_scalar(a, 0.3); }, rnd(3, 3), s);
    {
        const Matrix w = rnd(2, 3);
        out.push_back({"op/add_n",
                       [w](Graph&, std::span<const Var> in) { return contract(add_n(in), w); },
                       {rnd(2, 3), rnd(2, 3), rnd(2, 3)}});
    }
    add_unary(out, "op/slice", [](Var a) { return slice(a, 1, 2, 0, 2); }, rnd(4, 3), s, 2, 2);
    out.push_back({"op/element",
                   [](Graph&, std::span<const Var> in) { return element(in[0], 2, 1); },
                   {rnd(3, 3)}});

    const std::pair<Axis, const char*> axes[] = {
        {Axis::over_rows, "over_rows"}, {Axis::over_cols, "over_cols"}, {Axis::all, "all"}};
    for (const auto& [axis, label] : axes) {
        const std::string suffix = std::string("/") + label;
        const Matrix x = rnd(4, 3);
        const Matrix w = axis == Axis::over_rows ? rnd(1, 3) : axis == Axis::over_cols ? rnd(4, 1) : rnd(1, 1);
        out.push_back({"op/sum" + suffix,
                       [w, axis](Graph&, std::span<const Var> in) { return contract(sum(in[0], axis), w); },
                       {x}});
        out.push_back({"op/mean" + suffix,
                       [w, axis](Graph&, std::span<const Var> in) { return contract(mean(in[0], axis), w); },
                       {x}});
        for (int p : {1, 2}) {
            out.push_back({"op/pnorm" + std::to_string(p) + suffix,
                           [w, axis, p](Graph&, std::span<const Var> in) {
                               return contract(pnorm(in[0], p, axis), w);
                           },
                           {x}});
        }
    }
}

struct RandomBatch {
    std::vector<Matrix> points;
    std::vector<int> labels;
    MlpParams params;
    std::uint64_t pair_key = 0;
};

RandomBatch random_batch(std::uint64_t seed, int index) {
    const auto i = static_cast<std::uint64_t>(index);
    RandomBatch b;
    const SyntheticDataset data = generate(GmmSpec{}, 4, Stream::derive(seed, "gc-data", {i}).next_u64());
    b.points = data.points;
    b.labels = data.labels;
    // Wider than the training init so charges and distances vary.
    Stream ps = Stream::derive(seed, "gc-params", {i});
    b.params.w1 = uniform_matrix(2, 3, -1.5, 1.5, ps);
    b.params.b1 = uniform_matrix(1, 3, -0.5, 0.5, ps);
    b.params.w2 = uniform_matrix(2, 2, -1.5, 1.5, ps);
    b.params.b2 = uniform_matrix(1, 2, -0.5, 0.5, ps);
    b.pair_key = Stream::derive(seed, "gc-pair", {i}).next_u64();
    return b;
}

std::vector<Matrix> param_inputs(const MlpParams& p) { return {p.w1, p.b1, p.w2, p.b2}; }

// Builds the model forward on graph-constant points with the params taken
// from `in`, then hands the per-point traces to `tail`.
template <class Tail>
Var with_traces(Graph& g, std::span<const Var> in, const std::vector<Matrix>& points, Tail tail) {
    const ParamVars pv{in[0], in[1], in[2], in[3]};
    std::vector<ForwardTrace> traces;
    for (const Matrix& p : points) traces.push_back(forward(pv, g.constant(p)));
    return tail(g, traces);
}

void add_loss_checks(std::vector<NamedCheck>& out, const SuiteOptions& options) {
    const RandomBatch b = random_batch(options.seed, -1);
    const std::vector<Matrix>& pts = b.points;
    const auto inputs = param_inputs(b.params);
    const std::uint64_t key = b.pair_key;
    const std::vector<int> labels = b.labels;

    auto plan_for = [key](const std::vector<Atom>& atoms) {
        std::vector<std::size_t> sizes;
        for (const Atom& a : atoms) sizes.push_back(a.count);
        Stream s(key);
        return make_pairing_plan(sizes, s);
    };
    auto atoms_of = [](const std::vector<ForwardTrace>& traces) {
        std::vector<Atom> atoms;
        for (const auto& t : traces) atoms.push_back(atom_view(t));
        return atoms;
    };

    out.push_back({"loss/cross_entropy", [pts, labels](Graph& g, std::span<const Var> in) {
                       return with_traces(g, in, pts, [&](Graph&, const std::vector<ForwardTrace>& ts) {
                           std::vector<Var> terms;
                           for (std::size_t i = 0; i < ts.size(); ++i)
                               terms.push_back(cross_entropy(ts[i].logits, labels[i]));
                           return add_n(terms);
                       });
                   },
                   inputs});
    out.push_back({"loss/charge_balance", [pts, atoms_of](Graph& g, std::span<const Var> in) {
                       return with_traces(g, in, pts, [&](Graph&, const std::vector<ForwardTrace>& ts) {
                           std::vector<Var> terms;
                           for (const Atom& a : atoms_of(ts)) terms.push_back(charge_balance_loss(a));
                           return add_n(terms);
                       });
                   },
                   inputs});
    out.push_back({"loss/neutron_count", [pts, atoms_of](Graph& g, std::span<const Var> in) {
                       return with_traces(g, in, pts, [&](Graph&, const std::vector<ForwardTrace>& ts) {
                           std::vector<Var> terms;
                           for (const Atom& a : atoms_of(ts)) terms.push_back(neutron_count_loss(a));
                           return add_n(terms);
                       });
                   },
                   inputs});
    out.push_back({"loss/coulomb", [pts, atoms_of, plan_for](Graph& g, std::span<const Var> in) {
                       return with_traces(g, in, pts, [&](Graph&, const std::vector<ForwardTrace>& ts) {
                           const auto atoms = atoms_of(ts);
                           return coulomb_loss(atoms, plan_for(atoms));
                       });
                   },
                   inputs});
    for (int p : {1, 2}) {
        out.push_back({"loss/pnorm_regularizer_p" + std::to_string(p),
                       [pts, atoms_of, plan_for, p](Graph& g, std::span<const Var> in) {
                           return with_traces(g, in, pts, [&](Graph&, const std::vector<ForwardTrace>& ts) {
                               std::vector<Var> z;
                               for (const auto& t : ts) z.push_back(t.z);
                               return pnorm_regularizer(z, p, plan_for(atoms_of(ts)));
                           });
                       },
                       inputs});
    }
    {
        ModelOptions soft;
        soft.pooling = Pooling::softmax;
        out.push_back({"model/softmax_pooling", [pts, soft](Graph& g, std::span<const Var> in) {
                           const ParamVars pv{in[0], in[1], in[2], in[3]};
                           std::vector<Var> terms;
                           for (const Matrix& p : pts) terms.push_back(sum(forward(pv, g.constant(p), soft).logits));
                           return add_n(terms);
                       },
                       inputs});
    }
}

void add_objective_checks(std::vector<NamedCheck>& out, const SuiteOptions& options) {
    Coefficients coefficients;
    // Unit weights so the atom terms are not scaled out of the comparison.
    coefficients.c_f = coefficients.c_charge = coefficients.c_neutrons = 1.0;
    coefficients.c_p = 1.0;
    for (Method method : kAllMethods) {
        for (int i = 0; i < options.batches; ++i) {
            const RandomBatch b = random_batch(options.seed, i);
            out.push_back({"objective/" + std::string(method_name(method)) + "/batch" + std::to_string(i),
                           [b, method, coefficients](Graph&, std::span<const Var> in) {
                               const ParamVars pv{in[0], in[1], in[2], in[3]};
                               std::vector<const Matrix*> points;
                               for (const Matrix& p : b.points) points.push_back(&p);
                               Stream s(b.pair_key);
                               return batch_loss(pv, points, b.labels, s, coefficients, method).total;
                           },
                           param_inputs(b.params)});
        }
    }
}

}  // namespace

std::vector<NamedCheck> default_checks(const SuiteOptions& options) {
    std::vector<NamedCheck> out;
    Stream s = Stream::derive(options.seed, "gc-ops", {});
    add_op_checks(out, s);
    add_loss_checks(out, options);
    add_objective_checks(out, options);
    return out;
}

std::vector<SuiteResult> run_checks(const std::vector<NamedCheck>& checks, const SuiteOptions& options) {
    GradCheckOptions gc;
    gc.step = options.step;
    gc.tol = options.tol;
    std::vector<SuiteResult> results;
    results.reserve(checks.size());
    for (const NamedCheck& c : checks) {
        SuiteResult r;
        r.name = c.name;
        try {
            const GradCheckReport rep = grad_check(c.fn, c.inputs, gc);
            r.passed = rep.passed;
            r.skipped = rep.skipped;
            r.max_rel_error = rep.max_rel_error();
            r.note = rep.note;
        } catch (const std::exception& e) {
            r.passed = false;
            r.note = e.what();
        }
        results.push_back(std::move(r));
    }
    return results;
}

bool all_passed(const std::vector<SuiteResult>& results) {
    for (const auto& r : results)
        if (!r.passed) return false;
    return true;
}

}  // namespace atomize
