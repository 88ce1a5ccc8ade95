#include "atomize/atom.hpp"

#include <cmath>

#include "atomize/errors.hpp"

namespace atomize {

namespace {

Var ones(Graph& g, std::size_t rows, std::size_t cols) { return g.constant(Matrix(rows, cols, 1.0)); }

}  // namespace

// 2 sigmoid(x) - 1 evaluated as tanh(x / 2), which is exactly odd in floating
// point: opposite pre-activations give charges that cancel to 0.
Var charge_of(Var charge_pre) {
    Matrix q = charge_pre.value();
    for (double& v : q.values()) v = std::tanh(0.5 * v);
    return charge_pre.graph->record("charge", q, {charge_pre}, [charge_pre, q](Graph& g, const Matrix& go) {
        Matrix d = go;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 0.5 * (1.0 - q[i] * q[i]);
        g.accumulate(charge_pre, d);
    });
}

Var mass_of(Var charges) { return add_scalar(neg(max_scalar(neg(charges), 0.0)), 1.0); }

Var nucleus_position(Var positions, Var masses) {
    const std::size_t n = positions.rows();
    if (n == 0) {
        throw DimensionError("nucleus_position: empty atom");
    }
    if (masses.rows() != n || masses.cols() != 1) {
        throw DimensionError("nucleus_position: masses must be " + std::to_string(n) + "x1");
    }
    return scale(matmul(transpose(masses), positions), 1.0 / static_cast<double>(n));
}

Var nucleus_radius(Var positions, Var masses, Var nucleus, int p) {
    const std::size_t n = positions.rows();
    const std::size_t dim = positions.cols();
    if (n == 0) {
        throw DimensionError("nucleus_radius: empty atom");
    }
    Graph& g = *positions.graph;
    // e_p_i (1 - m_i), broadcast across the position columns.
    Var light = add_scalar(neg(masses), 1.0);
    Var discounted = mul(positions, matmul(light, ones(g, 1, dim)));
    Var centred = sub(discounted, matmul(ones(g, n, 1), nucleus));
    return mean(pnorm(centred, p, Axis::over_cols));
}

Atom make_atom(Var embedding, int p) {
    const std::size_t n = embedding.rows();
    const std::size_t h = embedding.cols();
    if (n == 0) {
        throw DimensionError("make_atom: empty atom");
    }
    if (h < 2) {
        throw DimensionError("make_atom: hidden width must be >= 2, got " + std::to_string(h));
    }
    Atom atom;
    atom.count = n;
    atom.p = p;
    atom.charge_pre = slice(embedding, 0, n, 0, 1);
    atom.positions = slice(embedding, 0, n, 1, h - 1);
    atom.charges = charge_of(atom.charge_pre);
    atom.masses = mass_of(atom.charges);
    atom.nucleus = nucleus_position(atom.positions, atom.masses);
    atom.radius = nucleus_radius(atom.positions, atom.masses, atom.nucleus, p);
    return atom;
}

Var pair_distance(const Atom& a1, const Atom& a2, Var nucleus_gap, double qiqj) {
    Graph& g = *nucleus_gap.graph;
    const double radius = g.kink_radius();
    if (radius > 0.0 && std::abs(qiqj) < radius) {
        g.note_kink("pair_distance");
    }
    if (qiqj < 0.0) {
        Var mean_radius = scale(add(a1.radius, a2.radius), 0.5);
        return add_scalar(add(nucleus_gap, mean_radius), kDistanceFloor);
    }
    return add_scalar(nucleus_gap, kDistanceFloor);
}

Var pair_distance(const Atom& a1, const Atom& a2, Var qi, Var qj) {
    Var gap = pnorm(sub(a1.nucleus, a2.nucleus), a1.p);
    return pair_distance(a1, a2, gap, qi.item() * qj.item());
}

}  // namespace atomize
