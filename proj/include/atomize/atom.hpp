#pragma once

#include <cstddef>

#include "atomize/autodiff.hpp"

namespace atomize {

// Floor added to every cross-atom particle distance so 1/d stays bounded
// when two nuclei coincide.
inline constexpr double kDistanceFloor = 1e-6;

// One data point viewed as an atom. Built from an n x h embedding whose first
// column holds the charge pre-activations and whose remaining h-1 columns are
// the particle positions. All members are nodes of the same graph.
struct Atom {
    Var charge_pre;  // n x 1
    Var positions;   // n x (h-1)
    Var charges;     // n x 1, in (-1, 1)
    Var masses;      // n x 1, in [0, 1]
    Var nucleus;     // 1 x (h-1)
    Var radius;      // 1 x 1
    std::size_t count = 0;
    int p = 2;
};

// q = 2 sigmoid(e_q) - 1, elementwise.
Var charge_of(Var charge_pre);
// m = 1 - max(-q, 0), elementwise.
Var mass_of(Var charges);
// (1/|A|) sum_i m_i e_p_i. Divides by the particle count, not by sum(m).
Var nucleus_position(Var positions, Var masses);
// (1/|A|) sum_i || e_p_i (1 - m_i) - mu ||_p over every particle.
Var nucleus_radius(Var positions, Var masses, Var nucleus, int p = 2);

// Splits `embedding` (n x h, h >= 2, n >= 1) and derives every atom quantity.
Atom make_atom(Var embedding, int p = 2);

// Distance between particle i of a1 (charge qi) and particle j of a2 (charge
// qj). qi*qj > 0 or == 0: ||mu1 - mu2||_p; qi*qj < 0: adds (r1 + r2) / 2.
// kDistanceFloor is added in both cases.
Var pair_distance(const Atom& a1, const Atom& a2, Var qi, Var qj);

// Same, with ||mu1 - mu2||_p already computed.
Var pair_distance(const Atom& a1, const Atom& a2, Var nucleus_gap, double qiqj);

}  // namespace atomize
