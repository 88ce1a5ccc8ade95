#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "atomize/atom.hpp"
#include "atomize/autodiff.hpp"
#include "atomize/rng.hpp"

namespace atomize {

// ---------------------------------------------------------------------------
// Batch pairing
// ---------------------------------------------------------------------------

struct AtomPair {
    std::size_t first = 0;
    std::size_t second = 0;
    // (particle in first, particle in second); exactly min(|A1|, |A2|) entries.
    std::vector<std::pair<std::size_t, std::size_t>> particles;
};

struct PairingPlan {
    std::vector<AtomPair> pairs;
    std::uint64_t stream_key = 0;
};

// Uniform random perfect matching over the batch. With an odd batch the
// leftover atom is paired with a uniformly chosen partner, which then appears
// twice. Particle pairs are drawn without replacement from the |A1| x |A2|
// grid. Needs at least two atoms.
PairingPlan make_pairing_plan(std::span<const std::size_t> atom_sizes, Stream& stream);

// Throws std::invalid_argument if the plan does not fit the batch.
void validate_plan(const PairingPlan& plan, std::span<const std::size_t> atom_sizes);

// ---------------------------------------------------------------------------
// Loss terms
// ---------------------------------------------------------------------------

// (sum_i q_i)^2
Var charge_balance_loss(const Atom& atom);
// (sum_i q_i^2 - (2/3)|A|)^2
Var neutron_count_loss(const Atom& atom);
// Sum over the plan's atom pairs and their sampled particle pairs of
// q_i q_j / d_ij. Pairs with q_i q_j == 0 contribute exactly 0.
Var coulomb_loss(std::span<const Atom> batch, const PairingPlan& plan);
// -(1/#pairs) sum ||z_a - z_b||_p over the plan's atom pairs.
Var pnorm_regularizer(std::span<const Var> embeddings, int p, const PairingPlan& plan);

enum class Method { ce, l1, l2, atom };

std::string_view method_name(Method m);
// Throws ConfigError listing the valid names.
Method parse_method(std::string_view name);
inline constexpr Method kAllMethods[] = {Method::ce, Method::l1, Method::l2, Method::atom};

// The three atom weights share one value. At 1.0 the atom terms swamp the
// task gradient of the synthetic model and training stays at chance level.
struct Coefficients {
    double c_f = 1e-3;
    double c_charge = 1e-3;
    double c_neutrons = 1e-3;
    double c_p = 0.01;  // baseline p-norm weight
};

struct LossBreakdown {
    Var l_ori;
    // Present whenever atoms were supplied, for every method; only the atom
    // method adds them to the total.
    std::optional<Var> l_f;
    std::optional<Var> l_charge;     // batch mean
    std::optional<Var> l_neutrons;   // batch mean
    std::optional<Var> l_p;          // l1 / l2 only
    Coefficients coefficients;
    Var total;
};

struct LossInputs {
    Var l_ori;
    std::span<const Atom> atoms;       // required for atom
    std::span<const Var> embeddings;   // required for l1 / l2
    const PairingPlan* plan = nullptr;  // required when atoms or embeddings are given
};

// ce: total = l_ori. l1/l2: l_ori + c_p * pnorm_regularizer.
// atom: l_ori + c_f L_f + c_charge mean(L_charge) + c_neutrons mean(L_neutrons).
LossBreakdown total_loss(const LossInputs& in, const Coefficients& coefficients, Method method);

}  // namespace atomize
