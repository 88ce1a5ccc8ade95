#include "atomize/losses.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "atomize/errors.hpp"

namespace atomize {

// ---------------------------------------------------------------------------
// Pairing
// ---------------------------------------------------------------------------

namespace {

std::vector<std::pair<std::size_t, std::size_t>> sample_particles(std::size_t n1, std::size_t n2,
                                                                  Stream& stream) {
    const std::size_t cells = n1 * n2;
    const std::size_t take = std::min(n1, n2);
    std::vector<std::size_t> grid(cells);
    for (std::size_t i = 0; i < cells; ++i) grid[i] = i;
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(take);
    // Partial Fisher-Yates: the first `take` slots are a uniform sample
    // without replacement.
    for (std::size_t k = 0; k < take; ++k) {
        const auto j = k + static_cast<std::size_t>(stream.below(cells - k));
        std::swap(grid[k], grid[j]);
        out.emplace_back(grid[k] / n2, grid[k] % n2);
    }
    return out;
}

}  // namespace

PairingPlan make_pairing_plan(std::span<const std::size_t> atom_sizes, Stream& stream) {
    const std::size_t n = atom_sizes.size();
    if (n < 2) {
        throw std::invalid_argument("make_pairing_plan: need at least 2 atoms, got " +
                                    std::to_string(n));
    }
    for (std::size_t s : atom_sizes) {
        if (s == 0) throw std::invalid_argument("make_pairing_plan: empty atom in batch");
    }
    PairingPlan plan;
    plan.stream_key = stream.key();
    const auto order = permutation(n, stream);
    for (std::size_t k = 0; k + 1 < n; k += 2) {
        plan.pairs.push_back(AtomPair{order[k], order[k + 1], {}});
    }
    if (n % 2 == 1) {
        const std::size_t leftover = order[n - 1];
        // Any atom but itself.
        std::size_t partner = static_cast<std::size_t>(stream.below(n - 1));
        if (partner >= leftover) ++partner;
        plan.pairs.push_back(AtomPair{leftover, partner, {}});
    }
    for (AtomPair& pair : plan.pairs) {
        pair.particles = sample_particles(atom_sizes[pair.first], atom_sizes[pair.second], stream);
    }
    return plan;
}

void validate_plan(const PairingPlan& plan, std::span<const std::size_t> atom_sizes) {
    const std::size_t n = atom_sizes.size();
    std::vector<bool> seen(n, false);
    for (const AtomPair& pair : plan.pairs) {
        if (pair.first >= n || pair.second >= n) {
            throw std::invalid_argument("pairing plan: atom index out of range");
        }
        if (pair.first == pair.second) {
            throw std::invalid_argument("pairing plan: atom paired with itself");
        }
        seen[pair.first] = seen[pair.second] = true;
        const std::size_t n1 = atom_sizes[pair.first], n2 = atom_sizes[pair.second];
        if (pair.particles.size() != std::min(n1, n2)) {
            throw std::invalid_argument("pairing plan: wrong particle pair count");
        }
        std::set<std::pair<std::size_t, std::size_t>> distinct;
        for (const auto& [i, j] : pair.particles) {
            if (i >= n1 || j >= n2) throw std::invalid_argument("pairing plan: particle out of range");
            if (!distinct.insert({i, j}).second) {
                throw std::invalid_argument("pairing plan: repeated particle pair");
            }
        }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw std::invalid_argument("pairing plan: some atom is never paired");
    }
}

// ---------------------------------------------------------------------------
// Loss terms
// ---------------------------------------------------------------------------

Var charge_balance_loss(const Atom& atom) { return square(sum(atom.charges)); }

Var neutron_count_loss(const Atom& atom) {
    const double target = 2.0 / 3.0 * static_cast<double>(atom.count);
    return square(add_scalar(sum(square(atom.charges)), -target));
}

Var coulomb_loss(std::span<const Atom> batch, const PairingPlan& plan) {
    if (batch.size() < 2) {
        throw std::invalid_argument("coulomb_loss: batch of size < 2 has no pairs");
    }
    std::vector<std::size_t> sizes;
    sizes.reserve(batch.size());
    for (const Atom& a : batch) sizes.push_back(a.count);
    validate_plan(plan, sizes);

    std::vector<Var> terms;
    for (const AtomPair& pair : plan.pairs) {
        const Atom& a1 = batch[pair.first];
        const Atom& a2 = batch[pair.second];
        Var gap = pnorm(sub(a1.nucleus, a2.nucleus), a1.p);
        for (const auto& [i, j] : pair.particles) {
            Var qiqj = mul(element(a1.charges, i, 0), element(a2.charges, j, 0));
            Var d = pair_distance(a1, a2, gap, qiqj.item());
            terms.push_back(mul(qiqj, reciprocal(d)));
        }
    }
    return add_n(terms);
}

Var pnorm_regularizer(std::span<const Var> embeddings, int p, const PairingPlan& plan) {
    if (embeddings.size() < 2) {
        throw std::invalid_argument("pnorm_regularizer: batch of size < 2 has no pairs");
    }
    if (plan.pairs.empty()) {
        throw std::invalid_argument("pnorm_regularizer: empty pairing plan");
    }
    std::vector<Var> terms;
    terms.reserve(plan.pairs.size());
    for (const AtomPair& pair : plan.pairs) {
        if (pair.first >= embeddings.size() || pair.second >= embeddings.size()) {
            throw std::invalid_argument("pnorm_regularizer: plan does not match batch");
        }
        terms.push_back(pnorm(sub(embeddings[pair.first], embeddings[pair.second]), p));
    }
    return scale(add_n(terms), -1.0 / static_cast<double>(terms.size()));
}

// ---------------------------------------------------------------------------
// Combined objective
// ---------------------------------------------------------------------------

std::string_view method_name(Method m) {
    switch (m) {
        case Method::ce: return "ce";
        case Method::l1: return "l1";
        case Method::l2: return "l2";
        case Method::atom: return "atom";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (Method m : kAllMethods) {
        if (method_name(m) == name) return m;
    }
    throw ConfigError("unknown method '" + std::string(name) + "'; expected one of {ce,l1,l2,atom}");
}

LossBreakdown total_loss(const LossInputs& in, const Coefficients& coefficients, Method method) {
    LossBreakdown out;
    out.l_ori = in.l_ori;
    out.coefficients = coefficients;
    Graph& g = *in.l_ori.graph;

    if (method == Method::atom && in.atoms.empty()) {
        throw std::invalid_argument("total_loss: atom method requires atoms");
    }
    if ((method == Method::l1 || method == Method::l2) && in.embeddings.empty()) {
        throw std::invalid_argument("total_loss: l1/l2 methods require data-point embeddings");
    }
    if ((!in.atoms.empty() && in.atoms.size() >= 2) || !in.embeddings.empty()) {
        if (in.plan == nullptr) {
            throw std::invalid_argument("total_loss: pairing plan required");
        }
    }

    if (!in.atoms.empty()) {
        std::vector<Var> charge, neutrons;
        for (const Atom& a : in.atoms) {
            charge.push_back(charge_balance_loss(a));
            neutrons.push_back(neutron_count_loss(a));
        }
        const double inv = 1.0 / static_cast<double>(in.atoms.size());
        out.l_charge = scale(add_n(charge), inv);
        out.l_neutrons = scale(add_n(neutrons), inv);
        out.l_f = in.atoms.size() >= 2 ? coulomb_loss(in.atoms, *in.plan)
                                       : g.constant(Matrix::scalar(0.0));
    }

    switch (method) {
        case Method::ce:
            out.total = in.l_ori;
            break;
        case Method::l1:
        case Method::l2: {
            out.l_p = pnorm_regularizer(in.embeddings, method == Method::l1 ? 1 : 2, *in.plan);
            out.total = add(in.l_ori, scale(*out.l_p, coefficients.c_p));
            break;
        }
        case Method::atom: {
            const Var parts[] = {in.l_ori, scale(*out.l_f, coefficients.c_f),
                                 scale(*out.l_charge, coefficients.c_charge),
                                 scale(*out.l_neutrons, coefficients.c_neutrons)};
            out.total = add_n(parts);
            break;
        }
    }
    return out;
}

}  // namespace atomize
