#include <gtest/gtest.h>

#include <cmath>

#include "atomize/atom.hpp"
#include "atomize/errors.hpp"
#include "atomize/grad_check.hpp"
#include "atomize/rng.hpp"

using namespace atomize;

namespace {

double charge(double e_q) {
    Graph g;
    return charge_of(g.constant(Matrix::scalar(e_q))).item();
}

double mass(double q) {
    Graph g;
    return mass_of(g.constant(Matrix::scalar(q))).item();
}

// Charge pre-activation that yields exactly this charge.
double pre_for(double q) { return std::log((1.0 + q) / (1.0 - q)); }

// Atom whose rows are (charge, x, y).
Atom atom_from(Graph& g, const std::vector<std::array<double, 3>>& rows) {
    Matrix m(rows.size(), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        m(i, 0) = pre_for(rows[i][0]);
        m(i, 1) = rows[i][1];
        m(i, 2) = rows[i][2];
    }
    return make_atom(g.constant(m));
}

}  // namespace

TEST(Charge, Examples) {
    EXPECT_DOUBLE_EQ(charge(0.0), 0.0);
    EXPECT_NEAR(charge(std::log(3.0)), 0.5, 1e-15);
    EXPECT_NEAR(charge(-std::log(3.0)), -0.5, 1e-15);
}

TEST(Charge, MonotoneOddAndOpenInterval) {
    double prev = -1.0;
    for (double e = -30.0; e <= 30.0; e += 0.25) {
        const double q = charge(e);
        EXPECT_GT(q, prev);
        EXPECT_NEAR(q, -charge(-e), 1e-15);
        EXPECT_GT(q, -1.0);
        EXPECT_LT(q, 1.0);
        prev = q;
    }
}

TEST(Mass, Examples) {
    EXPECT_DOUBLE_EQ(mass(0.5), 1.0);
    EXPECT_DOUBLE_EQ(mass(-1.0), 0.0);
    EXPECT_DOUBLE_EQ(mass(-0.25), 0.75);
    EXPECT_DOUBLE_EQ(mass(0.0), 1.0);
}

TEST(Nucleus, Examples) {
    Graph g;
    auto mu = [&](Matrix pos, Matrix masses) {
        return nucleus_position(g.constant(std::move(pos)), g.constant(std::move(masses))).value();
    };
    EXPECT_EQ(mu(Matrix{{0, 0}, {2, 2}}, Matrix{{1}, {1}}), (Matrix{{1, 1}}));
    EXPECT_EQ(mu(Matrix{{2, 2}, {4, 4}}, Matrix{{1}, {0}}), (Matrix{{1, 1}}));
    EXPECT_EQ(mu(Matrix{{6, 0}}, Matrix{{1}}), (Matrix{{6, 0}}));
    EXPECT_THROW(mu(Matrix(0, 2), Matrix(0, 1)), DimensionError);
}

TEST(Radius, Examples) {
    {
        Graph g;
        Var pos = g.constant(Matrix{{3, 4}});
        Var m = g.constant(Matrix{{0}});
        Var mu = nucleus_position(pos, m);
        EXPECT_EQ(mu.value(), (Matrix{{0, 0}}));
        EXPECT_NEAR(nucleus_radius(pos, m, mu).item(), 5.0, 1e-9);
    }
    {
        Graph g;
        Atom a = atom_from(g, {{1.0 - 1e-15, 0, 0}, {-(1.0 - 1e-15), 0, 2}});
        // q = +-(1 - 1e-15) gives masses 1 and ~1e-15.
        EXPECT_NEAR(a.nucleus.value()(0, 0), 0.0, 1e-12);
        EXPECT_NEAR(a.nucleus.value()(0, 1), 0.0, 1e-12);
        EXPECT_NEAR(a.radius.item(), 1.0, 1e-6);
    }
    {
        Graph g;
        Atom a = atom_from(g, {{0.5, 0, 0}, {0.0, 0, 0}, {0.9, 0, 0}});
        // Each zero-length term still carries sqrt(kNormEpsilon).
        EXPECT_NEAR(a.radius.item(), 0.0, 2.0 * std::sqrt(kNormEpsilon));
    }
    {
        Graph g;
        EXPECT_THROW(make_atom(g.constant(Matrix(0, 3))), DimensionError);
    }
}

TEST(Distance, Examples) {
    Graph g;
    // Single-particle atoms whose nuclei sit at their positions.
    Atom a1 = atom_from(g, {{0.5, 0, 0}});
    Atom a2 = atom_from(g, {{0.5, 3, 4}});
    Var qi = element(a1.charges, 0, 0);
    Var qj = element(a2.charges, 0, 0);
    EXPECT_NEAR(pair_distance(a1, a2, qi, qj).item(), 5.0 + kDistanceFloor, 1e-8);

    // Same nuclei, opposite charges, radii 1 and 3.
    Graph h;
    Atom b1 = atom_from(h, {{0.5, 0, 0}});
    Atom b2 = atom_from(h, {{0.5, 3, 4}});
    b1.radius = h.constant(Matrix::scalar(1.0));
    b2.radius = h.constant(Matrix::scalar(3.0));
    Var gap = pnorm(sub(b1.nucleus, b2.nucleus), 2);
    EXPECT_NEAR(pair_distance(b1, b2, gap, -0.25).item(), 7.0 + kDistanceFloor, 1e-8);
    EXPECT_NEAR(pair_distance(b1, b2, gap, 0.25).item(), 5.0 + kDistanceFloor, 1e-8);
    EXPECT_NEAR(pair_distance(b1, b2, gap, 0.0).item(), 5.0 + kDistanceFloor, 1e-8);
}

TEST(Distance, CoincidentNucleiGiveTheFloor) {
    Graph g;
    Atom a1 = atom_from(g, {{0.5, 1, 1}});
    Atom a2 = atom_from(g, {{0.5, 1, 1}});
    const double d = pair_distance(a1, a2, element(a1.charges, 0, 0), element(a2.charges, 0, 0)).item();
    // The 2-norm carries sqrt(kNormEpsilon) = 1e-6 on top of the floor.
    EXPECT_GE(d, kDistanceFloor);
    EXPECT_LE(d, kDistanceFloor + std::sqrt(kNormEpsilon) + 1e-15);
}

TEST(Distance, HeteroelectricNeverShorter) {
    Stream s(9);
    for (int trial = 0; trial < 50; ++trial) {
        Graph g;
        Matrix e1(5, 3), e2(5, 3);
        for (double& v : e1.values()) v = 4.0 * s.uniform() - 2.0;
        for (double& v : e2.values()) v = 4.0 * s.uniform() - 2.0;
        Atom a1 = make_atom(g.constant(e1));
        Atom a2 = make_atom(g.constant(e2));
        Var gap = pnorm(sub(a1.nucleus, a2.nucleus), 2);
        const double homo = pair_distance(a1, a2, gap, 0.3).item();
        const double hetero = pair_distance(a1, a2, gap, -0.3).item();
        EXPECT_GE(hetero, homo);
        const double r_mean = 0.5 * (a1.radius.item() + a2.radius.item());
        EXPECT_NEAR(hetero - homo, r_mean, 1e-12);
    }
}

TEST(Atom, InvariantsOnRandomEmbeddings) {
    Stream s(17);
    for (int trial = 0; trial < 100; ++trial) {
        Graph g;
        Matrix e(5, 3);
        for (double& v : e.values()) v = 8.0 * s.uniform() - 4.0;
        Atom a = make_atom(g.constant(e));
        EXPECT_EQ(a.count, 5u);
        EXPECT_EQ(a.positions.cols(), 2u);
        for (std::size_t i = 0; i < 5; ++i) {
            const double q = a.charges.value()(i, 0);
            const double m = a.masses.value()(i, 0);
            EXPECT_GT(q, -1.0);
            EXPECT_LT(q, 1.0);
            EXPECT_DOUBLE_EQ(m, q >= 0 ? 1.0 : 1.0 + q);
        }
        EXPECT_GE(a.radius.item(), 0.0);
    }
}

TEST(Atom, TranslationScalesByMeanMass) {
    Stream s(23);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix e(5, 3);
        for (double& v : e.values()) v = 4.0 * s.uniform() - 2.0;
        const double tx = 3.0 * s.uniform() - 1.5, ty = 3.0 * s.uniform() - 1.5;
        Matrix shifted = e;
        for (std::size_t i = 0; i < 5; ++i) {
            shifted(i, 1) += tx;
            shifted(i, 2) += ty;
        }
        Graph g;
        Atom a = make_atom(g.constant(e));
        Atom b = make_atom(g.constant(shifted));
        double sum_m = 0.0;
        for (double m : a.masses.value().values()) sum_m += m;
        const double f = sum_m / 5.0;
        EXPECT_NEAR(b.nucleus.value()(0, 0) - a.nucleus.value()(0, 0), f * tx, 1e-12);
        EXPECT_NEAR(b.nucleus.value()(0, 1) - a.nucleus.value()(0, 1), f * ty, 1e-12);
    }
}

TEST(Atom, PNormOneVariant) {
    Graph g;
    Var pos = g.constant(Matrix{{3, 4}});
    Var m = g.constant(Matrix{{0}});
    Var mu = nucleus_position(pos, m);
    EXPECT_DOUBLE_EQ(nucleus_radius(pos, m, mu, 1).item(), 7.0);
}

TEST(Atom, GradientsAwayFromKinks) {
    Stream s(31);
    GradCheckOptions opts;
    opts.tol = 1e-4;
    int compared = 0;
    for (int trial = 0; trial < 30; ++trial) {
        Matrix e1(5, 3), e2(4, 3);
        for (double& v : e1.values()) v = 4.0 * s.uniform() - 2.0;
        for (double& v : e2.values()) v = 4.0 * s.uniform() - 2.0;
        const auto rep = grad_check(
            [](Graph&, std::span<const Var> in) {
                Atom a = make_atom(in[0]);
                Atom b = make_atom(in[1]);
                Var qi = element(a.charges, 1, 0);
                Var qj = element(b.charges, 2, 0);
                Var terms[] = {a.radius, b.radius, sum(a.nucleus), sum(a.masses),
                               pair_distance(a, b, qi, qj)};
                return add_n(terms);
            },
            std::vector<Matrix>{e1, e2}, opts);
        EXPECT_TRUE(rep.passed) << rep.max_rel_error();
        if (!rep.skipped) ++compared;
    }
    EXPECT_GE(compared, 25);
}
