#include <gtest/gtest.h>

#include <cmath>

#include "atomize/errors.hpp"
#include "atomize/grad_check.hpp"
#include "atomize/mlp.hpp"
#include "atomize/rng.hpp"
#include "atomize/synthetic.hpp"

using namespace atomize;

namespace {

Matrix random_point(Stream& s) {
    Matrix p(5, 2);
    for (double& v : p.values()) v = 4.0 * s.uniform() - 2.0;
    return p;
}

}  // namespace

TEST(Init, DeterministicBoundedAndSeedDependent) {
    const MlpParams a = init_params(3);
    const MlpParams b = init_params(3);
    const MlpParams c = init_params(4);
    EXPECT_EQ(a, b);
    EXPECT_NE(a.w1, c.w1);
    const double bound = 1.0 / std::sqrt(2.0);
    for (const Matrix* m : {&a.w1, &a.b1, &a.w2, &a.b2})
        for (double v : m->values()) EXPECT_LE(std::abs(v), bound);
    EXPECT_EQ(a.w1.rows(), 2u);
    EXPECT_EQ(a.w1.cols(), 3u);
    EXPECT_EQ(a.w2.rows(), 2u);
    EXPECT_EQ(a.w2.cols(), 2u);
}

TEST(Forward, ZeroNetwork) {
    MlpParams p;
    p.b2 = Matrix{{0.3, -0.2}};
    Stream s(1);
    Graph g;
    const ForwardTrace t = forward(bind(g, p, false), g.constant(random_point(s)));
    EXPECT_EQ(t.weights.value(), Matrix(5, 1, 0.0));
    EXPECT_EQ(t.z.value(), Matrix(1, 2, 0.0));
    EXPECT_EQ(t.logits.value(), p.b2);
}

TEST(Forward, ZeroWeightsAnnihilateEmbedding) {
    MlpParams p;
    p.b1 = Matrix{{0.0, 1.7, -2.3}};
    Stream s(2);
    Graph g;
    const ForwardTrace t = forward(bind(g, p, false), g.constant(random_point(s)));
    EXPECT_EQ(t.z.value(), Matrix(1, 2, 0.0));
}

TEST(Forward, MatchesDefinition) {
    const MlpParams p = init_params(8);
    Stream s(3);
    const Matrix x = random_point(s);
    Graph g;
    const ForwardTrace t = forward(bind(g, p, false), g.constant(x));
    double z0 = 0.0, z1 = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        double h[3];
        for (std::size_t c = 0; c < 3; ++c) h[c] = x(i, 0) * p.w1(0, c) + x(i, 1) * p.w1(1, c) + p.b1(0, c);
        EXPECT_NEAR(t.hidden.value()(i, 0), h[0], 1e-14);
        z0 += h[0] * h[1];
        z1 += h[0] * h[2];
    }
    EXPECT_NEAR(t.z.value()(0, 0), z0, 1e-13);
    EXPECT_NEAR(t.z.value()(0, 1), z1, 1e-13);
    EXPECT_NEAR(t.logits.value()(0, 1), z0 * p.w2(0, 1) + z1 * p.w2(1, 1) + p.b2(0, 1), 1e-13);
}

TEST(Forward, RejectsWrongPointShape) {
    Graph g;
    const MlpParams p = init_params(1);
    EXPECT_THROW(forward(bind(g, p, false), g.constant(Matrix(4, 2))), DimensionError);
}

TEST(Forward, QuadraticInInputWithoutBiases) {
    MlpParams p = init_params(5);
    p.b1 = Matrix(1, 3);
    p.b2 = Matrix(1, 2);
    Stream s(4);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix x = random_point(s);
        Matrix x2 = x;
        for (double& v : x2.values()) v *= 2.0;
        const PointOutputs a = predict(p, x);
        const PointOutputs b = predict(p, x2);
        EXPECT_NEAR(b.z(0, 0), 4.0 * a.z(0, 0), 1e-12);
        EXPECT_NEAR(b.z(0, 1), 4.0 * a.z(0, 1), 1e-12);
    }
}

TEST(Forward, AtomView) {
    const MlpParams p = init_params(6);
    Stream s(5);
    Graph g;
    const ForwardTrace t = forward(bind(g, p, false), g.constant(random_point(s)));
    const Atom a = atom_view(t);
    EXPECT_EQ(a.count, 5u);
    EXPECT_EQ(a.positions.cols(), 2u);
    for (std::size_t i = 0; i < 5; ++i) {
        const double pre = t.hidden.value()(i, 0);
        EXPECT_NEAR(a.charges.value()(i, 0), 2.0 / (1.0 + std::exp(-pre)) - 1.0, 1e-15);
        EXPECT_EQ(a.positions.value()(i, 0), t.hidden.value()(i, 1));
    }
}

TEST(Forward, SoftmaxPoolingIsConvex) {
    const MlpParams p = init_params(7);
    Stream s(6);
    ModelOptions soft;
    soft.pooling = Pooling::softmax;
    Graph g;
    const ForwardTrace t = forward(bind(g, p, false), g.constant(random_point(s)), soft);
    double wsum = 0.0, wz0 = 0.0;
    const Matrix& h = t.hidden.value();
    double mx = h(0, 0);
    for (std::size_t i = 1; i < 5; ++i) mx = std::max(mx, h(i, 0));
    for (std::size_t i = 0; i < 5; ++i) {
        const double w = std::exp(h(i, 0) - mx);
        wsum += w;
        wz0 += w * h(i, 1);
    }
    EXPECT_NEAR(t.z.value()(0, 0), wz0 / wsum, 1e-13);
}

TEST(CrossEntropy, Examples) {
    Graph g;
    EXPECT_NEAR(cross_entropy(g.constant(Matrix{{0, 0}}), 0).item(), std::log(2.0), 1e-15);
    EXPECT_LT(cross_entropy(g.constant(Matrix{{100, 0}}), 0).item(), 1e-6);
    EXPECT_NEAR(cross_entropy(g.constant(Matrix{{0, 100}}), 0).item(), 100.0, 1e-9);
    EXPECT_THROW(cross_entropy(g.constant(Matrix{{0, 0}}), 2), std::invalid_argument);
}

TEST(CrossEntropy, GradientOverAllParams) {
    Stream s(9);
    GradCheckOptions opts;
    opts.tol = 1e-4;
    for (int trial = 0; trial < 10; ++trial) {
        const MlpParams p = init_params(100 + trial);
        const Matrix x = random_point(s);
        const int label = trial % 2;
        const auto rep = grad_check(
            [x, label](Graph& g, std::span<const Var> in) {
                const ParamVars pv{in[0], in[1], in[2], in[3]};
                return cross_entropy(forward(pv, g.constant(x)).logits, label);
            },
            std::vector<Matrix>{p.w1, p.b1, p.w2, p.b2}, opts);
        EXPECT_TRUE(rep.passed) << rep.max_rel_error();
    }
}

TEST(Predict, InvariantToCommonLogitShift) {
    MlpParams p = init_params(10);
    Stream s(10);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix x = random_point(s);
        const int before = predict(p, x).prediction;
        MlpParams q = p;
        q.b2(0, 0) += 5.0;
        q.b2(0, 1) += 5.0;
        EXPECT_EQ(predict(q, x).prediction, before);
    }
}

TEST(Checkpoint, JsonRoundTripIsExact) {
    const MlpParams p = init_params(12);
    const nlohmann::json j = params_to_json(p);
    ASSERT_TRUE(j.at("w1").is_array());
    EXPECT_EQ(j.at("w1").size(), 2u);
    EXPECT_EQ(j.at("b1").size(), 3u);
    const MlpParams back = params_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back, p);
}

TEST(Checkpoint, RejectsMalformed) {
    nlohmann::json j = params_to_json(init_params(1));
    j["w2"] = nlohmann::json::array({nlohmann::json::array({1.0, 2.0})});
    EXPECT_THROW(params_from_json(j), std::invalid_argument);
    nlohmann::json missing = params_to_json(init_params(1));
    missing.erase("b1");
    EXPECT_THROW(params_from_json(missing), ConfigError);
}

TEST(Options, OnlyLayerOneCanBeAtomized) {
    ModelOptions o;
    EXPECT_NO_THROW(o.validate());
    o.atomized_layer = 2;
    EXPECT_THROW(o.validate(), ConfigError);
    EXPECT_EQ(parse_pooling("softmax"), Pooling::softmax);
    EXPECT_THROW(parse_pooling("mean"), ConfigError);
}
