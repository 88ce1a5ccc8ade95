#include <gtest/gtest.h>

#include <cmath>

#include "atomize/errors.hpp"
#include "atomize/trainer.hpp"

using namespace atomize;

namespace {

TrainConfig small_config(Method method, int epochs = 5) {
    TrainConfig c;
    c.method = method;
    c.epochs = epochs;
    c.data.n_train = 200;
    c.data.n_test = 200;
    return c;
}

const SyntheticDataset& small_data() {
    static const SyntheticDataset ds = make_dataset(small_config(Method::ce).data);
    return ds;
}

}  // namespace

TEST(Config, ValidationAndMerge) {
    TrainConfig c;
    EXPECT_NO_THROW(c.validate());
    TrainConfig bad = c;
    bad.batch_size = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = c;
    bad.learning_rate = 0.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = c;
    bad.epochs = -1;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = c;
    bad.optimizer = "adam";
    EXPECT_THROW(bad.validate(), ConfigError);

    const TrainConfig m = merge_config(c, nlohmann::json{{"method", "atom"}, {"epochs", 3}, {"data", {{"seed", 9}}}});
    EXPECT_EQ(m.method, Method::atom);
    EXPECT_EQ(m.epochs, 3);
    EXPECT_EQ(m.data.seed, 9u);
    EXPECT_EQ(m.batch_size, c.batch_size);
    EXPECT_THROW(merge_config(c, nlohmann::json{{"epoch", 3}}), ConfigError);
    EXPECT_THROW(merge_config(c, nlohmann::json{{"method", "svm"}}), ConfigError);
}

TEST(Config, JsonRoundTripAndHash) {
    TrainConfig c;
    c.method = Method::l2;
    c.coefficients.c_p = 0.02;
    c.data.gmm.cov_0 = Cov2{0.7, 0.1, 0.4};
    const TrainConfig back = merge_config(TrainConfig{}, to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_EQ(config_hash(back), config_hash(c));
    TrainConfig other = c;
    other.seed = 1;
    EXPECT_NE(config_hash(other), config_hash(c));
}

TEST(Train, ZeroEpochsGivesInitModel) {
    const TrainConfig c = small_config(Method::ce, 0);
    const RunResult r = train(c, small_data());
    EXPECT_TRUE(r.losses.empty());
    EXPECT_EQ(r.params, init_params(c.seed));
    EXPECT_EQ(r.accuracy, evaluate(init_params(c.seed), small_data(), Split::test));
}

TEST(Train, DeterministicUnderSeed) {
    const RunResult a = train(small_config(Method::atom), small_data());
    const RunResult b = train(small_config(Method::atom), small_data());
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.accuracy, b.accuracy);
    ASSERT_EQ(a.losses.size(), b.losses.size());
    for (std::size_t i = 0; i < a.losses.size(); ++i) EXPECT_EQ(a.losses[i].total, b.losses[i].total);
}

TEST(Train, ZeroCoefficientAtomMatchesCe) {
    TrainConfig atom = small_config(Method::atom, 8);
    atom.coefficients.c_f = atom.coefficients.c_charge = atom.coefficients.c_neutrons = 0.0;
    const RunResult a = train(atom, small_data());
    const RunResult c = train(small_config(Method::ce, 8), small_data());
    ASSERT_EQ(a.losses.size(), c.losses.size());
    for (std::size_t i = 0; i < a.losses.size(); ++i) {
        EXPECT_EQ(a.losses[i].l_ori, c.losses[i].l_ori);
        EXPECT_EQ(a.losses[i].l_f, c.losses[i].l_f);
        EXPECT_EQ(a.losses[i].l_charge, c.losses[i].l_charge);
        EXPECT_EQ(a.losses[i].l_neutrons, c.losses[i].l_neutrons);
        EXPECT_EQ(a.losses[i].total, c.losses[i].total);
    }
    EXPECT_EQ(a.params, c.params);
    EXPECT_EQ(a.accuracy, c.accuracy);
}

TEST(Train, LossesFiniteForEveryMethod) {
    for (Method m : kAllMethods) {
        const RunResult r = train(small_config(m, 3), small_data());
        ASSERT_EQ(r.losses.size(), 3u);
        for (const EpochLosses& e : r.losses) {
            EXPECT_EQ(e.epoch, &e - r.losses.data() + 1);
            for (double v : {e.l_ori, e.l_f, e.l_charge, e.l_neutrons, e.total}) EXPECT_TRUE(std::isfinite(v));
        }
        EXPECT_GE(r.accuracy, 0.0);
        EXPECT_LE(r.accuracy, 1.0);
    }
}

TEST(Train, DivergenceNamesEpochAndTerm) {
    TrainConfig c = small_config(Method::ce, 50);
    c.learning_rate = 1e12;
    c.clip_norm = 0.0;
    try {
        train(c, small_data());
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_GE(e.epoch, 1);
        EXPECT_FALSE(e.term.empty());
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    }
}

TEST(Train, SeparableDegenerateDataReachesPerfectAccuracy) {
    TrainConfig c = small_config(Method::ce, 100);
    c.data.gmm.cov_0 = c.data.gmm.cov_1 = Cov2::isotropic(0.0);
    const SyntheticDataset ds = make_dataset(c.data);
    const RunResult r = train(c, ds);
    EXPECT_EQ(r.accuracy, 1.0);
}

TEST(Evaluate, ConstantPredictor) {
    const SyntheticDataset& ds = small_data();
    const auto test = ds.indices(Split::test);
    double ones = 0.0;
    for (std::size_t i : test) ones += ds.labels[i];
    const double frac1 = ones / static_cast<double>(test.size());
    MlpParams zero;
    // Ties go to class 0.
    EXPECT_DOUBLE_EQ(evaluate(zero, ds, Split::test), 1.0 - frac1);
    zero.b2 = Matrix{{0.0, 1.0}};
    EXPECT_DOUBLE_EQ(evaluate(zero, ds, Split::test), frac1);

    SyntheticDataset empty = ds;
    for (auto& s : empty.splits) s = Split::train;
    EXPECT_THROW(evaluate(zero, empty, Split::test), std::invalid_argument);
}

TEST(Summary, Statistics) {
    const double one[] = {0.8};
    const Summary s1 = summarize(one);
    EXPECT_EQ(s1.mean, 0.8);
    EXPECT_EQ(s1.std, 0.0);
    EXPECT_EQ(s1.median, 0.8);
    const double four[] = {4.0, 1.0, 3.0, 2.0};
    const Summary s4 = summarize(four);
    EXPECT_DOUBLE_EQ(s4.mean, 2.5);
    EXPECT_DOUBLE_EQ(s4.median, 2.5);
    EXPECT_DOUBLE_EQ(s4.std, std::sqrt(1.25));
}

TEST(Sweep, SingletonAndOrdering) {
    const Method ce[] = {Method::ce};
    const std::uint64_t seed[] = {3};
    const SweepResult one = sweep(small_config(Method::ce, 2), ce, seed, small_data());
    ASSERT_EQ(one.runs.size(), 1u);
    ASSERT_EQ(one.methods.size(), 1u);
    EXPECT_EQ(one.methods[0].summary.std, 0.0);
    EXPECT_EQ(one.methods[0].summary.mean, one.runs[0].accuracy);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
    const Method methods[] = {Method::atom, Method::ce, Method::l1};
    const std::uint64_t seeds[] = {0, 1, 2};
    const TrainConfig base = small_config(Method::ce, 2);
    const SweepResult serial = sweep(base, methods, seeds, small_data(), 1);
    const SweepResult parallel = sweep(base, methods, seeds, small_data(), 4);
    EXPECT_EQ(results_to_json(serial).dump(), results_to_json(parallel).dump());
    ASSERT_EQ(serial.runs.size(), 9u);
    EXPECT_EQ(serial.runs[0].method, Method::atom);
    EXPECT_EQ(serial.runs[3].method, Method::ce);
    EXPECT_EQ(serial.runs[4].seed, 1u);
}

TEST(Sweep, FailuresCarryCellIdentity) {
    TrainConfig base = small_config(Method::ce, 50);
    base.learning_rate = 1e12;
    base.clip_norm = 0.0;
    const Method ce[] = {Method::ce};
    const std::uint64_t seeds[] = {0, 1};
    try {
        sweep(base, ce, seeds, small_data());
        FAIL();
    } catch (const SweepError& e) {
        ASSERT_EQ(e.failures.size(), 2u);
        EXPECT_EQ(e.failures[0].rfind("ce/0:", 0), 0u) << e.failures[0];
    }
}

TEST(Results, JsonSchemaAndSummaryCheck) {
    const Method methods[] = {Method::ce, Method::atom};
    const std::uint64_t seeds[] = {0, 1};
    const SweepResult r = sweep(small_config(Method::ce, 2), methods, seeds, small_data());
    nlohmann::json j = results_to_json(r);
    EXPECT_EQ(j.at("schema"), 1);
    EXPECT_EQ(j.at("runs").size(), 4u);
    EXPECT_EQ(j.at("runs")[0].at("losses")[0].size(), 5u);
    EXPECT_TRUE(j.at("summary").contains("atom"));
    const SweepResult back = results_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(results_to_json(back).dump(), j.dump());
    j["summary"]["ce"]["mean"] = 0.123;
    EXPECT_THROW(results_from_json(j), ConfigError);
}
