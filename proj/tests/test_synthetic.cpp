#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "atomize/errors.hpp"
#include "atomize/rng.hpp"
#include "atomize/synthetic.hpp"

using namespace atomize;

TEST(Stream, DerivedStreamsAreIndependentAndRepeatable) {
    Stream a = Stream::derive(1, "x", {2});
    Stream b = Stream::derive(1, "x", {2});
    Stream c = Stream::derive(1, "x", {3});
    Stream d = Stream::derive(1, "y", {2});
    for (int i = 0; i < 10; ++i) {
        const auto va = a.next_u64();
        EXPECT_EQ(va, b.next_u64());
        EXPECT_NE(va, c.next_u64());
        EXPECT_NE(va, d.next_u64());
    }
}

TEST(Stream, DistributionsInRange) {
    Stream s(5);
    double sum = 0.0, sum2 = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_GT(s.uniform_open_low(), 0.0);
        EXPECT_LT(s.below(7), 7u);
        const auto [z1, z2] = s.normal_pair();
        sum += z1 + z2;
        sum2 += z1 * z1 + z2 * z2;
    }
    EXPECT_NEAR(sum / (2 * n), 0.0, 0.03);
    EXPECT_NEAR(sum2 / (2 * n), 1.0, 0.03);
}

TEST(Stream, PermutationIsAPermutation) {
    Stream s(9);
    auto p = permutation(50, s);
    std::sort(p.begin(), p.end());
    for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(p[i], i);
}

TEST(Majority, ExhaustiveOverSources) {
    for (int mask = 0; mask < 32; ++mask) {
        std::array<int, kFeaturesPerPoint> src{};
        int ones = 0;
        for (int k = 0; k < 5; ++k) {
            src[k] = (mask >> k) & 1;
            ones += src[k];
        }
        EXPECT_EQ(majority_label(src), ones > 2 ? 1 : 0);
    }
}

TEST(Generate, ZeroVarianceGivesExactMeans) {
    GmmSpec spec;
    spec.cov_0 = spec.cov_1 = Cov2::isotropic(0.0);
    const SyntheticDataset ds = generate(spec, 300, 3);
    ASSERT_EQ(ds.size(), 300u);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t k = 0; k < 5; ++k) {
            const auto& mean = ds.sources[i][k] == 1 ? spec.mean_1 : spec.mean_0;
            EXPECT_EQ(ds.points[i](k, 0), mean[0]);
            EXPECT_EQ(ds.points[i](k, 1), mean[1]);
        }
        EXPECT_EQ(ds.labels[i], majority_label(ds.sources[i]));
    }
}

TEST(Generate, LabelBalanceAtDefaultSeed) {
    const SyntheticDataset ds = generate(GmmSpec{}, 1000, 7);
    const double ones = std::accumulate(ds.labels.begin(), ds.labels.end(), 0.0);
    EXPECT_NEAR(ones / 1000.0, 0.5, 0.05);
    for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(ds.labels[i], majority_label(ds.sources[i]));
}

TEST(Generate, DeterministicUnderSeed) {
    const SyntheticDataset a = generate(GmmSpec{}, 200, 11);
    const SyntheticDataset b = generate(GmmSpec{}, 200, 11);
    const SyntheticDataset c = generate(GmmSpec{}, 200, 12);
    EXPECT_EQ(a.points, b.points);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_EQ(a.sources, b.sources);
    EXPECT_NE(a.points, c.points);
    EXPECT_EQ(dataset_hash(a), dataset_hash(b));
    EXPECT_NE(dataset_hash(a), dataset_hash(c));
}

TEST(Generate, ComponentMeansMatchSpec) {
    GmmSpec spec;
    spec.cov_1 = Cov2{0.8, 0.3, 0.6};
    const SyntheticDataset ds = generate(spec, 4000, 21);
    std::array<double, 2> sum0{0, 0}, sum1{0, 0};
    double n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t k = 0; k < 5; ++k) {
            auto& acc = ds.sources[i][k] == 1 ? sum1 : sum0;
            (ds.sources[i][k] == 1 ? n1 : n0) += 1;
            acc[0] += ds.points[i](k, 0);
            acc[1] += ds.points[i](k, 1);
        }
    }
    const double sd0 = std::sqrt(spec.cov_0.xx);
    EXPECT_NEAR(sum0[0] / n0, spec.mean_0[0], 3 * sd0 / std::sqrt(n0));
    EXPECT_NEAR(sum0[1] / n0, spec.mean_0[1], 3 * sd0 / std::sqrt(n0));
    EXPECT_NEAR(sum1[0] / n1, spec.mean_1[0], 3 * std::sqrt(spec.cov_1.xx) / std::sqrt(n1));
    EXPECT_NEAR(sum1[1] / n1, spec.mean_1[1], 3 * std::sqrt(spec.cov_1.yy) / std::sqrt(n1));
    // Mixing weight: P(component 0) = 0.5.
    EXPECT_NEAR(n0 / (n0 + n1), spec.mix, 3 * 0.5 / std::sqrt(n0 + n1));
}

TEST(Generate, RejectsInvalidSpecs) {
    GmmSpec bad;
    bad.cov_0 = Cov2{1.0, 2.0, 1.0};  // indefinite
    EXPECT_THROW(generate(bad, 10, 1), ConfigError);
    GmmSpec neg;
    neg.cov_1 = Cov2::isotropic(-0.1);
    EXPECT_THROW(generate(neg, 10, 1), ConfigError);
    GmmSpec mix;
    mix.mix = 1.0;
    EXPECT_THROW(generate(mix, 10, 1), ConfigError);
    EXPECT_THROW(generate(GmmSpec{}, 0, 1), ConfigError);
}

TEST(Split, CardinalityPartitionAndDeterminism) {
    const SplitIndices s = split(10, 0.8, 4);
    EXPECT_EQ(s.train.size(), 8u);
    EXPECT_EQ(s.test.size(), 2u);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all.size(), 10u);
    EXPECT_EQ(*all.rbegin(), 9u);
    const SplitIndices again = split(10, 0.8, 4);
    EXPECT_EQ(s.train, again.train);
    EXPECT_EQ(s.test, again.test);
    EXPECT_THROW(split(10, 0.0, 4), ConfigError);
    EXPECT_THROW(split(10, 1.0, 4), ConfigError);
}

TEST(Csv, RoundTripIsExact) {
    SyntheticDataset ds = generate(GmmSpec{}, 50, 5);
    assign_split(ds, 0.6, 5);
    const std::string text = dataset_csv(ds);
    EXPECT_EQ(text.substr(0, text.find('\n')), "point_id,feature_idx,x,y,source_component,label,split");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 50 * 5);
    std::istringstream in(text);
    const SyntheticDataset back = read_dataset_csv(in);
    EXPECT_EQ(back.points, ds.points);
    EXPECT_EQ(back.labels, ds.labels);
    EXPECT_EQ(back.sources, ds.sources);
    EXPECT_EQ(back.splits, ds.splits);
    EXPECT_EQ(dataset_csv(back), text);
}

TEST(Csv, RejectsMalformedInput) {
    SyntheticDataset ds = generate(GmmSpec{}, 3, 5);
    assign_split(ds, 0.5, 5);
    const std::string good = dataset_csv(ds);
    auto parse = [](const std::string& s) {
        std::istringstream in(s);
        return read_dataset_csv(in);
    };
    EXPECT_NO_THROW(parse(good));
    EXPECT_THROW(parse("a,b,c\n"), ConfigError);
    // Truncated final point.
    std::string truncated = good.substr(0, good.rfind('\n', good.size() - 2) + 1);
    EXPECT_THROW(parse(truncated), ConfigError);
    // Flip one label so it contradicts the stored sources.
    std::string flipped = good;
    const std::size_t line2 = flipped.find('\n') + 1;
    const std::size_t line_end = flipped.find('\n', line2);
    std::string row = flipped.substr(line2, line_end - line2);
    const std::size_t label_pos = row.rfind(',', row.rfind(',') - 1) + 1;
    row[label_pos] = row[label_pos] == '0' ? '1' : '0';
    flipped.replace(line2, line_end - line2, row);
    EXPECT_THROW(parse(flipped), ConfigError);
}
