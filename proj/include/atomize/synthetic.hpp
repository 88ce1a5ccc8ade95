#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "atomize/matrix.hpp"

namespace atomize {

inline constexpr std::size_t kFeaturesPerPoint = 5;
inline constexpr std::size_t kFeatureDim = 2;

// Symmetric 2x2 covariance stored as (xx, xy, yy).
struct Cov2 {
    double xx = 1.0;
    double xy = 0.0;
    double yy = 1.0;

    static Cov2 isotropic(double variance) { return {variance, 0.0, variance}; }
    bool operator==(const Cov2&) const = default;
};

// Two-component Gaussian mixture over R^2. `mix` is the probability that a
// feature is drawn from component 0.
struct GmmSpec {
    std::array<double, 2> mean_0{-1.0, -1.0};
    std::array<double, 2> mean_1{1.0, 1.0};
    Cov2 cov_0 = Cov2::isotropic(kDefaultVariance);
    Cov2 cov_1 = Cov2::isotropic(kDefaultVariance);
    double mix = 0.5;

    // Calibrated so the cross-entropy baseline lands near 87% test accuracy.
    static constexpr double kDefaultVariance = 0.5;

    // Throws ConfigError. Covariances must be symmetric positive
    // semi-definite (a zero covariance gives delta components).
    void validate() const;
    bool operator==(const GmmSpec&) const = default;
};

enum class Split : std::uint8_t { train, test };

struct SyntheticDataset {
    std::vector<Matrix> points;                                // each 5 x 2
    std::vector<int> labels;                                   // 0 / 1
    std::vector<std::array<int, kFeaturesPerPoint>> sources;   // component per feature
    std::vector<Split> splits;
    std::uint64_t seed = 0;

    std::size_t size() const { return points.size(); }
    std::vector<std::size_t> indices(Split which) const;
};

// Label rule: 1 iff more than half of the features came from component 1.
int majority_label(const std::array<int, kFeaturesPerPoint>& sources);

// Draws n points. Every point starts in the train split.
SyntheticDataset generate(const GmmSpec& spec, std::size_t n, std::uint64_t seed);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Shuffled disjoint partition with round(n * train_fraction) train points.
// Throws ConfigError unless 0 < train_fraction < 1.
SplitIndices split(std::size_t n, double train_fraction, std::uint64_t seed);
// Applies split() to the dataset's split tags.
void assign_split(SyntheticDataset& dataset, double train_fraction, std::uint64_t seed);

// CSV: point_id,feature_idx,x,y,source_component,label,split
void write_dataset_csv(const SyntheticDataset& dataset, std::ostream& out);
SyntheticDataset read_dataset_csv(std::istream& in);
std::string dataset_csv(const SyntheticDataset& dataset);
// Hex digest of the canonical CSV; identifies a dataset across files.
std::string dataset_hash(const SyntheticDataset& dataset);

}  // namespace atomize
