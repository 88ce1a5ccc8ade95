#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "atomize/losses.hpp"
#include "atomize/mlp.hpp"
#include "atomize/synthetic.hpp"

#include <json.hpp>

namespace atomize {

struct DataConfig {
    GmmSpec gmm;
    std::size_t n_train = 1000;
    std::size_t n_test = 1000;
    std::uint64_t seed = 7;
};

struct TrainConfig {
    Method method = Method::ce;
    int epochs = 200;
    std::size_t batch_size = 32;
    double learning_rate = 0.05;
    std::string optimizer = "sgd";
    // Rescales each step's gradient to at most this global 2-norm; 0 disables.
    double clip_norm = 1.0;
    Coefficients coefficients;
    std::uint64_t seed = 0;
    DataConfig data;
    ModelOptions model;

    // Throws ConfigError.
    void validate() const;
};

nlohmann::json to_json(const GmmSpec& s);
// Overlays mean_0, mean_1, cov_0, cov_1 (2x2 arrays) and mix onto `base`.
GmmSpec merge_gmm_spec(GmmSpec base, const nlohmann::json& j);
nlohmann::json to_json(const DataConfig& c);
nlohmann::json to_json(const TrainConfig& c);
// Overlays the keys present in `j` onto `base`. Unknown keys are errors.
TrainConfig merge_config(TrainConfig base, const nlohmann::json& j);
DataConfig merge_data_config(DataConfig base, const nlohmann::json& j);
// Digest of the canonical JSON form.
std::string config_hash(const TrainConfig& c);

// Generates n_train + n_test points and splits them, both from data.seed.
SyntheticDataset make_dataset(const DataConfig& c);

struct EpochLosses {
    int epoch = 0;
    double l_ori = 0.0;
    double l_f = 0.0;
    double l_charge = 0.0;
    double l_neutrons = 0.0;
    double total = 0.0;
};

struct RunResult {
    Method method = Method::ce;
    std::uint64_t seed = 0;
    double accuracy = 0.0;        // test split
    double train_accuracy = 0.0;
    std::vector<EpochLosses> losses;
    MlpParams params;
    double wall_seconds = 0.0;
};

// Objective for one batch on the params' graph. The pairing plan is drawn
// from `pair_stream` when the batch has at least two points; a single point
// is only allowed for ce.
LossBreakdown batch_loss(const ParamVars& params, std::span<const Matrix* const> points,
                         std::span<const int> labels, Stream& pair_stream,
                         const Coefficients& coefficients, Method method,
                         const ModelOptions& model = {});

// Minibatch SGD on the configured objective. All randomness (init, data
// order, pairing plans) derives from config.seed. Throws DivergenceError on
// a non-finite loss term.
RunResult train(const TrainConfig& config, const SyntheticDataset& dataset);

// Fraction of points in `which` whose argmax logit equals the label. Throws
// std::invalid_argument for an empty split.
double evaluate(const MlpParams& params, const SyntheticDataset& dataset, Split which,
                const ModelOptions& options = {});

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // population (ddof = 0)
    double median = 0.0;
};
Summary summarize(std::span<const double> values);

struct ExperimentResult {
    Method method = Method::ce;
    std::vector<std::uint64_t> seeds;
    std::vector<double> accuracies;
    Summary summary;
};

struct SweepResult {
    std::vector<RunResult> runs;              // ordered by (method, seed)
    std::vector<ExperimentResult> methods;    // one per requested method
};

struct SweepError : std::runtime_error {
    SweepError(const std::string& what, std::vector<std::string> failures)
        : std::runtime_error(what), failures(std::move(failures)) {}
    std::vector<std::string> failures;  // "method/seed: message"
};

// Runs every (method, seed) cell with `base` as the template config, using
// up to `threads` workers. Results do not depend on `threads`.
SweepResult sweep(const TrainConfig& base, std::span<const Method> methods,
                  std::span<const std::uint64_t> seeds, const SyntheticDataset& dataset,
                  unsigned threads = 1);

// {schema: 1, runs: [...], summary: {...}}
nlohmann::json results_to_json(const SweepResult& result);
// Checks that every summary matches its per-seed list.
SweepResult results_from_json(const nlohmann::json& j);

}  // namespace atomize
