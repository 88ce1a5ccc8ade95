#include "atomize/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "atomize/errors.hpp"
#include "atomize/io.hpp"
#include "atomize/rng.hpp"

namespace atomize {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning rate must be positive");
    }
    if (optimizer != "sgd") throw ConfigError("unsupported optimizer '" + optimizer + "'");
    if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be non-negative");
    for (double c : {coefficients.c_f, coefficients.c_charge, coefficients.c_neutrons, coefficients.c_p}) {
        if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("coefficients must be non-negative");
    }
    if (data.n_train == 0 || data.n_test == 0) throw ConfigError("train and test sizes must be positive");
    data.gmm.validate();
    model.validate();
}

namespace {

json cov_to_json(const Cov2& c) { return json::array({json::array({c.xx, c.xy}), json::array({c.xy, c.yy})}); }

Cov2 cov_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || j[0].size() != 2 || j[1].size() != 2) {
        throw ConfigError("covariance must be a 2x2 array");
    }
    const double xy = j[0][1].get<double>();
    if (xy != j[1][0].get<double>()) {
        throw ConfigError("covariance must be symmetric");
    }
    return Cov2{j[0][0].get<double>(), xy, j[1][1].get<double>()};
}

json gmm_to_json(const GmmSpec& s) {
    return json{{"mean_0", s.mean_0}, {"mean_1", s.mean_1}, {"cov_0", cov_to_json(s.cov_0)},
                {"cov_1", cov_to_json(s.cov_1)}, {"mix", s.mix}};
}

GmmSpec gmm_from_json(GmmSpec base, const json& j) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "mean_0") base.mean_0 = it->get<std::array<double, 2>>();
        else if (k == "mean_1") base.mean_1 = it->get<std::array<double, 2>>();
        else if (k == "cov_0") base.cov_0 = cov_from_json(*it);
        else if (k == "cov_1") base.cov_1 = cov_from_json(*it);
        else if (k == "mix") base.mix = it->get<double>();
        else throw ConfigError("unknown gmm key '" + k + "'");
    }
    return base;
}

}  // namespace

json to_json(const GmmSpec& s) { return gmm_to_json(s); }

GmmSpec merge_gmm_spec(GmmSpec base, const json& j) {
    if (!j.is_object()) throw ConfigError("gmm spec must be a JSON object");
    try {
        return gmm_from_json(base, j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed gmm spec: ") + e.what());
    }
}

json to_json(const DataConfig& c) {
    return json{{"gmm", gmm_to_json(c.gmm)}, {"n_train", c.n_train}, {"n_test", c.n_test}, {"seed", c.seed}};
}

DataConfig merge_data_config(DataConfig base, const json& j) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "gmm") base.gmm = gmm_from_json(base.gmm, *it);
        else if (k == "n_train") base.n_train = it->get<std::size_t>();
        else if (k == "n_test") base.n_test = it->get<std::size_t>();
        else if (k == "seed") base.seed = it->get<std::uint64_t>();
        else throw ConfigError("unknown data key '" + k + "'");
    }
    return base;
}

json to_json(const TrainConfig& c) {
    return json{{"method", method_name(c.method)},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"learning_rate", c.learning_rate},
                {"optimizer", c.optimizer},
                {"clip_norm", c.clip_norm},
                {"c_f", c.coefficients.c_f},
                {"c_charge", c.coefficients.c_charge},
                {"c_neutrons", c.coefficients.c_neutrons},
                {"c_p", c.coefficients.c_p},
                {"seed", c.seed},
                {"atomized_layer", c.model.atomized_layer},
                {"p_norm", c.model.p_norm},
                {"pooling", pooling_name(c.model.pooling)},
                {"data", to_json(c.data)}};
}

TrainConfig merge_config(TrainConfig base, const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& k = it.key();
            if (k == "method") base.method = parse_method(it->get<std::string>());
            else if (k == "epochs") base.epochs = it->get<int>();
            else if (k == "batch_size") base.batch_size = it->get<std::size_t>();
            else if (k == "learning_rate") base.learning_rate = it->get<double>();
            else if (k == "optimizer") base.optimizer = it->get<std::string>();
            else if (k == "clip_norm") base.clip_norm = it->get<double>();
            else if (k == "c_f") base.coefficients.c_f = it->get<double>();
            else if (k == "c_charge") base.coefficients.c_charge = it->get<double>();
            else if (k == "c_neutrons") base.coefficients.c_neutrons = it->get<double>();
            else if (k == "c_p") base.coefficients.c_p = it->get<double>();
            else if (k == "seed") base.seed = it->get<std::uint64_t>();
            else if (k == "atomized_layer") base.model.atomized_layer = it->get<int>();
            else if (k == "p_norm") base.model.p_norm = it->get<int>();
            else if (k == "pooling") base.model.pooling = parse_pooling(it->get<std::string>());
            else if (k == "data") base.data = merge_data_config(base.data, *it);
            else throw ConfigError("unknown config key '" + k + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return base;
}

std::string config_hash(const TrainConfig& c) { return hex_digest(to_json(c).dump()); }

SyntheticDataset make_dataset(const DataConfig& c) {
    if (c.n_train == 0 || c.n_test == 0) throw ConfigError("train and test sizes must be positive");
    const std::size_t n = c.n_train + c.n_test;
    SyntheticDataset ds = generate(c.gmm, n, c.seed);
    assign_split(ds, static_cast<double>(c.n_train) / static_cast<double>(n), c.seed);
    return ds;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

// Consecutive chunks of `order`; a trailing singleton joins the previous
// chunk so every batch can be paired.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order,
                                                   std::size_t batch_size) {
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    if (batches.size() >= 2 && batches.back().size() == 1) {
        batches[batches.size() - 2].push_back(batches.back().front());
        batches.pop_back();
    }
    return batches;
}

void check_finite(double v, int epoch, const char* term) {
    if (!std::isfinite(v)) throw DivergenceError(epoch, term);
}

void sgd_step(Matrix& param, const Matrix& grad, double lr) {
    for (std::size_t i = 0; i < param.size(); ++i) param[i] -= lr * grad[i];
}

}  // namespace

LossBreakdown batch_loss(const ParamVars& params, std::span<const Matrix* const> points,
                         std::span<const int> labels, Stream& pair_stream,
                         const Coefficients& coefficients, Method method, const ModelOptions& model) {
    if (points.empty() || points.size() != labels.size())
        throw std::invalid_argument("batch_loss: need one label per point and a non-empty batch");
    Graph& g = *params.w1.graph;
    std::vector<Var> ce_terms, embeddings;
    std::vector<Atom> atoms;
    std::vector<std::size_t> sizes;
    ce_terms.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const ForwardTrace t = forward(params, g.constant(*points[i]), model);
        ce_terms.push_back(cross_entropy(t.logits, labels[i]));
        embeddings.push_back(t.z);
        atoms.push_back(atom_view(t, model));
        sizes.push_back(atoms.back().count);
    }
    Var l_ori = scale(add_n(ce_terms), 1.0 / static_cast<double>(points.size()));

    PairingPlan plan;
    LossInputs in{l_ori, atoms, {}, nullptr};
    if (points.size() >= 2) {
        plan = make_pairing_plan(sizes, pair_stream);
        in.plan = &plan;
        in.embeddings = embeddings;
    } else if (method != Method::ce) {
        throw std::invalid_argument("batch_loss: regularized methods need batches of >= 2 points");
    }
    return total_loss(in, coefficients, method);
}

RunResult train(const TrainConfig& config, const SyntheticDataset& dataset) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const auto train_idx = dataset.indices(Split::train);
    if (train_idx.empty()) throw std::invalid_argument("train: dataset has no train split");

    RunResult result;
    result.method = config.method;
    result.seed = config.seed;
    MlpParams params = init_params(config.seed);
    Graph g;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Stream order_stream = Stream::derive(config.seed, "order", {static_cast<std::uint64_t>(epoch)});
        const auto perm = permutation(train_idx.size(), order_stream);
        std::vector<std::size_t> order(perm.size());
        for (std::size_t i = 0; i < perm.size(); ++i) order[i] = train_idx[perm[i]];
        const auto batches = make_batches(order, config.batch_size);

        EpochLosses acc;
        acc.epoch = epoch;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& batch = batches[b];
            g.clear();
            const ParamVars pv = bind(g, params, true);
            std::vector<const Matrix*> points;
            std::vector<int> labels;
            points.reserve(batch.size());
            labels.reserve(batch.size());
            for (std::size_t idx : batch) {
                points.push_back(&dataset.points[idx]);
                labels.push_back(dataset.labels[idx]);
            }
            Stream pair_stream = Stream::derive(
                config.seed, "pair", {static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(b)});
            const LossBreakdown lb =
                batch_loss(pv, points, labels, pair_stream, config.coefficients, config.method, config.model);
            const Var l_ori = lb.l_ori;

            check_finite(l_ori.item(), epoch, "l_ori");
            const double l_f = lb.l_f ? lb.l_f->item() : 0.0;
            const double l_charge = lb.l_charge ? lb.l_charge->item() : 0.0;
            const double l_neutrons = lb.l_neutrons ? lb.l_neutrons->item() : 0.0;
            check_finite(l_f, epoch, "l_f");
            check_finite(l_charge, epoch, "l_charge");
            check_finite(l_neutrons, epoch, "l_neutrons");
            if (lb.l_p) check_finite(lb.l_p->item(), epoch, "l_p");
            check_finite(lb.total.item(), epoch, "total");

            const double w = static_cast<double>(batch.size());
            acc.l_ori += w * l_ori.item();
            acc.l_f += w * l_f;
            acc.l_charge += w * l_charge;
            acc.l_neutrons += w * l_neutrons;
            acc.total += w * lb.total.item();

            g.backward(lb.total);
            const Matrix* grads[] = {&pv.w1.grad(), &pv.b1.grad(), &pv.w2.grad(), &pv.b2.grad()};
            double lr = config.learning_rate;
            if (config.clip_norm > 0.0) {
                double sq = 0.0;
                for (const Matrix* gm : grads)
                    for (double v : gm->values()) sq += v * v;
                const double norm = std::sqrt(sq);
                if (norm > config.clip_norm) lr *= config.clip_norm / norm;
            }
            sgd_step(params.w1, *grads[0], lr);
            sgd_step(params.b1, *grads[1], lr);
            sgd_step(params.w2, *grads[2], lr);
            sgd_step(params.b2, *grads[3], lr);
            if (!params.all_finite()) throw DivergenceError(epoch, "parameters");
        }
        const double n = static_cast<double>(train_idx.size());
        acc.l_ori /= n;
        acc.l_f /= n;
        acc.l_charge /= n;
        acc.l_neutrons /= n;
        acc.total /= n;
        result.losses.push_back(acc);
    }

    result.params = params;
    result.accuracy = evaluate(params, dataset, Split::test, config.model);
    result.train_accuracy = evaluate(params, dataset, Split::train, config.model);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

double evaluate(const MlpParams& params, const SyntheticDataset& dataset, Split which,
                const ModelOptions& options) {
    const auto idx = dataset.indices(which);
    if (idx.empty()) throw std::invalid_argument("evaluate: empty split");
    std::size_t correct = 0;
    for (std::size_t i : idx) {
        if (predict(params, dataset.points[i], options).prediction == dataset.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(idx.size());
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

Summary summarize(std::span<const double> values) {
    Summary s;
    if (values.empty()) return s;
    const double n = static_cast<double>(values.size());
    double total = 0.0;
    for (double v : values) total += v;
    s.mean = total / n;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / n);
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size() / 2;
    s.median = sorted.size() % 2 == 1 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
    return s;
}

namespace {

std::vector<ExperimentResult> aggregate(const std::vector<RunResult>& runs, std::span<const Method> methods) {
    std::vector<ExperimentResult> out;
    for (Method m : methods) {
        ExperimentResult e;
        e.method = m;
        for (const RunResult& r : runs) {
            if (r.method != m) continue;
            e.seeds.push_back(r.seed);
            e.accuracies.push_back(r.accuracy);
        }
        e.summary = summarize(e.accuracies);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

SweepResult sweep(const TrainConfig& base, std::span<const Method> methods,
                  std::span<const std::uint64_t> seeds, const SyntheticDataset& dataset,
                  unsigned threads) {
    if (seeds.empty()) throw ConfigError("sweep: need at least one seed");
    if (methods.empty()) throw ConfigError("sweep: need at least one method");

    struct Cell {
        Method method;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (Method m : methods)
        for (std::uint64_t s : seeds) cells.push_back({m, s});

    std::vector<RunResult> runs(cells.size());
    std::vector<std::string> errors(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            TrainConfig cfg = base;
            cfg.method = cells[i].method;
            cfg.seed = cells[i].seed;
            try {
                runs[i] = train(cfg, dataset);
            } catch (const std::exception& e) {
                errors[i] = std::string(method_name(cells[i].method)) + "/" +
                            std::to_string(cells[i].seed) + ": " + e.what();
            }
        }
    };
    const unsigned n_workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<std::string> failures;
    for (const auto& e : errors)
        if (!e.empty()) failures.push_back(e);
    if (!failures.empty()) {
        throw SweepError(std::to_string(failures.size()) + " sweep cell(s) failed; first: " + failures.front(),
                         failures);
    }
    SweepResult result;
    result.runs = std::move(runs);
    result.methods = aggregate(result.runs, methods);
    return result;
}

json results_to_json(const SweepResult& result) {
    json runs = json::array();
    for (const RunResult& r : result.runs) {
        json losses = json::array();
        for (const EpochLosses& e : r.losses) {
            losses.push_back(json::array({e.epoch, e.l_ori, e.l_f, e.l_charge, e.l_neutrons}));
        }
        runs.push_back(json{{"method", method_name(r.method)},
                            {"seed", r.seed},
                            {"accuracy", r.accuracy},
                            {"losses", std::move(losses)}});
    }
    json summary = json::object();
    for (const ExperimentResult& e : result.methods) {
        summary[std::string(method_name(e.method))] =
            json{{"mean", e.summary.mean}, {"std", e.summary.std}, {"median", e.summary.median}};
    }
    return json{{"schema", 1}, {"runs", std::move(runs)}, {"summary", std::move(summary)}};
}

SweepResult results_from_json(const json& j) {
    SweepResult out;
    try {
        if (j.at("schema").get<int>() != 1) throw ConfigError("unsupported results schema");
        std::vector<Method> methods;
        for (const json& r : j.at("runs")) {
            RunResult run;
            run.method = parse_method(r.at("method").get<std::string>());
            run.seed = r.at("seed").get<std::uint64_t>();
            run.accuracy = r.at("accuracy").get<double>();
            for (const json& e : r.at("losses")) {
                run.losses.push_back(EpochLosses{e.at(0).get<int>(), e.at(1).get<double>(),
                                                 e.at(2).get<double>(), e.at(3).get<double>(),
                                                 e.at(4).get<double>(), 0.0});
            }
            if (std::find(methods.begin(), methods.end(), run.method) == methods.end()) {
                methods.push_back(run.method);
            }
            out.runs.push_back(std::move(run));
        }
        out.methods = aggregate(out.runs, methods);
        const json& summary = j.at("summary");
        for (const ExperimentResult& e : out.methods) {
            const json& s = summary.at(std::string(method_name(e.method)));
            const double tol = 1e-12;
            if (std::abs(s.at("mean").get<double>() - e.summary.mean) > tol ||
                std::abs(s.at("std").get<double>() - e.summary.std) > tol ||
                std::abs(s.at("median").get<double>() - e.summary.median) > tol) {
                throw ConfigError("results summary for " + std::string(method_name(e.method)) +
                                  " does not match its per-seed accuracies");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed results JSON: ") + e.what());
    }
    return out;
}

}  // namespace atomize
