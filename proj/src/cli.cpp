#include "atomize/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "atomize/analysis.hpp"
#include "atomize/errors.hpp"
#include "atomize/grad_suite.hpp"
#include "atomize/io.hpp"
#include "atomize/synthetic.hpp"
#include "atomize/theory.hpp"
#include "atomize/trainer.hpp"

namespace atomize {

using nlohmann::json;
namespace fs = std::filesystem;

std::string manifest_hash(const std::string& command, const json& config, const json& inputs) {
    const json core{{"schema_version", kManifestSchema},
                    {"tool_version", kToolVersion},
                    {"command", command},
                    {"config", config},
                    {"inputs", inputs}};
    return hex_digest(core.dump());
}

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// Effective config and input hashes of one command, plus the files it wrote.
struct Manifest {
    std::string command;
    json config;
    json inputs = json::object();
    std::vector<std::string> outputs;
    std::string started_at = utc_now();

    std::string hash() const { return manifest_hash(command, config, inputs); }

    void write(const fs::path& path) const {
        const json j{{"schema_version", kManifestSchema},
                     {"tool_version", kToolVersion},
                     {"command", command},
                     {"config", config},
                     {"inputs", inputs},
                     {"manifest_hash", hash()},
                     {"outputs", outputs},
                     {"started_at", started_at},
                     {"finished_at", utc_now()}};
        write_file_atomic(path, j.dump(2) + "\n");
    }
};

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
}

SyntheticDataset load_dataset(const fs::path& path) {
    std::istringstream in(read_file(path));
    return read_dataset_csv(in);
}

fs::path with_suffix(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

// charges.csv -> charges_atoms.csv
fs::path sibling_with_tag(const fs::path& p, const std::string& tag) {
    return p.parent_path() / (p.stem().string() + tag + p.extension().string());
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

unsigned thread_cap(unsigned requested) {
    unsigned n = std::max(1u, requested);
    if (const char* env = std::getenv("ATOMIZE_THREADS")) {
        char* end = nullptr;
        const unsigned long cap = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

std::vector<Method> parse_methods(const std::string& text) {
    if (text == "all") return {std::begin(kAllMethods), std::end(kAllMethods)};
    std::vector<Method> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        const Method m = parse_method(item);
        if (std::find(out.begin(), out.end(), m) != out.end()) {
            throw ConfigError("method '" + item + "' listed twice");
        }
        out.push_back(m);
    }
    if (out.empty()) throw ConfigError("no methods given; valid: {ce,l1,l2,atom}");
    return out;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw ConfigError("not a number: '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("empty number list");
    return out;
}

// Training flags shared by train and sweep. Unset flags leave the config
// file's (or the default) value alone.
struct TrainFlags {
    std::string config_file;
    std::optional<int> epochs;
    std::optional<std::size_t> batch_size;
    std::optional<double> lr;
    std::optional<double> clip_norm;
    std::optional<double> coef;
    std::optional<double> c_f, c_charge, c_neutrons, c_p;
    std::optional<std::uint64_t> data_seed;

    void attach(CLI::App* app) {
        app->add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
        app->add_option("--epochs", epochs, "Training epochs");
        app->add_option("--batch-size", batch_size, "Minibatch size");
        app->add_option("--lr", lr, "SGD learning rate");
        app->add_option("--clip-norm", clip_norm, "Global gradient-norm cap (0 disables)");
        app->add_option("--coef", coef, "Sets c_f, c_charge and c_neutrons together");
        app->add_option("--c-f", c_f, "Coulomb loss weight");
        app->add_option("--c-charge", c_charge, "Charge balance weight");
        app->add_option("--c-neutrons", c_neutrons, "Neutron count weight");
        app->add_option("--c-p", c_p, "p-norm baseline weight");
        app->add_option("--data-seed", data_seed, "Seed of the generated dataset (no --data)");
    }

    TrainConfig resolve() const {
        TrainConfig c;
        if (!config_file.empty()) c = merge_config(c, read_json(config_file));
        if (epochs) c.epochs = *epochs;
        if (batch_size) c.batch_size = *batch_size;
        if (lr) c.learning_rate = *lr;
        if (clip_norm) c.clip_norm = *clip_norm;
        if (coef) c.coefficients.c_f = c.coefficients.c_charge = c.coefficients.c_neutrons = *coef;
        if (c_f) c.coefficients.c_f = *c_f;
        if (c_charge) c.coefficients.c_charge = *c_charge;
        if (c_neutrons) c.coefficients.c_neutrons = *c_neutrons;
        if (c_p) c.coefficients.c_p = *c_p;
        if (data_seed) c.data.seed = *data_seed;
        return c;
    }
};

// --data if given, else the dataset described by the config.
SyntheticDataset obtain_dataset(const std::string& data_path, const TrainConfig& config) {
    if (!data_path.empty()) return load_dataset(data_path);
    return make_dataset(config.data);
}

json data_input(const std::string& data_path, const std::string& data_hash) {
    json j{{"data_hash", data_hash}};
    j["data_source"] = data_path.empty() ? "generated" : "file";
    return j;
}

// ---------------------------------------------------------------------------

struct GenDataArgs {
    std::uint64_t seed = 7;
    std::size_t n = 2000;
    double train_fraction = 0.5;
    std::string spec_file;
    std::string out;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
    GmmSpec spec;
    if (!a.spec_file.empty()) spec = merge_gmm_spec(spec, read_json(a.spec_file));
    spec.validate();

    SyntheticDataset ds = generate(spec, a.n, a.seed);
    assign_split(ds, a.train_fraction, a.seed);
    const std::string csv = dataset_csv(ds);

    Manifest m;
    m.command = "gen-data";
    m.config = json{{"gmm", to_json(spec)}, {"n", a.n}, {"seed", a.seed}, {"train_fraction", a.train_fraction}};
    const fs::path csv_path = a.out;
    const fs::path spec_path = with_suffix(csv_path, ".spec.json");
    m.outputs = {csv_path.string(), spec_path.string()};
    const std::string hash = m.hash();
    const std::string data_hash = hex_digest(csv);

    ensure_parent(csv_path);
    write_file_atomic(csv_path, csv);
    json sidecar = m.config;
    sidecar["data_hash"] = data_hash;
    sidecar["manifest_hash"] = hash;
    write_json(spec_path, sidecar);
    m.write(with_suffix(csv_path, ".manifest.json"));
    out << "wrote " << ds.size() * kFeaturesPerPoint << " feature rows (" << ds.size() << " points) to "
        << csv_path.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string method;
    std::optional<std::uint64_t> seed;
    std::string data;
    std::string out;
    TrainFlags flags;
};

json checkpoint_json(const RunResult& r, const TrainConfig& cfg, const std::string& data_hash,
                     const std::string& manifest) {
    json j = params_to_json(r.params);
    j["method"] = method_name(r.method);
    j["run_seed"] = r.seed;
    j["config"] = to_json(cfg);
    j["config_hash"] = config_hash(cfg);
    j["data_hash"] = data_hash;
    j["manifest_hash"] = manifest;
    return j;
}

std::string losses_csv(const RunResult& r) {
    std::string s = "epoch,l_ori,l_f,l_charge,l_neutrons,total\n";
    for (const EpochLosses& e : r.losses) {
        s += std::to_string(e.epoch) + "," + format_double(e.l_ori) + "," + format_double(e.l_f) + "," +
             format_double(e.l_charge) + "," + format_double(e.l_neutrons) + "," + format_double(e.total) + "\n";
    }
    return s;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    TrainConfig cfg = a.flags.resolve();
    if (!a.method.empty()) cfg.method = parse_method(a.method);
    if (a.seed) cfg.seed = *a.seed;
    cfg.validate();

    const SyntheticDataset ds = obtain_dataset(a.data, cfg);
    const std::string data_hash = dataset_hash(ds);

    Manifest m;
    m.command = "train";
    m.config = to_json(cfg);
    m.inputs = data_input(a.data, data_hash);
    const fs::path dir = a.out;
    m.outputs = {(dir / "checkpoint.json").string(), (dir / "result.json").string(),
                 (dir / "losses.csv").string()};
    const std::string hash = m.hash();

    const RunResult r = train(cfg, ds);

    SweepResult single;
    single.runs.push_back(r);
    single.methods = {ExperimentResult{r.method, {r.seed}, {r.accuracy}, summarize(std::span(&r.accuracy, 1))}};
    json result = results_to_json(single);
    result["train_accuracy"] = r.train_accuracy;
    result["manifest_hash"] = hash;

    fs::create_directories(dir);
    write_json(dir / "checkpoint.json", checkpoint_json(r, cfg, data_hash, hash));
    write_json(dir / "result.json", result);
    write_file_atomic(dir / "losses.csv", losses_csv(r));
    m.write(dir / "manifest.json");

    out << "method " << method_name(r.method) << " seed " << r.seed << ": test accuracy "
        << format_double(r.accuracy) << ", train accuracy " << format_double(r.train_accuracy) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string methods = "all";
    std::uint64_t seeds = 10;
    std::uint64_t first_seed = 0;
    std::string data;
    std::string out;
    std::string checkpoints;
    unsigned parallel = 1;
    TrainFlags flags;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    TrainConfig cfg = a.flags.resolve();
    cfg.validate();
    const std::vector<Method> methods = parse_methods(a.methods);
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 0; s < a.seeds; ++s) seeds.push_back(a.first_seed + s);

    const SyntheticDataset ds = obtain_dataset(a.data, cfg);
    const std::string data_hash = dataset_hash(ds);

    Manifest m;
    m.command = "sweep";
    json method_names = json::array();
    for (Method x : methods) method_names.push_back(method_name(x));
    m.config = json{{"train", to_json(cfg)}, {"methods", method_names}, {"seeds", seeds}};
    m.inputs = data_input(a.data, data_hash);
    const fs::path out_path = a.out;
    m.outputs = {out_path.string()};
    const std::string hash = m.hash();

    SweepResult result;
    try {
        result = sweep(cfg, methods, seeds, ds, thread_cap(a.parallel));
    } catch (const SweepError& e) {
        for (const auto& f : e.failures) err << "failed cell " << f << "\n";
        return 1;
    }

    json j = results_to_json(result);
    j["manifest_hash"] = hash;
    ensure_parent(out_path);
    write_json(out_path, j);
    if (!a.checkpoints.empty()) {
        const fs::path dir = a.checkpoints;
        fs::create_directories(dir);
        for (const RunResult& r : result.runs) {
            TrainConfig rc = cfg;
            rc.method = r.method;
            rc.seed = r.seed;
            const fs::path p =
                dir / (std::string(method_name(r.method)) + "_seed" + std::to_string(r.seed) + ".json");
            write_json(p, checkpoint_json(r, rc, data_hash, hash));
            m.outputs.push_back(p.string());
        }
    }
    m.write(with_suffix(out_path, ".manifest.json"));

    out << "method   mean        std         median\n";
    for (const ExperimentResult& e : result.methods) {
        out << std::left << std::setw(8) << method_name(e.method) << " " << std::setw(11)
            << format_double(std::round(e.summary.mean * 1e6) / 1e6) << " " << std::setw(11)
            << format_double(std::round(e.summary.std * 1e6) / 1e6) << " "
            << format_double(std::round(e.summary.median * 1e6) / 1e6) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct TheoryArgs {
    std::optional<double> c1, c2;
    double r_tilde = 1.0;
    std::string scan_k;
    std::string out;
    std::size_t samples = 50;
};

int cmd_theory(const TheoryArgs& a, std::ostream& out, std::ostream& err) {
    out << std::setprecision(10);
    if (!a.scan_k.empty()) {
        const std::vector<double> ks = parse_doubles(a.scan_k);
        for (double k : ks) {
            if (!(k > 1.0)) {
                err << "no balance point: k = " << k << " must exceed 1 (c1 < c2)\n";
                return 1;
            }
        }
        const auto rows = monotonicity_scan(ks, a.r_tilde);
        out << "k,r_tilde,closed_form,numeric\n";
        for (const BalanceRow& r : rows) {
            out << format_double(r.k) << "," << format_double(r.r_tilde) << "," << format_double(r.closed_form)
                << "," << format_double(r.numeric) << "\n";
        }
        if (!a.out.empty()) {
            std::ostringstream csv;
            write_energy_curve_csv(rows, a.samples, csv);
            Manifest m;
            m.command = "theory";
            m.config = json{{"scan_k", ks}, {"r_tilde", a.r_tilde}, {"samples", a.samples}};
            m.outputs = {a.out};
            ensure_parent(a.out);
            write_file_atomic(a.out, csv.str());
            m.write(with_suffix(a.out, ".manifest.json"));
        }
        return 0;
    }
    if (!a.c1 || !a.c2) {
        err << "theory needs --c1 and --c2, or --scan-k\n";
        return 2;
    }
    const PairPotentialSpec spec{*a.c1, *a.c2, a.r_tilde};
    spec.validate();
    try {
        const double closed = balance_closed_form(spec);
        const double numeric = balance_numeric(spec);
        const double gap = std::abs(closed - numeric);
        out << "closed_form " << closed << "\n"
            << "numeric     " << numeric << "\n"
            << "abs_gap     " << gap << "\n"
            << "rel_gap     " << gap / std::abs(closed) << "\n";
    } catch (const NoBalancePoint& e) {
        err << e.what() << "\n";
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct GradCheckArgs {
    double tol = 1e-4;
    std::uint64_t seed = 0;
    int batches = 20;
    std::string out;
};

int cmd_grad_check(const GradCheckArgs& a, std::ostream& out) {
    SuiteOptions opts;
    opts.tol = a.tol;
    opts.seed = a.seed;
    opts.batches = a.batches;
    const auto results = run_checks(default_checks(opts), opts);
    std::size_t failed = 0, skipped = 0;
    json report = json::array();
    for (const SuiteResult& r : results) {
        const char* status = !r.passed ? "FAIL" : r.skipped ? "SKIP" : "PASS";
        failed += r.passed ? 0 : 1;
        skipped += r.skipped ? 1 : 0;
        std::ostringstream err_text;
        err_text << std::scientific << std::setprecision(2) << r.max_rel_error;
        out << status << " " << r.name << " max_rel_err=" << err_text.str();
        if (!r.note.empty()) out << " (" << r.note << ")";
        out << "\n";
        report.push_back(json{{"name", r.name}, {"status", status}, {"max_rel_error", r.max_rel_error},
                              {"note", r.note}});
    }
    out << results.size() << " checks, " << failed << " failed, " << skipped << " skipped at tol " << a.tol
        << "\n";
    if (!a.out.empty()) {
        Manifest m;
        m.command = "grad-check";
        m.config = json{{"tol", a.tol}, {"seed", a.seed}, {"batches", a.batches}};
        m.outputs = {a.out};
        ensure_parent(a.out);
        write_json(a.out, json{{"checks", report}, {"failed", failed}, {"manifest_hash", m.hash()}});
        m.write(with_suffix(a.out, ".manifest.json"));
    }
    return failed == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct ExportArgs {
    std::string what;
    std::string checkpoint;
    std::string data;
    std::string out;
    std::string atoms_out;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
    const json ck = read_json(a.checkpoint);
    const SyntheticDataset ds = load_dataset(a.data);
    const std::string data_hash = dataset_hash(ds);
    std::string ck_hash, ck_config_hash;
    TrainConfig cfg;
    try {
        ck_hash = ck.at("data_hash").get<std::string>();
        ck_config_hash = ck.at("config_hash").get<std::string>();
        cfg = merge_config(cfg, ck.at("config"));
    } catch (const json::exception& e) {
        throw ConfigError("checkpoint is missing its provenance fields: " + std::string(e.what()));
    }
    if (config_hash(cfg) != ck_config_hash) {
        throw MismatchError("checkpoint config does not match its config_hash");
    }
    if (ck_hash != data_hash) {
        throw MismatchError("checkpoint was trained on data " + ck_hash + " but " + a.data + " hashes to " +
                            data_hash);
    }
    const MlpParams params = params_from_json(ck);

    Manifest m;
    m.command = "export";
    m.config = json{{"what", a.what}, {"checkpoint_config_hash", ck_config_hash}};
    m.inputs = json{{"data_hash", data_hash}, {"checkpoint_params", hex_digest(params_to_json(params).dump())}};
    const fs::path out_path = a.out;
    ensure_parent(out_path);

    if (a.what == "latent") {
        const LatentDump dump = export_latent(params, ds, cfg.method, cfg.seed, cfg.model);
        std::ostringstream csv;
        write_latent_csv(dump, csv);
        const fs::path summary_path = with_suffix(out_path, ".summary.json");
        m.outputs = {out_path.string(), summary_path.string()};
        const LatentSummary& s = dump.summary;
        const json summary{{"extent_x", s.extent_x},
                           {"extent_y", s.extent_y},
                           {"min_cross_class", s.min_cross_class},
                           {"mean_cross_class", s.mean_cross_class},
                           {"cross_pairs", s.cross_pairs},
                           {"rows", dump.rows.size()},
                           {"manifest_hash", m.hash()}};
        write_file_atomic(out_path, csv.str());
        write_json(summary_path, summary);
        out << "wrote " << dump.rows.size() << " latent rows; extent " << format_double(s.extent_x) << " x "
            << format_double(s.extent_y) << ", min cross-class distance " << format_double(s.min_cross_class)
            << "\n";
    } else {
        const ChargeReport report = export_charges(params, ds, cfg.model);
        std::ostringstream charges, atoms;
        write_charges_csv(report, charges);
        write_atom_summary_csv(report, atoms);
        const fs::path atoms_path = a.atoms_out.empty() ? sibling_with_tag(out_path, "_atoms") : fs::path(a.atoms_out);
        ensure_parent(atoms_path);
        m.outputs = {out_path.string(), atoms_path.string()};
        write_file_atomic(out_path, charges.str());
        write_file_atomic(atoms_path, atoms.str());
        out << "wrote " << report.charges.size() << " charge rows and " << report.atoms.size()
            << " atom rows; mean |sum q| " << format_double(report.mean_abs_total_charge()) << "\n";
    }
    m.write(with_suffix(out_path, ".manifest.json"));
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Atom-modeling regularization experiments on synthetic mixture data", "atomize"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a labelled synthetic dataset CSV");
    gen_cmd->add_option("--seed", gen.seed, "Dataset seed")->capture_default_str();
    gen_cmd->add_option("--n", gen.n, "Number of points")->check(CLI::PositiveNumber)->capture_default_str();
    gen_cmd->add_option("--train-fraction", gen.train_fraction, "Share of points in the train split")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    gen_cmd->add_option("--spec-file", gen.spec_file, "JSON mixture spec")->check(CLI::ExistingFile);
    gen_cmd->add_option("--out", gen.out, "Output CSV path")->required();

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "Train one model and write its checkpoint");
    train_cmd->add_option("--method", tr.method, "ce, l1, l2 or atom");
    train_cmd->add_option("--seed", tr.seed, "Run seed");
    train_cmd->add_option("--data", tr.data, "Dataset CSV (default: generate from config)")
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--out", tr.out, "Output directory")->required();
    tr.flags.attach(train_cmd);

    SweepArgs sw;
    auto* sweep_cmd = app.add_subcommand("sweep", "Train every (method, seed) cell and summarize");
    sweep_cmd->add_option("--methods", sw.methods, "'all' or a comma list")->capture_default_str();
    sweep_cmd->add_option("--seeds", sw.seeds, "Number of seeds")->check(CLI::PositiveNumber)->capture_default_str();
    sweep_cmd->add_option("--first-seed", sw.first_seed, "First run seed")->capture_default_str();
    sweep_cmd->add_option("--data", sw.data, "Dataset CSV (default: generate from config)")
        ->check(CLI::ExistingFile);
    sweep_cmd->add_option("--out", sw.out, "Results JSON path")->required();
    sweep_cmd->add_option("--checkpoints", sw.checkpoints, "Directory for per-run checkpoints");
    sweep_cmd->add_option("--parallel", sw.parallel, "Worker threads (capped by ATOMIZE_THREADS)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sw.flags.attach(sweep_cmd);

    TheoryArgs th;
    auto* theory_cmd = app.add_subcommand("theory", "Balance distance of the two-atom potential");
    theory_cmd->add_option("--c1", th.c1, "Like-charge coefficient");
    theory_cmd->add_option("--c2", th.c2, "Unlike-charge coefficient");
    theory_cmd->add_option("--rtilde", th.r_tilde, "Mean nucleus radius")->capture_default_str();
    theory_cmd->add_option("--scan-k", th.scan_k, "Comma list of k = c2/c1 values");
    theory_cmd->add_option("--out", th.out, "Energy-curve CSV (scan mode)");
    theory_cmd->add_option("--samples", th.samples, "Curve samples per k")->check(CLI::PositiveNumber);

    GradCheckArgs gc;
    auto* gc_cmd = app.add_subcommand("grad-check", "Compare every gradient with finite differences");
    gc_cmd->add_option("--tol", gc.tol, "Relative error tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    gc_cmd->add_option("--seed", gc.seed, "Seed for the random inputs")->capture_default_str();
    gc_cmd->add_option("--batches", gc.batches, "Random batches per method")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gc_cmd->add_option("--out", gc.out, "JSON report path");

    ExportArgs ex;
    auto* export_cmd = app.add_subcommand("export", "Export latent or charge CSVs from a checkpoint");
    export_cmd->add_option("--what", ex.what, "latent or charges")
        ->required()
        ->check(CLI::IsMember({"latent", "charges"}));
    export_cmd->add_option("--checkpoint", ex.checkpoint, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
    export_cmd->add_option("--data", ex.data, "Dataset CSV the checkpoint was trained on")
        ->required()
        ->check(CLI::ExistingFile);
    export_cmd->add_option("--out", ex.out, "Output CSV path")->required();
    export_cmd->add_option("--atoms-out", ex.atoms_out, "Per-atom summary CSV (charges)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*gen_cmd) return cmd_gen_data(gen, out);
        if (*train_cmd) return cmd_train(tr, out);
        if (*sweep_cmd) return cmd_sweep(sw, out, err);
        if (*theory_cmd) return cmd_theory(th, out, err);
        if (*gc_cmd) return cmd_grad_check(gc, out);
        if (*export_cmd) return cmd_export(ex, out);
    } catch (const ConfigError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        err << "diverged: " << e.what() << "\n";
        return 3;
    } catch (const MismatchError& e) {
        err << "refusing: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace atomize
