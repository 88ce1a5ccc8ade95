#include "atomize/synthetic.hpp"

#include <cmath>
#include <istream>
#include <cstdlib>
#include <ostream>
#include <sstream>

#include "atomize/errors.hpp"
#include "atomize/io.hpp"
#include "atomize/rng.hpp"

namespace atomize {

namespace {

// Lower Cholesky factor (l11, l21, l22) of a PSD 2x2 covariance.
std::array<double, 3> cholesky(const Cov2& c) {
    const double l11 = std::sqrt(c.xx);
    const double l21 = l11 > 0.0 ? c.xy / l11 : 0.0;
    const double rest = c.yy - l21 * l21;
    return {l11, l21, std::sqrt(rest > 0.0 ? rest : 0.0)};
}

void validate_cov(const Cov2& c, const char* which) {
    const bool finite = std::isfinite(c.xx) && std::isfinite(c.xy) && std::isfinite(c.yy);
    if (!finite || c.xx < 0.0 || c.yy < 0.0 || c.xx * c.yy - c.xy * c.xy < 0.0) {
        throw ConfigError(std::string(which) + " is not positive semi-definite");
    }
    if (c.xx == 0.0 && c.xy != 0.0) {
        throw ConfigError(std::string(which) + " is not positive semi-definite");
    }
}

}  // namespace

void GmmSpec::validate() const {
    validate_cov(cov_0, "cov_0");
    validate_cov(cov_1, "cov_1");
    if (!(mix > 0.0 && mix < 1.0)) {
        throw ConfigError("mix must lie in (0, 1)");
    }
    for (double v : {mean_0[0], mean_0[1], mean_1[0], mean_1[1]}) {
        if (!std::isfinite(v)) throw ConfigError("means must be finite");
    }
}

std::vector<std::size_t> SyntheticDataset::indices(Split which) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < splits.size(); ++i) {
        if (splits[i] == which) out.push_back(i);
    }
    return out;
}

int majority_label(const std::array<int, kFeaturesPerPoint>& sources) {
    int ones = 0;
    for (int s : sources) ones += s;
    return 2 * ones > static_cast<int>(kFeaturesPerPoint) ? 1 : 0;
}

SyntheticDataset generate(const GmmSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (n == 0) {
        throw ConfigError("generate: n must be at least 1");
    }
    const auto chol0 = cholesky(spec.cov_0);
    const auto chol1 = cholesky(spec.cov_1);

    Stream stream = Stream::derive(seed, "gmm");
    SyntheticDataset ds;
    ds.seed = seed;
    ds.points.reserve(n);
    for (std::size_t p = 0; p < n; ++p) {
        Matrix point(kFeaturesPerPoint, kFeatureDim);
        std::array<int, kFeaturesPerPoint> src{};
        for (std::size_t f = 0; f < kFeaturesPerPoint; ++f) {
            const int c = stream.uniform() < spec.mix ? 0 : 1;
            const auto& mean = c == 0 ? spec.mean_0 : spec.mean_1;
            const auto& l = c == 0 ? chol0 : chol1;
            const auto [z0, z1] = stream.normal_pair();
            point(f, 0) = mean[0] + l[0] * z0;
            point(f, 1) = mean[1] + l[1] * z0 + l[2] * z1;
            src[f] = c;
        }
        ds.points.push_back(std::move(point));
        ds.labels.push_back(majority_label(src));
        ds.sources.push_back(src);
        ds.splits.push_back(Split::train);
    }
    return ds;
}

SplitIndices split(std::size_t n, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train fraction must lie in (0, 1)");
    }
    Stream stream = Stream::derive(seed, "split");
    const auto order = permutation(n, stream);
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return out;
}

void assign_split(SyntheticDataset& dataset, double train_fraction, std::uint64_t seed) {
    const auto parts = split(dataset.size(), train_fraction, seed);
    for (auto i : parts.train) dataset.splits[i] = Split::train;
    for (auto i : parts.test) dataset.splits[i] = Split::test;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {
constexpr const char* kHeader = "point_id,feature_idx,x,y,source_component,label,split";

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw ConfigError("dataset CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
    return v;
}

long parse_int(const std::string& s, std::size_t line_no) {
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw ConfigError("dataset CSV line " + std::to_string(line_no) + ": bad integer '" + s + "'");
    }
    return v;
}
}  // namespace

void write_dataset_csv(const SyntheticDataset& ds, std::ostream& out) {
    out << kHeader << '\n';
    for (std::size_t p = 0; p < ds.size(); ++p) {
        for (std::size_t f = 0; f < kFeaturesPerPoint; ++f) {
            out << p << ',' << f << ',' << format_double(ds.points[p](f, 0)) << ','
                << format_double(ds.points[p](f, 1)) << ',' << ds.sources[p][f] << ','
                << ds.labels[p] << ',' << (ds.splits[p] == Split::train ? "train" : "test") << '\n';
        }
    }
}

std::string dataset_csv(const SyntheticDataset& ds) {
    std::ostringstream ss;
    write_dataset_csv(ds, ss);
    return ss.str();
}

std::string dataset_hash(const SyntheticDataset& ds) { return hex_digest(dataset_csv(ds)); }

SyntheticDataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError("dataset CSV: empty input");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader) {
        throw ConfigError("dataset CSV: unexpected header '" + line + "'");
    }
    SyntheticDataset ds;
    std::size_t line_no = 1;
    std::size_t next_feature = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 7) {
            throw ConfigError("dataset CSV line " + std::to_string(line_no) + ": expected 7 fields");
        }
        const auto pid = static_cast<std::size_t>(parse_int(f[0], line_no));
        const auto fid = static_cast<std::size_t>(parse_int(f[1], line_no));
        const std::size_t expected_pid = fid == 0 ? ds.size() : ds.size() - 1;
        if (fid != next_feature || pid != expected_pid) {
            throw ConfigError("dataset CSV line " + std::to_string(line_no) + ": rows out of order");
        }
        if (fid == 0) {
            ds.points.emplace_back(kFeaturesPerPoint, kFeatureDim);
            ds.sources.emplace_back();
            ds.labels.push_back(static_cast<int>(parse_int(f[5], line_no)));
            if (f[6] == "train") {
                ds.splits.push_back(Split::train);
            } else if (f[6] == "test") {
                ds.splits.push_back(Split::test);
            } else {
                throw ConfigError("dataset CSV line " + std::to_string(line_no) + ": bad split");
            }
        }
        ds.points.back()(fid, 0) = parse_double(f[2], line_no);
        ds.points.back()(fid, 1) = parse_double(f[3], line_no);
        const long src = parse_int(f[4], line_no);
        if (src != 0 && src != 1) {
            throw ConfigError("dataset CSV line " + std::to_string(line_no) + ": bad source");
        }
        ds.sources.back()[fid] = static_cast<int>(src);
        next_feature = (fid + 1) % kFeaturesPerPoint;
    }
    if (next_feature != 0) {
        throw ConfigError("dataset CSV: truncated final point");
    }
    for (std::size_t p = 0; p < ds.size(); ++p) {
        if (ds.labels[p] != majority_label(ds.sources[p])) {
            throw ConfigError("dataset CSV: label of point " + std::to_string(p) +
                              " contradicts its sources");
        }
    }
    return ds;
}

}  // namespace atomize
