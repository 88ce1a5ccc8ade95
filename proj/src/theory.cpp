#include "atomize/theory.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "atomize/io.hpp"

namespace atomize {

void PairPotentialSpec::validate() const {
    if (!(c1 > 0.0) || !(c2 > 0.0) || !(r_tilde >= 0.0) || !std::isfinite(c1) ||
        !std::isfinite(c2) || !std::isfinite(r_tilde)) {
        throw std::invalid_argument("pair potential needs c1 > 0, c2 > 0, r_tilde >= 0");
    }
}

double potential(const PairPotentialSpec& spec, double d) {
    if (!(d > 0.0)) {
        throw std::domain_error("potential: separation must be positive");
    }
    return spec.c1 / d - spec.c2 / (d + spec.r_tilde);
}

double potential_derivative(const PairPotentialSpec& spec, double d) {
    const double far = d + spec.r_tilde;
    return -spec.c1 / (d * d) + spec.c2 / (far * far);
}

namespace {

void require_balance(const PairPotentialSpec& spec) {
    spec.validate();
    if (spec.c1 >= spec.c2) {
        throw NoBalancePoint("no balance point: requires c1 < c2 (got c1 = " +
                             format_double(spec.c1) + ", c2 = " + format_double(spec.c2) + ")");
    }
    if (spec.r_tilde == 0.0) {
        throw NoBalancePoint("no balance point: r_tilde = 0 is degenerate");
    }
}

std::pair<double, double> bracket(const PairPotentialSpec& spec, const NumericOptions& o) {
    const double hi = o.d_max > 0.0 ? o.d_max : 1e4 * spec.r_tilde;
    if (!(o.d_min > 0.0) || !(hi > o.d_min)) {
        throw std::invalid_argument("balance search: invalid bracket");
    }
    return {o.d_min, hi};
}

}  // namespace

double balance_closed_form(const PairPotentialSpec& spec) {
    require_balance(spec);
    return (spec.c1 + std::sqrt(spec.c1 * spec.c2)) / (spec.c2 - spec.c1) * spec.r_tilde;
}

double balance_numeric(const PairPotentialSpec& spec, const NumericOptions& options) {
    spec.validate();
    auto [lo, hi] = bracket(spec, options);
    const double lo0 = lo, hi0 = hi;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;

    double a = hi - inv_phi * (hi - lo);
    double b = lo + inv_phi * (hi - lo);
    double fa = potential(spec, a);
    double fb = potential(spec, b);
    // Relative-or-absolute stopping so huge brackets still converge.
    while (hi - lo > options.tol * std::max(1.0, std::abs(lo))) {
        if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = potential(spec, a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = potential(spec, b);
        }
    }
    const double best = 0.5 * (lo + hi);
    // A minimizer pinned to either end of the bracket is not interior.
    const double edge = 1e-6 * (hi0 - lo0);
    if (best - lo0 < edge || hi0 - best < edge) {
        throw NoBalancePoint("no interior minimum of the pair potential in [" + format_double(lo0) +
                             ", " + format_double(hi0) + "]");
    }
    return best;
}

double balance_bisection(const PairPotentialSpec& spec, const NumericOptions& options) {
    spec.validate();
    auto [lo, hi] = bracket(spec, options);
    if (!(potential_derivative(spec, lo) < 0.0 && potential_derivative(spec, hi) > 0.0)) {
        throw NoBalancePoint("derivative does not change sign over the bracket");
    }
    for (int it = 0; it < 2000 && hi - lo > options.tol * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (potential_derivative(spec, mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<BalanceRow> monotonicity_scan(std::span<const double> ks, double r_tilde) {
    std::vector<BalanceRow> rows;
    rows.reserve(ks.size());
    for (double k : ks) {
        if (!(k > 1.0)) {
            throw NoBalancePoint("monotonicity scan needs every k > 1, got " + format_double(k));
        }
        PairPotentialSpec spec{1.0, k, r_tilde};
        BalanceRow row{k, r_tilde, balance_closed_form(spec), 0.0};
        NumericOptions opts;
        opts.d_max = std::max(1e4 * r_tilde, 100.0 * row.closed_form);
        row.numeric = balance_numeric(spec, opts);
        rows.push_back(row);
    }
    return rows;
}

void write_energy_curve_csv(std::span<const BalanceRow> rows, std::size_t samples, std::ostream& out) {
    out << "k,r_tilde,d,potential,is_balance_point\n";
    for (const BalanceRow& row : rows) {
        const PairPotentialSpec spec{1.0, row.k, row.r_tilde};
        const double lo = row.closed_form / 20.0;
        const double hi = row.closed_form * 20.0;
        std::vector<std::pair<double, bool>> ds;
        for (std::size_t i = 0; i < samples; ++i) {
            const double t = samples == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(samples - 1);
            ds.emplace_back(lo * std::pow(hi / lo, t), false);
        }
        ds.emplace_back(row.closed_form, true);
        std::stable_sort(ds.begin(), ds.end(),
                         [](const auto& x, const auto& y) { return x.first < y.first; });
        for (const auto& [d, balance] : ds) {
            out << format_double(row.k) << ',' << format_double(row.r_tilde) << ',' << format_double(d)
                << ',' << format_double(potential(spec, d)) << ',' << (balance ? 1 : 0) << '\n';
        }
    }
}

}  // namespace atomize
