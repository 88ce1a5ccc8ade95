#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace atomize {

// Two-atom potential as a function of nucleus separation d:
//   f(d) = c1 / d - c2 / (d + r_tilde)
// c1 sums q_i q_j over like-charged pairs, c2 sums -q_i q_j over unlike pairs,
// r_tilde = (r1 + r2) / 2.
struct PairPotentialSpec {
    double c1 = 1.0;
    double c2 = 1.0;
    double r_tilde = 0.0;

    double k() const { return c2 / c1; }
    // Throws std::invalid_argument unless c1 > 0, c2 > 0, r_tilde >= 0.
    void validate() const;
};

// Raised when f has no interior minimum (c1 >= c2, r_tilde == 0, or the
// search bracket misses it).
struct NoBalancePoint : std::domain_error {
    using std::domain_error::domain_error;
};

// Throws std::domain_error for d <= 0.
double potential(const PairPotentialSpec& spec, double d);
double potential_derivative(const PairPotentialSpec& spec, double d);

// (c1 + sqrt(c1 c2)) / (c2 - c1) * r_tilde, i.e. r_tilde (sqrt(k) + 1) / (k - 1).
double balance_closed_form(const PairPotentialSpec& spec);

struct NumericOptions {
    double d_min = 1e-9;
    // Upper bracket end; <= 0 means 1e4 * r_tilde.
    double d_max = 0.0;
    double tol = 1e-10;
};

// Golden-section search of potential() over [d_min, d_max].
double balance_numeric(const PairPotentialSpec& spec, const NumericOptions& options = {});
// Bisection on the sign of potential_derivative(); secondary cross-check.
double balance_bisection(const PairPotentialSpec& spec, const NumericOptions& options = {});

struct BalanceRow {
    double k = 0.0;
    double r_tilde = 0.0;
    double closed_form = 0.0;
    double numeric = 0.0;
};

// d*(k) with c1 = 1, c2 = k. Every k must exceed 1.
std::vector<BalanceRow> monotonicity_scan(std::span<const double> ks, double r_tilde);

// CSV: k,r_tilde,d,potential,is_balance_point. `samples` log-spaced
// separations in [d*/20, 20 d*] per k, plus the balance point itself.
void write_energy_curve_csv(std::span<const BalanceRow> rows, std::size_t samples, std::ostream& out);

}  // namespace atomize
