#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "atomize/autodiff.hpp"

namespace atomize {

// Builds a scalar (1x1) function of `inputs` on a fresh graph.
using ScalarFn = std::function<Var(Graph&, std::span<const Var> inputs)>;

struct GradCheckOptions {
    double step = 1e-6;
    double tol = 1e-5;
    // Inputs within kink_factor * step of a non-differentiable point are
    // skipped rather than compared.
    double kink_factor = 10.0;
};

struct InputCheck {
    Matrix analytic;
    Matrix numeric;
    // max |a - n| / max(1, |a|, |n|) over the entries.
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<InputCheck> inputs;
    bool passed = false;
    // Set when the point is within kink range of a max/1-norm/2-norm kink;
    // passed is then true and nothing was compared.
    bool skipped = false;
    std::string note;

    double max_rel_error() const;
};

// Reverse-mode gradient vs central finite differences.
// Throws DomainError naming the node if the forward pass is non-finite.
GradCheckReport grad_check(const ScalarFn& f, std::span<const Matrix> inputs,
                           const GradCheckOptions& options = {});

// Mixed relative error used by grad_check.
double gradient_error(double analytic, double numeric);

}  // namespace atomize
