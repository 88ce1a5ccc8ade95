#include "atomize/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "atomize/errors.hpp"

namespace atomize {

double GradCheckReport::max_rel_error() const {
    double worst = 0.0;
    for (const auto& in : inputs) worst = std::max(worst, in.max_rel_error);
    return worst;
}

double gradient_error(double analytic, double numeric) {
    const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
    return std::abs(analytic - numeric) / denom;
}

namespace {

double evaluate(const ScalarFn& f, std::span<const Matrix> inputs) {
    Graph g;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const Matrix& m : inputs) vars.push_back(g.constant(m));
    Var out = f(g, vars);
    return out.item();
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, std::span<const Matrix> inputs,
                           const GradCheckOptions& options) {
    GradCheckReport report;

    Graph g;
    g.set_kink_radius(options.kink_factor * options.step);
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const Matrix& m : inputs) vars.push_back(g.leaf(m, "input"));
    Var out = f(g, vars);
    if (g.nonfinite_node()) {
        throw DomainError("grad_check: non-finite forward value at " + *g.nonfinite_node());
    }
    if (g.kink_node()) {
        report.skipped = true;
        report.passed = true;
        report.note = "non-differentiable point near " + *g.kink_node();
        return report;
    }
    g.backward(out);

    std::vector<Matrix> work(inputs.begin(), inputs.end());
    bool ok = true;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        InputCheck check;
        check.analytic = vars[k].grad();
        check.numeric = Matrix(inputs[k].rows(), inputs[k].cols());
        for (std::size_t i = 0; i < inputs[k].size(); ++i) {
            const double x0 = inputs[k][i];
            work[k][i] = x0 + options.step;
            const double plus = evaluate(f, work);
            work[k][i] = x0 - options.step;
            const double minus = evaluate(f, work);
            work[k][i] = x0;
            if (!std::isfinite(plus) || !std::isfinite(minus)) {
                throw DomainError("grad_check: non-finite value while perturbing input " +
                                  std::to_string(k));
            }
            check.numeric[i] = (plus - minus) / (2.0 * options.step);
            check.max_rel_error =
                std::max(check.max_rel_error, gradient_error(check.analytic[i], check.numeric[i]));
        }
        ok = ok && check.max_rel_error < options.tol;
        report.inputs.push_back(std::move(check));
    }
    report.passed = ok;
    return report;
}

}  // namespace atomize
