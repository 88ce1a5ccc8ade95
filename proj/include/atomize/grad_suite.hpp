#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "atomize/grad_check.hpp"

namespace atomize {

struct NamedCheck {
    std::string name;
    ScalarFn fn;
    std::vector<Matrix> inputs;
};

struct SuiteOptions {
    double tol = 1e-4;
    double step = 1e-6;
    // Random 4-point batches per end-to-end method check.
    int batches = 20;
    std::uint64_t seed = 0;
};

struct SuiteResult {
    std::string name;
    bool passed = false;
    bool skipped = false;
    double max_rel_error = 0.0;
    std::string note;
};

// Every op family, every loss term, and the full objective of each method on
// `batches` random 4-point batches.
std::vector<NamedCheck> default_checks(const SuiteOptions& options);

// Runs each check; a non-finite forward pass counts as a failure whose note
// names the node.
std::vector<SuiteResult> run_checks(const std::vector<NamedCheck>& checks, const SuiteOptions& options);

bool all_passed(const std::vector<SuiteResult>& results);

}  // namespace atomize
