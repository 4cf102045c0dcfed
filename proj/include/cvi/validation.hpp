#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cvi/problem.hpp"

namespace cvi {

enum class CheckStatus { pass, warn };

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::pass;
    std::string detail;
    std::optional<double> value;
};

struct ValidationReport {
    std::string problem;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
    std::vector<CheckResult> checks;

    std::size_t warning_count() const;
};

/// Statistical spot-checks of the structural assumptions on a problem.
///
/// Hard failures (ValidationError): an intensity weight <= 0 or malformed
/// dimensions. Everything else is sampled and reported; sampled Lipschitz
/// ratios are informational because sampling cannot prove continuity.
/// Deterministic in `seed`.
ValidationReport validate_problem(const ProblemSpec& spec, std::size_t sample_count, std::uint64_t seed);

}  // namespace cvi
