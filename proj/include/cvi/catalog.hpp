#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cvi/problem.hpp"

namespace cvi {

struct CatalogEntry {
    std::string name;
    std::string description;
};

/// Parameter overrides accepted by every catalog problem. Vector overrides
/// carry one entry per regime.
struct CatalogOverrides {
    std::optional<double> horizon;
    std::optional<double> x0;
    std::optional<long> i0;  // one-based regime label
    std::optional<std::vector<double>> sigma;
    std::optional<std::vector<double>> drift;
    std::optional<std::vector<double>> rewards;
    std::optional<std::vector<double>> intensity;
    std::optional<std::vector<std::vector<double>>> costs;
};

std::vector<CatalogEntry> list_catalog();

/// Throws std::out_of_range for an unknown name and std::invalid_argument for
/// overrides of the wrong size.
ProblemSpec make_catalog_problem(std::string_view name, const CatalogOverrides& overrides = {});

}  // namespace cvi
