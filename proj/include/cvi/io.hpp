#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvi/backward.hpp"
#include "cvi/catalog.hpp"
#include "cvi/fd.hpp"
#include "cvi/lattice.hpp"
#include "cvi/validation.hpp"

namespace cvi {

inline constexpr int schema_version = 1;

/// Malformed or out-of-range run configuration.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class LadderEngine { monte_carlo, lattice };
enum class OracleEngine { fd, lattice };

struct OutputOptions {
    std::string dir = "out";
    bool dump_paths = false;
    bool dump_steps = false;
    bool dump_regression = false;
};

struct RunConfig {
    std::string problem;
    CatalogOverrides overrides;
    std::optional<std::uint64_t> seed;  // mandatory by the time a command runs
    SchemeConfig scheme;
    std::vector<std::uint64_t> ladder_schedule{1, 2, 4, 8, 16, 32, 64};
    LadderEngine ladder_engine = LadderEngine::monte_carlo;
    OracleEngine oracle_engine = OracleEngine::fd;
    FdConfig fd;
    LatticeSpec lattice;
    std::size_t validate_samples = 1000;
    OutputOptions outputs;
};

/// Strict parse: unknown keys and out-of-range values throw ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json scheme_to_json(const SchemeConfig& scheme);
nlohmann::json result_to_json(const SolveResult& result);
nlohmann::json ladder_to_json(const LadderReport& report, LadderEngine engine);
nlohmann::json validation_to_json(const ValidationReport& report);
nlohmann::json compare_to_json(const CompareReport& report, const FdConfig& fd);
nlohmann::json grid_to_json(const GridSolution& grid, const FdConfig& fd, const ProblemSpec& spec);
nlohmann::json lattice_to_json(const LatticeSolution& sol);
nlohmann::json paths_summary_to_json(const PathBundle& bundle, const std::string& problem, std::uint64_t seed);

void write_paths_csv(std::ostream& out, const PathBundle& bundle);
void write_steps_csv(std::ostream& out, const SolveResult& result, std::size_t dim, std::size_t regimes);
void write_regression_csv(std::ostream& out, const SolveResult& result);
/// Every `time_stride`-th time level plus the last one.
void write_grid_csv(std::ostream& out, const GridSolution& grid, std::size_t time_stride = 1);

}  // namespace cvi
