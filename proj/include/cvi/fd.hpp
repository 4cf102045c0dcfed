#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cvi/backward.hpp"
#include "cvi/problem.hpp"

namespace cvi {

enum class FdMode { projection, penalized };

struct FdConfig {
    std::size_t intervals = 400;  // M; the grid has M + 1 points
    std::optional<double> x_min;  // default x0 - 6 sigma_max sqrt(T)
    std::optional<double> x_max;
    double dt = 1e-3;
    FdMode mode = FdMode::projection;
    std::uint64_t n = 0;  // penalized mode only
    bool facelift = true;
    double theta = 0.5;
};

/// v_i(t_k, x_j) on a uniform grid, d = 1.
struct GridSolution {
    std::vector<double> times;
    std::vector<double> x;
    std::size_t regimes = 1;
    std::vector<double> values;  // [regime][time][x]

    double& at(std::size_t i, std::size_t k, std::size_t j) { return values[(i * times.size() + k) * x.size() + j]; }
    double at(std::size_t i, std::size_t k, std::size_t j) const {
        return values[(i * times.size() + k) * x.size() + j];
    }
    /// Linear in t and x. Throws std::out_of_range outside the grid.
    double interpolate(RegimeIndex i, double t, double x) const;
};

/// g~_i = max(g_i, max_j (g_j - c_{i,j})).
std::vector<double> facelift(const SwitchingCosts& costs, std::span<const double> g);

/// theta-scheme for the switching system
///   min[-d_t v_i - L^i v_i - f_i, min_j (v_i - v_j + c_{i,j})] = 0
/// (projection mode) or its penalized version with source
/// n sum_j lambda_j [v_i - v_j + c_{i,j}]^- (penalized mode, applied implicitly
/// after the linear step). Linear extrapolation at both boundaries.
/// Throws NumericalAbort when values leave 10x the growth bound.
GridSolution fd_solve(const ProblemSpec& spec, const FdConfig& config);

struct CompareReport {
    double t = 0.0;
    RegimeIndex regime;
    double x = 0.0;
    double solver_value = 0.0;
    double oracle_value = 0.0;
    double abs_gap = 0.0;
    double rel_gap = 0.0;
};

/// Solver y0 against the oracle at (t, i, x); refuses to extrapolate.
CompareReport oracle_compare(const SolveResult& result, const GridSolution& grid, double t, RegimeIndex i, double x);

}  // namespace cvi
