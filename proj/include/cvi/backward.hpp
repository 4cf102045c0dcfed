#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvi/forward.hpp"
#include "cvi/problem.hpp"
#include "cvi/regression.hpp"

namespace cvi {

enum class ExpectationMode {
    regression,  // OLS on the basis (Monte Carlo)
    exact,       // grouping by state: exact on finite-state chains
};

struct SchemeConfig {
    double h = 0.02;
    std::uint64_t n = 0;
    std::size_t paths = 10000;
    BasisSpec basis;
    std::optional<double> ridge;  // default: 1e-10 trace(G) / L per fit
    bool clip_to_growth_bound = true;
    std::uint64_t seed = 0;
    ExpectationMode mode = ExpectationMode::regression;
    /// Strata smaller than this use the pooled fit; default is the basis size.
    std::optional<std::size_t> min_stratum_samples;
    bool keep_estimates = false;
    bool keep_fits = false;
    std::size_t workers = 1;
};

/// Per-path estimates at one grid time t_k (k < K).
struct StepEstimates {
    std::vector<double> y;             // Y_{t_k}
    std::vector<double> z;             // path-major, d per path
    std::vector<double> u;             // path-major, m per path; U(I_{t_k}) = 0
    std::vector<double> penalty_mass;  // n * int sum_j lambda_j [h]^- ds over the step
};

struct StepFits {
    RegressionFit y;
    std::vector<RegressionFit> z;
    std::vector<RegressionFit> u;
};

struct StepDiagnostics {
    double time = 0.0;
    double violation_mean = 0.0;  // E[(1/h) int sum_j lambda_j [h]^- ds]
    double violation_max = 0.0;
    double penalty_mean = 0.0;    // E[penalty_mass]
    double skorohod = 0.0;        // E[int min_j h dK^n]
    std::size_t fallback_strata = 0;
};

struct SolveResult {
    std::string problem;
    SchemeConfig config;
    double y0 = 0.0;
    double terminal_mean = 0.0;       // E[g_{I_T}(X_T)]
    double terminal_std_error = 0.0;  // sample std of g / sqrt(N)
    double violation_mean = 0.0;      // averaged over steps
    double violation_std_error = 0.0;
    std::vector<StepDiagnostics> steps;  // k = 0 .. K-1
    std::vector<StepFits> fits;           // when keep_fits
    std::vector<StepEstimates> estimates; // when keep_estimates
};

/// Value, violation and min-constraint of the scheme integrand over one
/// sub-interval with base regime r:
///   f^n_r(x, yvec, z) - sum_j lambda_j (u_j - u_r),
/// with yvec_j = y_next + u_j - u_r. The second term is the compensator of the
/// jump integral, so the integrand drives the mu~ form of the penalized BSDE.
struct IntegrandTerms {
    double value = 0.0;
    double violation = 0.0;
    double min_constraint = 0.0;
};

IntegrandTerms scheme_integrand(const ProblemSpec& spec, std::uint64_t n, RegimeIndex r, std::span<const double> x,
                                double y_next, std::span<const double> z, std::span<const double> u,
                                std::span<double> yvec_scratch);

/// Projector for step k: the sample mean at k = 0 (all paths share the start),
/// grouping by state in exact mode, stratified OLS otherwise.
Projector step_projector(const PathBundle& bundle, std::size_t k, const SchemeConfig& config);

/// Z_{t_k} = projection of y_next * (W_{t_{k+1}} - W_{t_k}) / h, per component.
/// Path-major, d per path. `fits` receives one fit per component.
std::vector<double> estimate_z(const PathBundle& bundle, std::size_t k, std::span<const double> y_next,
                               const Projector& projector, std::vector<RegressionFit>* fits = nullptr,
                               std::size_t workers = 1);

/// U_{t_k}(j) = projection of y_next * mu~((t_k, t_{k+1}] x {j}) / (lambda_j h),
/// then taken relative to the current regime (U(I_{t_k}) = 0). Path-major, m
/// per path. Throws std::invalid_argument when some lambda_j <= 0.
std::vector<double> estimate_u(const IntensityMeasure& intensity, const PathBundle& bundle, std::size_t k,
                               std::span<const double> y_next, const Projector& projector,
                               std::vector<RegressionFit>* fits = nullptr, std::size_t workers = 1);

struct DriverIntegral {
    double value = 0.0;           // int_{t_k}^{t_{k+1}} integrand ds
    double violation_mass = 0.0;  // int sum_j lambda_j [h]^- ds
    double skorohod = 0.0;        // int min_j h dK^n
};

/// Sum over the sub-intervals of (t_k, t_{k+1}] of length times
/// scheme_integrand, with X frozen at X_{t_k} and the regime of each piece.
DriverIntegral driver_integral(const ProblemSpec& spec, std::uint64_t n, const PathBundle& bundle, std::size_t path,
                               std::size_t k, double y_next, std::span<const double> z, std::span<const double> u,
                               std::span<double> yvec_scratch);

struct StepY {
    std::vector<double> y;
    std::vector<double> violation;     // (1/h) int sum_j lambda_j [h]^- ds
    std::vector<double> penalty_mass;  // n int sum_j lambda_j [h]^- ds
    std::vector<double> skorohod;
};

/// Y_{t_k} = projection of y_next + driver integral; guarded and optionally
/// clipped to the growth bound.
StepY step_y(const ProblemSpec& spec, std::uint64_t n, const PathBundle& bundle, std::size_t k,
             std::span<const double> y_next, std::span<const double> z, std::span<const double> u,
             const Projector& projector, bool clip, RegressionFit* fit = nullptr, std::size_t workers = 1);

/// Backward induction for k = K-1 .. 0 starting from Y_T = g_{I_T}(X_T).
/// Throws NumericalAbort on a non-finite target or |Y| > 10x the growth bound.
SolveResult solve_backward(const ProblemSpec& spec, const SchemeConfig& config, const PathBundle& bundle);

/// sum_k E[int min_j h dK^n] accumulated during the solve.
double skorohod_residual(const SolveResult& result);

struct LadderReport {
    std::string problem;
    std::vector<std::uint64_t> schedule;
    std::vector<double> y0;
    std::vector<double> violation;
    std::vector<double> violation_std_error;
    std::vector<double> skorohod;
    std::vector<bool> y0_nondecreasing;        // per consecutive pair
    std::vector<bool> violation_nonincreasing; // per pair, within 3 standard errors

    bool monotone() const;
};

/// Runs the solver for each n on the same bundle.
LadderReport penalization_ladder(const ProblemSpec& spec, const SchemeConfig& config,
                                 std::span<const std::uint64_t> schedule, const PathBundle& bundle);

}  // namespace cvi
