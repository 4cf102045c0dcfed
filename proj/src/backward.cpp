#include "cvi/backward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cvi/parallel.hpp"

namespace cvi {

IntegrandTerms scheme_integrand(const ProblemSpec& spec, std::uint64_t n, RegimeIndex r, std::span<const double> x,
                                double y_next, std::span<const double> z, std::span<const double> u,
                                std::span<double> yvec) {
    const std::size_t m = spec.regimes;
    const double ur = u[r.index()];
    double compensator = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        yvec[j] = y_next + (u[j] - ur);
        compensator += spec.intensity.weights[j] * (u[j] - ur);
    }
    yvec[r.index()] = y_next;
    const PenaltyTerms t = penalty_terms(spec, r, x, yvec, z);
    IntegrandTerms out;
    out.violation = t.violation;
    out.min_constraint = t.min_constraint;
    out.value = (n == 0 ? t.driver : t.driver + static_cast<double>(n) * t.violation) - compensator;
    return out;
}

namespace {

[[noreturn]] void abort_at(std::size_t k, const std::string& what) {
    std::ostringstream msg;
    msg << what << " at step " << k;
    throw NumericalAbort(msg.str());
}

double weighted_mean(std::span<const double> w, std::span<const double> v) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t p = 0; p < v.size(); ++p) {
        num += w[p] * v[p];
        den += w[p];
    }
    return num / den;
}

void check_finite(std::span<const double> v, std::size_t k, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            abort_at(k, what);
        }
    }
}

}  // namespace

Projector step_projector(const PathBundle& bundle, std::size_t k, const SchemeConfig& config) {
    const std::size_t N = bundle.path_count();
    const std::size_t d = bundle.dim;
    std::vector<RegimeIndex> regime(N);
    std::vector<double> state(N * d);
    for (std::size_t p = 0; p < N; ++p) {
        regime[p] = bundle.regime_at(p, k);
        const auto x = bundle.state_at(p, k);
        std::copy(x.begin(), x.end(), state.begin() + static_cast<std::ptrdiff_t>(p * d));
    }
    const StepSamples samples{regime, state, bundle.weight, d, bundle.regimes};
    if (k == 0) {
        return Projector::mean(samples);
    }
    if (config.mode == ExpectationMode::exact) {
        return Projector::grouping(samples);
    }
    return Projector::regression(samples, config.basis, config.ridge,
                                 config.min_stratum_samples.value_or(config.basis.size(d)));
}

std::vector<double> estimate_z(const PathBundle& bundle, std::size_t k, std::span<const double> y_next,
                               const Projector& projector, std::vector<RegressionFit>* fits, std::size_t workers) {
    const std::size_t N = bundle.path_count();
    const std::size_t d = bundle.dim;
    const double h = bundle.step();
    std::vector<double> target(d * N);
    parallel_for(N, workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> dw(d);
        for (std::size_t p = begin; p < end; ++p) {
            bundle.brownian_increment(p, k, dw);
            for (std::size_t c = 0; c < d; ++c) {
                target[c * N + p] = y_next[p] * dw[c] / h;
            }
        }
    });
    check_finite(target, k, "non-finite regression target");
    if (fits) {
        fits->assign(d, RegressionFit{});
    }
    std::vector<double> z(N * d);
    for (std::size_t c = 0; c < d; ++c) {
        const auto est = projector.project(std::span<const double>(target).subspan(c * N, N),
                                           fits ? &(*fits)[c] : nullptr);
        for (std::size_t p = 0; p < N; ++p) {
            z[p * d + c] = est[p];
        }
    }
    return z;
}

std::vector<double> estimate_u(const IntensityMeasure& intensity, const PathBundle& bundle, std::size_t k,
                               std::span<const double> y_next, const Projector& projector,
                               std::vector<RegressionFit>* fits, std::size_t workers) {
    const std::size_t N = bundle.path_count();
    const std::size_t m = bundle.regimes;
    const double h = bundle.step();
    for (double w : intensity.weights) {
        if (!(w > 0.0)) {
            throw std::invalid_argument("every intensity weight must be positive for the U estimator");
        }
    }
    std::vector<double> target(m * N);
    parallel_for(N, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            for (std::size_t j = 0; j < m; ++j) {
                const RegimeIndex rj(j);
                const double lambda = intensity[rj];
                const double mu = static_cast<double>(bundle.atom_count(p, k, rj)) - lambda * h;
                target[j * N + p] = y_next[p] * mu / (lambda * h);
            }
        }
    });
    check_finite(target, k, "non-finite regression target");
    if (fits) {
        fits->assign(m, RegressionFit{});
    }
    std::vector<double> u(N * m);
    for (std::size_t j = 0; j < m; ++j) {
        const auto est = projector.project(std::span<const double>(target).subspan(j * N, N),
                                           fits ? &(*fits)[j] : nullptr);
        for (std::size_t p = 0; p < N; ++p) {
            u[p * m + j] = est[p];
        }
    }
    // Relative to the current regime: U(j) - U(I_{t_k}).
    for (std::size_t p = 0; p < N; ++p) {
        const std::size_t r = bundle.regime_at(p, k).index();
        const double base = u[p * m + r];
        for (std::size_t j = 0; j < m; ++j) {
            u[p * m + j] -= base;
        }
        u[p * m + r] = 0.0;
    }
    return u;
}

DriverIntegral driver_integral(const ProblemSpec& spec, std::uint64_t n, const PathBundle& bundle, std::size_t path,
                               std::size_t k, double y_next, std::span<const double> z, std::span<const double> u,
                               std::span<double> yvec_scratch) {
    const auto x = bundle.state_at(path, k);
    DriverIntegral out;
    const std::size_t last = bundle.node(path, k + 1);
    for (std::size_t l = bundle.node(path, k); l < last; ++l) {
        const double len = bundle.time[l + 1] - bundle.time[l];
        const RegimeIndex r(static_cast<std::size_t>(bundle.regime[l]));
        const auto t = scheme_integrand(spec, n, r, x, y_next, z, u, yvec_scratch);
        out.value += len * t.value;
        out.violation_mass += len * t.violation;
        out.skorohod += t.min_constraint * static_cast<double>(n) * len * t.violation;
    }
    return out;
}

StepY step_y(const ProblemSpec& spec, std::uint64_t n, const PathBundle& bundle, std::size_t k,
             std::span<const double> y_next, std::span<const double> z, std::span<const double> u,
             const Projector& projector, bool clip, RegressionFit* fit, std::size_t workers) {
    const std::size_t N = bundle.path_count();
    const std::size_t d = spec.dim;
    const std::size_t m = spec.regimes;
    const double h = bundle.step();
    StepY out;
    std::vector<double> target(N);
    out.violation.resize(N);
    out.penalty_mass.resize(N);
    out.skorohod.resize(N);
    parallel_for(N, workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> yvec(m);
        for (std::size_t p = begin; p < end; ++p) {
            const auto di = driver_integral(spec, n, bundle, p, k, y_next[p], z.subspan(p * d, d),
                                            u.subspan(p * m, m), yvec);
            target[p] = y_next[p] + di.value;
            out.violation[p] = di.violation_mass / h;
            out.penalty_mass[p] = static_cast<double>(n) * di.violation_mass;
            out.skorohod[p] = di.skorohod;
        }
    });
    check_finite(target, k, "non-finite regression target");

    out.y = projector.project(target, fit);
    const auto& growth = spec.growth_bound;
    for (std::size_t p = 0; p < N; ++p) {
        if (!std::isfinite(out.y[p])) {
            abort_at(k, "non-finite value estimate");
        }
        if (growth) {
            const double bound = growth->at(bundle.state_at(p, k));
            if (std::abs(out.y[p]) > 10.0 * bound) {
                abort_at(k, "value estimate exceeds 10x the growth bound");
            }
            if (clip) {
                out.y[p] = std::clamp(out.y[p], -bound, bound);
            }
        }
    }
    return out;
}

SolveResult solve_backward(const ProblemSpec& spec, const SchemeConfig& config, const PathBundle& bundle) {
    spec.check();
    const std::size_t N = bundle.path_count();
    const std::size_t K = bundle.steps;
    if (N == 0 || K == 0) {
        throw std::invalid_argument("empty path bundle");
    }
    if (bundle.dim != spec.dim || bundle.regimes != spec.regimes) {
        throw std::invalid_argument("path bundle does not match the problem dimensions");
    }
    if (std::abs(bundle.step() - config.h) > 1e-12 * std::max(1.0, config.h) ||
        std::abs(bundle.horizon - spec.horizon) > 1e-12 * std::max(1.0, spec.horizon)) {
        throw std::invalid_argument("path bundle was simulated with a different grid");
    }
    for (double w : spec.intensity.weights) {
        if (!(w > 0.0)) {
            throw std::invalid_argument("every intensity weight must be positive for the U estimator");
        }
    }
    const std::span<const double> weight(bundle.weight);

    SolveResult result;
    result.problem = spec.name;
    result.config = config;
    result.steps.resize(K);
    if (config.keep_fits) {
        result.fits.resize(K);
    }
    if (config.keep_estimates) {
        result.estimates.resize(K);
    }

    std::vector<double> y_next(N);
    for (std::size_t p = 0; p < N; ++p) {
        y_next[p] = spec.coefficients.terminal(bundle.regime_at(p, K), bundle.state_at(p, K));
    }
    check_finite(y_next, K, "non-finite terminal value");
    result.terminal_mean = weighted_mean(weight, y_next);
    {
        double var = 0.0;
        for (std::size_t p = 0; p < N; ++p) {
            var += weight[p] * (y_next[p] - result.terminal_mean) * (y_next[p] - result.terminal_mean);
        }
        result.terminal_std_error = std::sqrt(var / static_cast<double>(N));
    }

    std::vector<double> violation_path_sum(N, 0.0);
    for (std::size_t k = K; k-- > 0;) {
        const Projector projector = step_projector(bundle, k, config);
        StepFits* fits = config.keep_fits ? &result.fits[k] : nullptr;
        auto z = estimate_z(bundle, k, y_next, projector, fits ? &fits->z : nullptr, config.workers);
        auto u = estimate_u(spec.intensity, bundle, k, y_next, projector, fits ? &fits->u : nullptr, config.workers);
        auto s = step_y(spec, config.n, bundle, k, y_next, z, u, projector, config.clip_to_growth_bound,
                        fits ? &fits->y : nullptr, config.workers);

        StepDiagnostics& diag = result.steps[k];
        diag.time = bundle.grid_time(k);
        diag.violation_mean = weighted_mean(weight, s.violation);
        diag.violation_max = 0.0;
        for (std::size_t p = 0; p < N; ++p) {
            if (weight[p] > 0.0) {
                diag.violation_max = std::max(diag.violation_max, s.violation[p]);
            }
            violation_path_sum[p] += s.violation[p];
        }
        diag.penalty_mean = weighted_mean(weight, s.penalty_mass);
        diag.skorohod = weighted_mean(weight, s.skorohod);
        diag.fallback_strata = projector.fallback_strata();

        if (config.keep_estimates) {
            StepEstimates& est = result.estimates[k];
            est.y = s.y;
            est.z = std::move(z);
            est.u = std::move(u);
            est.penalty_mass = std::move(s.penalty_mass);
        }
        y_next = std::move(s.y);
    }

    result.y0 = y_next[0];
    double total = 0.0;
    for (const auto& s : result.steps) {
        total += s.violation_mean;
    }
    result.violation_mean = total / static_cast<double>(K);
    for (double& v : violation_path_sum) {
        v /= static_cast<double>(K);
    }
    const double mean = weighted_mean(weight, violation_path_sum);
    double var = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
        var += weight[p] * (violation_path_sum[p] - mean) * (violation_path_sum[p] - mean);
    }
    result.violation_std_error = config.mode == ExpectationMode::exact ? 0.0 : std::sqrt(var / static_cast<double>(N));
    return result;
}

double skorohod_residual(const SolveResult& result) {
    double s = 0.0;
    for (const auto& step : result.steps) {
        s += step.skorohod;
    }
    return s;
}

bool LadderReport::monotone() const {
    return std::all_of(y0_nondecreasing.begin(), y0_nondecreasing.end(), [](bool b) { return b; }) &&
           std::all_of(violation_nonincreasing.begin(), violation_nonincreasing.end(), [](bool b) { return b; });
}

LadderReport penalization_ladder(const ProblemSpec& spec, const SchemeConfig& config,
                                 std::span<const std::uint64_t> schedule, const PathBundle& bundle) {
    if (schedule.empty()) {
        throw std::invalid_argument("penalization schedule is empty");
    }
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        if (schedule[i] <= schedule[i - 1]) {
            throw std::invalid_argument("penalization schedule must be strictly increasing");
        }
    }
    LadderReport report;
    report.problem = spec.name;
    report.schedule.assign(schedule.begin(), schedule.end());
    for (std::uint64_t n : schedule) {
        SchemeConfig c = config;
        c.n = n;
        c.keep_estimates = false;
        c.keep_fits = false;
        const auto r = solve_backward(spec, c, bundle);
        report.y0.push_back(r.y0);
        report.violation.push_back(r.violation_mean);
        report.violation_std_error.push_back(r.violation_std_error);
        report.skorohod.push_back(skorohod_residual(r));
    }
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        report.y0_nondecreasing.push_back(report.y0[i] >= report.y0[i - 1]);
        const double se = report.violation_std_error[i] + report.violation_std_error[i - 1];
        report.violation_nonincreasing.push_back(report.violation[i] <= report.violation[i - 1] + 3.0 * se);
    }
    return report;
}

}  // namespace cvi
