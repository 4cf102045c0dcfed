#include "cvi/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cvi/random.hpp"

namespace cvi {

std::size_t ValidationReport::warning_count() const {
    return static_cast<std::size_t>(
        std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return c.status == CheckStatus::warn; }));
}

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    return std::sqrt(s);
}

void fill_normal(RandomStream& rng, std::vector<double>& v, double center, double scale) {
    for (double& x : v) {
        x = center + scale * rng.normal();
    }
}

/// Tracks the largest sampled ratio |F(p) - F(q)| / |p - q|.
struct RatioTracker {
    double max_ratio = 0.0;
    bool finite = true;

    void add(double numerator, double denominator) {
        if (!std::isfinite(numerator)) {
            finite = false;
            return;
        }
        if (denominator > 0.0) {
            max_ratio = std::max(max_ratio, numerator / denominator);
        }
    }

    CheckResult report(std::string name) const {
        CheckResult out{std::move(name), CheckStatus::pass, "sampled Lipschitz ratio (informational)", max_ratio};
        if (!finite) {
            out.status = CheckStatus::warn;
            out.detail = "evaluator returned a non-finite value";
        }
        return out;
    }
};

}  // namespace

ValidationReport validate_problem(const ProblemSpec& spec, std::size_t sample_count, std::uint64_t seed) {
    try {
        spec.check();
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("malformed problem: ") + e.what());
    }
    if (sample_count < 1) {
        throw std::invalid_argument("sample_count must be at least 1");
    }
    for (double w : spec.intensity.weights) {
        if (!(w > 0.0)) {
            throw ValidationError("nonpositive intensity weight");
        }
    }

    ValidationReport report;
    report.problem = spec.name;
    report.sample_count = sample_count;
    report.seed = seed;
    report.checks.push_back(
        {"intensity_positive", CheckStatus::pass, "all intensity weights are positive", spec.intensity.total()});

    const std::size_t d = spec.dim;
    const std::size_t m = spec.regimes;
    const auto& c = spec.coefficients;
    double x_scale = 1.0;
    for (double v : spec.initial_state) {
        x_scale = std::max(x_scale, std::abs(v));
    }

    RandomStream rng(seed, 0);
    std::vector<double> xp(d), xq(d), zp(d), zq(d), yp(m), yq(m), outp(d * d), outq(d * d);
    RatioTracker drift_ratio, vol_ratio, driver_ratio, terminal_ratio, constraint_ratio;
    std::size_t monotone_failures = 0;
    std::size_t growth_failures = 0;

    for (std::size_t s = 0; s < sample_count; ++s) {
        RegimeIndex i(static_cast<std::size_t>(rng.uniform() * static_cast<double>(m)) % m);
        RegimeIndex j(static_cast<std::size_t>(rng.uniform() * static_cast<double>(m)) % m);
        fill_normal(rng, xp, 0.0, x_scale);
        fill_normal(rng, xq, 0.0, x_scale);
        for (std::size_t k = 0; k < d; ++k) {
            xp[k] += spec.initial_state[k];
            xq[k] += spec.initial_state[k];
        }
        fill_normal(rng, zp, 0.0, 1.0);
        fill_normal(rng, zq, 0.0, 1.0);
        fill_normal(rng, yp, 0.0, 1.0);
        fill_normal(rng, yq, 0.0, 1.0);
        const double dx = distance(xp, xq);

        std::span<double> bp(outp.data(), d), bq(outq.data(), d);
        c.drift(i, xp, bp);
        c.drift(i, xq, bq);
        drift_ratio.add(distance(bp, bq), dx);

        c.vol(i, xp, outp);
        c.vol(i, xq, outq);
        vol_ratio.add(distance(outp, outq), dx);

        const double fp = c.driver(i, xp, yp, zp);
        const double fq = c.driver(i, xq, yq, zq);
        const double din = std::sqrt(dx * dx + std::pow(distance(yp, yq), 2) + std::pow(distance(zp, zq), 2));
        driver_ratio.add(std::abs(fp - fq), din);

        const double gp = c.terminal(i, xp);
        const double gq = c.terminal(i, xq);
        terminal_ratio.add(std::abs(gp - gq), dx);

        const double y = yp[0];
        const double lo = std::min(yp[m - 1], yq[0]);
        const double hi = std::max(yp[m - 1], yq[0]);
        const double h_lo = c.constraint(i, j, xp, y, lo, zp);
        const double h_hi = c.constraint(i, j, xp, y, hi, zp);
        if (h_hi > h_lo + 1e-12 * (1.0 + std::abs(h_lo))) {
            ++monotone_failures;
        }
        const double hq = c.constraint(i, j, xq, yq[0], yq[m - 1], zq);
        const double hin = std::sqrt(dx * dx + std::pow(y - yq[0], 2) + std::pow(lo - yq[m - 1], 2) +
                                     std::pow(distance(zp, zq), 2));
        constraint_ratio.add(std::abs(h_lo - hq), hin);

        if (spec.growth_bound && std::abs(gp) > spec.growth_bound->at(xp)) {
            ++growth_failures;
        }
    }

    CheckResult monotone{"constraint_nonincreasing_in_target", CheckStatus::pass,
                         "h(x, y, ., z) sampled non-increasing", static_cast<double>(monotone_failures)};
    if (monotone_failures > 0) {
        std::ostringstream msg;
        msg << "constraint increased in its target argument at " << monotone_failures << " of " << sample_count
            << " samples";
        monotone.status = CheckStatus::warn;
        monotone.detail = msg.str();
    }
    report.checks.push_back(std::move(monotone));
    report.checks.push_back(drift_ratio.report("lipschitz_drift"));
    report.checks.push_back(vol_ratio.report("lipschitz_vol"));
    report.checks.push_back(driver_ratio.report("lipschitz_driver"));
    report.checks.push_back(terminal_ratio.report("lipschitz_terminal"));
    report.checks.push_back(constraint_ratio.report("lipschitz_constraint"));

    if (spec.switching) {
        CheckResult costs{"switching_costs", CheckStatus::pass, "zero diagonal, positive costs, strict triangle",
                          std::nullopt};
        if (auto why = spec.switching->costs.violation()) {
            costs.status = CheckStatus::warn;
            costs.detail = *why;
        }
        report.checks.push_back(std::move(costs));
    }
    if (spec.growth_bound) {
        CheckResult growth{"terminal_growth_bound", CheckStatus::pass, "|g| within the declared growth bound",
                           static_cast<double>(growth_failures)};
        if (growth_failures > 0) {
            growth.status = CheckStatus::warn;
            growth.detail = "terminal value exceeds the declared growth bound at sampled points";
        }
        report.checks.push_back(std::move(growth));
    }
    return report;
}

}  // namespace cvi
