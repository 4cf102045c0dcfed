#include "cvi/catalog.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

namespace cvi {

namespace {

struct Defaults {
    double horizon;
    double x0;
    long i0;
    std::vector<double> sigma;
    std::vector<double> drift;
    std::vector<double> rewards;
    std::vector<double> intensity;
    std::vector<std::vector<double>> costs;
};

std::vector<double> pick(const std::optional<std::vector<double>>& override_value, std::vector<double> fallback,
                         std::size_t m, const char* what) {
    std::vector<double> out = override_value ? *override_value : std::move(fallback);
    if (out.size() != m) {
        throw std::invalid_argument(std::string("override '") + what + "' needs one value per regime");
    }
    return out;
}

double max_abs(const std::vector<double>& v) {
    double out = 0.0;
    for (double x : v) {
        out = std::max(out, std::abs(x));
    }
    return out;
}

/// Builds a d = 1 switching-form problem with constant drift and volatility per
/// regime and reward r_i + slope_i * x.
ProblemSpec build(std::string name, Defaults base, const CatalogOverrides& o, std::vector<double> reward_slope,
                  std::function<double(RegimeIndex, double)> terminal, bool linear_growth) {
    const std::size_t m = base.sigma.size();
    const double horizon = o.horizon.value_or(base.horizon);
    const auto sigma = pick(o.sigma, base.sigma, m, "sigma");
    const auto drift = pick(o.drift, base.drift, m, "drift");
    const auto rewards = pick(o.rewards, base.rewards, m, "rewards");
    const auto intensity = pick(o.intensity, base.intensity, m, "intensity");
    auto costs = o.costs ? *o.costs : base.costs;
    if (costs.size() != m) {
        throw std::invalid_argument("override 'costs' must be an m x m matrix");
    }

    SwitchingData data;
    data.name = std::move(name);
    data.dim = 1;
    data.horizon = horizon;
    data.costs = SwitchingCosts(std::move(costs));
    data.drift = [drift](RegimeIndex i, std::span<const double>, std::span<double> out) {
        out[0] = drift[i.index()];
    };
    data.vol = [sigma](RegimeIndex i, std::span<const double>, std::span<double> out) { out[0] = sigma[i.index()]; };
    data.running_reward = [rewards, reward_slope](RegimeIndex i, std::span<const double> x) {
        return rewards[i.index()] + reward_slope[i.index()] * x[0];
    };
    data.terminal = [terminal](RegimeIndex i, std::span<const double> x) { return terminal(i, x[0]); };
    data.intensity = IntensityMeasure{intensity};
    data.initial_regime = RegimeIndex::from_label(o.i0.value_or(base.i0));
    data.initial_state = {o.x0.value_or(base.x0)};
    if (linear_growth) {
        // |v| <= |x| + T * (max |b| + max |r|) + 1, loosened for the slope terms.
        const double c1 = 1.0 + horizon * (max_abs(reward_slope) + 1.0);
        data.growth_bound = GrowthBound{1.0 + horizon * (max_abs(drift) + max_abs(rewards)) + 1.0, c1};
    }
    if (m == 1) {
        return make_single_regime_problem(std::move(data));
    }
    return make_switching_problem(std::move(data));
}

}  // namespace

std::vector<CatalogEntry> list_catalog() {
    return {
        {"bm1", "single regime Brownian motion, f = 0, b = 0, sigma = 1, g(x) = x, x0 = 0.7, T = 1"},
        {"bm1-quad", "as bm1 with g(x) = x^2 and x0 = 0"},
        {"switch2-linear",
         "two-regime switching, d = 1, sigma = (0.2, 0.4), constant rewards (0, 0.2), g(x) = x, costs 0.1, lambda = (3, 3)"},
        {"switch3",
         "three-regime switching, d = 1, rewards r_i + s_i x, regime-dependent terminal values, triangle costs"},
    };
}

ProblemSpec make_catalog_problem(std::string_view name, const CatalogOverrides& o) {
    if (name == "bm1" || name == "bm1-quad") {
        const bool quad = name == "bm1-quad";
        Defaults base{1.0, quad ? 0.0 : 0.7, 1, {1.0}, {0.0}, {0.0}, {1.0}, {{0.0}}};
        auto terminal = quad ? std::function<double(RegimeIndex, double)>([](RegimeIndex, double x) { return x * x; })
                             : std::function<double(RegimeIndex, double)>([](RegimeIndex, double x) { return x; });
        return build(std::string(name), std::move(base), o, {0.0}, terminal, !quad);
    }
    if (name == "switch2-linear") {
        Defaults base{1.0, 0.0, 1, {0.2, 0.4}, {0.0, 0.0}, {0.0, 0.2}, {3.0, 3.0}, {{0.0, 0.1}, {0.1, 0.0}}};
        return build("switch2-linear", std::move(base), o, {0.0, 0.0},
                     [](RegimeIndex, double x) { return x; }, true);
    }
    if (name == "switch3") {
        Defaults base{1.0,
                      0.0,
                      2,
                      {0.2, 0.3, 0.4},
                      {0.0, 0.0, 0.0},
                      {0.0, 0.1, 0.2},
                      {0.5, 0.5, 0.5},
                      {{0.0, 0.15, 0.25}, {0.15, 0.0, 0.15}, {0.25, 0.15, 0.0}}};
        return build("switch3", std::move(base), o, {0.5, 0.0, -0.5},
                     [](RegimeIndex i, double x) { return i.index() == 2 ? x - 0.5 : x; }, true);
    }
    throw std::out_of_range("unknown catalog problem: " + std::string(name));
}

}  // namespace cvi
