#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "cvi/catalog.hpp"
#include "cvi/problem.hpp"

namespace cvi::test {

/// d = 1, one regime: dX = drift dt + sigma dW, reward f, terminal g.
inline ProblemSpec scalar_problem(double drift, double sigma, std::function<double(double)> g, double reward = 0.0,
                                  double lambda = 1.0, double x0 = 0.0, double horizon = 1.0) {
    SwitchingData data;
    data.name = "scalar";
    data.horizon = horizon;
    data.drift = [drift](RegimeIndex, std::span<const double>, std::span<double> out) { out[0] = drift; };
    data.vol = [sigma](RegimeIndex, std::span<const double>, std::span<double> out) { out[0] = sigma; };
    data.running_reward = [reward](RegimeIndex, std::span<const double>) { return reward; };
    data.terminal = [g](RegimeIndex, std::span<const double> x) { return g(x[0]); };
    data.intensity = IntensityMeasure{{lambda}};
    data.initial_state = {x0};
    return make_single_regime_problem(std::move(data));
}

/// switch2-linear with a different intensity.
inline ProblemSpec switch2(std::vector<double> lambda) {
    CatalogOverrides o;
    o.intensity = std::move(lambda);
    return make_catalog_problem("switch2-linear", o);
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;  // sample variance
    double se = 0.0;   // standard error of the mean
};

inline Moments moments(std::span<const double> v) {
    Moments m;
    const double n = static_cast<double>(v.size());
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    for (double x : v) {
        m.var += (x - m.mean) * (x - m.mean);
    }
    m.var /= n - 1.0;
    m.se = std::sqrt(m.var / n);
    return m;
}

}  // namespace cvi::test
