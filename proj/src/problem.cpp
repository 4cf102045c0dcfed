#include "cvi/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

namespace cvi {

double IntensityMeasure::total() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

double GrowthBound::at(std::span<const double> x) const {
    double norm2 = 0.0;
    for (double xi : x) {
        norm2 += xi * xi;
    }
    return c0 + c1 * std::sqrt(norm2);
}

SwitchingCosts::SwitchingCosts(std::vector<std::vector<double>> rows) : size_(rows.size()) {
    costs_.reserve(size_ * size_);
    for (const auto& row : rows) {
        if (row.size() != size_) {
            throw std::invalid_argument("switching cost matrix must be square");
        }
        costs_.insert(costs_.end(), row.begin(), row.end());
    }
}

std::vector<std::vector<double>> SwitchingCosts::rows() const {
    std::vector<std::vector<double>> out(size_);
    for (std::size_t i = 0; i < size_; ++i) {
        out[i].assign(costs_.begin() + static_cast<std::ptrdiff_t>(i * size_),
                      costs_.begin() + static_cast<std::ptrdiff_t>((i + 1) * size_));
    }
    return out;
}

std::optional<std::string> SwitchingCosts::violation() const {
    std::ostringstream msg;
    for (std::size_t i = 0; i < size_; ++i) {
        RegimeIndex ri(i);
        if ((*this)(ri, ri) != 0.0) {
            msg << "nonzero diagonal switching cost c(" << ri.label() << "," << ri.label() << ")";
            return msg.str();
        }
        for (std::size_t j = 0; j < size_; ++j) {
            RegimeIndex rj(j);
            if (i != j && !((*this)(ri, rj) > 0.0)) {
                msg << "nonpositive switching cost c(" << ri.label() << "," << rj.label() << ")";
                return msg.str();
            }
        }
    }
    for (std::size_t i = 0; i < size_; ++i) {
        for (std::size_t j = 0; j < size_; ++j) {
            for (std::size_t k = 0; k < size_; ++k) {
                if (i == j || j == k || i == k) {
                    continue;
                }
                RegimeIndex ri(i), rj(j), rk(k);
                if (!((*this)(ri, rj) < (*this)(ri, rk) + (*this)(rk, rj))) {
                    msg << "switching costs violate the strict triangle condition at (" << ri.label() << ","
                        << rk.label() << "," << rj.label() << ")";
                    return msg.str();
                }
            }
        }
    }
    return std::nullopt;
}

void ProblemSpec::check() const {
    if (regimes < 1) {
        throw std::invalid_argument("regime count must be at least 1");
    }
    if (dim < 1) {
        throw std::invalid_argument("state dimension must be at least 1");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("horizon must be positive");
    }
    if (intensity.size() != regimes) {
        throw std::invalid_argument("intensity must have one weight per regime");
    }
    if (initial_regime.index() >= regimes) {
        throw std::invalid_argument("initial regime out of range");
    }
    if (initial_state.size() != dim) {
        throw std::invalid_argument("initial state has wrong dimension");
    }
    const auto& c = coefficients;
    if (!c.drift || !c.vol || !c.driver || !c.constraint || !c.terminal) {
        throw std::invalid_argument("all coefficient evaluators must be set");
    }
    if (switching && switching->costs.size() != regimes) {
        throw std::invalid_argument("switching cost matrix size differs from regime count");
    }
}

namespace {

ProblemSpec assemble_switching(SwitchingData data) {
    if (auto why = data.costs.violation()) {
        throw ValidationError(*why);
    }
    const std::size_t m = data.costs.size();
    ProblemSpec spec;
    spec.name = std::move(data.name);
    spec.regimes = m;
    spec.dim = data.dim;
    spec.horizon = data.horizon;
    spec.intensity = std::move(data.intensity);
    spec.initial_regime = data.initial_regime;
    spec.initial_state = std::move(data.initial_state);
    spec.growth_bound = data.growth_bound;

    SwitchingForm form{std::move(data.costs), std::move(data.running_reward)};
    RewardFn reward = form.running_reward;
    SwitchingCosts costs = form.costs;

    spec.coefficients.drift = std::move(data.drift);
    spec.coefficients.vol = std::move(data.vol);
    spec.coefficients.terminal = std::move(data.terminal);
    spec.coefficients.driver = [reward](RegimeIndex i, std::span<const double> x, std::span<const double>,
                                        std::span<const double>) { return reward(i, x); };
    spec.coefficients.constraint = [costs](RegimeIndex i, RegimeIndex j, std::span<const double>, double y,
                                           double y_other, std::span<const double>) {
        return y - y_other + costs(i, j);
    };
    spec.switching = std::move(form);
    spec.check();
    return spec;
}

}  // namespace

ProblemSpec make_switching_problem(SwitchingData data) {
    if (data.costs.size() < 2) {
        throw std::invalid_argument("a switching problem needs at least two regimes");
    }
    return assemble_switching(std::move(data));
}

ProblemSpec make_single_regime_problem(SwitchingData data) {
    if (data.costs.size() == 0) {
        data.costs = SwitchingCosts(std::vector<std::vector<double>>{{0.0}});
    }
    if (data.costs.size() != 1) {
        throw std::invalid_argument("single-regime problem expects a 1x1 cost matrix");
    }
    return assemble_switching(std::move(data));
}

PenaltyTerms penalty_terms(const ProblemSpec& spec, RegimeIndex i, std::span<const double> x,
                           std::span<const double> values, std::span<const double> z) {
    const auto& c = spec.coefficients;
    PenaltyTerms out;
    out.driver = c.driver(i, x, values, z);
    const double yi = values[i.index()];
    for (std::size_t j = 0; j < spec.regimes; ++j) {
        RegimeIndex rj(j);
        const double h = c.constraint(i, rj, x, yi, values[j], z);
        out.violation += spec.intensity[rj] * negative_part(h);
        out.min_constraint = j == 0 ? h : std::min(out.min_constraint, h);
    }
    return out;
}

double evaluate_penalized_driver(const ProblemSpec& spec, std::uint64_t n, RegimeIndex i,
                                 std::span<const double> x, std::span<const double> values,
                                 std::span<const double> z) {
    if (n == 0) {
        return spec.coefficients.driver(i, x, values, z);
    }
    const auto t = penalty_terms(spec, i, x, values, z);
    return t.driver + static_cast<double>(n) * t.violation;
}

}  // namespace cvi
