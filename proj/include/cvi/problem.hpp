#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvi {

/// Regime of the transmutation process. Stored zero-based; `label()` gives
/// the one-based number used in configs and CSV output.
class RegimeIndex {
  public:
    constexpr RegimeIndex() = default;
    constexpr explicit RegimeIndex(std::size_t zero_based) : index_(zero_based) {}

    static RegimeIndex from_label(long label) {
        if (label < 1) {
            throw std::invalid_argument("regime labels start at 1");
        }
        return RegimeIndex(static_cast<std::size_t>(label - 1));
    }

    constexpr std::size_t index() const { return index_; }
    constexpr long label() const { return static_cast<long>(index_) + 1; }

    constexpr auto operator<=>(const RegimeIndex&) const = default;

  private:
    std::size_t index_ = 0;
};

/// Thrown when a problem violates a hard structural requirement.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a scheme detects blow-up or non-finite values.
class NumericalAbort : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Finite intensity measure on the regime set (rates per unit time).
struct IntensityMeasure {
    std::vector<double> weights;

    double operator[](RegimeIndex j) const { return weights.at(j.index()); }
    double total() const;
    std::size_t size() const { return weights.size(); }
};

using DriftFn = std::function<void(RegimeIndex, std::span<const double> x, std::span<double> out)>;
/// Writes the d x d volatility matrix in row-major order.
using VolFn = std::function<void(RegimeIndex, std::span<const double> x, std::span<double> out)>;
using DriverFn = std::function<double(RegimeIndex, std::span<const double> x,
                                      std::span<const double> values, std::span<const double> z)>;
using ConstraintFn = std::function<double(RegimeIndex from, RegimeIndex to, std::span<const double> x,
                                          double y, double y_other, std::span<const double> z)>;
using TerminalFn = std::function<double(RegimeIndex, std::span<const double> x)>;
using RewardFn = std::function<double(RegimeIndex, std::span<const double> x)>;

/// Coefficients b, sigma, f, h and g of the coupled system. Evaluators must be
/// deterministic and reentrant.
struct CoefficientSet {
    DriftFn drift;
    VolFn vol;
    DriverFn driver;
    ConstraintFn constraint;
    TerminalFn terminal;
};

/// Optional a-priori bound |v_i(t,x)| <= c0 + c1 |x|.
struct GrowthBound {
    double c0 = 0.0;
    double c1 = 0.0;

    double at(std::span<const double> x) const;
};

/// Switching cost matrix, row-major m x m. Entry (i, j) is the cost paid when
/// moving from regime i to regime j.
class SwitchingCosts {
  public:
    SwitchingCosts() = default;
    explicit SwitchingCosts(std::vector<std::vector<double>> rows);

    std::size_t size() const { return size_; }
    double operator()(RegimeIndex from, RegimeIndex to) const {
        return costs_[from.index() * size_ + to.index()];
    }
    std::vector<std::vector<double>> rows() const;

    /// Empty when the matrix satisfies the zero diagonal, positive off-diagonal
    /// and strict triangle conditions; otherwise describes the first violation.
    std::optional<std::string> violation() const;

  private:
    std::size_t size_ = 0;
    std::vector<double> costs_;
};

/// Present when the problem is an optimal switching problem: driver equals a
/// running reward and the constraint is h_{i,j}(x, y, y') = y - y' + c_{i,j}.
struct SwitchingForm {
    SwitchingCosts costs;
    RewardFn running_reward;
};

struct ProblemSpec {
    std::string name;
    std::size_t regimes = 1;
    std::size_t dim = 1;
    double horizon = 1.0;
    IntensityMeasure intensity;
    CoefficientSet coefficients;
    RegimeIndex initial_regime;
    std::vector<double> initial_state;
    std::optional<GrowthBound> growth_bound;
    std::optional<SwitchingForm> switching;

    /// Throws std::invalid_argument on malformed dimensions or data.
    void check() const;
};

/// Inputs of an optimal switching problem.
struct SwitchingData {
    std::string name = "switching";
    std::size_t dim = 1;
    double horizon = 1.0;
    SwitchingCosts costs;
    DriftFn drift;
    VolFn vol;
    RewardFn running_reward;
    TerminalFn terminal;
    IntensityMeasure intensity;
    RegimeIndex initial_regime;
    std::vector<double> initial_state;
    std::optional<GrowthBound> growth_bound;
};

/// Builds the switching system: driver = running reward (ignores values and z),
/// constraint = y - y' + c_{i,j}. Requires at least two regimes
/// (std::invalid_argument); costs breaking the SwitchingCosts invariants throw
/// ValidationError.
ProblemSpec make_switching_problem(SwitchingData data);

/// Same construction with a single regime (cost matrix [[0]]).
ProblemSpec make_single_regime_problem(SwitchingData data);

/// Pieces of the penalized generator at one point: the raw driver f_i, the
/// violation sum_j lambda_j [h_{i,j}]^- and min_j h_{i,j} (j = i included).
struct PenaltyTerms {
    double driver = 0.0;
    double violation = 0.0;
    double min_constraint = 0.0;
};

PenaltyTerms penalty_terms(const ProblemSpec& spec, RegimeIndex i, std::span<const double> x,
                           std::span<const double> values, std::span<const double> z);

/// f_i(x, values, z) + n * sum_j lambda_j [h_{i,j}(x, values_i, values_j, z)]^-.
double evaluate_penalized_driver(const ProblemSpec& spec, std::uint64_t n, RegimeIndex i,
                                 std::span<const double> x, std::span<const double> values,
                                 std::span<const double> z);

inline double negative_part(double v) { return v < 0.0 ? -v : 0.0; }

}  // namespace cvi
