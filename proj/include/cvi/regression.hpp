#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cvi/problem.hpp"

namespace cvi {

enum class BasisKind { polynomial, piecewise_linear };

/// Regression basis on (I, X). For `polynomial`, `degree` is the total degree;
/// for `piecewise_linear` (d = 1 only) it is the number of hat-function knots.
struct BasisSpec {
    BasisKind kind = BasisKind::polynomial;
    int degree = 2;
    bool stratify_by_regime = true;
    /// Affine rescale of x per stratum before expansion.
    bool standardize = true;

    /// Number of basis functions L per stratum.
    std::size_t size(std::size_t dim) const;
};

/// Affine feature map applied before basis expansion.
struct FeatureMap {
    std::vector<double> center;
    std::vector<double> scale;
    // Knot range in mapped coordinates (piecewise-linear only).
    double lo = 0.0;
    double hi = 1.0;
};

/// Writes the L basis values at x.
void evaluate_basis(const BasisSpec& basis, const FeatureMap& map, std::span<const double> x, std::span<double> out);

/// One stratum of the design: sample rows and the basis evaluated on them.
struct DesignBlock {
    std::optional<RegimeIndex> regime;  // empty for a pooled block
    std::vector<std::size_t> rows;      // sample indices, increasing
    FeatureMap map;
    Eigen::MatrixXd matrix;
};

struct Design {
    BasisSpec basis;
    std::size_t dim = 1;
    std::size_t sample_count = 0;
    std::vector<DesignBlock> blocks;
};

/// Builds one block per regime present (or a single pooled block when not
/// stratified). `states` is flat, sample-major, `dim` entries per sample.
Design build_design(const BasisSpec& basis, std::span<const RegimeIndex> regimes, std::span<const double> states,
                    std::size_t dim);

/// Pooled block over the given rows, ignoring the regime.
DesignBlock build_block(const BasisSpec& basis, std::span<const double> states, std::size_t dim,
                        std::vector<std::size_t> rows);

struct OlsFit {
    std::vector<double> coefficients;
    double gram_condition = 1.0;
    double residual_mse = 0.0;
    std::size_t sample_count = 0;
    double ridge = 0.0;
    bool rank_deficient = false;
};

/// 1e-10 * trace(G) / L with G the (weighted) Gram matrix.
double default_ridge(const Eigen::MatrixXd& design, std::span<const double> weights = {});

/// Least squares with a fixed design, reusable across targets:
/// minimizes sum_r w_r (t_r - a_r alpha)^2 / sum_r w_r + ridge |alpha|^2.
/// Empty weights mean equal weights. A rank-deficient design with ridge 0 gets
/// the minimum-norm solution and is flagged.
class LeastSquares {
  public:
    LeastSquares(const Eigen::MatrixXd& design, double ridge, std::span<const double> weights = {});

    OlsFit fit(std::span<const double> targets) const;
    double gram_condition() const { return gram_condition_; }
    bool rank_deficient() const { return rank_deficient_; }

  private:
    Eigen::MatrixXd design_;
    Eigen::VectorXd sqrt_w_;
    double ridge_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
    double gram_condition_ = 1.0;
    bool rank_deficient_ = false;
};

OlsFit ols_fit(const Eigen::MatrixXd& design, std::span<const double> targets, double ridge,
               std::span<const double> weights = {});

/// Fitted expansion for one estimated quantity at one time step.
struct RegressionFit {
    struct Stratum {
        FeatureMap map;
        OlsFit fit;
        bool pooled_fallback = false;
    };

    BasisSpec basis;
    std::size_t dim = 1;
    /// Indexed by regime when stratified; a single entry otherwise.
    std::vector<std::optional<Stratum>> strata;
};

/// Throws std::out_of_range("unseen regime stratum") when the regime has no fit.
double predict(const RegressionFit& fit, RegimeIndex regime, std::span<const double> x);

/// Samples at one time step, all viewed, not owned.
struct StepSamples {
    std::span<const RegimeIndex> regime;
    std::span<const double> state;  // sample-major
    std::span<const double> weight;
    std::size_t dim = 1;
    std::size_t regimes = 1;

    std::size_t size() const { return regime.size(); }
};

/// Estimator of E[target | I_{t_k}, X_{t_k}] on one step's samples.
class Projector {
  public:
    /// OLS on the basis, stratified by regime. Strata with fewer than
    /// `min_stratum_samples` rows use a fit on all rows pooled.
    static Projector regression(const StepSamples& samples, const BasisSpec& basis, std::optional<double> ridge,
                                std::size_t min_stratum_samples);
    /// Exact conditional expectation on finitely many states: weighted average
    /// over samples sharing the regime and x (x compared on a 1e-9 lattice).
    static Projector grouping(const StepSamples& samples);
    /// Weighted sample mean (all samples share one state).
    static Projector mean(const StepSamples& samples);

    /// Per-sample projection; fills `fit` in regression mode when given.
    std::vector<double> project(std::span<const double> target, RegressionFit* fit = nullptr) const;

    std::size_t fallback_strata() const { return fallback_strata_; }

  private:
    enum class Mode { regression, grouping, mean };
    struct Block {
        DesignBlock design;
        LeastSquares solver;
        std::vector<std::size_t> serves;  // regimes whose rows take this block's prediction
        bool pooled_fallback;
    };

    Mode mode_ = Mode::mean;
    std::size_t count_ = 0;
    std::size_t regimes_ = 1;
    std::size_t dim_ = 1;
    BasisSpec basis_;
    std::vector<double> weight_;
    std::vector<std::size_t> sample_regime_;
    std::vector<Block> blocks_;
    std::vector<std::size_t> group_;
    std::size_t group_count_ = 0;
    std::size_t fallback_strata_ = 0;
};

}  // namespace cvi
