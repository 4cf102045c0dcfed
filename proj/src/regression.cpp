#include "cvi/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace cvi {

namespace {

std::size_t binomial(std::size_t n, std::size_t k) {
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

// Monomials of total degree `remaining` in z[pos..], first coordinate's power
// descending, so each degree level comes out in lexicographic order.
void emit_monomials(std::span<const double> z, std::size_t pos, int remaining, double product, double*& out) {
    if (pos + 1 == z.size()) {
        *out++ = product * std::pow(z[pos], remaining);
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        emit_monomials(z, pos + 1, remaining - e, product * std::pow(z[pos], e), out);
    }
}

FeatureMap fit_feature_map(const BasisSpec& basis, std::span<const double> states, std::size_t dim,
                           std::span<const std::size_t> rows) {
    FeatureMap map;
    map.center.assign(dim, 0.0);
    map.scale.assign(dim, 1.0);
    if (basis.standardize && !rows.empty()) {
        const double n = static_cast<double>(rows.size());
        for (std::size_t c = 0; c < dim; ++c) {
            double mean = 0.0;
            for (std::size_t r : rows) {
                mean += states[r * dim + c];
            }
            mean /= n;
            double var = 0.0;
            for (std::size_t r : rows) {
                const double e = states[r * dim + c] - mean;
                var += e * e;
            }
            const double sd = std::sqrt(var / n);
            map.center[c] = mean;
            map.scale[c] = sd > 1e-12 * (1.0 + std::abs(mean)) ? sd : 1.0;
        }
    }
    if (basis.kind == BasisKind::piecewise_linear) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t r : rows) {
            const double z = (states[r * dim] - map.center[0]) / map.scale[0];
            lo = std::min(lo, z);
            hi = std::max(hi, z);
        }
        if (rows.empty()) {
            lo = 0.0;
            hi = 1.0;
        }
        if (!(hi - lo > 1e-12)) {
            hi = lo + 1.0;
        }
        map.lo = lo;
        map.hi = hi;
    }
    return map;
}

}  // namespace

std::size_t BasisSpec::size(std::size_t dim) const {
    if (degree < 0) {
        throw std::invalid_argument("basis degree must be nonnegative");
    }
    if (kind == BasisKind::piecewise_linear) {
        if (dim != 1) {
            throw std::invalid_argument("piecewise-linear basis requires d = 1");
        }
        if (degree < 2) {
            throw std::invalid_argument("piecewise-linear basis needs at least two knots");
        }
        return static_cast<std::size_t>(degree);
    }
    return binomial(dim + static_cast<std::size_t>(degree), dim);
}

void evaluate_basis(const BasisSpec& basis, const FeatureMap& map, std::span<const double> x, std::span<double> out) {
    const std::size_t dim = x.size();
    double zbuf[16];
    std::vector<double> zheap;
    double* z = zbuf;
    if (dim > 16) {
        zheap.resize(dim);
        z = zheap.data();
    }
    for (std::size_t c = 0; c < dim; ++c) {
        z[c] = (x[c] - map.center[c]) / map.scale[c];
    }
    if (basis.kind == BasisKind::piecewise_linear) {
        const auto knots = static_cast<std::size_t>(basis.degree);
        std::fill(out.begin(), out.end(), 0.0);
        // Hat functions on uniform knots; linear extrapolation outside the range.
        const double u = (z[0] - map.lo) / (map.hi - map.lo) * static_cast<double>(knots - 1);
        const auto cell = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(knots - 2)));
        const double frac = u - static_cast<double>(cell);
        out[cell] = 1.0 - frac;
        out[cell + 1] = frac;
        return;
    }
    if (dim == 1) {
        double p = 1.0;
        for (int e = 0; e <= basis.degree; ++e) {
            out[static_cast<std::size_t>(e)] = p;
            p *= z[0];
        }
        return;
    }
    double* cursor = out.data();
    std::span<const double> zs(z, dim);
    for (int t = 0; t <= basis.degree; ++t) {
        emit_monomials(zs, 0, t, 1.0, cursor);
    }
}

DesignBlock build_block(const BasisSpec& basis, std::span<const double> states, std::size_t dim,
                        std::vector<std::size_t> rows) {
    DesignBlock block;
    block.map = fit_feature_map(basis, states, dim, rows);
    const std::size_t cols = basis.size(dim);
    block.matrix.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    std::vector<double> row(cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        evaluate_basis(basis, block.map, states.subspan(rows[r] * dim, dim), row);
        for (std::size_t c = 0; c < cols; ++c) {
            block.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
        }
    }
    block.rows = std::move(rows);
    return block;
}

Design build_design(const BasisSpec& basis, std::span<const RegimeIndex> regimes, std::span<const double> states,
                    std::size_t dim) {
    if (regimes.empty()) {
        throw std::invalid_argument("design needs at least one sample");
    }
    if (states.size() != regimes.size() * dim) {
        throw std::invalid_argument("state array does not match the sample count");
    }
    Design design;
    design.basis = basis;
    design.dim = dim;
    design.sample_count = regimes.size();
    if (!basis.stratify_by_regime) {
        std::vector<std::size_t> rows(regimes.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            rows[r] = r;
        }
        design.blocks.push_back(build_block(basis, states, dim, std::move(rows)));
        return design;
    }
    std::map<RegimeIndex, std::vector<std::size_t>> strata;
    for (std::size_t r = 0; r < regimes.size(); ++r) {
        strata[regimes[r]].push_back(r);
    }
    for (auto& [regime, rows] : strata) {
        auto block = build_block(basis, states, dim, std::move(rows));
        block.regime = regime;
        design.blocks.push_back(std::move(block));
    }
    return design;
}

double default_ridge(const Eigen::MatrixXd& design, std::span<const double> weights) {
    const auto rows = design.rows();
    const auto cols = design.cols();
    if (cols == 0 || rows == 0) {
        return 0.0;
    }
    double total_w = 0.0;
    double trace = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(r)];
        total_w += w;
        trace += w * design.row(r).squaredNorm();
    }
    return 1e-10 * trace / total_w / static_cast<double>(cols);
}

LeastSquares::LeastSquares(const Eigen::MatrixXd& design, double ridge, std::span<const double> weights)
    : design_(design), ridge_(ridge) {
    const Eigen::Index rows = design.rows();
    const Eigen::Index cols = design.cols();
    if (rows == 0) {
        throw std::invalid_argument("least squares needs at least one row");
    }
    if (!weights.empty() && weights.size() != static_cast<std::size_t>(rows)) {
        throw std::invalid_argument("weight count does not match the design");
    }
    if (ridge < 0.0) {
        throw std::invalid_argument("ridge must be nonnegative");
    }
    sqrt_w_.resize(rows);
    double total = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        total += weights.empty() ? 1.0 : weights[static_cast<std::size_t>(r)];
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(r)];
        sqrt_w_(r) = std::sqrt(w / total);
    }

    Eigen::MatrixXd weighted = sqrt_w_.asDiagonal() * design;
    const Eigen::MatrixXd gram = weighted.transpose() * weighted;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    gram_condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();

    if (ridge > 0.0) {
        Eigen::MatrixXd augmented(rows + cols, cols);
        augmented.topRows(rows) = weighted;
        augmented.bottomRows(cols) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(cols, cols);
        cod_.compute(augmented);
    } else {
        cod_.compute(weighted);
    }
    rank_deficient_ = cod_.rank() < cols;
}

OlsFit LeastSquares::fit(std::span<const double> targets) const {
    const Eigen::Index rows = design_.rows();
    const Eigen::Index cols = design_.cols();
    if (targets.size() != static_cast<std::size_t>(rows)) {
        throw std::invalid_argument("target count does not match the design");
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ridge_ > 0.0 ? rows + cols : rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        rhs(r) = sqrt_w_(r) * targets[static_cast<std::size_t>(r)];
    }
    const Eigen::VectorXd alpha = cod_.solve(rhs);

    OlsFit out;
    out.coefficients.assign(alpha.data(), alpha.data() + alpha.size());
    out.gram_condition = gram_condition_;
    out.sample_count = static_cast<std::size_t>(rows);
    out.ridge = ridge_;
    out.rank_deficient = rank_deficient_;
    const Eigen::VectorXd fitted = design_ * alpha;
    double mse = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double e = targets[static_cast<std::size_t>(r)] - fitted(r);
        mse += sqrt_w_(r) * sqrt_w_(r) * e * e;
    }
    out.residual_mse = mse;
    return out;
}

OlsFit ols_fit(const Eigen::MatrixXd& design, std::span<const double> targets, double ridge,
               std::span<const double> weights) {
    return LeastSquares(design, ridge, weights).fit(targets);
}

double predict(const RegressionFit& fit, RegimeIndex regime, std::span<const double> x) {
    const std::size_t slot = fit.basis.stratify_by_regime ? regime.index() : 0;
    if (slot >= fit.strata.size() || !fit.strata[slot]) {
        throw std::out_of_range("unseen regime stratum");
    }
    const auto& stratum = *fit.strata[slot];
    std::vector<double> row(fit.basis.size(x.size()));
    evaluate_basis(fit.basis, stratum.map, x, row);
    double v = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
        v += stratum.fit.coefficients[c] * row[c];
    }
    return v;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> subset(std::span<const double> values, std::span<const std::size_t> rows) {
    std::vector<double> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out[r] = values[rows[r]];
    }
    return out;
}

}  // namespace

Projector Projector::regression(const StepSamples& samples, const BasisSpec& basis, std::optional<double> ridge,
                                std::size_t min_stratum_samples) {
    Projector p;
    p.mode_ = Mode::regression;
    p.count_ = samples.size();
    p.regimes_ = samples.regimes;
    p.dim_ = samples.dim;
    p.basis_ = basis;
    p.weight_.assign(samples.weight.begin(), samples.weight.end());
    p.sample_regime_.resize(p.count_);
    for (std::size_t s = 0; s < p.count_; ++s) {
        p.sample_regime_[s] = samples.regime[s].index();
    }

    auto add_block = [&](DesignBlock design, std::vector<std::size_t> serves, bool fallback) {
        const auto w = subset(samples.weight, design.rows);
        const double r = ridge ? *ridge : default_ridge(design.matrix, w);
        LeastSquares solver(design.matrix, r, w);
        p.blocks_.push_back(Block{std::move(design), std::move(solver), std::move(serves), fallback});
    };

    if (!basis.stratify_by_regime) {
        std::vector<std::size_t> rows(p.count_);
        std::vector<std::size_t> serves(p.regimes_);
        for (std::size_t s = 0; s < p.count_; ++s) {
            rows[s] = s;
        }
        for (std::size_t j = 0; j < p.regimes_; ++j) {
            serves[j] = j;
        }
        add_block(build_block(basis, samples.state, samples.dim, std::move(rows)), std::move(serves), false);
        return p;
    }

    std::vector<std::vector<std::size_t>> strata(p.regimes_);
    for (std::size_t s = 0; s < p.count_; ++s) {
        strata[p.sample_regime_[s]].push_back(s);
    }
    std::vector<std::size_t> starved;
    for (std::size_t j = 0; j < p.regimes_; ++j) {
        if (strata[j].empty()) {
            continue;
        }
        if (strata[j].size() < min_stratum_samples) {
            starved.push_back(j);
            continue;
        }
        auto block = build_block(basis, samples.state, samples.dim, std::move(strata[j]));
        block.regime = RegimeIndex(j);
        add_block(std::move(block), {j}, false);
    }
    if (!starved.empty()) {
        std::vector<std::size_t> rows(p.count_);
        for (std::size_t s = 0; s < p.count_; ++s) {
            rows[s] = s;
        }
        p.fallback_strata_ = starved.size();
        add_block(build_block(basis, samples.state, samples.dim, std::move(rows)), std::move(starved), true);
    }
    return p;
}

Projector Projector::grouping(const StepSamples& samples) {
    Projector p;
    p.mode_ = Mode::grouping;
    p.count_ = samples.size();
    p.regimes_ = samples.regimes;
    p.dim_ = samples.dim;
    p.weight_.assign(samples.weight.begin(), samples.weight.end());
    p.group_.resize(p.count_);
    std::map<std::vector<long long>, std::size_t> ids;
    std::vector<long long> key(samples.dim + 1);
    for (std::size_t s = 0; s < p.count_; ++s) {
        key[0] = static_cast<long long>(samples.regime[s].index());
        for (std::size_t c = 0; c < samples.dim; ++c) {
            key[c + 1] = std::llround(samples.state[s * samples.dim + c] * 1e9);
        }
        auto [it, inserted] = ids.try_emplace(key, ids.size());
        p.group_[s] = it->second;
    }
    p.group_count_ = ids.size();
    return p;
}

Projector Projector::mean(const StepSamples& samples) {
    Projector p;
    p.mode_ = Mode::mean;
    p.count_ = samples.size();
    p.regimes_ = samples.regimes;
    p.dim_ = samples.dim;
    p.weight_.assign(samples.weight.begin(), samples.weight.end());
    return p;
}

std::vector<double> Projector::project(std::span<const double> target, RegressionFit* fit) const {
    if (target.size() != count_) {
        throw std::invalid_argument("target count does not match the samples");
    }
    std::vector<double> out(count_, 0.0);
    switch (mode_) {
        case Mode::mean: {
            double num = 0.0;
            double den = 0.0;
            for (std::size_t s = 0; s < count_; ++s) {
                num += weight_[s] * target[s];
                den += weight_[s];
            }
            std::fill(out.begin(), out.end(), num / den);
            return out;
        }
        case Mode::grouping: {
            std::vector<double> num(group_count_, 0.0), den(group_count_, 0.0);
            for (std::size_t s = 0; s < count_; ++s) {
                num[group_[s]] += weight_[s] * target[s];
                den[group_[s]] += weight_[s];
            }
            for (std::size_t s = 0; s < count_; ++s) {
                out[s] = num[group_[s]] / den[group_[s]];
            }
            return out;
        }
        case Mode::regression:
            break;
    }

    if (fit) {
        fit->basis = basis_;
        fit->dim = dim_;
        fit->strata.assign(basis_.stratify_by_regime ? regimes_ : 1, std::nullopt);
    }
    std::vector<char> served(regimes_, 0);
    for (const Block& block : blocks_) {
        const auto t = subset(target, block.design.rows);
        OlsFit ols = block.solver.fit(t);
        const Eigen::Map<const Eigen::VectorXd> alpha(ols.coefficients.data(),
                                                      static_cast<Eigen::Index>(ols.coefficients.size()));
        const Eigen::VectorXd fitted = block.design.matrix * alpha;
        std::fill(served.begin(), served.end(), 0);
        for (std::size_t j : block.serves) {
            served[j] = 1;
        }
        for (std::size_t r = 0; r < block.design.rows.size(); ++r) {
            const std::size_t s = block.design.rows[r];
            if (served[sample_regime_[s]]) {
                out[s] = fitted(static_cast<Eigen::Index>(r));
            }
        }
        if (fit) {
            for (std::size_t j : block.serves) {
                const std::size_t slot = basis_.stratify_by_regime ? j : 0;
                fit->strata[slot] = RegressionFit::Stratum{block.design.map, ols, block.pooled_fallback};
            }
        }
    }
    return out;
}

}  // namespace cvi
