#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "cvi/random.hpp"
#include "cvi/regression.hpp"

using namespace cvi;

namespace {

BasisSpec raw_polynomial(int degree) {
    BasisSpec b;
    b.degree = degree;
    b.standardize = false;
    return b;
}

Eigen::MatrixXd design_of(const BasisSpec& basis, const std::vector<double>& x) {
    const std::vector<RegimeIndex> regimes(x.size());
    auto d = build_design(basis, regimes, x, 1);
    REQUIRE(d.blocks.size() == 1);
    return d.blocks[0].matrix;
}

}  // namespace

TEST_CASE("basis sizes") {
    CHECK(raw_polynomial(0).size(1) == 1);
    CHECK(raw_polynomial(2).size(1) == 3);
    CHECK(raw_polynomial(2).size(2) == 6);
    CHECK(raw_polynomial(3).size(3) == 20);
    BasisSpec pw;
    pw.kind = BasisKind::piecewise_linear;
    pw.degree = 5;
    CHECK(pw.size(1) == 5);
    CHECK_THROWS_AS(pw.size(2), std::invalid_argument);
}

TEST_CASE("design matrices") {
    const auto a = design_of(raw_polynomial(1), {0.0, 1.0, 2.0});
    Eigen::MatrixXd expected(3, 2);
    expected << 1, 0, 1, 1, 1, 2;
    CHECK(a.isApprox(expected));

    const auto ones = design_of(raw_polynomial(0), {0.3, -1.0, 5.0});
    CHECK(ones.cols() == 1);
    CHECK(ones.isApprox(Eigen::MatrixXd::Ones(3, 1)));

    SUBCASE("stratified blocks") {
        const std::vector<RegimeIndex> regimes{RegimeIndex(1), RegimeIndex(0), RegimeIndex(1)};
        const std::vector<double> x{1.0, 2.0, 3.0};
        const auto d = build_design(raw_polynomial(1), regimes, x, 1);
        REQUIRE(d.blocks.size() == 2);
        CHECK(d.blocks[0].regime == RegimeIndex(0));
        CHECK(d.blocks[0].rows == std::vector<std::size_t>{1});
        CHECK(d.blocks[1].rows == std::vector<std::size_t>{0, 2});
    }
    SUBCASE("piecewise hats sum to one inside the range") {
        BasisSpec pw;
        pw.kind = BasisKind::piecewise_linear;
        pw.degree = 4;
        std::vector<double> x;
        for (int i = 0; i <= 30; ++i) {
            x.push_back(-1.0 + 0.1 * i);
        }
        const auto m = design_of(pw, x);
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            CHECK(m.row(r).sum() == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("ordinary least squares") {
    const auto a = design_of(raw_polynomial(1), {0.0, 1.0, 2.0, 3.0});
    SUBCASE("target in the span") {
        const std::vector<double> y{0.0, 2.0, 4.0, 6.0};
        const auto fit = ols_fit(a, y, 0.0);
        CHECK(fit.coefficients[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(fit.coefficients[1] == doctest::Approx(2.0));
        CHECK(fit.residual_mse == doctest::Approx(0.0).epsilon(1e-20));
        CHECK(fit.sample_count == 4);
        CHECK_FALSE(fit.rank_deficient);
    }
    SUBCASE("constant target") {
        const auto fit = ols_fit(a, std::vector<double>(4, 7.0), 0.0);
        CHECK(fit.coefficients[0] == doctest::Approx(7.0));
        CHECK(std::abs(fit.coefficients[1]) < 1e-12);
    }
    SUBCASE("rank deficiency is flagged, not fatal") {
        Eigen::MatrixXd dup(3, 2);
        dup << 1, 1, 1, 1, 1, 1;
        const auto fit = ols_fit(dup, std::vector<double>{1, 2, 3}, 0.0);
        CHECK(fit.rank_deficient);
        CHECK(fit.coefficients[0] + fit.coefficients[1] == doctest::Approx(2.0));
    }
}

TEST_CASE("weighted OLS against the normal equations") {
    RandomStream rng(12, 0);
    const int rows = 200;
    const int cols = 4;
    Eigen::MatrixXd a(rows, cols);
    std::vector<double> y(rows), w(rows);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            a(r, c) = rng.normal();
        }
        y[r] = rng.normal() + 0.5 * a(r, 1);
        w[r] = 0.5 + rng.uniform();
    }
    const auto fit = ols_fit(a, y, 0.0, w);

    // (A' W A) alpha = A' W y, solved independently.
    const Eigen::Map<const Eigen::VectorXd> wy(w.data(), rows);
    const Eigen::Map<const Eigen::VectorXd> yy(y.data(), rows);
    const Eigen::MatrixXd g = a.transpose() * wy.asDiagonal() * a;
    const Eigen::VectorXd rhs = a.transpose() * wy.asDiagonal() * yy;
    const Eigen::VectorXd alpha = g.ldlt().solve(rhs);
    for (int c = 0; c < cols; ++c) {
        CHECK(fit.coefficients[static_cast<std::size_t>(c)] == doctest::Approx(alpha(c)).epsilon(1e-10));
    }

    SUBCASE("weighted residual is orthogonal to the columns") {
        const Eigen::Map<const Eigen::VectorXd> coef(fit.coefficients.data(), cols);
        const Eigen::VectorXd resid = yy - a * coef;
        const Eigen::VectorXd proj = a.transpose() * wy.asDiagonal() * resid;
        CHECK(proj.cwiseAbs().maxCoeff() < 1e-9);
    }
    SUBCASE("ridge is continuous at zero") {
        double prev = 1e300;
        for (double ridge : {1e-2, 1e-4, 1e-6, 1e-8}) {
            const auto f = ols_fit(a, y, ridge, w);
            double gap = 0.0;
            for (int c = 0; c < cols; ++c) {
                gap = std::max(gap, std::abs(f.coefficients[static_cast<std::size_t>(c)] - alpha(c)));
            }
            CHECK(gap < prev);
            prev = gap;
        }
        CHECK(prev < 1e-7);
    }
    SUBCASE("gram condition") {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g / wy.sum());
        const double cond = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
        CHECK(fit.gram_condition == doctest::Approx(cond).epsilon(1e-6));
    }
}

TEST_CASE("default ridge") {
    Eigen::MatrixXd a(2, 2);
    a << 1, 0, 0, 3;
    // trace(A'A / rows) / L = ((1 + 9) / 2) / 2
    CHECK(default_ridge(a) == doctest::Approx(1e-10 * 2.5));
}

TEST_CASE("prediction") {
    RegressionFit fit;
    fit.basis = raw_polynomial(1);
    fit.basis.stratify_by_regime = false;
    RegressionFit::Stratum s;
    s.map.center = {0.0};
    s.map.scale = {1.0};
    s.fit.coefficients = {0.0, 2.0};
    fit.strata.emplace_back(s);
    const double x[1] = {3.0};
    CHECK(predict(fit, RegimeIndex(0), x) == doctest::Approx(6.0));
    fit.strata[0]->fit.coefficients = {0.0, 0.0};
    CHECK(predict(fit, RegimeIndex(0), x) == 0.0);

    fit.basis.stratify_by_regime = true;
    CHECK_THROWS_AS(predict(fit, RegimeIndex(1), x), std::out_of_range);
}

TEST_CASE("projectors") {
    RandomStream rng(3, 3);
    const std::size_t n = 600;
    std::vector<RegimeIndex> regime(n);
    std::vector<double> x(n), w(n, 1.0 / static_cast<double>(n)), target(n);
    for (std::size_t i = 0; i < n; ++i) {
        regime[i] = RegimeIndex(i % 3 == 0 ? 1 : 0);
        x[i] = static_cast<double>(static_cast<int>(rng.uniform() * 5.0));  // five distinct states
        target[i] = x[i] * x[i] + (regime[i].index() == 1 ? 10.0 : 0.0) + rng.normal();
    }
    const StepSamples samples{regime, x, w, 1, 2};

    SUBCASE("grouping equals the per-state averages") {
        std::map<std::pair<std::size_t, double>, std::pair<double, double>> acc;
        for (std::size_t i = 0; i < n; ++i) {
            auto& a = acc[{regime[i].index(), x[i]}];
            a.first += target[i];
            a.second += 1.0;
        }
        const auto est = Projector::grouping(samples).project(target);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = acc[{regime[i].index(), x[i]}];
            CHECK(est[i] == doctest::Approx(a.first / a.second).epsilon(1e-12));
        }
    }
    SUBCASE("degree 4 on five states reproduces the grouping") {
        BasisSpec b;
        b.degree = 4;
        const auto reg = Projector::regression(samples, b, 0.0, 5).project(target);
        const auto grp = Projector::grouping(samples).project(target);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(reg[i] == doctest::Approx(grp[i]).epsilon(1e-8));
        }
    }
    SUBCASE("mean") {
        const auto est = Projector::mean(samples).project(target);
        double mean = 0.0;
        for (double t : target) {
            mean += t / static_cast<double>(n);
        }
        CHECK(est[0] == doctest::Approx(mean));
        CHECK(est[n - 1] == est[0]);
    }
    SUBCASE("starved stratum falls back to the pooled fit") {
        std::vector<RegimeIndex> skewed = regime;
        for (std::size_t i = 0; i < n; ++i) {
            skewed[i] = RegimeIndex(i < 2 ? 1 : 0);
        }
        const StepSamples s2{skewed, x, w, 1, 2};
        BasisSpec b;
        b.degree = 2;
        RegressionFit fit;
        const auto p = Projector::regression(s2, b, std::nullopt, 3);
        (void)p.project(target, &fit);
        CHECK(p.fallback_strata() == 1);
        REQUIRE(fit.strata.size() == 2);
        REQUIRE(fit.strata[1].has_value());
        CHECK(fit.strata[1]->pooled_fallback);
        CHECK_FALSE(fit.strata[0]->pooled_fallback);
    }
}
