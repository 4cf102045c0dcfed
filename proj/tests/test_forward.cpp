#include <doctest.h>

#include <cmath>
#include <vector>

#include "cvi/forward.hpp"
#include "cvi/random.hpp"
#include "support.hpp"

using namespace cvi;
using test::moments;

TEST_CASE("marked Poisson sampling") {
    SUBCASE("zero intensity gives no atoms") {
        RandomStream rng(1, 0);
        CHECK(sample_jump_marks(IntensityMeasure{{0.0, 0.0}}, 5.0, rng).atoms.empty());
    }
    SUBCASE("mark frequency is lambda_j / total") {
        const IntensityMeasure lambda{{2.0, 3.0}};
        std::size_t atoms = 0;
        std::size_t second = 0;
        for (std::uint64_t s = 0; atoms < 100000; ++s) {
            RandomStream rng(9, s);
            for (const auto& a : sample_jump_marks(lambda, 1.0, rng).atoms) {
                ++atoms;
                second += a.mark.index() == 1 ? 1 : 0;
            }
        }
        const double p = static_cast<double>(second) / static_cast<double>(atoms);
        const double se = std::sqrt(0.6 * 0.4 / static_cast<double>(atoms));
        CHECK(std::abs(p - 0.6) <= 3.0 * se);
    }
    SUBCASE("atom count has mean Lambda T") {
        const IntensityMeasure lambda{{0.7, 1.3}};
        std::vector<double> counts;
        for (std::uint64_t s = 0; s < 100000; ++s) {
            RandomStream rng(4, s);
            counts.push_back(static_cast<double>(sample_jump_marks(lambda, 1.5, rng).atoms.size()));
        }
        const auto m = moments(counts);
        CHECK(std::abs(m.mean - 3.0) <= 3.0 * m.se);
        CHECK(std::abs(m.var - 3.0) < 0.1);  // Poisson: variance equals mean
    }
    SUBCASE("atoms sorted inside (0, T]") {
        RandomStream rng(2, 2);
        const auto marks = sample_jump_marks(IntensityMeasure{{20.0}}, 1.0, rng);
        REQUIRE(!marks.atoms.empty());
        for (std::size_t i = 0; i < marks.atoms.size(); ++i) {
            CHECK(marks.atoms[i].time > 0.0);
            CHECK(marks.atoms[i].time <= 1.0);
            if (i > 0) {
                CHECK(marks.atoms[i].time > marks.atoms[i - 1].time);
            }
        }
    }
}

TEST_CASE("regime paths") {
    const RegimeIndex r1(0), r2(1);
    SUBCASE("no marks") {
        const auto path = simulate_regime_path(r1, {});
        CHECK(path.at(0.0) == r1);
        CHECK(path.at(1.0) == r1);
        CHECK(path.changes().empty());
    }
    SUBCASE("self-marks change nothing") {
        const auto path = simulate_regime_path(r2, MarkedPoissonPath{{{0.3, r2}, {0.7, r2}}});
        CHECK(path.changes().empty());
        CHECK(path.at(0.5) == r2);
    }
    SUBCASE("right-continuous switching") {
        const auto path = simulate_regime_path(r1, MarkedPoissonPath{{{0.3, r2}, {0.7, r1}}});
        CHECK(path.at(0.0) == r1);
        CHECK(path.at(0.29) == r1);
        CHECK(path.at(0.3) == r2);
        CHECK(path.at(0.69) == r2);
        CHECK(path.at(0.7) == r1);
        CHECK(path.at(1.0) == r1);
    }
}

TEST_CASE("compensated increments") {
    const IntensityMeasure lambda{{2.0, 2.0}};
    const RegimeIndex j(1);
    CHECK(compensated_increment({}, 0.2, 0.3, j, lambda) == doctest::Approx(-0.2));
    CHECK(compensated_increment(MarkedPoissonPath{{{0.25, j}}}, 0.2, 0.3, j, lambda) == doctest::Approx(0.8));
    // the left end is open, the right end closed
    CHECK(compensated_increment(MarkedPoissonPath{{{0.2, j}}}, 0.2, 0.3, j, lambda) == doctest::Approx(-0.2));
    CHECK(compensated_increment(MarkedPoissonPath{{{0.3, j}}}, 0.2, 0.3, j, lambda) == doctest::Approx(0.8));

    std::vector<double> totals;
    for (std::uint64_t s = 0; s < 100000; ++s) {
        RandomStream rng(5, s);
        totals.push_back(compensated_increment(sample_jump_marks(lambda, 1.0, rng), 0.0, 1.0, j, lambda));
    }
    const auto m = moments(totals);
    CHECK(std::abs(m.mean) <= 3.0 * m.se);
}

TEST_CASE("grids") {
    const auto g = regular_grid(1.0, 0.25);
    REQUIRE(g.size() == 5);
    CHECK(g.back() == 1.0);
    CHECK_THROWS_AS(regular_grid(1.0, 0.3), std::invalid_argument);
    const auto c = concatenate_grid(g, MarkedPoissonPath{{{0.1, RegimeIndex(0)}, {0.5, RegimeIndex(0)}}});
    CHECK(c == std::vector<double>{0.0, 0.1, 0.25, 0.5, 0.75, 1.0});
}

TEST_CASE("Euler paths") {
    SUBCASE("degenerate dynamics stay at x0") {
        const auto spec = test::scalar_problem(0.0, 0.0, [](double x) { return x; }, 0.0, 2.0, 0.4);
        const auto b = simulate_paths(spec, 50, 0.1, 3);
        for (double x : b.state) {
            CHECK(x == 0.4);
        }
    }
    SUBCASE("unit drift, no noise") {
        const auto spec = test::scalar_problem(1.0, 0.0, [](double x) { return x; }, 0.0, 2.0, 0.4);
        const auto b = simulate_paths(spec, 20, 0.1, 3);
        for (std::size_t p = 0; p < b.path_count(); ++p) {
            CHECK(b.state_at(p, b.steps)[0] == doctest::Approx(1.4).epsilon(1e-12));
        }
    }
    SUBCASE("Brownian variance") {
        const auto spec = test::scalar_problem(0.0, 1.0, [](double x) { return x; }, 0.0, 1.0, 0.0, 1.0);
        const auto b = simulate_paths(spec, 100000, 0.1, 17, 4);
        std::vector<double> sq;
        for (std::size_t p = 0; p < b.path_count(); ++p) {
            const double x = b.state_at(p, b.steps)[0];
            sq.push_back(x * x);
        }
        const auto m = moments(sq);  // E[X_T^2] = T since the mean is 0
        CHECK(std::abs(m.mean - 1.0) <= 3.0 * m.se);
    }
    SUBCASE("weak error halves with h") {
        // dX = X dt + 0.2 dW: E[X_T] = e^T, Euler mean (1 + h)^{T/h}.
        SwitchingData data;
        data.drift = [](RegimeIndex, std::span<const double> x, std::span<double> out) { out[0] = x[0]; };
        data.vol = [](RegimeIndex, std::span<const double>, std::span<double> out) { out[0] = 0.2; };
        data.running_reward = [](RegimeIndex, std::span<const double>) { return 0.0; };
        data.terminal = [](RegimeIndex, std::span<const double> x) { return x[0]; };
        data.intensity = IntensityMeasure{{1.0}};
        data.initial_state = {1.0};
        const auto spec = make_single_regime_problem(std::move(data));
        auto error = [&](double h) {
            const auto b = simulate_paths(spec, 200000, h, 23, 4);
            double mean = 0.0;
            for (std::size_t p = 0; p < b.path_count(); ++p) {
                mean += b.state_at(p, b.steps)[0] / static_cast<double>(b.path_count());
            }
            return std::abs(mean - std::exp(1.0));
        };
        const double ratio = error(0.1) / error(0.05);
        CHECK(ratio >= 2.0 * 0.7);
        CHECK(ratio <= 2.0 * 1.3);
    }
}

TEST_CASE("path bundles") {
    const auto spec = make_catalog_problem("switch2-linear");
    const auto a = simulate_paths(spec, 400, 0.05, 99, 1);

    SUBCASE("independent of the worker count") {
        for (std::size_t w : {2u, 8u}) {
            const auto b = simulate_paths(spec, 400, 0.05, 99, w);
            CHECK(a.time == b.time);
            CHECK(a.state == b.state);
            CHECK(a.regime == b.regime);
            CHECK(a.increment == b.increment);
            CHECK(a.atom_time == b.atom_time);
            CHECK(a.atom_mark == b.atom_mark);
        }
    }
    SUBCASE("every regular time is a node") {
        for (std::size_t p = 0; p < a.path_count(); ++p) {
            for (std::size_t k = 0; k <= a.steps; ++k) {
                CHECK(a.time[a.node(p, k)] == a.grid_time(k));
            }
        }
    }
    SUBCASE("atom times are nodes and the regime follows the marks") {
        for (std::size_t p = 0; p < a.path_count(); ++p) {
            const auto marks = a.marks(p);
            const auto regimes = simulate_regime_path(spec.initial_regime, marks);
            for (std::size_t l = a.node_begin[p]; l < a.node_begin[p + 1]; ++l) {
                CHECK(static_cast<std::size_t>(a.regime[l]) == regimes.at(a.time[l]).index());
            }
            for (const auto& atom : marks.atoms) {
                bool found = false;
                for (std::size_t l = a.node_begin[p]; l < a.node_begin[p + 1]; ++l) {
                    found = found || a.time[l] == atom.time;
                }
                CHECK(found);
            }
        }
    }
    SUBCASE("weights sum to one") {
        double s = 0.0;
        for (double w : a.weight) {
            s += w;
        }
        CHECK(s == doctest::Approx(1.0));
    }
}

TEST_CASE("regime marginal law at T") {
    // Marks arrive at rate lambda_j regardless of the regime, so
    // P(I_T = j) = (1 - e^{-Lambda T}) lambda_j / Lambda + e^{-Lambda T} 1{j = i0}.
    CatalogOverrides o;
    o.intensity = std::vector<double>{0.4, 0.9};
    const auto spec = make_catalog_problem("switch2-linear", o);
    const auto b = simulate_paths(spec, 100000, 0.25, 31, 4);
    std::size_t second = 0;
    for (std::size_t p = 0; p < b.path_count(); ++p) {
        second += b.regime_at(p, b.steps).index() == 1 ? 1 : 0;
    }
    const double total = 1.3;
    const double p2 = (1.0 - std::exp(-total)) * 0.9 / total;
    const double freq = static_cast<double>(second) / static_cast<double>(b.path_count());
    CHECK(std::abs(freq - p2) <= 3.0 * std::sqrt(p2 * (1.0 - p2) / static_cast<double>(b.path_count())));
}
