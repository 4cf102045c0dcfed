// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cvi/backward.hpp"
#include "cvi/catalog.hpp"
#include "cvi/fd.hpp"
#include "cvi/forward.hpp"
#include "cvi/io.hpp"
#include "cvi/lattice.hpp"
#include "cvi/random.hpp"
#include "support.hpp"

using namespace cvi;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double sup_gap(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s = std::max(s, std::abs(a[i] - b[i]));
    }
    return s;
}

Outcome c1_martingale() {
    const auto t0 = Clock::now();
    const auto spec = make_catalog_problem("bm1");
    SchemeConfig config;
    config.h = 0.05;
    config.paths = 10000;
    config.basis.degree = 2;
    config.seed = 42;
    const auto b = simulate_paths(spec, config.paths, config.h, config.seed);
    const auto r = solve_backward(spec, config, b);
    const double secs = seconds_since(t0);
    const double gap = std::abs(r.y0 - 0.7);
    return {gap <= 3.0 * r.terminal_std_error && secs <= 30.0,
            fmt("y0=%.6f |y0-0.7|=%.2e 3se=%.2e runtime=%.2fs", r.y0, gap, 3.0 * r.terminal_std_error, secs)};
}

Outcome c2_quadratic() {
    const auto spec = make_catalog_problem("bm1-quad");
    SchemeConfig config;
    config.h = 0.02;
    config.paths = 10000;
    config.seed = 42;
    const auto b = simulate_paths(spec, config.paths, config.h, config.seed);
    const auto r = solve_backward(spec, config, b);
    const double gap = std::abs(r.y0 - 1.0);
    const double budget = 3.0 * r.terminal_std_error + 0.02;
    return {gap <= budget, fmt("y0=%.6f |y0-1|=%.2e budget=%.2e", r.y0, gap, budget)};
}

Outcome c3_exact_mode() {
    CatalogOverrides o;
    o.intensity = std::vector<double>{1.0, 1.0};
    const auto spec = make_catalog_problem("switch2-linear", o);
    const LatticeSpec lattice{0.25};
    const auto lp = enumerate_lattice_paths(spec, lattice);
    const std::size_t K = lp.bundle.steps;
    double worst_y0 = 0.0;
    double worst_u = 0.0;
    for (std::uint64_t n : {0u, 4u, 16u}) {
        SchemeConfig config;
        config.h = lattice.h;
        config.n = n;
        config.paths = lp.bundle.path_count();
        config.mode = ExpectationMode::exact;
        config.clip_to_growth_bound = false;
        config.keep_estimates = true;
        const auto r = solve_backward(spec, config, lp.bundle);
        const auto dp = lattice_dp_solve(spec, lattice, n);
        worst_y0 = std::max(worst_y0, std::abs(r.y0 - dp.y0));
        for (std::size_t p = 0; p < lp.bundle.path_count(); ++p) {
            for (std::size_t k = 0; k < K; ++k) {
                const auto& node = dp.values[k][lp.node_of[p * (K + 1) + k]];
                for (std::size_t j = 0; j < spec.regimes; ++j) {
                    worst_u = std::max(worst_u, std::abs(r.estimates[k].u[p * spec.regimes + j] - node.u[j]));
                }
            }
        }
    }
    return {worst_y0 <= 1e-12 && worst_u <= 1e-12,
            fmt("paths=%zu n={0,4,16} max|dy0|=%.2e max|dU|=%.2e", lp.bundle.path_count(), worst_y0, worst_u)};
}

const std::vector<std::uint64_t> ladder_schedule{1, 2, 4, 8, 16, 32, 64};

const LadderReport& lattice_report() {
    static const LadderReport report =
        lattice_ladder(make_catalog_problem("switch2-linear"), LatticeSpec{0.005}, ladder_schedule);
    return report;
}

Outcome c4_monotonicity() {
    const auto& r = lattice_report();
    bool y_up = true;
    bool v_down = true;
    for (std::size_t i = 1; i < r.y0.size(); ++i) {
        y_up = y_up && r.y0[i] >= r.y0[i - 1];
        v_down = v_down && r.violation[i] <= r.violation[i - 1];
    }
    const double ratio = r.violation.back() / r.violation.front();
    std::ostringstream d;
    d << fmt("y0 nondecreasing=%s violation nonincreasing=%s violation(64)/violation(1)=%.4f (need <= 0.01)",
             y_up ? "yes" : "no", v_down ? "yes" : "no", ratio);
    return {y_up && v_down && ratio <= 1e-2, d.str()};
}

Outcome c5_u_identity() {
    const auto spec = make_catalog_problem("switch2-linear");
    double worst = 0.0;
    std::size_t nodes = 0;
    for (std::uint64_t n : {1u, 64u}) {
        const auto sol = lattice_dp_solve(spec, LatticeSpec{0.005}, n);
        for (std::size_t k = 0; k < sol.chain.steps; ++k) {
            for (std::size_t i = 0; i < sol.chain.levels[k].size(); ++i) {
                const auto& v = sol.values[k][i];
                const std::size_t r = sol.chain.levels[k][i].regime.index();
                for (std::size_t j = 0; j < spec.regimes; ++j) {
                    worst = std::max(worst, std::abs(v.u[j] - (v.vhat[j] - v.vhat[r])));
                }
                ++nodes;
            }
        }
    }
    return {worst <= 1e-10, fmt("nodes=%zu max|U - (vhat_j - vhat_i)|=%.2e", nodes, worst)};
}

FdConfig benchmark_fd() {
    FdConfig fd;
    fd.intervals = 400;
    fd.dt = 1e-3;
    fd.mode = FdMode::projection;
    return fd;
}

Outcome c6_cross_engine() {
    const auto t0 = Clock::now();
    const auto spec = make_catalog_problem("switch2-linear");
    SchemeConfig config;
    config.h = 0.02;
    config.n = 64;
    config.paths = 50000;
    config.basis.degree = 1;
    config.seed = 42;
    config.workers = 4;
    const auto b = simulate_paths(spec, config.paths, config.h, config.seed, config.workers);
    const auto r = solve_backward(spec, config, b);
    const auto grid = fd_solve(spec, benchmark_fd());
    const auto cmp = oracle_compare(r, grid, 0.0, spec.initial_regime, spec.initial_state[0]);
    const double secs = seconds_since(t0);
    return {cmp.abs_gap <= 5e-2 && secs <= 300.0,
            fmt("y0=%.6f fd=%.6f gap=%.2e runtime=%.1fs", r.y0, cmp.oracle_value, cmp.abs_gap, secs)};
}

Outcome c7_fd_consistency() {
    const auto spec = make_catalog_problem("switch2-linear");
    const auto fd = benchmark_fd();
    const auto proj = fd_solve(spec, fd);
    FdConfig pen = fd;
    pen.mode = FdMode::penalized;
    pen.n = 256;
    const double sup = sup_gap(fd_solve(spec, pen).values, proj.values);

    // same box for all three solves so the grids coincide
    FdConfig box = fd;
    box.x_min = -3.0;
    box.x_max = 3.0;
    CatalogOverrides o;
    o.costs = std::vector<std::vector<double>>{{0.0, 1e6}, {1e6, 0.0}};
    const auto coupled = fd_solve(make_catalog_problem("switch2-linear", o), box);
    double decouple = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        const double sigma = i == 0 ? 0.2 : 0.4;
        const double reward = i == 0 ? 0.0 : 0.2;
        const auto single = fd_solve(test::scalar_problem(0.0, sigma, [](double x) { return x; }, reward), box);
        for (std::size_t k = 0; k < coupled.times.size(); ++k) {
            for (std::size_t j = 0; j < coupled.x.size(); ++j) {
                decouple = std::max(decouple, std::abs(coupled.at(i, k, j) - single.at(0, k, j)));
            }
        }
    }
    return {sup <= 1e-2 && decouple <= 1e-8,
            fmt("sup|penalized(256) - projection|=%.2e decoupling max gap=%.2e", sup, decouple)};
}

Outcome c8_skorohod() {
    const auto& r = lattice_report();
    const double first = std::abs(r.skorohod.front());
    const double last = std::abs(r.skorohod.back());
    return {last <= 0.1 * first, fmt("|skorohod(1)|=%.4e |skorohod(64)|=%.4e ratio=%.4f", first, last, last / first)};
}

Outcome c9_forward_law() {
    const IntensityMeasure lambda{{0.7, 1.3}};
    const double T = 1.5;
    const std::size_t draws = 100000;
    double sum = 0.0;
    double sq = 0.0;
    std::size_t atoms = 0;
    std::size_t second = 0;
    for (std::uint64_t s = 0; s < draws; ++s) {
        RandomStream rng(2024, s);
        const auto marks = sample_jump_marks(lambda, T, rng);
        const double c = static_cast<double>(marks.atoms.size());
        sum += c;
        sq += c * c;
        for (const auto& a : marks.atoms) {
            ++atoms;
            second += a.mark.index() == 1 ? 1 : 0;
        }
    }
    const double nd = static_cast<double>(draws);
    const double mean = sum / nd;
    const double se_mean = std::sqrt((sq / nd - mean * mean) / nd);
    const double p_true = 1.3 / 2.0;
    const double freq = static_cast<double>(second) / static_cast<double>(atoms);
    const double se_freq = std::sqrt(p_true * (1.0 - p_true) / static_cast<double>(atoms));
    const bool poisson_ok = std::abs(mean - 2.0 * T) <= 3.0 * se_mean &&
                            std::abs(freq - p_true) <= 3.0 * se_freq;

    // dX = X dt + 0.2 dW, X_0 = 1: E[X_1] = e, Euler mean (1 + h)^{1/h}
    SwitchingData data;
    data.drift = [](RegimeIndex, std::span<const double> x, std::span<double> out) { out[0] = x[0]; };
    data.vol = [](RegimeIndex, std::span<const double>, std::span<double> out) { out[0] = 0.2; };
    data.running_reward = [](RegimeIndex, std::span<const double>) { return 0.0; };
    data.terminal = [](RegimeIndex, std::span<const double> x) { return x[0]; };
    data.intensity = IntensityMeasure{{1.0}};
    data.initial_state = {1.0};
    const auto spec = make_single_regime_problem(std::move(data));
    auto weak_error = [&](double h) {
        const auto b = simulate_paths(spec, 200000, h, 23, 4);
        double m = 0.0;
        for (std::size_t p = 0; p < b.path_count(); ++p) {
            m += b.state_at(p, b.steps)[0] / static_cast<double>(b.path_count());
        }
        return std::abs(m - std::exp(1.0));
    };
    const double ratio = weak_error(0.1) / weak_error(0.05);
    const bool euler_ok = ratio >= 1.4 && ratio <= 2.6;
    return {poisson_ok && euler_ok,
            fmt("count mean=%.4f (expect %.4f, se %.1e) mark freq=%.4f (expect %.4f, se %.1e) weak-error ratio=%.3f",
                mean, 2.0 * T, se_mean, freq, p_true, se_freq, ratio)};
}

Outcome c10_reproducibility() {
    auto dump = [](const char* problem, const SchemeConfig& base, std::size_t workers) {
        const auto spec = make_catalog_problem(problem);
        SchemeConfig config = base;
        config.workers = workers;
        const auto b = simulate_paths(spec, config.paths, config.h, config.seed, workers);
        return result_to_json(solve_backward(spec, config, b)).dump(2) + "\n";
    };
    SchemeConfig sw;
    sw.h = 0.02;
    sw.n = 64;
    sw.paths = 20000;
    sw.basis.degree = 1;
    sw.seed = 7;
    SchemeConfig bm;
    bm.h = 0.05;
    bm.paths = 10000;
    bm.seed = 42;
    bool same = true;
    std::size_t bytes = 0;
    for (const auto& [problem, config] : {std::pair{"switch2-linear", sw}, std::pair{"bm1", bm}}) {
        const auto one = dump(problem, config, 1);
        bytes += one.size();
        same = same && one == dump(problem, config, 2) && one == dump(problem, config, 8);
    }
    return {same, fmt("switch2-linear and bm1 result.json identical across workers {1,2,8}: %s (%zu bytes)",
                      same ? "yes" : "no", bytes)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"martingale benchmark", c1_martingale},
        {"quadratic benchmark", c2_quadratic},
        {"exact mode equals lattice recursion", c3_exact_mode},
        {"penalization monotonicity", c4_monotonicity},
        {"U representation", c5_u_identity},
        {"cross-engine value agreement", c6_cross_engine},
        {"FD self-consistency", c7_fd_consistency},
        {"Skorohod residual", c8_skorohod},
        {"forward-law checks", c9_forward_law},
        {"reproducibility", c10_reproducibility},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
