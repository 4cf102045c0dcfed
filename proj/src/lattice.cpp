#include "cvi/lattice.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cvi {

namespace {

using NodeKey = std::pair<std::size_t, long long>;

NodeKey key_of(RegimeIndex r, double x) { return {r.index(), std::llround(x * 1e9)}; }

}  // namespace

std::size_t LatticeChain::node_count() const {
    std::size_t n = 0;
    for (const auto& level : levels) {
        n += level.size();
    }
    return n;
}

std::size_t LatticeChain::find(std::size_t k, RegimeIndex regime, double x) const {
    const auto key = key_of(regime, x);
    const auto& level = levels.at(k);
    for (std::size_t i = 0; i < level.size(); ++i) {
        if (key_of(level[i].regime, level[i].x) == key) {
            return i;
        }
    }
    throw std::out_of_range("no lattice node at the requested state");
}

LatticeChain build_lattice(const ProblemSpec& spec, const LatticeSpec& lattice) {
    spec.check();
    if (spec.dim != 1) {
        throw std::invalid_argument("the lattice oracle requires d = 1");
    }
    const auto grid = regular_grid(spec.horizon, lattice.h);
    const std::size_t K = grid.size() - 1;
    const double h = spec.horizon / static_cast<double>(K);
    const double sqrt_h = std::sqrt(h);
    const std::size_t m = spec.regimes;
    const double total = spec.intensity.total();
    if (total * h > 1.0) {
        throw std::invalid_argument("lattice step too large: total intensity times h exceeds 1");
    }

    LatticeChain chain;
    chain.h = h;
    chain.steps = K;
    chain.levels.resize(K + 1);
    chain.levels[0].push_back(LatticeNode{spec.initial_state[0], spec.initial_regime, 1.0, {}});
    std::size_t count = 1;
    double drift = 0.0;
    double vol = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        std::map<NodeKey, std::size_t> index;
        auto& next = chain.levels[k + 1];
        for (auto& node : chain.levels[k]) {
            const double x[1] = {node.x};
            spec.coefficients.drift(node.regime, x, std::span<double>(&drift, 1));
            spec.coefficients.vol(node.regime, x, std::span<double>(&vol, 1));
            for (double shock : {1.0, -1.0}) {
                const double x_next = node.x + drift * h + vol * shock * sqrt_h;
                for (int mark = -1; mark < static_cast<int>(m); ++mark) {
                    const double p =
                        0.5 * (mark < 0 ? 1.0 - total * h : spec.intensity.weights[static_cast<std::size_t>(mark)] * h);
                    if (!(p > 0.0)) {
                        continue;
                    }
                    const RegimeIndex r = mark < 0 ? node.regime : RegimeIndex(static_cast<std::size_t>(mark));
                    auto [it, inserted] = index.try_emplace(key_of(r, x_next), next.size());
                    if (inserted) {
                        next.push_back(LatticeNode{x_next, r, 0.0, {}});
                        if (++count > lattice.max_nodes) {
                            std::ostringstream msg;
                            msg << "lattice exceeds the node cap of " << lattice.max_nodes << " at level " << k + 1;
                            throw std::length_error(msg.str());
                        }
                    }
                    next[it->second].probability += node.probability * p;
                    node.outcomes.push_back(LatticeOutcome{it->second, p, shock, mark});
                }
            }
        }
    }
    return chain;
}

LatticeSolution lattice_dp_solve(const ProblemSpec& spec, const LatticeSpec& lattice, std::uint64_t n) {
    for (double w : spec.intensity.weights) {
        if (!(w > 0.0)) {
            throw std::invalid_argument("every intensity weight must be positive for the U estimator");
        }
    }
    LatticeSolution sol;
    sol.chain = build_lattice(spec, lattice);
    sol.n = n;
    const auto& chain = sol.chain;
    const std::size_t K = chain.steps;
    const std::size_t m = spec.regimes;
    const double h = chain.h;
    const double sqrt_h = std::sqrt(h);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    sol.values.resize(K + 1);
    sol.steps.resize(K);
    for (std::size_t i = 0; i < chain.levels[K].size(); ++i) {
        const auto& node = chain.levels[K][i];
        const double x[1] = {node.x};
        LatticeNodeValues v;
        v.y = spec.coefficients.terminal(node.regime, x);
        sol.values[K].push_back(std::move(v));
    }

    std::vector<double> u_raw(m), yvec(m), vhat_num(m), vhat_den(m);
    for (std::size_t kk = K; kk-- > 0;) {
        const auto& level = chain.levels[kk];
        const auto& next = sol.values[kk + 1];
        auto& out = sol.values[kk];
        out.resize(level.size());
        StepDiagnostics& diag = sol.steps[kk];
        diag.time = spec.horizon * static_cast<double>(kk) / static_cast<double>(K);
        for (std::size_t i = 0; i < level.size(); ++i) {
            const auto& node = level[i];
            auto& v = out[i];
            const std::size_t r = node.regime.index();
            double z = 0.0;
            std::fill(u_raw.begin(), u_raw.end(), 0.0);
            std::fill(vhat_num.begin(), vhat_num.end(), 0.0);
            std::fill(vhat_den.begin(), vhat_den.end(), 0.0);
            for (const auto& o : node.outcomes) {
                const double vn = next[o.child].y;
                z += o.probability * vn * (o.shock * sqrt_h) / h;
                for (std::size_t j = 0; j < m; ++j) {
                    const double lambda = spec.intensity.weights[j];
                    const double mu = (o.mark == static_cast<int>(j) ? 1.0 : 0.0) - lambda * h;
                    u_raw[j] += o.probability * vn * mu / (lambda * h);
                }
                const std::size_t rj = chain.levels[kk + 1][o.child].regime.index();
                vhat_num[rj] += o.probability * vn;
                vhat_den[rj] += o.probability;
            }
            v.z = z;
            v.u.resize(m);
            v.vhat.resize(m);
            for (std::size_t j = 0; j < m; ++j) {
                v.u[j] = u_raw[j] - u_raw[r];
                v.vhat[j] = vhat_den[j] > 0.0 ? vhat_num[j] / vhat_den[j] : nan;
            }
            v.u[r] = 0.0;

            const double x[1] = {node.x};
            const double zs[1] = {z};
            double y = 0.0;
            double viol = 0.0;
            double skor = 0.0;
            for (const auto& o : node.outcomes) {
                const double vn = next[o.child].y;
                const auto t = scheme_integrand(spec, n, node.regime, x, vn, zs, v.u, yvec);
                y += o.probability * (vn + h * t.value);
                viol += o.probability * t.violation;
                skor += o.probability * t.min_constraint * static_cast<double>(n) * h * t.violation;
            }
            v.y = y;
            diag.violation_mean += node.probability * viol;
            if (node.probability > 0.0) {
                diag.violation_max = std::max(diag.violation_max, viol);
            }
            diag.penalty_mean += node.probability * static_cast<double>(n) * h * viol;
            diag.skorohod += node.probability * skor;
        }
    }
    sol.y0 = sol.values[0][0].y;
    for (const auto& s : sol.steps) {
        sol.violation_mean += s.violation_mean;
        sol.skorohod += s.skorohod;
    }
    sol.violation_mean /= static_cast<double>(K);
    return sol;
}

LatticePaths enumerate_lattice_paths(const ProblemSpec& spec, const LatticeSpec& lattice, std::size_t max_paths) {
    const LatticeChain chain = build_lattice(spec, lattice);
    const std::size_t K = chain.steps;

    // Path counts from each node to the end, to refuse before allocating.
    std::vector<std::vector<double>> below(K + 1);
    below[K].assign(chain.levels[K].size(), 1.0);
    for (std::size_t kk = K; kk-- > 0;) {
        below[kk].resize(chain.levels[kk].size());
        for (std::size_t i = 0; i < chain.levels[kk].size(); ++i) {
            double c = 0.0;
            for (const auto& o : chain.levels[kk][i].outcomes) {
                c += below[kk + 1][o.child];
            }
            below[kk][i] = c;
        }
    }
    if (below[0][0] > static_cast<double>(max_paths)) {
        std::ostringstream msg;
        msg << "lattice has " << below[0][0] << " paths, above the cap of " << max_paths;
        throw std::length_error(msg.str());
    }

    LatticePaths out;
    PathBundle& b = out.bundle;
    b.dim = 1;
    b.regimes = spec.regimes;
    b.steps = K;
    b.horizon = spec.horizon;
    b.node_begin.push_back(0);
    b.atom_begin.push_back(0);
    const double sqrt_h = std::sqrt(chain.h);

    std::vector<std::size_t> nodes(K + 1);
    std::vector<const LatticeOutcome*> taken(K);
    auto emit = [&](double weight) {
        const std::size_t base = b.time.size();
        for (std::size_t k = 0; k <= K; ++k) {
            const auto& node = chain.levels[k][nodes[k]];
            b.time.push_back(b.grid_time(k));
            b.regime.push_back(static_cast<int>(node.regime.index()));
            b.state.push_back(node.x);
            b.increment.push_back(k < K ? taken[k]->shock * sqrt_h : 0.0);
            b.grid_node.push_back(base + k);
            out.node_of.push_back(nodes[k]);
            if (k < K && taken[k]->mark >= 0) {
                b.atom_time.push_back(b.grid_time(k + 1));
                b.atom_mark.push_back(taken[k]->mark);
            }
        }
        b.node_begin.push_back(b.time.size());
        b.atom_begin.push_back(b.atom_time.size());
        b.weight.push_back(weight);
    };
    auto walk = [&](auto&& self, std::size_t k, double weight) -> void {
        if (k == K) {
            emit(weight);
            return;
        }
        for (const auto& o : chain.levels[k][nodes[k]].outcomes) {
            nodes[k + 1] = o.child;
            taken[k] = &o;
            self(self, k + 1, weight * o.probability);
        }
    };
    nodes[0] = 0;
    walk(walk, 0, 1.0);
    return out;
}

LadderReport lattice_ladder(const ProblemSpec& spec, const LatticeSpec& lattice,
                            std::span<const std::uint64_t> schedule) {
    if (schedule.empty()) {
        throw std::invalid_argument("penalization schedule is empty");
    }
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        if (schedule[i] <= schedule[i - 1]) {
            throw std::invalid_argument("penalization schedule must be strictly increasing");
        }
    }
    LadderReport report;
    report.problem = spec.name;
    report.schedule.assign(schedule.begin(), schedule.end());
    for (std::uint64_t n : schedule) {
        const auto sol = lattice_dp_solve(spec, lattice, n);
        report.y0.push_back(sol.y0);
        report.violation.push_back(sol.violation_mean);
        report.violation_std_error.push_back(0.0);
        report.skorohod.push_back(sol.skorohod);
    }
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        report.y0_nondecreasing.push_back(report.y0[i] >= report.y0[i - 1]);
        report.violation_nonincreasing.push_back(report.violation[i] <= report.violation[i - 1]);
    }
    return report;
}

}  // namespace cvi
