#include "cvi/fd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace cvi {

namespace {

struct Tridiagonal {
    std::vector<double> lower, diag, upper;  // row r: lower[r] v_{r-1} + diag[r] v_r + upper[r] v_{r+1}
};

// Thomas algorithm; the systems here are diagonally dominant M-matrices.
void solve_tridiagonal(const Tridiagonal& a, std::vector<double>& rhs) {
    const std::size_t n = rhs.size();
    std::vector<double> c(n);
    double denom = a.diag[0];
    c[0] = a.upper[0] / denom;
    rhs[0] /= denom;
    for (std::size_t r = 1; r < n; ++r) {
        denom = a.diag[r] - a.lower[r] * c[r - 1];
        c[r] = a.upper[r] / denom;
        rhs[r] = (rhs[r] - a.lower[r] * rhs[r - 1]) / denom;
    }
    for (std::size_t r = n - 1; r-- > 0;) {
        rhs[r] -= c[r] * rhs[r + 1];
    }
}

// Discrete L^i on the interior points 1..M-1 with linear extrapolation folded
// into the first and last rows.
Tridiagonal generator(const ProblemSpec& spec, RegimeIndex i, const std::vector<double>& x, double dx) {
    const std::size_t M = x.size() - 1;
    Tridiagonal L;
    L.lower.assign(M - 1, 0.0);
    L.diag.assign(M - 1, 0.0);
    L.upper.assign(M - 1, 0.0);
    double b = 0.0;
    double s = 0.0;
    for (std::size_t j = 1; j < M; ++j) {
        const double xj[1] = {x[j]};
        spec.coefficients.drift(i, xj, std::span<double>(&b, 1));
        spec.coefficients.vol(i, xj, std::span<double>(&s, 1));
        const double diff = 0.5 * s * s / (dx * dx);
        double lo = 0.0;
        double mid = 0.0;
        double up = 0.0;
        if (std::abs(b) * dx <= s * s) {
            lo = diff - b / (2.0 * dx);
            up = diff + b / (2.0 * dx);
            mid = -2.0 * diff;
        } else if (b > 0.0) {
            lo = diff;
            up = diff + b / dx;
            mid = -2.0 * diff - b / dx;
        } else {
            lo = diff - b / dx;
            up = diff;
            mid = -2.0 * diff + b / dx;
        }
        const std::size_t r = j - 1;
        L.lower[r] = lo;
        L.diag[r] = mid;
        L.upper[r] = up;
    }
    // v_0 = 2 v_1 - v_2 and v_M = 2 v_{M-1} - v_{M-2}.
    const std::size_t last = M - 2;
    if (M - 1 == 1) {
        L.diag[0] += 2.0 * L.lower[0] + 2.0 * L.upper[0];
        L.lower[0] = L.upper[0] = 0.0;
        return L;
    }
    L.diag[0] += 2.0 * L.lower[0];
    L.upper[0] -= L.lower[0];
    L.lower[0] = 0.0;
    L.diag[last] += 2.0 * L.upper[last];
    L.lower[last] -= L.upper[last];
    L.upper[last] = 0.0;
    return L;
}

// v_i = w_i + kappa sum_j lambda_j (v_j - c_ij - v_i)^+ at one point, solved by
// policy iteration on the active sets.
void implicit_penalty(const ProblemSpec& spec, double kappa, std::span<const double> w, std::span<double> v) {
    const std::size_t m = w.size();
    const auto& costs = spec.switching->costs;
    std::copy(w.begin(), w.end(), v.begin());
    std::vector<char> active(m * m, 0), next(m * m, 0);
    Eigen::MatrixXd A(m, m);
    Eigen::VectorXd rhs(m);
    for (int iter = 0; iter < 50; ++iter) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                next[i * m + j] = j != i && v[j] - costs(RegimeIndex(i), RegimeIndex(j)) - v[i] > 0.0;
            }
        }
        if (iter > 0 && next == active) {
            return;
        }
        active = next;
        A.setZero();
        for (std::size_t i = 0; i < m; ++i) {
            A(i, i) = 1.0;
            rhs(i) = w[i];
            for (std::size_t j = 0; j < m; ++j) {
                if (active[i * m + j]) {
                    const double k = kappa * spec.intensity.weights[j];
                    A(i, i) += k;
                    A(i, j) -= k;
                    rhs(i) -= k * costs(RegimeIndex(i), RegimeIndex(j));
                }
            }
        }
        const Eigen::VectorXd sol = A.partialPivLu().solve(rhs);
        for (std::size_t i = 0; i < m; ++i) {
            v[i] = sol(i);
        }
    }
}

// v_i <- max(v_i, max_j (v_j - c_ij)) until no change (at most m sweeps).
void project(const SwitchingCosts& costs, std::span<double> v) {
    const std::size_t m = v.size();
    for (std::size_t sweep = 0; sweep < m; ++sweep) {
        bool changed = false;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const double cand = v[j] - costs(RegimeIndex(i), RegimeIndex(j));
                if (j != i && cand > v[i]) {
                    v[i] = cand;
                    changed = true;
                }
            }
        }
        if (!changed) {
            return;
        }
    }
}

}  // namespace

std::vector<double> facelift(const SwitchingCosts& costs, std::span<const double> g) {
    const std::size_t m = g.size();
    std::vector<double> out(g.begin(), g.end());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (j != i) {
                out[i] = std::max(out[i], g[j] - costs(RegimeIndex(i), RegimeIndex(j)));
            }
        }
    }
    return out;
}

double GridSolution::interpolate(RegimeIndex i, double t, double xq) const {
    if (i.index() >= regimes) {
        throw std::out_of_range("regime outside the grid solution");
    }
    const double tol = 1e-12;
    if (t < times.front() - tol || t > times.back() + tol || xq < x.front() - tol || xq > x.back() + tol) {
        throw std::out_of_range("refusing to extrapolate outside the oracle grid");
    }
    auto bracket = [](const std::vector<double>& axis, double v) {
        if (axis.size() == 1) {
            return std::pair<std::size_t, double>{0, 0.0};
        }
        const auto it = std::upper_bound(axis.begin(), axis.end(), v);
        std::size_t hi = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - axis.begin(), 1,
                                                                             static_cast<std::ptrdiff_t>(axis.size()) - 1));
        const double w = std::clamp((v - axis[hi - 1]) / (axis[hi] - axis[hi - 1]), 0.0, 1.0);
        return std::pair<std::size_t, double>{hi - 1, w};
    };
    const auto [k, wt] = bracket(times, t);
    const auto [j, wx] = bracket(x, xq);
    const std::size_t k1 = std::min(k + 1, times.size() - 1);
    const std::size_t j1 = std::min(j + 1, x.size() - 1);
    const double a = (1.0 - wx) * at(i.index(), k, j) + wx * at(i.index(), k, j1);
    const double b = (1.0 - wx) * at(i.index(), k1, j) + wx * at(i.index(), k1, j1);
    return (1.0 - wt) * a + wt * b;
}

GridSolution fd_solve(const ProblemSpec& spec, const FdConfig& config) {
    spec.check();
    if (spec.dim != 1) {
        throw std::invalid_argument("the finite-difference oracle requires d = 1");
    }
    if (!spec.switching) {
        throw std::invalid_argument("the finite-difference oracle requires a switching-form problem");
    }
    if (config.intervals < 3) {
        throw std::invalid_argument("the finite-difference grid needs at least 3 intervals");
    }
    if (config.theta < 0.0 || config.theta > 1.0) {
        throw std::invalid_argument("theta must lie in [0, 1]");
    }
    const std::size_t m = spec.regimes;
    const std::size_t M = config.intervals;
    const auto t_grid = regular_grid(spec.horizon, config.dt);
    const std::size_t Nt = t_grid.size() - 1;
    const double dt = spec.horizon / static_cast<double>(Nt);

    double sigma_max = 0.0;
    {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            spec.coefficients.vol(RegimeIndex(i), spec.initial_state, std::span<double>(&s, 1));
            sigma_max = std::max(sigma_max, std::abs(s));
        }
    }
    const double radius = 6.0 * std::max(sigma_max, 1e-3) * std::sqrt(spec.horizon);
    const double x_lo = config.x_min.value_or(spec.initial_state[0] - radius);
    const double x_hi = config.x_max.value_or(spec.initial_state[0] + radius);
    if (!(x_hi > x_lo)) {
        throw std::invalid_argument("empty finite-difference domain");
    }

    GridSolution sol;
    sol.regimes = m;
    sol.times = t_grid;
    sol.x.resize(M + 1);
    const double dx = (x_hi - x_lo) / static_cast<double>(M);
    for (std::size_t j = 0; j <= M; ++j) {
        sol.x[j] = x_lo + dx * static_cast<double>(j);
    }
    sol.values.assign(m * (Nt + 1) * (M + 1), 0.0);

    const auto& costs = spec.switching->costs;
    std::vector<Tridiagonal> L;
    std::vector<std::vector<double>> reward(m, std::vector<double>(M + 1));
    std::vector<double> bound(M + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        L.push_back(generator(spec, RegimeIndex(i), sol.x, dx));
        for (std::size_t j = 0; j <= M; ++j) {
            const double xj[1] = {sol.x[j]};
            reward[i][j] = spec.switching->running_reward(RegimeIndex(i), xj);
        }
    }
    if (spec.growth_bound) {
        for (std::size_t j = 0; j <= M; ++j) {
            const double xj[1] = {sol.x[j]};
            bound[j] = spec.growth_bound->at(xj);
        }
    }

    // Terminal level.
    std::vector<double> g(m), w(m), v(m);
    for (std::size_t j = 0; j <= M; ++j) {
        const double xj[1] = {sol.x[j]};
        for (std::size_t i = 0; i < m; ++i) {
            g[i] = spec.coefficients.terminal(RegimeIndex(i), xj);
        }
        const auto gt = config.facelift ? facelift(costs, g) : g;
        for (std::size_t i = 0; i < m; ++i) {
            sol.at(i, Nt, j) = gt[i];
        }
    }

    const double theta = config.theta;
    const double kappa = static_cast<double>(config.n) * dt;
    std::vector<std::vector<double>> lin(m, std::vector<double>(M + 1));
    std::vector<double> rhs(M - 1);
    for (std::size_t kk = Nt; kk-- > 0;) {
        for (std::size_t i = 0; i < m; ++i) {
            const auto& A = L[i];
            // (I - theta dt L) v^k = (I + (1 - theta) dt L) v^{k+1} + dt f
            for (std::size_t r = 0; r + 1 < M; ++r) {
                const std::size_t j = r + 1;
                const double vm = r > 0 ? sol.at(i, kk + 1, j - 1) : 0.0;
                const double vp = r + 2 < M ? sol.at(i, kk + 1, j + 1) : 0.0;
                const double Lv = (r > 0 ? A.lower[r] * vm : 0.0) + A.diag[r] * sol.at(i, kk + 1, j) +
                                  (r + 2 < M ? A.upper[r] * vp : 0.0);
                rhs[r] = sol.at(i, kk + 1, j) + (1.0 - theta) * dt * Lv + dt * reward[i][j];
            }
            if (theta > 0.0) {
                Tridiagonal implicit{A.lower, A.diag, A.upper};
                for (std::size_t r = 0; r + 1 < M; ++r) {
                    implicit.lower[r] *= -theta * dt;
                    implicit.upper[r] *= -theta * dt;
                    implicit.diag[r] = 1.0 - theta * dt * implicit.diag[r];
                }
                solve_tridiagonal(implicit, rhs);
            }
            for (std::size_t r = 0; r + 1 < M; ++r) {
                lin[i][r + 1] = rhs[r];
            }
            lin[i][0] = 2.0 * lin[i][1] - lin[i][2];
            lin[i][M] = 2.0 * lin[i][M - 1] - lin[i][M - 2];
        }
        for (std::size_t j = 0; j <= M; ++j) {
            for (std::size_t i = 0; i < m; ++i) {
                w[i] = lin[i][j];
            }
            if (config.mode == FdMode::projection) {
                v = w;
                project(costs, v);
            } else if (kappa > 0.0) {
                implicit_penalty(spec, kappa, w, v);
            } else {
                v = w;
            }
            for (std::size_t i = 0; i < m; ++i) {
                if (!std::isfinite(v[i]) || (spec.growth_bound && std::abs(v[i]) > 10.0 * bound[j])) {
                    std::ostringstream msg;
                    msg << "finite-difference values left the growth envelope at t = " << sol.times[kk];
                    throw NumericalAbort(msg.str());
                }
                sol.at(i, kk, j) = v[i];
            }
        }
    }
    return sol;
}

CompareReport oracle_compare(const SolveResult& result, const GridSolution& grid, double t, RegimeIndex i, double x) {
    CompareReport r;
    r.t = t;
    r.regime = i;
    r.x = x;
    r.solver_value = result.y0;
    r.oracle_value = grid.interpolate(i, t, x);
    r.abs_gap = std::abs(r.solver_value - r.oracle_value);
    r.rel_gap = r.abs_gap / std::max(std::abs(r.oracle_value), 1e-12);
    return r;
}

}  // namespace cvi
