#include "cvi/forward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cvi/parallel.hpp"

namespace cvi {

MarkedPoissonPath sample_jump_marks(const IntensityMeasure& intensity, double horizon, RandomStream& stream) {
    MarkedPoissonPath out;
    const double rate = intensity.total();
    if (!(rate > 0.0)) {
        return out;
    }
    const std::size_t m = intensity.size();
    double t = 0.0;
    while (true) {
        t += stream.exponential(rate);
        if (t > horizon) {
            break;
        }
        const double u = stream.uniform() * rate;
        double cumulative = 0.0;
        std::size_t mark = m - 1;
        for (std::size_t j = 0; j < m; ++j) {
            cumulative += intensity.weights[j];
            if (u < cumulative) {
                mark = j;
                break;
            }
        }
        // Zero-weight marks can only be hit through rounding at the top end.
        while (intensity.weights[mark] <= 0.0 && mark > 0) {
            --mark;
        }
        out.atoms.push_back({t, RegimeIndex(mark)});
    }
    return out;
}

RegimeIndex RegimePath::at(double t) const {
    RegimeIndex current = initial_;
    for (const auto& [time, regime] : changes_) {
        if (time > t) {
            break;
        }
        current = regime;
    }
    return current;
}

void RegimePath::push(double t, RegimeIndex r) {
    if (!changes_.empty() && t <= changes_.back().first) {
        throw std::invalid_argument("regime changes must be strictly increasing in time");
    }
    changes_.emplace_back(t, r);
}

RegimePath simulate_regime_path(RegimeIndex initial, const MarkedPoissonPath& marks) {
    RegimePath path(initial);
    RegimeIndex current = initial;
    for (const Atom& a : marks.atoms) {
        if (a.mark != current) {
            path.push(a.time, a.mark);
            current = a.mark;
        }
    }
    return path;
}

double compensated_increment(const MarkedPoissonPath& marks, double t_a, double t_b, RegimeIndex j,
                             const IntensityMeasure& intensity) {
    std::size_t count = 0;
    for (const Atom& a : marks.atoms) {
        if (a.time > t_a && a.time <= t_b && a.mark == j) {
            ++count;
        }
    }
    return static_cast<double>(count) - intensity[j] * (t_b - t_a);
}

std::vector<double> regular_grid(double horizon, double step) {
    if (!(step > 0.0) || !(horizon > 0.0)) {
        throw std::invalid_argument("time step and horizon must be positive");
    }
    const double ratio = horizon / step;
    const double steps = std::round(ratio);
    if (steps < 1.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
        throw std::invalid_argument("time step must divide the horizon");
    }
    const auto k_max = static_cast<std::size_t>(steps);
    std::vector<double> grid(k_max + 1);
    for (std::size_t k = 0; k <= k_max; ++k) {
        grid[k] = horizon * static_cast<double>(k) / static_cast<double>(k_max);
    }
    return grid;
}

std::vector<double> concatenate_grid(std::span<const double> regular, const MarkedPoissonPath& marks) {
    std::vector<double> out;
    out.reserve(regular.size() + marks.atoms.size());
    std::size_t a = 0;
    for (double t : regular) {
        while (a < marks.atoms.size() && marks.atoms[a].time < t) {
            if (out.empty() || out.back() != marks.atoms[a].time) {
                out.push_back(marks.atoms[a].time);
            }
            ++a;
        }
        if (out.empty() || out.back() != t) {
            out.push_back(t);
        }
    }
    return out;
}

void PathBundle::brownian_increment(std::size_t path, std::size_t k, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t first = node(path, k);
    const std::size_t last = node(path, k + 1);
    for (std::size_t l = first; l < last; ++l) {
        for (std::size_t c = 0; c < dim; ++c) {
            out[c] += increment[l * dim + c];
        }
    }
}

std::size_t PathBundle::atom_count(std::size_t path, std::size_t k, RegimeIndex j) const {
    const double t_a = grid_time(k);
    const double t_b = grid_time(k + 1);
    std::size_t count = 0;
    for (std::size_t a = atom_begin[path]; a < atom_begin[path + 1]; ++a) {
        const double t = atom_time[a];
        if (t > t_b) {
            break;
        }
        if (t > t_a && static_cast<std::size_t>(atom_mark[a]) == j.index()) {
            ++count;
        }
    }
    return count;
}

MarkedPoissonPath PathBundle::marks(std::size_t path) const {
    MarkedPoissonPath out;
    for (std::size_t a = atom_begin[path]; a < atom_begin[path + 1]; ++a) {
        out.atoms.push_back({atom_time[a], RegimeIndex(static_cast<std::size_t>(atom_mark[a]))});
    }
    return out;
}

namespace {

struct SinglePath {
    MarkedPoissonPath marks;
    std::vector<double> time;
    std::vector<int> regime;
    std::vector<double> state;
    std::vector<double> increment;
    std::vector<std::size_t> grid_pos;
};

SinglePath simulate_one(const ProblemSpec& spec, std::span<const double> regular, std::uint64_t seed,
                        std::size_t index) {
    const std::size_t d = spec.dim;
    RandomStream stream(seed, index);
    SinglePath p;
    p.marks = sample_jump_marks(spec.intensity, spec.horizon, stream);
    p.time = concatenate_grid(regular, p.marks);
    const std::size_t nodes = p.time.size();
    p.regime.resize(nodes);
    p.state.resize(nodes * d);
    p.increment.assign(nodes * d, 0.0);

    std::size_t atom = 0;
    RegimeIndex current = spec.initial_regime;
    std::size_t next_regular = 0;
    std::vector<double> drift(d), vol(d * d);
    std::copy(spec.initial_state.begin(), spec.initial_state.end(), p.state.begin());
    for (std::size_t l = 0; l < nodes; ++l) {
        const double t = p.time[l];
        while (atom < p.marks.atoms.size() && p.marks.atoms[atom].time <= t) {
            current = p.marks.atoms[atom].mark;
            ++atom;
        }
        p.regime[l] = static_cast<int>(current.index());
        if (next_regular < regular.size() && regular[next_regular] == t) {
            p.grid_pos.push_back(l);
            ++next_regular;
        }
        if (l + 1 == nodes) {
            break;
        }
        const double dt = p.time[l + 1] - t;
        const double sq = std::sqrt(dt);
        std::span<const double> x(p.state.data() + l * d, d);
        std::span<double> dw(p.increment.data() + l * d, d);
        for (std::size_t c = 0; c < d; ++c) {
            dw[c] = sq * stream.normal();
        }
        spec.coefficients.drift(current, x, drift);
        spec.coefficients.vol(current, x, vol);
        for (std::size_t r = 0; r < d; ++r) {
            double v = x[r] + drift[r] * dt;
            for (std::size_t c = 0; c < d; ++c) {
                v += vol[r * d + c] * dw[c];
            }
            p.state[(l + 1) * d + r] = v;
        }
    }
    return p;
}

}  // namespace

PathBundle simulate_paths(const ProblemSpec& spec, std::size_t paths, double step, std::uint64_t seed,
                          std::size_t workers) {
    if (paths == 0) {
        throw std::invalid_argument("path count must be positive");
    }
    spec.check();
    for (double w : spec.intensity.weights) {
        if (w < 0.0) {
            throw std::invalid_argument("intensity weights must be nonnegative");
        }
    }
    const auto regular = regular_grid(spec.horizon, step);

    std::vector<SinglePath> raw(paths);
    parallel_for(paths, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            raw[p] = simulate_one(spec, regular, seed, p);
        }
    });

    PathBundle b;
    b.dim = spec.dim;
    b.regimes = spec.regimes;
    b.steps = regular.size() - 1;
    b.horizon = spec.horizon;
    b.weight.assign(paths, 1.0 / static_cast<double>(paths));
    b.node_begin.reserve(paths + 1);
    b.atom_begin.reserve(paths + 1);
    b.grid_node.reserve(paths * regular.size());
    b.node_begin.push_back(0);
    b.atom_begin.push_back(0);
    for (auto& p : raw) {
        const std::size_t base = b.time.size();
        for (std::size_t pos : p.grid_pos) {
            b.grid_node.push_back(base + pos);
        }
        b.time.insert(b.time.end(), p.time.begin(), p.time.end());
        b.regime.insert(b.regime.end(), p.regime.begin(), p.regime.end());
        b.state.insert(b.state.end(), p.state.begin(), p.state.end());
        b.increment.insert(b.increment.end(), p.increment.begin(), p.increment.end());
        b.node_begin.push_back(b.time.size());
        for (const Atom& a : p.marks.atoms) {
            b.atom_time.push_back(a.time);
            b.atom_mark.push_back(static_cast<int>(a.mark.index()));
        }
        b.atom_begin.push_back(b.atom_time.size());
        p = SinglePath{};
    }
    return b;
}

}  // namespace cvi
