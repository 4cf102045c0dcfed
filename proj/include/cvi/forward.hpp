#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cvi/problem.hpp"
#include "cvi/random.hpp"

namespace cvi {

struct Atom {
    double time;
    RegimeIndex mark;
};

/// Atoms of the marked Poisson measure on (0, T], sorted by time. Atoms whose
/// mark equals the current regime are kept: they are atoms of the measure even
/// though the regime does not change.
struct MarkedPoissonPath {
    std::vector<Atom> atoms;
};

/// Homogeneous marked Poisson process with total rate sum_j lambda_j and marks
/// drawn with probabilities lambda_j / total. Stream use: one uniform per
/// inter-arrival time (including the one that overshoots T) and one per mark;
/// nothing when the total rate is zero.
MarkedPoissonPath sample_jump_marks(const IntensityMeasure& intensity, double horizon, RandomStream& stream);

/// Right-continuous piecewise-constant regime path.
class RegimePath {
  public:
    explicit RegimePath(RegimeIndex initial) : initial_(initial) {}

    RegimeIndex at(double t) const;
    RegimeIndex initial() const { return initial_; }
    /// Times at which the regime actually changes, with the new regime.
    const std::vector<std::pair<double, RegimeIndex>>& changes() const { return changes_; }

    void push(double t, RegimeIndex r);

  private:
    RegimeIndex initial_;
    std::vector<std::pair<double, RegimeIndex>> changes_;
};

RegimePath simulate_regime_path(RegimeIndex initial, const MarkedPoissonPath& marks);

/// mu~((t_a, t_b] x {j}) = #{atoms in (t_a, t_b] with mark j} - lambda_j (t_b - t_a).
double compensated_increment(const MarkedPoissonPath& marks, double t_a, double t_b, RegimeIndex j,
                             const IntensityMeasure& intensity);

/// Regular grid t_k = T k / K. Throws std::invalid_argument unless h divides T.
std::vector<double> regular_grid(double horizon, double step);

/// Sorted union of the regular grid and the atom times (duplicates merged).
std::vector<double> concatenate_grid(std::span<const double> regular, const MarkedPoissonPath& marks);

/// N trajectories of (I, X^h) on per-path concatenated grids, stored flat.
///
/// Node l of path p lives at absolute index node_begin[p] + l. `increment` at a
/// node is the Brownian increment to the next node of the same path (zero at
/// the last node). `grid_node[p * (steps + 1) + k]` is the absolute node index
/// of the regular time t_k on path p.
struct PathBundle {
    std::size_t dim = 1;
    std::size_t regimes = 1;
    std::size_t steps = 0;
    double horizon = 1.0;
    std::vector<double> weight;  // sums to one

    std::vector<std::size_t> node_begin;
    std::vector<double> time;
    std::vector<int> regime;  // zero-based
    std::vector<double> state;
    std::vector<double> increment;
    std::vector<std::size_t> grid_node;

    std::vector<std::size_t> atom_begin;
    std::vector<double> atom_time;
    std::vector<int> atom_mark;

    std::size_t path_count() const { return weight.size(); }
    double step() const { return horizon / static_cast<double>(steps); }
    double grid_time(std::size_t k) const { return horizon * static_cast<double>(k) / static_cast<double>(steps); }

    std::size_t node(std::size_t path, std::size_t k) const { return grid_node[path * (steps + 1) + k]; }
    RegimeIndex regime_at(std::size_t path, std::size_t k) const {
        return RegimeIndex(static_cast<std::size_t>(regime[node(path, k)]));
    }
    std::span<const double> state_at(std::size_t path, std::size_t k) const {
        return {state.data() + node(path, k) * dim, dim};
    }
    std::span<const double> node_state(std::size_t node_index) const { return {state.data() + node_index * dim, dim}; }

    /// W_{t_{k+1}} - W_{t_k}: sum of the sub-interval increments.
    void brownian_increment(std::size_t path, std::size_t k, std::span<double> out) const;
    /// Number of atoms of mark j in (t_k, t_{k+1}].
    std::size_t atom_count(std::size_t path, std::size_t k, RegimeIndex j) const;
    MarkedPoissonPath marks(std::size_t path) const;
};

/// Euler scheme on the concatenated grid, one independent substream per path
/// derived from (seed, path index). Per path the stream first drives
/// sample_jump_marks, then d normals per sub-interval in time order, so the
/// bundle is identical for any worker count.
PathBundle simulate_paths(const ProblemSpec& spec, std::size_t paths, double step, std::uint64_t seed,
                          std::size_t workers = 1);

}  // namespace cvi
