#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cvi/backward.hpp"
#include "cvi/forward.hpp"
#include "cvi/problem.hpp"

namespace cvi {

/// Finite-state surrogate of (I, X^h) for d = 1. Per step of length h:
///   - Brownian increment +-sqrt(h) with probability 1/2 each (exact mean and
///     variance);
///   - at most one atom of mu, placed at t_{k+1}: mark j with probability
///     lambda_j h, none with probability 1 - Lambda h (needs Lambda h <= 1).
/// The atom counts then have compensator lambda_j h exactly, so mu~ is
/// centred on the chain. Nodes sharing (regime, x) on a 1e-9 lattice merge.
struct LatticeSpec {
    double h = 0.1;
    std::size_t max_nodes = 2'000'000;
};

struct LatticeOutcome {
    std::size_t child;
    double probability;
    double shock;  // +-1; the Brownian increment is shock * sqrt(h)
    int mark;      // -1 when no atom
};

struct LatticeNode {
    double x = 0.0;
    RegimeIndex regime;
    double probability = 0.0;
    std::vector<LatticeOutcome> outcomes;  // empty at the last level
};

/// The forward chain, level k = 0 .. K.
struct LatticeChain {
    double h = 0.0;
    std::size_t steps = 0;
    std::vector<std::vector<LatticeNode>> levels;

    std::size_t node_count() const;
    /// Throws std::out_of_range when no node matches.
    std::size_t find(std::size_t k, RegimeIndex regime, double x) const;
};

/// Throws std::length_error with the node count when the cap is exceeded.
LatticeChain build_lattice(const ProblemSpec& spec, const LatticeSpec& lattice);

struct LatticeNodeValues {
    double y = 0.0;
    double z = 0.0;
    std::vector<double> u;     // relative to the node's regime; u[regime] = 0
    std::vector<double> vhat;  // E[V_{k+1} | I_{t_{k+1}} = j], NaN when unreachable
};

struct LatticeSolution {
    LatticeChain chain;
    std::uint64_t n = 0;
    double y0 = 0.0;
    std::vector<std::vector<LatticeNodeValues>> values;  // per level, per node
    std::vector<StepDiagnostics> steps;
    double violation_mean = 0.0;
    double skorohod = 0.0;
};

/// The backward recursion of the scheme with conditional expectations computed
/// by enumerating each node's outcomes.
LatticeSolution lattice_dp_solve(const ProblemSpec& spec, const LatticeSpec& lattice, std::uint64_t n);

/// Every path of the chain as a weighted bundle, for running solve_backward in
/// exact mode. `node_of[p * (K + 1) + k]` is the chain node of path p at t_k.
struct LatticePaths {
    PathBundle bundle;
    std::vector<std::size_t> node_of;
};

/// Throws std::length_error when the chain has more than max_paths paths.
LatticePaths enumerate_lattice_paths(const ProblemSpec& spec, const LatticeSpec& lattice,
                                     std::size_t max_paths = 4096);

/// Penalization ladder evaluated with lattice_dp_solve.
LadderReport lattice_ladder(const ProblemSpec& spec, const LatticeSpec& lattice,
                            std::span<const std::uint64_t> schedule);

}  // namespace cvi
