#pragma once

#include <cstdint>
#include <random>

namespace cvi {

/// Reproducible random substream identified by (seed, stream id).
///
/// Consumption is fixed so that simulated quantities depend only on the
/// identifiers: `uniform()` uses one 64-bit engine output, `normal()` uses
/// exactly two uniforms (Box-Muller, cosine branch only, no caching).
class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::uint64_t stream);

    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform();
    double normal();
    /// Exponential with the given rate (inverse CDF, one uniform).
    double exponential(double rate);

  private:
    std::mt19937_64 engine_;
};

}  // namespace cvi
