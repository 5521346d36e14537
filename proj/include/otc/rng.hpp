#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace otc {

// Seedable generator with a fully specified output sequence.
//
// Raw bits come from std::mt19937_64, whose output is fixed by the C++
// standard. The floating-point transforms are implemented here rather than
// through <random> distributions, which are implementation-defined:
//   uniform()  = (bits >> 11) * 2^-53, in [0, 1)
//   normal()   = Marsaglia polar method, caching the second variate
//   index(w)   = inverse-CDF lookup of one uniform() against weights w
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  double uniform();
  double normal();

  /// Draws an index with probability proportional to `weights`.
  /// Zero-weight entries are never returned.
  std::size_t index(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace otc
