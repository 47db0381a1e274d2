#pragma once

#include <cstdint>
#include <random>

namespace stgm {

// Splittable random stream. Every sampling routine in the library takes an
// explicit stream argument; there is no global RNG state. Child streams are
// derived from (root seed, stream id) so that parallel chains / prediction
// targets draw from disjoint streams and runs are bitwise reproducible.
//
// The engine is std::mt19937_64 (fully specified by the standard); all
// distributions are implemented here rather than with std:: distribution
// objects, whose output is implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Independent stream keyed by (this stream's root seed, id).
  RngStream derive(std::uint64_t id) const;

  std::uint64_t root_seed() const { return root_; }

  // Uniform on the open interval (0,1).
  double uniform();
  // Standard normal (Box-Muller, no cached spare).
  double normal();
  // Gamma(shape, scale=1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape);
  // Inverse gamma with shape a and scale b: density ~ x^{-a-1} exp(-b/x).
  double inv_gamma(double shape, double scale);
  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  std::uint64_t raw() { return engine_(); }

 private:
  std::uint64_t root_;
  std::mt19937_64 engine_;
};

}  // namespace stgm
