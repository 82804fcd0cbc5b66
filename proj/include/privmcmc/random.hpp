#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace privmcmc {

// Deterministic random stream: xoshiro256++ seeded through splitmix64 from a
// (seed, stream) pair.  Distinct stream ids give statistically independent
// sequences, so chains can run on any thread layout and still produce
// bit-identical output.  All distribution transforms are implemented here (no
// std::*_distribution) so draws are reproducible across compilers.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next();       // raw 64 random bits
  double uniform();           // [0, 1)
  double uniform_pos();       // (0, 1): safe for log()
  double normal();            // standard normal (Marsaglia polar)
  double exponential();       // rate 1
  double gamma(double shape); // shape > 0, rate 1 (Marsaglia-Tsang)
  double laplace(double scale);  // location 0
  // Index into {0,..,k-1} with the given nonnegative weights (need not be
  // normalised; their sum must be positive and finite).
  int categorical(const double* weights, int k);

  Eigen::VectorXd dirichlet(const Eigen::VectorXd& concentration);

 private:
  std::array<std::uint64_t, 4> s_;
};

}  // namespace privmcmc
