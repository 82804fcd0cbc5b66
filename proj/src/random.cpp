#include "privmcmc/random.hpp"

#include <cmath>

#include "privmcmc/errors.hpp"

namespace privmcmc {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t v, int k) {
  return (v << k) | (v >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) {
  // Distinct affine offset per stream id, then splitmix64 to fill the state.
  std::uint64_t x = seed + stream * 0xd1b54a32d192ed03ULL;
  for (auto& w : s_) w = splitmix64(x);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // xoshiro needs a nonzero state
}

std::uint64_t RngStream::next() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double RngStream::uniform_pos() {
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  for (;;) {
    const double u = 2.0 * uniform() - 1.0;
    const double v = 2.0 * uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

double RngStream::exponential() { return -std::log(uniform_pos()); }

double RngStream::gamma(double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape))
    throw ConfigError("gamma draw: shape must be positive and finite");
  if (shape < 1.0) {
    // boost: X ~ Gamma(shape+1), X * U^{1/shape} ~ Gamma(shape)
    return gamma(shape + 1.0) * std::pow(uniform_pos(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = normal();
    const double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = uniform_pos();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

double RngStream::laplace(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw ConfigError("laplace draw: scale must be positive and finite");
  const double u = uniform_pos() - 0.5;  // (-1/2, 1/2)
  return u < 0.0 ? scale * std::log1p(2.0 * u) : -scale * std::log1p(-2.0 * u);
}

int RngStream::categorical(const double* weights, int k) {
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw ConfigError("categorical draw: weights must be nonnegative and finite");
    total += weights[i];
  }
  if (!(total > 0.0)) throw ConfigError("categorical draw: weight sum must be positive");
  double u = uniform() * total;
  for (int i = 0; i < k - 1; ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return k - 1;
}

Eigen::VectorXd RngStream::dirichlet(const Eigen::VectorXd& concentration) {
  Eigen::VectorXd out(concentration.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < concentration.size(); ++i) {
    out[i] = gamma(concentration[i]);
    total += out[i];
  }
  if (!(total > 0.0)) throw NumericError("dirichlet draw: all gamma components were zero");
  out /= total;
  return out;
}

}  // namespace privmcmc
