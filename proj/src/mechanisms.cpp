#include "privmcmc/mechanisms.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <utility>

#include "privmcmc/errors.hpp"

namespace privmcmc {

namespace {

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ConfigError("discrete gaussian: sigma must be positive and finite");
}

void check_mu(double mu) {
  if (!std::isfinite(mu)) throw ConfigError("discrete gaussian: mu must be finite");
}

// log sum_{y in Z} exp(-(y-mu)^2/(2 sigma^2)).  The sum only depends on mu
// through its fractional part.  Terms are accumulated outward from the nearest
// integer until a pair falls below 1e-17 of the running sum; the largest term
// is factored out so the result stays finite even when every term underflows.
double log_normalizer_direct(double frac, double sigma) {
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const long center = std::lround(frac);
  const double peak = -(center - frac) * (center - frac) * inv2s2;
  double sum = 1.0;  // exp(peak - peak)
  for (long k = 1;; ++k) {
    const double up = static_cast<double>(center + k) - frac;
    const double dn = static_cast<double>(center - k) - frac;
    const double term =
        std::exp(-up * up * inv2s2 - peak) + std::exp(-dn * dn * inv2s2 - peak);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return peak + std::log(sum);
}

// Geometric draw on {0,1,...} with success probability 1 - e^{-1/t}, by
// inversion: floor(-t log U).
std::int64_t geometric_tail(double t, RngStream& rng) {
  return static_cast<std::int64_t>(std::floor(-t * std::log(rng.uniform_pos())));
}

std::int64_t two_sided_geometric(double t, RngStream& rng) {
  return geometric_tail(t, rng) - geometric_tail(t, rng);
}

}  // namespace

DiscreteGaussian::DiscreteGaussian(double mu, double sigma) : mu_(mu), sigma_(sigma) {
  check_mu(mu);
  check_sigma(sigma);
  log_norm_ = log_normalizer_direct(mu - std::floor(mu), sigma);
}

double DiscreteGaussian::log_pmf(std::int64_t x) const {
  const double d = static_cast<double>(x) - mu_;
  return -d * d / (2.0 * sigma_ * sigma_) - log_norm_;
}

double DiscreteGaussian::pmf(std::int64_t x) const { return std::exp(log_pmf(x)); }

double DiscreteGaussian::log_unnormalized(std::int64_t x) const {
  const double d = static_cast<double>(x) - mu_;
  return -d * d / (2.0 * sigma_ * sigma_);
}

std::vector<std::int64_t> DiscreteGaussian::sample_many(std::int64_t count,
                                                        RngStream& rng) const {
  if (count < 0) throw ConfigError("discrete gaussian: draw count must be nonnegative");
  std::vector<std::int64_t> out(static_cast<std::size_t>(count));
  for (auto& v : out) v = sample(rng);
  return out;
}

std::int64_t DiscreteGaussian::sample(RngStream& rng) const {
  // Exact rejection: propose m + D with D two-sided geometric of scale
  // t = floor(sigma) + 1 centred at the nearest integer m, and accept with
  // probability exp(-(D-delta)^2/(2 sigma^2) + |D|/t - logM), where
  // logM = sigma^2/(2 t^2) + |delta|/t bounds the target/proposal ratio.
  const double t = std::floor(sigma_) + 1.0;
  const long m = std::lround(mu_);
  const double delta = mu_ - static_cast<double>(m);
  const double inv2s2 = 1.0 / (2.0 * sigma_ * sigma_);
  const double log_m_bound = sigma_ * sigma_ / (2.0 * t * t) + std::abs(delta) / t;
  for (long attempt = 0; attempt < 100000; ++attempt) {
    const auto d = static_cast<double>(two_sided_geometric(t, rng));
    const double log_acc =
        -(d - delta) * (d - delta) * inv2s2 + std::abs(d) / t - log_m_bound;
    if (std::log(rng.uniform_pos()) < log_acc)
      return m + static_cast<std::int64_t>(d);
  }
  throw NumericError("discrete gaussian sampler failed to accept");
}

DiscreteLaplace::DiscreteLaplace(double t) : t_(t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw ConfigError("discrete laplace: scale t must be positive and finite");
  // (e^{1/t}-1)/(e^{1/t}+1) = expm1(1/t) / (expm1(1/t) + 2)
  const double e = std::expm1(1.0 / t);
  log_norm_ = std::log(e) - std::log(e + 2.0);
}

double DiscreteLaplace::log_pmf(std::int64_t x) const {
  return log_norm_ - static_cast<double>(x < 0 ? -x : x) / t_;
}

double DiscreteLaplace::pmf(std::int64_t x) const { return std::exp(log_pmf(x)); }

std::int64_t DiscreteLaplace::sample(RngStream& rng) const {
  return two_sided_geometric(t_, rng);
}

std::vector<std::int64_t> DiscreteLaplace::sample_many(std::int64_t count,
                                                       RngStream& rng) const {
  if (count < 0) throw ConfigError("discrete laplace: draw count must be nonnegative");
  std::vector<std::int64_t> out(static_cast<std::size_t>(count));
  for (auto& v : out) v = sample(rng);
  return out;
}

double discrete_gaussian_log_normalizer(double mu, double sigma) {
  check_mu(mu);
  check_sigma(sigma);
  const double frac = mu - std::floor(mu);

  static std::shared_mutex cache_mutex;
  static std::map<std::pair<double, double>, double> cache;
  const std::pair<double, double> key{frac, sigma};
  {
    std::shared_lock lock(cache_mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const double value = log_normalizer_direct(frac, sigma);
  std::unique_lock lock(cache_mutex);
  return cache.emplace(key, value).first->second;
}

double discrete_gaussian_pmf(std::int64_t x, double mu, double sigma) {
  const double logz = discrete_gaussian_log_normalizer(mu, sigma);
  const double d = static_cast<double>(x) - mu;
  return std::exp(-d * d / (2.0 * sigma * sigma) - logz);
}

double discrete_gaussian_log_unnormalized(std::int64_t x, double mu, double sigma) {
  check_mu(mu);
  check_sigma(sigma);
  const double d = static_cast<double>(x) - mu;
  return -d * d / (2.0 * sigma * sigma);
}

double discrete_laplace_pmf(std::int64_t x, double t) {
  return DiscreteLaplace(t).pmf(x);
}

double laplace_logdensity(double u, double location, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw ConfigError("laplace logdensity: scale must be positive and finite");
  return -std::log(2.0 * scale) - std::abs(u - location) / scale;
}

Eigen::ArrayXd laplace_mechanism(const Eigen::ArrayXd& stat, double sensitivity,
                                 double epsilon, RngStream& rng) {
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity))
    throw ConfigError("laplace mechanism: sensitivity must be positive and finite");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw ConfigError("laplace mechanism: epsilon must be positive and finite");
  if (!stat.isFinite().all())
    throw ConfigError("laplace mechanism: statistic must be finite");
  const double scale = sensitivity / epsilon;
  Eigen::ArrayXd out(stat.size());
  for (Eigen::Index i = 0; i < stat.size(); ++i) out[i] = stat[i] + rng.laplace(scale);
  return out;
}

Eigen::ArrayXXd randomized_response(const Eigen::ArrayXXd& bits, double keep_prob,
                                    RngStream& rng) {
  if (!(keep_prob > 0.0) || !(keep_prob <= 1.0))
    throw ConfigError("randomized response: keep_prob must be in (0, 1]");
  if (!((bits == 0.0) || (bits == 1.0)).all())
    throw ConfigError("randomized response: input must be a 0/1 array");
  Eigen::ArrayXXd out = bits;
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      if (rng.uniform() >= keep_prob) out(i, j) = 1.0 - out(i, j);
  return out;
}

double rr_loglik(const Eigen::ArrayXXd& sdp, const Eigen::ArrayXXd& x, double keep_prob) {
  if (sdp.rows() != x.rows() || sdp.cols() != x.cols())
    throw ConfigError("rr_loglik: released and true arrays must have matching shape");
  if (!(keep_prob > 0.0) || !(keep_prob <= 1.0))
    throw ConfigError("rr_loglik: keep_prob must be in (0, 1]");
  if (!((sdp == 0.0) || (sdp == 1.0)).all() || !((x == 0.0) || (x == 1.0)).all())
    throw ConfigError("rr_loglik: arrays must be 0/1 valued");
  const auto matches = static_cast<double>((sdp == x).count());
  const auto total = static_cast<double>(sdp.size());
  double ll = 0.0;
  if (matches > 0.0) ll += matches * std::log(keep_prob);
  if (total - matches > 0.0) ll += (total - matches) * std::log1p(-keep_prob);
  return ll;
}

double zcdp_epsilon(double rho, double delta) {
  if (!(rho > 0.0) || !std::isfinite(rho))
    throw ConfigError("zcdp_epsilon: rho must be positive and finite");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw ConfigError("zcdp_epsilon: delta must be in (0, 1)");
  return rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta));
}

double sigma_for_approx_dp(double l2_sensitivity, double epsilon, double delta) {
  if (!(l2_sensitivity > 0.0) || !std::isfinite(l2_sensitivity))
    throw ConfigError("sigma_for_approx_dp: sensitivity must be positive and finite");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw ConfigError("sigma_for_approx_dp: epsilon must be positive and finite");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw ConfigError("sigma_for_approx_dp: delta must be in (0, 1)");
  const double log_inv_delta = std::log(1.0 / delta);
  const double sqrt_rho = std::sqrt(log_inv_delta + epsilon) - std::sqrt(log_inv_delta);
  return l2_sensitivity / std::sqrt(2.0 * sqrt_rho * sqrt_rho);
}

}  // namespace privmcmc
