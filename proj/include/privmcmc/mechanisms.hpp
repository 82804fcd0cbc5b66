#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "privmcmc/random.hpp"

namespace privmcmc {

// Discrete Gaussian on the integers:
//   P[X = x] = exp(-(x-mu)^2 / (2 sigma^2)) / sum_{y in Z} exp(-(y-mu)^2 / (2 sigma^2)).
// The normaliser is computed once at construction; sampling is exact rejection
// with a two-sided geometric proposal, so no draw is ever truncated.
class DiscreteGaussian {
 public:
  DiscreteGaussian(double mu, double sigma);

  double log_pmf(std::int64_t x) const;
  double pmf(std::int64_t x) const;
  // Log of the unnormalized numerator only: -(x-mu)^2/(2 sigma^2).  Fast path
  // for accept ratios, where the normaliser cancels.
  double log_unnormalized(std::int64_t x) const;
  std::int64_t sample(RngStream& rng) const;
  std::vector<std::int64_t> sample_many(std::int64_t count, RngStream& rng) const;

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  double log_normalizer() const { return log_norm_; }

 private:
  double mu_, sigma_, log_norm_;
};

// Discrete Laplace on the integers:
//   P[X = x] = (e^{1/t} - 1) / (e^{1/t} + 1) * exp(-|x| / t).
// Sampled exactly as the difference of two iid geometric draws.
class DiscreteLaplace {
 public:
  explicit DiscreteLaplace(double t);

  double log_pmf(std::int64_t x) const;
  double pmf(std::int64_t x) const;
  std::int64_t sample(RngStream& rng) const;
  std::vector<std::int64_t> sample_many(std::int64_t count, RngStream& rng) const;

  double t() const { return t_; }

 private:
  double t_, log_norm_;  // log_norm_ = log((e^{1/t}-1)/(e^{1/t}+1))
};

// Free-function pmf forms.  The discrete-Gaussian normaliser is memoised per
// (mu mod 1, sigma) behind a shared lock, so concurrent readers are safe.
double discrete_gaussian_log_normalizer(double mu, double sigma);
double discrete_gaussian_pmf(std::int64_t x, double mu, double sigma);
double discrete_gaussian_log_unnormalized(std::int64_t x, double mu, double sigma);
double discrete_laplace_pmf(std::int64_t x, double t);

// Continuous Laplace log-density at u with the given location and scale.
double laplace_logdensity(double u, double location, double scale);

// Laplace mechanism: adds iid Laplace(0, sensitivity/epsilon) noise to each
// coordinate of a statistic with the given L1 sensitivity.
Eigen::ArrayXd laplace_mechanism(const Eigen::ArrayXd& stat, double sensitivity,
                                 double epsilon, RngStream& rng);

// Randomized response on a 0/1 array: each bit is reported unchanged with
// probability keep_prob and flipped otherwise.  keep_prob = 3/4 is the
// two-fair-coin scheme (one coin decides whether to answer honestly, the
// second supplies the replacement answer), which satisfies (2 log 3)-DP.
Eigen::ArrayXXd randomized_response(const Eigen::ArrayXXd& bits, double keep_prob,
                                    RngStream& rng);

// Log-likelihood of observing released bits sdp given true bits x under the
// randomized-response channel above.
double rr_loglik(const Eigen::ArrayXXd& sdp, const Eigen::ArrayXXd& x, double keep_prob);

// zCDP-to-approximate-DP conversion: a rho-zCDP mechanism satisfies
// (rho + 2 sqrt(rho log(1/delta)), delta)-DP.
double zcdp_epsilon(double rho, double delta);

// Smallest discrete-Gaussian sigma whose zCDP budget converts to at most
// (epsilon, delta)-DP for a statistic with the given L2 sensitivity:
// sqrt(rho) = sqrt(log(1/delta) + epsilon) - sqrt(log(1/delta)),
// sigma = l2_sensitivity / sqrt(2 rho).
double sigma_for_approx_dp(double l2_sensitivity, double epsilon, double delta);

}  // namespace privmcmc
