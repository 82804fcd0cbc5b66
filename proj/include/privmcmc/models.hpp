#pragma once

// Built-in privatized-data models: a 2x2 binary contingency table released
// through randomized response or discrete-Gaussian count noise, and a
// clamped linear regression released through the Laplace mechanism, plus the
// naive baselines that ignore the privacy noise.

#include <privmcmc/engine.hpp>
#include <privmcmc/random.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <utility>

namespace privmcmc {

// Table cells are ordered (1,1), (1,0), (0,1), (0,0) over the two bits of a
// record row; all table code below shares this order.
struct TableModelSpec {
  enum class Mechanism { kRandomizedResponse, kDiscreteGaussian };

  std::int64_t n = 400;
  Mechanism mechanism = Mechanism::kRandomizedResponse;
  double keep_prob = 0.75;  // randomized response: P(bit reported truthfully)
  double sigma = 6.32;      // discrete Gaussian: count-noise scale
  Eigen::VectorXd prior = Eigen::VectorXd::Ones(4);  // Dirichlet concentrations
};

// Linear model y = beta0 + beta' x + N(0, sigma_noise^2), x ~ N(mu_x, I);
// the released statistic clamps every value to [-clamp_bound, clamp_bound]
// and rescales to [-1, 1] before summing and adding Laplace noise.
struct RegressionModelSpec {
  std::int64_t n = 50;
  int p = 2;
  Eigen::VectorXd mu_x = (Eigen::VectorXd(2) << 0.9, -1.17).finished();
  double sigma_noise = 2.0;
  double tau2 = 4.0;  // prior variance of each coefficient
  double clamp_bound = 10.0;
  double epsilon = 10.0;
};

// --- table model pieces ---

// Counts the four cells of the n x 2 binary matrix and draws from
// Dirichlet(counts + prior) via independent Gamma(count_j + prior_j, 1).
Eigen::VectorXd dirichlet_posterior_step(const LatentDatabase& dmat, const Eigen::VectorXd& prior,
                                         RngStream& rng);

// n i.i.d. categorical(theta) rows, encoded as the cell bit patterns.
LatentDatabase multinomial_latent(const Eigen::VectorXd& theta, std::int64_t n, RngStream& rng);

// Record i's contribution to the randomized-response statistic: an n x 2
// zero matrix with row i set to xi (i is zero-based). Summing over i
// reconstructs the binary database itself.
SummaryValue rr_record_stat(const Eigen::RowVectorXd& xi, std::int64_t n, std::int64_t i);

// One-hot cell indicator: (1,1) -> (1,0,0,0), ..., (0,0) -> (0,0,0,1).
SummaryValue cell_indicator_stat(const Eigen::RowVectorXd& xi);

// sum_j log pmf(sdp_j - sx_j; 0, sigma) under the discrete Gaussian. Both
// arguments must be integer-valued.
double dgauss_count_loglik(const SummaryValue& sdp, const SummaryValue& sx, double sigma);

// Dirichlet(max(counts, 0) + prior) draw: the table analysis that treats the
// noisy counts as if they were exact. Negative counts are floored at zero so
// the concentrations stay positive.
Eigen::VectorXd naive_table_posterior(const Eigen::VectorXd& noisy_counts,
                                      const Eigen::VectorXd& prior, RngStream& rng);

// --- regression model pieces ---

// min(max(z, -bound), bound) / bound, always in [-1, 1].
double clamp_unit(double z, double bound);

// Per-record summary of a (y, x1..xp) row after clamp_unit: the p+1 entries
// of d'y for the design row d = (1, x), then y^2, then the upper triangle
// (with diagonal, column-major) of d'd with the constant leading 1 removed.
// Length is (p+1) + 1 + ((p+1)(p+2)/2 - 1); p = 2 gives 9.
SummaryValue regression_record_stat(const Eigen::RowVectorXd& record, double bound);

// n rows of (y, x) with x ~ N(mu_x, I) and y from the linear model at theta.
LatentDatabase regression_latent(const Eigen::VectorXd& theta, const RegressionModelSpec& spec,
                                 RngStream& rng);

// One draw from the conjugate normal posterior of the coefficients given the
// (unclamped) latent data: Sigma_n = (X'X/sigma^2 + I/tau^2)^{-1}, mean
// Sigma_n X'y / sigma^2. An empty dmat draws from the N(0, tau^2 I) prior.
Eigen::VectorXd regression_posterior_step(const LatentDatabase& dmat,
                                          const RegressionModelSpec& spec, RngStream& rng);

// L1 sensitivity of the clamped regression summary: p^2 + 4p + 3.
double l1_sensitivity_regression(int p);

// sum_j log Laplace(sdp_j - sx_j; 0, scale).
double laplace_regression_loglik(const SummaryValue& sdp, const SummaryValue& sx, double scale);

// Nearest symmetric positive definite matrix in the Frobenius sense:
// symmetrize, clip negative eigenvalues at zero, then floor all eigenvalues
// at 1e-8 times the largest so the result is invertible.
Eigen::MatrixXd nearest_spd(const Eigen::MatrixXd& a);

// The regression analysis that ignores the privacy noise: rebuilds X'y and
// X'X from the noisy summary (the X'X diagonal leads with the exact record
// count n), inverts with a nearest_spd repair, and returns the flat-prior
// normal posterior (beta_hat, sigma_noise^2 * (X'X)^{-1}).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> naive_regression_posterior(const Eigen::VectorXd& sdp,
                                                                       std::int64_t n,
                                                                       double sigma_noise);

// --- assembled models ---

// Two-way binary table under the spec's mechanism; theta = cell probabilities
// (pi_11, pi_10, pi_01, pi_00). For randomized response, sdp is the n x 2
// noisy record matrix; for discrete-Gaussian counts, sdp is the noisy count
// 4-vector.
PrivacyModel make_table_model(const TableModelSpec& spec);

// Clamped linear regression; theta = (beta0..betap), sdp is the noisy
// summary vector.
PrivacyModel make_regression_model(const RegressionModelSpec& spec);

}  // namespace privmcmc
