#pragma once

// Posterior summaries and convergence diagnostics: split-chain
// rank-normalized R-hat, bulk/tail effective sample size, and the Gaussian
// two-block toy sampler used to study how privacy noise slows mixing.

#include <privmcmc/engine.hpp>
#include <privmcmc/random.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace privmcmc {

// One summary-table line; rhat and the ESS columns are NaN when not
// computable (single chain, constant draws, or too few draws).
struct SummaryRow {
  std::string variable;
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  double mad = 0.0;  // median absolute deviation, scaled by 1.4826
  double q5 = 0.0;
  double q95 = 0.0;
  double rhat = 0.0;
  double ess_bulk = 0.0;
  double ess_tail = 0.0;
};

// Linear-interpolation quantile of the values (R type 7); p in [0, 1].
double quantile(const Eigen::VectorXd& values, double p);

// Standard normal quantile function (Wichura's AS241 rational approximation,
// accurate to ~1e-15); p strictly inside (0, 1).
double inverse_normal_cdf(double p);

// Split-chain rank-normalized potential scale reduction: each chain is split
// in half (dropping the last draw if the length is odd), the pooled draws are
// rank-normalized, and sqrt(((n-1)/n W + B/n) / W) is returned. NaN when
// fewer than 2 chains or fewer than 4 draws per chain.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);

// Effective sample size via Geyer's initial-monotone-pair truncation of the
// combined-chain autocorrelations, computed on split chains. Bulk uses
// rank-normalized draws; tail is the minimum ESS of the 5% and 95% quantile
// indicators. Results are capped at 1.5x the total draw count; NaN when not
// computable.
double ess_bulk(const std::vector<Eigen::VectorXd>& chains);
double ess_tail(const std::vector<Eigen::VectorXd>& chains);

// Full summary table over all variables, pooling chains for the moment and
// quantile columns. Needs at least 4 total draws.
std::vector<SummaryRow> summarize(const DrawsMatrix& draws);

// Fraction of missing information when a statistic with sampling variance
// sigma^2 is released through noise of variance 1/epsilon^2:
// 1 - sigma^2 / (sigma^2 + epsilon^{-2}). Also the geometric convergence
// rate of the two-block sampler below.
double fraction_missing_info(double epsilon, double sigma);

// The two-step Gaussian sampler: x | theta, s ~ N(mu, tau^2) with
// mu = (s eps^2 + theta/sigma^2) / (eps^2 + 1/sigma^2), then
// theta | x ~ N(x, sigma^2). Returns the theta series (length niter).
Eigen::VectorXd toy_model_chain(double epsilon, double sigma, double s, std::int64_t niter,
                                RngStream& rng);

// Sample lag-1 autocorrelation; 0 by convention for constant series.
double lag1_autocorrelation(const Eigen::VectorXd& series);

}  // namespace privmcmc
