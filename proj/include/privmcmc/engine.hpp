#pragma once

// Data-augmentation MCMC core. Alternates a user-supplied posterior step for
// the model parameters with a Metropolis-within-Gibbs sweep over the latent
// confidential records, using record-additive incremental updates of the
// summary statistic so each proposal costs O(1) statistic work.

#include <privmcmc/random.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace privmcmc {

// The imputed confidential database: one row per record.
using LatentDatabase = Eigen::MatrixXd;

// Privatized statistic s_dp, or the running total sum_i t_i(x_i, s_dp).
// Vectors are stored as k x 1 arrays.
using SummaryValue = Eigen::ArrayXXd;

// The four-callback bundle that defines a privatized-data model. All
// callbacks must be safe to invoke concurrently from different chains.
struct PrivacyModel {
  // One draw from p(theta | x); receives the current theta as a start point.
  std::function<Eigen::VectorXd(const LatentDatabase&, const Eigen::VectorXd&, RngStream&)>
      posterior_step;
  // Draws a full database x ~ f(. | theta); fixes the record count n.
  std::function<LatentDatabase(const Eigen::VectorXd&, RngStream&)> latent_sampler;
  // Proposes a single record x_i* ~ f(. | theta).
  std::function<Eigen::RowVectorXd(const Eigen::VectorXd&, RngStream&)> record_proposer;
  // log eta(s_dp | x), evaluated through the record-additive total sx.
  std::function<double(const SummaryValue&, const SummaryValue&)> privacy_logdensity;
  // t_i(x_i, s_dp); output shape must be identical for every index i.
  std::function<SummaryValue(const Eigen::RowVectorXd&, const SummaryValue&, std::int64_t)>
      record_statistic;

  std::int64_t npar = 0;
  std::vector<std::string> varnames;
};

struct SamplerConfig {
  std::int64_t niter = 2000;
  std::int64_t warmup = 1000;  // discarded; retained draws = niter - warmup
  std::int64_t chains = 1;
  std::uint64_t seed = 0;
  Eigen::VectorXd init_par;
};

struct DrawsMatrix {
  std::vector<Eigen::MatrixXd> chains;  // each (niter - warmup) x npar
  std::vector<std::string> varnames;
};

struct SamplerOutput {
  DrawsMatrix draws;
  // Per chain, length niter: mean per-record MH acceptance probability of
  // each iteration's latent sweep.
  std::vector<Eigen::VectorXd> acceptance;
};

struct EngineOptions {
  // Max worker threads for chain-level parallelism; 0 means hardware default,
  // 1 forces the serial path.
  int threads = 0;
  // Debug knob: every k iterations, recompute sum_i t_i from scratch and
  // require the cached total to agree within 1e-10 relative. 0 disables.
  std::int64_t check_stat_every = 0;
  // Invoked every progress_every iterations with (chain, iteration, niter).
  // Called from worker threads; must be thread-safe. 0 disables.
  std::int64_t progress_every = 0;
  std::function<void(std::int64_t, std::int64_t, std::int64_t)> progress;
};

// min(1, exp(log_eta_new - log_eta_old)). Both -inf means the chain is stuck
// on an impossible state, so the move is forced (returns 1). NaN is an error.
double mh_accept_prob(double log_eta_new, double log_eta_old);

// Elementwise total - old_i + new_i (the record-additive update rule).
SummaryValue update_statistic(const SummaryValue& total, const SummaryValue& old_i,
                              const SummaryValue& new_i);

// One Metropolis-within-Gibbs pass over all records, sequential in i.
// Mutates x and total in place; cur_logdensity carries log eta(s_dp | x)
// across calls so it is never recomputed from scratch. Returns the mean of
// the n per-record acceptance probabilities.
double sweep_latent(const PrivacyModel& model, LatentDatabase& x, const Eigen::VectorXd& theta,
                    const SummaryValue& sdp, SummaryValue& total, double& cur_logdensity,
                    RngStream& rng);

// Convenience overload that derives the current log-density from total.
double sweep_latent(const PrivacyModel& model, LatentDatabase& x, const Eigen::VectorXd& theta,
                    const SummaryValue& sdp, SummaryValue& total, RngStream& rng);

// Runs one chain with the stream derived from (config.seed, chain_index).
// Returns retained draws ((niter - warmup) x npar) and the acceptance vector
// (length niter).
std::pair<Eigen::MatrixXd, Eigen::VectorXd> sample_chain(const PrivacyModel& model,
                                                         const SummaryValue& sdp,
                                                         const SamplerConfig& config,
                                                         std::int64_t chain_index = 0,
                                                         const EngineOptions& options = {});

// Runs config.chains independent chains, possibly in parallel. Output is
// bit-reproducible for a fixed (model, sdp, config) regardless of thread
// count, because each chain consumes only its own stream.
SamplerOutput sample_private_posterior(const PrivacyModel& model, const SummaryValue& sdp,
                                       const SamplerConfig& config,
                                       const EngineOptions& options = {});

// Plain single-threaded reference driver: same result as the parallel entry
// point, kept separate for testing and benchmarking.
SamplerOutput sample_private_posterior_serial(const PrivacyModel& model, const SummaryValue& sdp,
                                              const SamplerConfig& config,
                                              const EngineOptions& options = {});

}  // namespace privmcmc
