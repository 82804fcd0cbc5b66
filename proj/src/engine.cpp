#include <privmcmc/engine.hpp>

#include <privmcmc/errors.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <utility>

namespace privmcmc {

namespace {

// Rethrows the active exception with a location prefix, preserving the error
// category so exit-code mapping survives the annotation.
[[noreturn]] void rethrow_annotated(const std::string& where) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(where + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(where + ": " + e.what());
  } catch (const std::exception& e) {
    throw NumericError(where + ": " + e.what());
  }
}

SummaryValue recompute_total(const PrivacyModel& model, const LatentDatabase& x,
                             const SummaryValue& sdp) {
  SummaryValue total = model.record_statistic(x.row(0), sdp, 0);
  for (std::int64_t i = 1; i < x.rows(); ++i) {
    total += model.record_statistic(x.row(i), sdp, i);
  }
  return total;
}

void check_total_coherent(const SummaryValue& cached, const SummaryValue& fresh,
                          std::int64_t iteration) {
  const double scale = std::max(1.0, fresh.abs().maxCoeff());
  const double gap = (cached - fresh).abs().maxCoeff();
  if (!(gap <= 1e-10 * scale)) {
    throw NumericError("iteration " + std::to_string(iteration) +
                       ": cached statistic total drifted from full recomputation (|gap| = " +
                       std::to_string(gap) + ")");
  }
}

void validate_model(const PrivacyModel& model) {
  if (!model.posterior_step || !model.latent_sampler || !model.record_proposer ||
      !model.privacy_logdensity || !model.record_statistic) {
    throw ConfigError("privacy model: all five callbacks must be set");
  }
  if (model.npar < 1) throw ConfigError("privacy model: npar must be at least 1");
  if (static_cast<std::int64_t>(model.varnames.size()) != model.npar) {
    throw ConfigError("privacy model: varnames length must equal npar");
  }
}

void validate_config(const PrivacyModel& model, const SamplerConfig& config) {
  if (config.niter < 1) throw ConfigError("sampler config: niter must be positive");
  if (config.warmup < 0 || config.warmup >= config.niter) {
    throw ConfigError("sampler config: warmup must satisfy 0 <= warmup < niter");
  }
  if (config.chains < 1) throw ConfigError("sampler config: chains must be at least 1");
  if (config.init_par.size() != model.npar) {
    throw ConfigError("sampler config: init_par has length " +
                      std::to_string(config.init_par.size()) + " but the model has " +
                      std::to_string(model.npar) + " parameters");
  }
}

}  // namespace

double mh_accept_prob(double log_eta_new, double log_eta_old) {
  if (std::isnan(log_eta_new) || std::isnan(log_eta_old)) {
    throw NumericError("MH acceptance: log-density is NaN");
  }
  const double ninf = -std::numeric_limits<double>::infinity();
  if (log_eta_new == ninf && log_eta_old == ninf) return 1.0;  // forced escape
  if (log_eta_new == ninf) return 0.0;
  if (log_eta_old == ninf) return 1.0;
  return std::min(1.0, std::exp(log_eta_new - log_eta_old));
}

SummaryValue update_statistic(const SummaryValue& total, const SummaryValue& old_i,
                              const SummaryValue& new_i) {
  if (old_i.rows() != total.rows() || old_i.cols() != total.cols() ||
      new_i.rows() != total.rows() || new_i.cols() != total.cols()) {
    throw ConfigError("update_statistic: record statistic shape does not match the total");
  }
  return total - old_i + new_i;
}

double sweep_latent(const PrivacyModel& model, LatentDatabase& x, const Eigen::VectorXd& theta,
                    const SummaryValue& sdp, SummaryValue& total, double& cur_logdensity,
                    RngStream& rng) {
  const std::int64_t n = x.rows();
  if (n < 1) throw ConfigError("latent database must have at least one record");

  double alpha_sum = 0.0;
  SummaryValue candidate(total.rows(), total.cols());
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      const SummaryValue old_stat = model.record_statistic(x.row(i), sdp, i);
      const Eigen::RowVectorXd proposal = model.record_proposer(theta, rng);
      if (proposal.size() != x.cols()) {
        throw ConfigError("record proposal has " + std::to_string(proposal.size()) +
                          " columns, expected " + std::to_string(x.cols()));
      }
      const SummaryValue new_stat = model.record_statistic(proposal, sdp, i);
      candidate = update_statistic(total, old_stat, new_stat);
      const double cand_logdensity = model.privacy_logdensity(sdp, candidate);

      const double alpha = mh_accept_prob(cand_logdensity, cur_logdensity);
      alpha_sum += alpha;
      // Certain moves skip the uniform draw; borderline states stay cheap.
      if (alpha >= 1.0 || rng.uniform() < alpha) {
        x.row(i) = proposal;
        total.swap(candidate);
        cur_logdensity = cand_logdensity;
      }
    } catch (...) {
      rethrow_annotated("latent record " + std::to_string(i));
    }
  }
  return alpha_sum / static_cast<double>(n);
}

double sweep_latent(const PrivacyModel& model, LatentDatabase& x, const Eigen::VectorXd& theta,
                    const SummaryValue& sdp, SummaryValue& total, RngStream& rng) {
  double cur = model.privacy_logdensity(sdp, total);
  return sweep_latent(model, x, theta, sdp, total, cur, rng);
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> sample_chain(const PrivacyModel& model,
                                                         const SummaryValue& sdp,
                                                         const SamplerConfig& config,
                                                         std::int64_t chain_index,
                                                         const EngineOptions& options) {
  validate_model(model);
  validate_config(model, config);

  RngStream rng(config.seed, static_cast<std::uint64_t>(chain_index));

  LatentDatabase x = model.latent_sampler(config.init_par, rng);
  if (x.rows() < 1 || x.cols() < 1) {
    throw ConfigError("latent sampler returned an empty matrix at the initial parameters");
  }
  if (!x.allFinite()) {
    throw ConfigError("latent sampler returned non-finite values at the initial parameters");
  }

  Eigen::VectorXd theta = config.init_par;
  SummaryValue total = recompute_total(model, x, sdp);
  double cur_logdensity = model.privacy_logdensity(sdp, total);

  const std::int64_t retained = config.niter - config.warmup;
  Eigen::MatrixXd draws(retained, model.npar);
  Eigen::VectorXd acceptance(config.niter);

  for (std::int64_t it = 0; it < config.niter; ++it) {
    theta = model.posterior_step(x, theta, rng);
    if (theta.size() != model.npar) {
      throw ConfigError("posterior step returned " + std::to_string(theta.size()) +
                        " parameters, expected " + std::to_string(model.npar));
    }
    acceptance[it] = sweep_latent(model, x, theta, sdp, total, cur_logdensity, rng);
    if (it >= config.warmup) draws.row(it - config.warmup) = theta;

    // Observational only: leaves the cached total untouched so results are
    // identical with or without the check.
    if (options.check_stat_every > 0 && (it + 1) % options.check_stat_every == 0) {
      check_total_coherent(total, recompute_total(model, x, sdp), it);
    }
    if (options.progress && options.progress_every > 0 &&
        ((it + 1) % options.progress_every == 0 || it + 1 == config.niter)) {
      options.progress(chain_index, it + 1, config.niter);
    }
  }
  return {std::move(draws), std::move(acceptance)};
}

namespace {

SamplerOutput run_chains(const PrivacyModel& model, const SummaryValue& sdp,
                         const SamplerConfig& config, const EngineOptions& options,
                         bool allow_parallel) {
  validate_model(model);
  validate_config(model, config);

  const auto nchains = static_cast<std::size_t>(config.chains);
  SamplerOutput out;
  out.draws.varnames = model.varnames;
  out.draws.chains.resize(nchains);
  out.acceptance.resize(nchains);

  std::vector<std::exception_ptr> failures(nchains);

  int threads = 1;
#ifdef _OPENMP
  if (allow_parallel && options.threads != 1) {
    threads = options.threads > 0 ? options.threads : omp_get_max_threads();
    threads = std::min<int>(threads, static_cast<int>(nchains));
    threads = std::max(threads, 1);
  }
#else
  (void)allow_parallel;
#endif

  if (threads > 1) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::int64_t c = 0; c < config.chains; ++c) {
      try {
        auto [draws, acc] = sample_chain(model, sdp, config, c, options);
        out.draws.chains[static_cast<std::size_t>(c)] = std::move(draws);
        out.acceptance[static_cast<std::size_t>(c)] = std::move(acc);
      } catch (...) {
        failures[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
#endif
  } else {
    for (std::int64_t c = 0; c < config.chains; ++c) {
      try {
        auto [draws, acc] = sample_chain(model, sdp, config, c, options);
        out.draws.chains[static_cast<std::size_t>(c)] = std::move(draws);
        out.acceptance[static_cast<std::size_t>(c)] = std::move(acc);
      } catch (...) {
        failures[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
  }

  for (std::size_t c = 0; c < nchains; ++c) {
    if (failures[c]) {
      try {
        std::rethrow_exception(failures[c]);
      } catch (...) {
        rethrow_annotated("chain " + std::to_string(c));
      }
    }
  }
  return out;
}

}  // namespace

SamplerOutput sample_private_posterior(const PrivacyModel& model, const SummaryValue& sdp,
                                       const SamplerConfig& config, const EngineOptions& options) {
  return run_chains(model, sdp, config, options, /*allow_parallel=*/true);
}

SamplerOutput sample_private_posterior_serial(const PrivacyModel& model, const SummaryValue& sdp,
                                              const SamplerConfig& config,
                                              const EngineOptions& options) {
  return run_chains(model, sdp, config, options, /*allow_parallel=*/false);
}

}  // namespace privmcmc
