#pragma once

// CSV readers/writers for sampler output. All files are UTF-8 with a header
// row and '\n' line endings; numerics are written with 17 significant digits
// so doubles round-trip exactly, and not-available values appear as "NA".

#include <privmcmc/diagnostics.hpp>
#include <privmcmc/engine.hpp>

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace privmcmc {

// %.17g rendering; NaN becomes "NA".
std::string format_double(double v);

// Writes content to path atomically (temp file + rename), so the target
// either keeps its old state or holds the complete new content.
void write_file_atomic(const std::string& path, const std::string& content);

// Header `chain,iteration,<varnames...>`; chains and iterations are
// 1-based, iterations count retained (post-warmup) draws.
std::string draws_to_csv(const DrawsMatrix& draws);
void write_draws_csv(const std::string& path, const DrawsMatrix& draws);

// Inverse of write_draws_csv. Throws ConfigError naming the line of the
// first malformed record, IoError if the file cannot be read.
DrawsMatrix read_draws_csv(const std::string& path);

// Header `chain,iteration,mean_alpha`: the per-iteration mean
// Metropolis-Hastings acceptance probability of each chain's latent sweep,
// including warmup iterations.
std::string acceptance_to_csv(const std::vector<Eigen::VectorXd>& acceptance);
void write_acceptance_csv(const std::string& path, const std::vector<Eigen::VectorXd>& acceptance);

// Header `variable,mean,median,sd,mad,q5,q95,rhat,ess_bulk,ess_tail`.
std::string summary_to_csv(const std::vector<SummaryRow>& rows);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

// Human-readable aligned rendering of the same summary columns.
std::string render_summary_table(const std::vector<SummaryRow>& rows);

}  // namespace privmcmc
