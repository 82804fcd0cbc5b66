#pragma once

// JSON run configuration: parse/validate with field-path error messages,
// resolve into a ready-to-run model (simulating the privatized release when
// asked to), and provide the bundled example configurations. The manifest a
// run writes is itself a valid configuration, so any run can be reproduced
// from its manifest alone.

#include <privmcmc/engine.hpp>
#include <privmcmc/models.hpp>

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace privmcmc {

// The two-block Gaussian sampler parameters (model id "toy-mixing"): a
// scalar released as s = x + N(0, 1/epsilon^2) with data model
// x ~ N(theta, sigma^2) and a flat prior on theta.
struct ToySpec {
  double epsilon = 1.0;
  double sigma = 1.0;
  double s = 0.0;
};

struct RunConfig {
  std::string model;  // rr-table | dgauss-table | linreg | toy-mixing
  TableModelSpec table;
  RegressionModelSpec regression;
  ToySpec toy;
  SamplerConfig sampler;  // init_par empty means "use the model default"
  std::vector<std::string> varnames;  // empty means "use the model default"

  // Exactly one of: an explicit release payload, or simulation instructions.
  bool has_sdp = false;
  SummaryValue sdp;         // rr-table: n x 2 bits; dgauss-table: 4 x 1; linreg: k x 1
  std::string sdp_form;     // payload key used: cell_counts | bits | counts | values
  bool simulate = false;
  std::uint64_t data_seed = 0;
  Eigen::VectorXd true_par;

  std::string out_dir = ".";
};

// Everything needed to execute a run. For toy-mixing the chain is generated
// directly (is_toy true) instead of through the generic engine.
struct ResolvedRun {
  bool is_toy = false;
  PrivacyModel model;
  ToySpec toy;
  SummaryValue sdp;
  SamplerConfig sampler;
  std::vector<std::string> varnames;
  std::string out_dir;
  nlohmann::json manifest;  // resolved config echo, reloadable as a config
};

// Validation errors name the offending field, e.g. "config.table.prior[2]".
RunConfig parse_run_config(const nlohmann::json& j);

// Reads and parses a configuration file; parse errors carry the path.
RunConfig load_run_config(const std::string& path);

// Bundled configurations: "rr-table" and "dgauss-table" reproduce the two
// contingency-table studies (published_table keeps the released noisy
// tables; false re-simulates from the confidential cell proportions),
// "linreg" simulates the clamped-regression study, "toy-mixing" runs the
// two-block sampler.
nlohmann::json example_config(const std::string& id, bool published_table);

// Builds the model, resolves the release (simulating if requested), fills
// init_par/varnames defaults, and assembles the manifest.
ResolvedRun resolve_run(const RunConfig& config);

}  // namespace privmcmc
