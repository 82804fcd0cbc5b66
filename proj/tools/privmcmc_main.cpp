// privmcmc: sample exact Bayesian posteriors from privatized summary
// statistics, summarize draws, and explore the noise mechanisms.
//
// Exit codes: 0 success, 2 bad configuration or arguments, 3 numeric failure,
// 4 I/O failure. `run` writes its draws file last, so a nonzero exit always
// means no draws were produced.

#include <privmcmc/csv.hpp>
#include <privmcmc/diagnostics.hpp>
#include <privmcmc/engine.hpp>
#include <privmcmc/errors.hpp>
#include <privmcmc/mechanisms.hpp>
#include <privmcmc/runconfig.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <vector>

namespace {

using namespace privmcmc;

// Serializes per-chain iteration counts to standard error, at most once per
// second. update() is invoked concurrently from chain worker threads.
class ProgressPrinter {
 public:
  ProgressPrinter(std::int64_t chains, std::int64_t niter)
      : iters_(static_cast<std::size_t>(chains), 0),
        niter_(niter),
        last_(std::chrono::steady_clock::now()) {}

  void update(std::int64_t chain, std::int64_t iteration, std::int64_t) {
    const std::lock_guard<std::mutex> lock(mu_);
    iters_[static_cast<std::size_t>(chain)] = iteration;
    const auto now = std::chrono::steady_clock::now();
    if (now - last_ < std::chrono::seconds(1)) return;
    last_ = now;
    print_locked();
  }

  void finish() {
    const std::lock_guard<std::mutex> lock(mu_);
    for (auto& it : iters_) it = niter_;
    print_locked();
  }

 private:
  void print_locked() {
    std::string line;
    for (std::size_t c = 0; c < iters_.size(); ++c) {
      line += "chain " + std::to_string(c) + ": " + std::to_string(iters_[c]) + "/" +
              std::to_string(niter_) + (c + 1 < iters_.size() ? "  " : "");
    }
    std::cerr << line << "\n";
  }

  std::mutex mu_;
  std::vector<std::int64_t> iters_;
  std::int64_t niter_;
  std::chrono::steady_clock::time_point last_;
};

struct RunFlags {
  int threads = 0;
  std::int64_t check_stat_every = 0;
  bool progress = false;
};

void execute_run(const ResolvedRun& run, const RunFlags& flags) {
  namespace fs = std::filesystem;
  const fs::path dir(run.out_dir);
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    throw IoError("cannot create output directory " + dir.string() + ": " + e.what());
  }

  const std::int64_t niter = run.sampler.niter;
  const std::int64_t retained = niter - run.sampler.warmup;

  DrawsMatrix draws;
  std::vector<Eigen::VectorXd> acceptance;
  if (run.is_toy) {
    // The two-block chain is a pure Gibbs sampler: every move is accepted.
    for (std::int64_t chain = 0; chain < run.sampler.chains; ++chain) {
      RngStream rng(run.sampler.seed, static_cast<std::uint64_t>(chain));
      const Eigen::VectorXd path =
          toy_model_chain(run.toy.epsilon, run.toy.sigma, run.toy.s, niter, rng);
      draws.chains.push_back(path.tail(retained));
      acceptance.push_back(Eigen::VectorXd::Ones(niter));
    }
  } else {
    EngineOptions options;
    options.threads = flags.threads;
    options.check_stat_every = flags.check_stat_every;
    ProgressPrinter printer(run.sampler.chains, niter);
    if (flags.progress) {
      options.progress_every = std::max<std::int64_t>(1, niter / 200);
      options.progress = [&printer](std::int64_t chain, std::int64_t it, std::int64_t total) {
        printer.update(chain, it, total);
      };
    }
    SamplerOutput out = sample_private_posterior(run.model, run.sdp, run.sampler, options);
    if (flags.progress) printer.finish();
    draws = std::move(out.draws);
    acceptance = std::move(out.acceptance);
  }
  draws.varnames = run.varnames;

  const std::vector<SummaryRow> rows = summarize(draws);
  write_file_atomic((dir / "manifest.json").string(), run.manifest.dump(2) + "\n");
  write_acceptance_csv((dir / "acceptance.csv").string(), acceptance);
  write_summary_csv((dir / "summary.csv").string(), rows);
  std::cout << render_summary_table(rows);
  write_draws_csv((dir / "draws.csv").string(), draws);
}

void execute_summarize(const std::string& draws_path, const std::string& out_path) {
  const DrawsMatrix draws = read_draws_csv(draws_path);
  const std::vector<SummaryRow> rows = summarize(draws);
  const std::string out =
      out_path.empty()
          ? (std::filesystem::path(draws_path).parent_path() / "summary.csv").string()
          : out_path;
  write_summary_csv(out, rows);
  std::cout << render_summary_table(rows);
}

// Support wide enough that the omitted tail mass is far below printing
// precision: ~10 sds for the discrete Gaussian, ~30 scales for the Laplace.
void execute_pmf(const std::string& mechanism, double mu, double sigma, double t) {
  std::string body = "x,pmf\n";
  if (mechanism == "dgauss") {
    const DiscreteGaussian g(mu, sigma);
    const std::int64_t center = std::llround(mu);
    const std::int64_t radius = static_cast<std::int64_t>(std::ceil(10.0 * sigma)) + 10;
    for (std::int64_t x = center - radius; x <= center + radius; ++x) {
      body += std::to_string(x) + "," + format_double(g.pmf(x)) + "\n";
    }
  } else {
    const DiscreteLaplace g(t);
    const std::int64_t radius = static_cast<std::int64_t>(std::ceil(30.0 * t)) + 5;
    for (std::int64_t x = -radius; x <= radius; ++x) {
      body += std::to_string(x) + "," + format_double(g.pmf(x)) + "\n";
    }
  }
  std::cout << body;
}

void execute_sample(const std::string& mechanism, double mu, double sigma, double t,
                    std::int64_t count, std::uint64_t seed) {
  if (count < 0) throw ConfigError("--count must be nonnegative");
  RngStream rng(seed);
  std::vector<std::int64_t> values;
  if (mechanism == "dgauss") {
    values = DiscreteGaussian(mu, sigma).sample_many(count, rng);
  } else {
    values = DiscreteLaplace(t).sample_many(count, rng);
  }
  std::string body;
  for (const std::int64_t v : values) body += std::to_string(v) + "\n";
  std::cout << body;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact Bayesian inference from differentially private summary statistics"};
  app.require_subcommand(1);

  // --- run ---
  auto* run_cmd = app.add_subcommand(
      "run", "Run a sampler from a JSON config file, or \"run example <id>\" for a bundled study");
  std::string config_arg;
  std::string example_id;
  run_cmd->add_option("config", config_arg, "Config JSON path, or the literal \"example\"")
      ->required();
  run_cmd->add_option("example_id", example_id,
                      "With \"example\": rr-table, dgauss-table, linreg, or toy-mixing");
  bool published = true;
  run_cmd->add_flag("--published-table,!--no-published-table", published,
                    "Table examples: use the published noisy release (default) or re-simulate");
  std::int64_t niter_flag = 0, warmup_flag = 0, chains_flag = 0;
  std::uint64_t seed_flag = 0;
  std::string out_dir_flag;
  RunFlags flags;
  run_cmd->add_option("--niter", niter_flag, "Override total iterations per chain");
  run_cmd->add_option("--warmup", warmup_flag, "Override discarded warmup iterations");
  run_cmd->add_option("--chains", chains_flag, "Override number of chains");
  run_cmd->add_option("--seed", seed_flag, "Override the sampler seed");
  run_cmd->add_option("--out-dir", out_dir_flag, "Override the output directory");
  run_cmd->add_option("--threads", flags.threads,
                      "Max chain-worker threads (0 = hardware default, 1 = serial)");
  run_cmd->add_option("--check-stat-every", flags.check_stat_every,
                      "Debug: verify the statistic cache every k iterations");
  run_cmd->add_flag("--progress", flags.progress,
                    "Print per-chain iteration counts to standard error every second");

  // --- summarize ---
  auto* summarize_cmd = app.add_subcommand("summarize", "Summarize a draws CSV");
  std::string draws_path;
  std::string summary_out;
  summarize_cmd->add_option("draws", draws_path, "Path to a draws CSV written by run")->required();
  summarize_cmd->add_option("--out", summary_out,
                            "Summary CSV destination (default: summary.csv next to the draws)");

  // --- mech ---
  auto* mech_cmd = app.add_subcommand("mech", "Explore the noise mechanisms");
  mech_cmd->require_subcommand(1);
  const std::vector<std::string> mechanism_ids{"dgauss", "dlaplace"};

  auto* pmf_cmd = mech_cmd->add_subcommand("pmf", "Print the exact pmf as x,pmf CSV");
  std::string pmf_mechanism;
  double pmf_mu = 0.0, pmf_sigma = 1.0, pmf_t = 1.0;
  pmf_cmd->add_option("mechanism", pmf_mechanism, "dgauss or dlaplace")
      ->required()
      ->check(CLI::IsMember(mechanism_ids));
  pmf_cmd->add_option("--mu", pmf_mu, "Discrete Gaussian location (default 0)");
  pmf_cmd->add_option("--sigma", pmf_sigma, "Discrete Gaussian scale (default 1)");
  pmf_cmd->add_option("--t", pmf_t, "Discrete Laplace scale (default 1)");

  auto* sample_cmd = mech_cmd->add_subcommand("sample", "Draw values, one per line");
  std::string sample_mechanism;
  double sample_mu = 0.0, sample_sigma = 1.0, sample_t = 1.0;
  std::int64_t sample_count = 1;
  std::uint64_t sample_seed = 0;
  sample_cmd->add_option("mechanism", sample_mechanism, "dgauss or dlaplace")
      ->required()
      ->check(CLI::IsMember(mechanism_ids));
  sample_cmd->add_option("--mu", sample_mu, "Discrete Gaussian location (default 0)");
  sample_cmd->add_option("--sigma", sample_sigma, "Discrete Gaussian scale (default 1)");
  sample_cmd->add_option("--t", sample_t, "Discrete Laplace scale (default 1)");
  sample_cmd->add_option("--count", sample_count, "Number of draws");
  sample_cmd->add_option("--seed", sample_seed, "RNG seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) {
      RunConfig config;
      if (config_arg == "example") {
        if (example_id.empty()) {
          throw ConfigError("run example: an example id is required (rr-table, dgauss-table, "
                            "linreg, toy-mixing)");
        }
        config = parse_run_config(example_config(example_id, published));
      } else {
        if (!example_id.empty()) {
          throw ConfigError("run: unexpected extra argument \"" + example_id + "\"");
        }
        config = load_run_config(config_arg);
      }
      if (run_cmd->count("--niter") > 0) config.sampler.niter = niter_flag;
      if (run_cmd->count("--warmup") > 0) config.sampler.warmup = warmup_flag;
      if (run_cmd->count("--chains") > 0) config.sampler.chains = chains_flag;
      if (run_cmd->count("--seed") > 0) config.sampler.seed = seed_flag;
      if (run_cmd->count("--out-dir") > 0) config.out_dir = out_dir_flag;
      execute_run(resolve_run(config), flags);
    } else if (*summarize_cmd) {
      execute_summarize(draws_path, summary_out);
    } else if (*pmf_cmd) {
      execute_pmf(pmf_mechanism, pmf_mu, pmf_sigma, pmf_t);
    } else if (*sample_cmd) {
      execute_sample(sample_mechanism, sample_mu, sample_sigma, sample_t, sample_count,
                     sample_seed);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
