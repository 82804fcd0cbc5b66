// Benchmark: OpenMP-parallel paths against their serial reference
// implementations, verifying bit-identical results while timing both.
//
//   - engine: multi-chain sampler, serial driver vs. parallel driver
//   - oracle: grid posterior evaluation, 1 thread vs. hardware default

#include <privmcmc/engine.hpp>
#include <privmcmc/models.hpp>
#include <privmcmc/oracle.hpp>
#include <privmcmc/runconfig.hpp>

#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <vector>

using namespace privmcmc;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool same_draws(const SamplerOutput& a, const SamplerOutput& b) {
  if (a.draws.chains.size() != b.draws.chains.size()) return false;
  for (std::size_t c = 0; c < a.draws.chains.size(); ++c) {
    if (!(a.draws.chains[c].array() == b.draws.chains[c].array()).all()) return false;
    if (!(a.acceptance[c].array() == b.acceptance[c].array()).all()) return false;
  }
  return true;
}

void print_row(const char* name, double serial_s, double parallel_s, bool identical) {
  std::printf("%-36s %10.3f s %10.3f s %8.2fx   %s\n", name, serial_s, parallel_s,
              serial_s / parallel_s, identical ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
  int mismatches = 0;
  std::printf("%-36s %12s %12s %9s   %s\n", "workload", "serial", "parallel", "speedup",
              "outputs");

  {
    const ResolvedRun run = resolve_run(parse_run_config(example_config("dgauss-table", true)));
    SamplerConfig cfg = run.sampler;
    cfg.chains = 4;
    cfg.niter = 1500;
    cfg.warmup = 500;

    auto t0 = std::chrono::steady_clock::now();
    const SamplerOutput serial = sample_private_posterior_serial(run.model, run.sdp, cfg);
    const double serial_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const SamplerOutput parallel = sample_private_posterior(run.model, run.sdp, cfg);
    const double parallel_s = seconds_since(t0);

    const bool ok = same_draws(serial, parallel);
    mismatches += ok ? 0 : 1;
    print_row("engine: 4 chains x 1500, n = 400", serial_s, parallel_s, ok);
  }

  {
    const auto grid = simplex_grid(4, 0.02);
    Eigen::VectorXd sdp(4);
    sdp << 4, 3, 2, 3;
    const Eigen::VectorXd prior = Eigen::VectorXd::Ones(4);

    auto t0 = std::chrono::steady_clock::now();
    const GridPosterior serial = exact_count_posterior(sdp, 1.0, 12, grid, prior, 1);
    const double serial_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const GridPosterior parallel = exact_count_posterior(sdp, 1.0, 12, grid, prior, 0);
    const double parallel_s = seconds_since(t0);

    const bool ok = (serial.log_weights.array() == parallel.log_weights.array()).all();
    mismatches += ok ? 0 : 1;
    print_row("oracle: 23426-point grid, n = 12", serial_s, parallel_s, ok);
  }

  if (mismatches > 0) {
    std::printf("\n%d workload(s) disagreed between serial and parallel paths\n", mismatches);
    return 1;
  }
  return 0;
}
