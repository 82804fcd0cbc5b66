// End-to-end checks of the command-line binary (driven as a subprocess via
// PRIVMCMC_CLI_PATH) plus unit coverage of the CSV layer and run-config
// resolution that backs it.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <privmcmc/csv.hpp>
#include <privmcmc/diagnostics.hpp>
#include <privmcmc/engine.hpp>
#include <privmcmc/errors.hpp>
#include <privmcmc/runconfig.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using namespace privmcmc;

namespace {

const char* const kCli = PRIVMCMC_CLI_PATH;

// Fresh scratch directory shared by all cases in this binary.
const fs::path& test_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "privmcmc_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = test_dir() / ("stdout_" + std::to_string(counter) + ".txt");
  const fs::path err = test_dir() / ("stderr_" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd =
      std::string(kCli) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

DrawsMatrix small_draws() {
  DrawsMatrix d;
  d.varnames = {"a", "b"};
  Eigen::MatrixXd c1(3, 2), c2(3, 2);
  c1 << 0.1, 1.0 / 3.0, -2.5, 1e-300, 6.32, 0.0;
  c2 << -0.1, 2.0 / 3.0, 2.5, 1e300, -6.32, 42.0;
  d.chains = {c1, c2};
  return d;
}

}  // namespace

// --- CSV layer -------------------------------------------------------------

TEST_CASE("doubles print with full round-trip precision and NA for missing") {
  for (const double v : {0.1, 1.0 / 3.0, 1e-300, 6.32, -0.0, 1.0, 123456789.123456789}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "NA");
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("draws survive a CSV round trip exactly") {
  const DrawsMatrix d = small_draws();
  const fs::path p = test_dir() / "roundtrip_draws.csv";
  write_draws_csv(p.string(), d);

  const std::string text = slurp(p);
  CHECK(first_line(text) == "chain,iteration,a,b");
  CHECK(text.back() == '\n');
  CHECK(text.find("\r") == std::string::npos);

  const DrawsMatrix back = read_draws_csv(p.string());
  REQUIRE(back.chains.size() == 2);
  CHECK(back.varnames == d.varnames);
  for (std::size_t c = 0; c < 2; ++c) {
    REQUIRE(back.chains[c].rows() == 3);
    CHECK((back.chains[c].array() == d.chains[c].array()).all());
  }
}

TEST_CASE("malformed draws files are rejected with the offending line") {
  const auto write_text = [](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
  };

  const fs::path bad_header = test_dir() / "bad_header.csv";
  write_text(bad_header, "iteration,chain,a\n1,1,0.5\n");
  CHECK_THROWS_WITH_AS(read_draws_csv(bad_header.string()),
                       doctest::Contains(":1:"), ConfigError);

  const fs::path bad_cell = test_dir() / "bad_cell.csv";
  write_text(bad_cell, "chain,iteration,a\n1,1,0.5\n1,2,oops\n");
  CHECK_THROWS_WITH_AS(read_draws_csv(bad_cell.string()), doctest::Contains(":3:"), ConfigError);

  const fs::path short_row = test_dir() / "short_row.csv";
  write_text(short_row, "chain,iteration,a,b\n1,1,0.5\n");
  CHECK_THROWS_WITH_AS(read_draws_csv(short_row.string()), doctest::Contains(":2:"), ConfigError);

  const fs::path bad_chain = test_dir() / "bad_chain.csv";
  write_text(bad_chain, "chain,iteration,a\n0,1,0.5\n");
  CHECK_THROWS_AS(read_draws_csv(bad_chain.string()), ConfigError);

  CHECK_THROWS_AS(read_draws_csv((test_dir() / "no_such.csv").string()), IoError);
}

TEST_CASE("atomic file writes replace content and leave no temporary") {
  const fs::path p = test_dir() / "atomic.txt";
  write_file_atomic(p.string(), "first\n");
  write_file_atomic(p.string(), "second\n");
  CHECK(slurp(p) == "second\n");
  CHECK(!fs::exists(p.string() + ".tmp"));

  CHECK_THROWS_AS(write_file_atomic((test_dir() / "missing_dir" / "x.txt").string(), "x"),
                  IoError);
}

TEST_CASE("summary CSV carries the documented column set") {
  const std::vector<SummaryRow> rows = summarize(small_draws());
  const fs::path p = test_dir() / "summary_cols.csv";
  write_summary_csv(p.string(), rows);
  const std::string text = slurp(p);
  CHECK(first_line(text) == "variable,mean,median,sd,mad,q5,q95,rhat,ess_bulk,ess_tail");

  // Two chains of three draws each are far too short for the rank
  // diagnostics, which need at least four draws per half chain.
  DrawsMatrix single;
  single.varnames = {"a"};
  single.chains = {Eigen::MatrixXd::Constant(6, 1, 2.0)};
  write_summary_csv(p.string(), summarize(single));
  const std::string line2 = slurp(p).substr(slurp(p).find('\n') + 1);
  const std::vector<std::string> fields = split_csv_line(first_line(line2));
  REQUIRE(fields.size() == 10);
  CHECK(fields[0] == "a");
  CHECK(fields[1] == "2");   // mean
  CHECK(fields[3] == "0");   // sd of a constant
  CHECK(fields[7] == "NA");  // rhat needs two chains
}

// --- run-config resolution ---------------------------------------------------

TEST_CASE("published randomized-response table expands to the right bit rows") {
  const ResolvedRun run = resolve_run(parse_run_config(example_config("rr-table", true)));
  REQUIRE(run.sdp.rows() == 400);
  REQUIRE(run.sdp.cols() == 2);
  std::int64_t counts[4] = {0, 0, 0, 0};
  for (Eigen::Index i = 0; i < 400; ++i) {
    const int cell = (run.sdp(i, 0) == 1.0 ? 0 : 2) + (run.sdp(i, 1) == 1.0 ? 0 : 1);
    ++counts[cell];
  }
  CHECK(counts[0] == 104);
  CHECK(counts[1] == 120);
  CHECK(counts[2] == 74);
  CHECK(counts[3] == 102);
  CHECK(run.manifest["sdp"]["cell_counts"] == nlohmann::json({104, 120, 74, 102}));
  CHECK(run.manifest["derived"]["epsilon"].get<double>() ==
        doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("simulated releases are a deterministic function of the data seed") {
  const RunConfig config = parse_run_config(example_config("linreg", true));
  const ResolvedRun a = resolve_run(config);
  const ResolvedRun b = resolve_run(config);
  REQUIRE(a.sdp.rows() == 9);
  CHECK((a.sdp.array() == b.sdp.array()).all());
  CHECK(a.manifest == b.manifest);

  RunConfig other = config;
  other.data_seed = 99;
  const ResolvedRun c = resolve_run(other);
  CHECK(!(a.sdp.array() == c.sdp.array()).all());
}

TEST_CASE("toy-mixing rejects a release payload and a custom start point") {
  nlohmann::json with_sdp = example_config("toy-mixing", true);
  with_sdp["sdp"] = {{"counts", {1, 2, 3, 4}}};
  CHECK_THROWS_WITH_AS(parse_run_config(with_sdp), doctest::Contains("toy"), ConfigError);

  RunConfig config = parse_run_config(example_config("toy-mixing", true));
  config.sampler.init_par = Eigen::VectorXd::Constant(1, 0.3);
  CHECK_THROWS_WITH_AS(resolve_run(config), doctest::Contains("init_par"), ConfigError);
}

TEST_CASE("config field errors name the offending path") {
  nlohmann::json j = example_config("rr-table", true);
  j["table"]["keep_prob"] = 1.4;
  CHECK_THROWS_WITH_AS(parse_run_config(j), doctest::Contains("config.table.keep_prob"),
                       ConfigError);

  j = example_config("rr-table", true);
  j["sdp"]["cell_counts"] = {104, 120, 74, 103};
  CHECK_THROWS_WITH_AS(parse_run_config(j), doctest::Contains("config.sdp.cell_counts"),
                       ConfigError);

  j = example_config("dgauss-table", true);
  j["table"].erase("sigma");
  CHECK_THROWS_WITH_AS(parse_run_config(j), doctest::Contains("config.table.sigma"), ConfigError);

  j = example_config("linreg", true);
  j["varnames"] = {"b0", "b1"};
  CHECK_THROWS_WITH_AS(resolve_run(parse_run_config(j)), doctest::Contains("config.varnames"),
                       ConfigError);

  j = example_config("rr-table", true);
  j.erase("seed");
  CHECK_THROWS_WITH_AS(parse_run_config(j), doctest::Contains("config.seed"), ConfigError);
}

// --- the binary, end to end ----------------------------------------------------

TEST_CASE("run writes the complete artifact set") {
  const fs::path dir = test_dir() / "toy_run";
  const CliResult r =
      run_cli("run example toy-mixing --niter 3000 --warmup 500 --out-dir " + dir.string());
  REQUIRE(r.exit_code == 0);

  CHECK(first_line(slurp(dir / "draws.csv")) == "chain,iteration,theta");
  CHECK(first_line(slurp(dir / "acceptance.csv")) == "chain,iteration,mean_alpha");
  CHECK(first_line(slurp(dir / "summary.csv")) ==
        "variable,mean,median,sd,mad,q5,q95,rhat,ess_bulk,ess_tail");
  CHECK(r.out.find("variable") != std::string::npos);
  CHECK(r.out.find("theta") != std::string::npos);

  const nlohmann::json manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["niter"] == 3000);
  CHECK(manifest["warmup"] == 500);

  // 2500 retained draws plus header.
  const DrawsMatrix draws = read_draws_csv((dir / "draws.csv").string());
  REQUIRE(draws.chains.size() == 1);
  CHECK(draws.chains[0].rows() == 2500);
}

TEST_CASE("a manifest reruns to byte-identical outputs") {
  const fs::path a = test_dir() / "manifest_a";
  const fs::path b = test_dir() / "manifest_b";
  REQUIRE(run_cli("run example dgauss-table --out-dir " + a.string()).exit_code == 0);
  REQUIRE(run_cli("run " + (a / "manifest.json").string() + " --out-dir " + b.string())
              .exit_code == 0);
  CHECK(slurp(a / "draws.csv") == slurp(b / "draws.csv"));
  CHECK(slurp(a / "acceptance.csv") == slurp(b / "acceptance.csv"));
  CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
}

TEST_CASE("thread count does not change the draws") {
  const fs::path t1 = test_dir() / "threads_1";
  const fs::path t4 = test_dir() / "threads_4";
  const std::string base = "run example dgauss-table --niter 600 --warmup 100 --chains 4 ";
  REQUIRE(run_cli(base + "--threads 1 --out-dir " + t1.string()).exit_code == 0);
  REQUIRE(run_cli(base + "--threads 4 --out-dir " + t4.string()).exit_code == 0);
  CHECK(slurp(t1 / "draws.csv") == slurp(t4 / "draws.csv"));
  CHECK(slurp(t1 / "acceptance.csv") == slurp(t4 / "acceptance.csv"));
}

TEST_CASE("the sampler seed flag changes the draws") {
  const fs::path s1 = test_dir() / "seed_1";
  const fs::path s2 = test_dir() / "seed_2";
  const std::string base = "run example dgauss-table --niter 400 --warmup 100 ";
  REQUIRE(run_cli(base + "--seed 1 --out-dir " + s1.string()).exit_code == 0);
  REQUIRE(run_cli(base + "--seed 2 --out-dir " + s2.string()).exit_code == 0);
  CHECK(slurp(s1 / "draws.csv") != slurp(s2 / "draws.csv"));

  const nlohmann::json manifest = nlohmann::json::parse(slurp(s2 / "manifest.json"));
  CHECK(manifest["seed"] == 2);
  CHECK(manifest["niter"] == 400);
}

TEST_CASE("invalid configuration exits 2 and writes nothing") {
  const fs::path dir = test_dir() / "never_created";
  const CliResult r =
      run_cli("run example rr-table --warmup 9000 --out-dir " + dir.string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("config.warmup") != std::string::npos);
  CHECK(!fs::exists(dir));

  CHECK(run_cli("run example no-such-example").exit_code == 2);
  CHECK(run_cli("run " + (test_dir() / "no_such_config.json").string()).exit_code == 4);
  CHECK(run_cli("run").exit_code == 2);
  CHECK(run_cli("no-such-subcommand").exit_code == 2);
  CHECK(run_cli("--help").exit_code == 0);
}

TEST_CASE("run then summarize reproduces the summary byte for byte") {
  const fs::path dir = test_dir() / "resummarize";
  REQUIRE(run_cli("run example dgauss-table --niter 500 --warmup 100 --out-dir " + dir.string())
              .exit_code == 0);
  const std::string from_run = slurp(dir / "summary.csv");
  fs::remove(dir / "summary.csv");

  // Default destination is summary.csv next to the draws file.
  const CliResult r = run_cli("summarize " + (dir / "draws.csv").string());
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(dir / "summary.csv") == from_run);
  CHECK(r.out.find("pi_11") != std::string::npos);

  const fs::path elsewhere = test_dir() / "explicit_summary.csv";
  REQUIRE(run_cli("summarize " + (dir / "draws.csv").string() + " --out " + elsewhere.string())
              .exit_code == 0);
  CHECK(slurp(elsewhere) == from_run);
}

TEST_CASE("summarize reports malformed input with its line number") {
  const fs::path bad = test_dir() / "malformed.csv";
  std::ofstream(bad, std::ios::binary) << "chain,iteration,a\n1,1,0.5\n1,x,0.7\n";
  const CliResult r = run_cli("summarize " + bad.string());
  CHECK(r.exit_code == 2);
  CHECK(r.err.find(":3:") != std::string::npos);

  CHECK(run_cli("summarize " + (test_dir() / "absent.csv").string()).exit_code == 4);
}

TEST_CASE("constant draws summarize with zero spread") {
  DrawsMatrix d;
  d.varnames = {"c"};
  d.chains = {Eigen::MatrixXd::Constant(8, 1, 5.0), Eigen::MatrixXd::Constant(8, 1, 5.0)};
  const fs::path p = test_dir() / "constant_draws.csv";
  write_draws_csv(p.string(), d);

  const CliResult r = run_cli("summarize " + p.string());
  REQUIRE(r.exit_code == 0);
  const std::string text = slurp(test_dir() / "summary.csv");
  const std::vector<std::string> fields =
      split_csv_line(first_line(text.substr(text.find('\n') + 1)));
  REQUIRE(fields.size() == 10);
  CHECK(fields[0] == "c");
  CHECK(fields[1] == "5");  // mean
  CHECK(fields[3] == "0");  // sd
  CHECK(fields[4] == "0");  // mad
}

TEST_CASE("mech pmf matches the direct normalized-Gaussian value at zero") {
  const CliResult r = run_cli("mech pmf dgauss --sigma 1");
  REQUIRE(r.exit_code == 0);
  REQUIRE(first_line(r.out) == "x,pmf");

  double at_zero = -1.0;
  double total = 0.0;
  std::istringstream lines(r.out.substr(r.out.find('\n') + 1));
  std::string line;
  while (std::getline(lines, line)) {
    const std::vector<std::string> f = split_csv_line(line);
    REQUIRE(f.size() == 2);
    const double pmf = std::stod(f[1]);
    total += pmf;
    if (f[0] == "0") at_zero = pmf;
  }

  // Independent reference: normalize exp(-x^2/2) by direct summation.
  double norm = 0.0;
  for (int x = -100; x <= 100; ++x) norm += std::exp(-0.5 * x * x);
  CHECK(at_zero == doctest::Approx(1.0 / norm).epsilon(1e-12));
  CHECK(std::abs(at_zero - 0.39894) < 1e-5);
  CHECK(std::abs(total - 1.0) < 1e-10);

  CHECK(run_cli("mech pmf dgauss --sigma -1").exit_code == 2);
  CHECK(run_cli("mech pmf no-such-mechanism").exit_code == 2);
}

TEST_CASE("mech sample honors count and seed exactly") {
  CHECK(run_cli("mech sample dlaplace --t 1 --count 0 --seed 5").out.empty());
  CHECK(run_cli("mech sample dlaplace --t 1 --count 0 --seed 5").exit_code == 0);

  const CliResult a = run_cli("mech sample dgauss --sigma 2 --count 1000 --seed 42");
  const CliResult b = run_cli("mech sample dgauss --sigma 2 --count 1000 --seed 42");
  const CliResult c = run_cli("mech sample dgauss --sigma 2 --count 1000 --seed 43");
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);

  std::int64_t lines = 0;
  for (const char ch : a.out) lines += ch == '\n' ? 1 : 0;
  CHECK(lines == 1000);

  CHECK(run_cli("mech sample dgauss --sigma 2 --count 3").exit_code == 2);  // seed required
  CHECK(run_cli("mech sample dlaplace --t 0 --count 3 --seed 1").exit_code == 2);
}
