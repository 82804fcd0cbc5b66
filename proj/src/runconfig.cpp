#include <privmcmc/runconfig.hpp>

#include <privmcmc/diagnostics.hpp>
#include <privmcmc/errors.hpp>
#include <privmcmc/mechanisms.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace privmcmc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

// --- typed field access -----------------------------------------------------
//
// Every extractor takes the dotted path of the value it is reading so that
// a bad field is reported as e.g. "config.table.prior[2]: must be positive".

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require_key(const json& obj, const std::string& objpath, const char* key) {
  const json* v = find(obj, key);
  if (v == nullptr) fail(objpath + "." + key, "is required");
  return *v;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

std::int64_t as_integer(const json& v, const std::string& path) {
  if (v.is_number_integer() || v.is_number_unsigned()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::isfinite(x) && x == std::nearbyint(x) && std::abs(x) <= 9.0e15) {
      return std::llround(x);
    }
  }
  fail(path, "expected an integer");
}

std::uint64_t as_seed(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const std::int64_t x = as_integer(v, path);
  if (x < 0) fail(path, "must be nonnegative");
  return static_cast<std::uint64_t>(x);
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

const json& as_object(const json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "expected an object");
  return v;
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array");
  return v;
}

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

Eigen::VectorXd as_vector(const json& v, const std::string& path) {
  const json& arr = as_array(v, path);
  Eigen::VectorXd out(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) out[static_cast<Eigen::Index>(i)] = as_number(arr[i], at(path, i));
  return out;
}

// --- manifest serialization ---------------------------------------------------

// Integral values are written as JSON integers so a manifest echoes counts
// the way a hand-written config would; everything else round-trips exactly
// through nlohmann's shortest-representation double formatting.
json json_number(double v) {
  if (std::isfinite(v) && v == std::nearbyint(v) && std::abs(v) <= 9.0e15) {
    return static_cast<std::int64_t>(std::llround(v));
  }
  return v;
}

json json_vector(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(json_number(v[i]));
  return arr;
}

// --- model-specific shapes ----------------------------------------------------

// Cell order used throughout: (1,1), (1,0), (0,1), (0,0).
Eigen::RowVectorXd bits_of_cell(int cell) {
  Eigen::RowVectorXd row(2);
  row << (cell < 2 ? 1.0 : 0.0), (cell % 2 == 0 ? 1.0 : 0.0);
  return row;
}

std::int64_t cell_of_bits(double b0, double b1) {
  return (b0 == 1.0 ? 0 : 2) + (b1 == 1.0 ? 0 : 1);
}

// Length of the released regression statistic vector.
Eigen::Index regression_stat_len(const RegressionModelSpec& spec) {
  return regression_record_stat(Eigen::RowVectorXd::Zero(spec.p + 1), spec.clamp_bound).rows();
}

void check_simplex(const Eigen::VectorXd& v, const std::string& path) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0.0) fail(at(path, static_cast<std::size_t>(i)), "must be a nonnegative probability");
  }
  if (std::abs(v.sum() - 1.0) > 1e-9) fail(path, "entries must sum to 1");
}

// --- parsing: model parameter blocks -------------------------------------------

void parse_table_block(const json& j, RunConfig& c) {
  const bool rr = c.model == "rr-table";
  c.table.mechanism = rr ? TableModelSpec::Mechanism::kRandomizedResponse
                         : TableModelSpec::Mechanism::kDiscreteGaussian;
  const json& t = as_object(require_key(j, "config", "table"), "config.table");

  c.table.n = as_integer(require_key(t, "config.table", "n"), "config.table.n");
  if (c.table.n < 1) fail("config.table.n", "must be >= 1");

  if (const json* prior = find(t, "prior")) {
    c.table.prior = as_vector(*prior, "config.table.prior");
    if (c.table.prior.size() != 4) fail("config.table.prior", "expected 4 Dirichlet concentrations");
    for (Eigen::Index i = 0; i < 4; ++i) {
      if (!(c.table.prior[i] > 0.0)) fail(at("config.table.prior", static_cast<std::size_t>(i)), "must be positive");
    }
  }

  if (rr) {
    c.table.keep_prob = as_number(require_key(t, "config.table", "keep_prob"), "config.table.keep_prob");
    if (!(c.table.keep_prob > 0.0) || c.table.keep_prob > 1.0) {
      fail("config.table.keep_prob", "must be in (0, 1]");
    }
  } else {
    c.table.sigma = as_number(require_key(t, "config.table", "sigma"), "config.table.sigma");
    if (!(c.table.sigma > 0.0)) fail("config.table.sigma", "must be positive");
  }
}

void parse_regression_block(const json& j, RunConfig& c) {
  const json* rp = find(j, "regression");
  if (rp == nullptr) return;  // the defaults describe the bundled study
  const json& r = as_object(*rp, "config.regression");

  if (const json* v = find(r, "n")) {
    c.regression.n = as_integer(*v, "config.regression.n");
    if (c.regression.n < 1) fail("config.regression.n", "must be >= 1");
  }
  if (const json* v = find(r, "p")) {
    const std::int64_t p = as_integer(*v, "config.regression.p");
    if (p < 1 || p > 64) fail("config.regression.p", "must be in [1, 64]");
    c.regression.p = static_cast<int>(p);
  }
  if (const json* v = find(r, "mu_x")) {
    c.regression.mu_x = as_vector(*v, "config.regression.mu_x");
  } else if (c.regression.p != 2) {
    fail("config.regression.mu_x", "is required when p != 2");
  }
  if (c.regression.mu_x.size() != c.regression.p) {
    fail("config.regression.mu_x", "expected p entries");
  }
  if (const json* v = find(r, "sigma_noise")) {
    c.regression.sigma_noise = as_number(*v, "config.regression.sigma_noise");
    if (!(c.regression.sigma_noise > 0.0)) fail("config.regression.sigma_noise", "must be positive");
  }
  if (const json* v = find(r, "tau2")) {
    c.regression.tau2 = as_number(*v, "config.regression.tau2");
    if (!(c.regression.tau2 > 0.0)) fail("config.regression.tau2", "must be positive");
  }
  if (const json* v = find(r, "clamp_bound")) {
    c.regression.clamp_bound = as_number(*v, "config.regression.clamp_bound");
    if (!(c.regression.clamp_bound > 0.0)) fail("config.regression.clamp_bound", "must be positive");
  }
  if (const json* v = find(r, "epsilon")) {
    c.regression.epsilon = as_number(*v, "config.regression.epsilon");
    if (!(c.regression.epsilon > 0.0)) fail("config.regression.epsilon", "must be positive");
  }
}

void parse_toy_block(const json& j, RunConfig& c) {
  const json* tp = find(j, "toy");
  if (tp == nullptr) return;
  const json& t = as_object(*tp, "config.toy");
  if (const json* v = find(t, "epsilon")) {
    c.toy.epsilon = as_number(*v, "config.toy.epsilon");
    if (!(c.toy.epsilon > 0.0)) fail("config.toy.epsilon", "must be positive");
  }
  if (const json* v = find(t, "sigma")) {
    c.toy.sigma = as_number(*v, "config.toy.sigma");
    if (!(c.toy.sigma > 0.0)) fail("config.toy.sigma", "must be positive");
  }
  if (const json* v = find(t, "s")) c.toy.s = as_number(*v, "config.toy.s");
}

// --- parsing: the released statistic -------------------------------------------

void parse_sdp_rr(const json& s, RunConfig& c) {
  const json* counts = find(s, "cell_counts");
  const json* bits = find(s, "bits");
  if ((counts != nullptr) == (bits != nullptr)) {
    fail("config.sdp", "rr-table takes exactly one of cell_counts and bits");
  }

  if (counts != nullptr) {
    const json& arr = as_array(*counts, "config.sdp.cell_counts");
    if (arr.size() != 4) fail("config.sdp.cell_counts", "expected 4 cell counts");
    std::int64_t total = 0;
    Eigen::Vector4i k;
    for (std::size_t i = 0; i < 4; ++i) {
      const std::int64_t v = as_integer(arr[i], at("config.sdp.cell_counts", i));
      if (v < 0) fail(at("config.sdp.cell_counts", i), "must be nonnegative");
      k[static_cast<Eigen::Index>(i)] = static_cast<int>(v);
      total += v;
    }
    if (total != c.table.n) {
      fail("config.sdp.cell_counts",
           "entries must sum to table.n (" + std::to_string(c.table.n) + ")");
    }
    // Expand to one row per released record, grouped in cell order. The
    // row-level likelihood is exchangeable, so the grouping is just a
    // deterministic convention.
    c.sdp = SummaryValue(c.table.n, 2);
    Eigen::Index row = 0;
    for (int cell = 0; cell < 4; ++cell) {
      for (int rep = 0; rep < k[cell]; ++rep) c.sdp.row(row++) = bits_of_cell(cell).array();
    }
    c.sdp_form = "cell_counts";
    return;
  }

  const json& arr = as_array(*bits, "config.sdp.bits");
  if (static_cast<std::int64_t>(arr.size()) != c.table.n) {
    fail("config.sdp.bits", "expected one row per record (table.n = " + std::to_string(c.table.n) + ")");
  }
  c.sdp = SummaryValue(c.table.n, 2);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string rowpath = at("config.sdp.bits", i);
    const json& row = as_array(arr[i], rowpath);
    if (row.size() != 2) fail(rowpath, "expected 2 bits");
    for (std::size_t b = 0; b < 2; ++b) {
      const double v = as_number(row[b], at(rowpath, b));
      if (v != 0.0 && v != 1.0) fail(at(rowpath, b), "must be 0 or 1");
      c.sdp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = v;
    }
  }
  c.sdp_form = "bits";
}

void parse_sdp_counts(const json& s, RunConfig& c) {
  const json* counts = find(s, "counts");
  if (counts == nullptr) fail("config.sdp", "dgauss-table takes a counts array");
  const json& arr = as_array(*counts, "config.sdp.counts");
  if (arr.size() != 4) fail("config.sdp.counts", "expected 4 noisy cell counts");
  c.sdp = SummaryValue(4, 1);
  for (std::size_t i = 0; i < 4; ++i) {
    c.sdp(static_cast<Eigen::Index>(i), 0) =
        static_cast<double>(as_integer(arr[i], at("config.sdp.counts", i)));
  }
  c.sdp_form = "counts";
}

void parse_sdp_values(const json& s, RunConfig& c) {
  const json* values = find(s, "values");
  if (values == nullptr) fail("config.sdp", "linreg takes a values array");
  const Eigen::VectorXd v = as_vector(*values, "config.sdp.values");
  const Eigen::Index want = regression_stat_len(c.regression);
  if (v.size() != want) {
    fail("config.sdp.values", "expected " + std::to_string(want) +
                                  " entries (the released statistic length for p = " +
                                  std::to_string(c.regression.p) + ")");
  }
  c.sdp = SummaryValue(want, 1);
  c.sdp.col(0) = v.array();
  c.sdp_form = "values";
}

void parse_release(const json& j, RunConfig& c) {
  const json* sdp = find(j, "sdp");
  const json* sim = find(j, "sdp_simulate");

  if (c.model == "toy-mixing") {
    if (sdp != nullptr || sim != nullptr) {
      fail("config", "toy-mixing takes its release from toy.s; remove sdp/sdp_simulate");
    }
    return;
  }

  if ((sdp != nullptr) == (sim != nullptr)) {
    fail("config", "exactly one of sdp and sdp_simulate is required");
  }

  if (sdp != nullptr) {
    const json& s = as_object(*sdp, "config.sdp");
    c.has_sdp = true;
    if (c.model == "rr-table") {
      parse_sdp_rr(s, c);
    } else if (c.model == "dgauss-table") {
      parse_sdp_counts(s, c);
    } else {
      parse_sdp_values(s, c);
    }
    return;
  }

  const json& s = as_object(*sim, "config.sdp_simulate");
  c.simulate = true;
  c.data_seed = as_seed(require_key(s, "config.sdp_simulate", "data_seed"), "config.sdp_simulate.data_seed");
  c.true_par = as_vector(require_key(s, "config.sdp_simulate", "true_par"), "config.sdp_simulate.true_par");
  if (c.model == "linreg") {
    if (c.true_par.size() != c.regression.p + 1) {
      fail("config.sdp_simulate.true_par", "expected p + 1 coefficients");
    }
  } else {
    if (c.true_par.size() != 4) fail("config.sdp_simulate.true_par", "expected 4 cell probabilities");
    check_simplex(c.true_par, "config.sdp_simulate.true_par");
  }
}

// --- resolution helpers ---------------------------------------------------------

void simulate_release(RunConfig& c) {
  RngStream rng(c.data_seed);
  if (c.model == "rr-table") {
    const LatentDatabase x = multinomial_latent(c.true_par, c.table.n, rng);
    c.sdp = randomized_response(x.array(), c.table.keep_prob, rng);
    c.sdp_form = "bits";
  } else if (c.model == "dgauss-table") {
    const LatentDatabase x = multinomial_latent(c.true_par, c.table.n, rng);
    SummaryValue counts = SummaryValue::Zero(4, 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) counts += cell_indicator_stat(x.row(i));
    const DiscreteGaussian noise(0.0, c.table.sigma);
    for (Eigen::Index cell = 0; cell < 4; ++cell) {
      counts(cell, 0) += static_cast<double>(noise.sample(rng));
    }
    c.sdp = counts;
    c.sdp_form = "counts";
  } else {
    const LatentDatabase x = regression_latent(c.true_par, c.regression, rng);
    SummaryValue total = SummaryValue::Zero(regression_stat_len(c.regression), 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      total += regression_record_stat(x.row(i), c.regression.clamp_bound);
    }
    const Eigen::ArrayXd noisy = laplace_mechanism(
        total.col(0), l1_sensitivity_regression(c.regression.p), c.regression.epsilon, rng);
    c.sdp = SummaryValue(noisy.size(), 1);
    c.sdp.col(0) = noisy;
    c.sdp_form = "values";
  }
}

// Checks an explicit release payload that arrived via the struct rather than
// through parse_run_config (which already enforces all of this).
void check_release_shape(const RunConfig& c) {
  if (c.model == "rr-table") {
    if (c.sdp.rows() != c.table.n || c.sdp.cols() != 2) {
      fail("config.sdp", "rr-table release must be an n x 2 bit matrix");
    }
    if (((c.sdp != 0.0) && (c.sdp != 1.0)).any()) fail("config.sdp", "bits must be 0 or 1");
  } else if (c.model == "dgauss-table") {
    if (c.sdp.rows() != 4 || c.sdp.cols() != 1) fail("config.sdp", "dgauss-table release must hold 4 counts");
    for (Eigen::Index i = 0; i < 4; ++i) {
      const double v = c.sdp(i, 0);
      if (!std::isfinite(v) || v != std::nearbyint(v)) fail("config.sdp", "counts must be integers");
    }
  } else {
    const Eigen::Index want = regression_stat_len(c.regression);
    if (c.sdp.rows() != want || c.sdp.cols() != 1 || !c.sdp.allFinite()) {
      fail("config.sdp", "linreg release must hold " + std::to_string(want) + " finite values");
    }
  }
}

json sdp_to_json(const RunConfig& c) {
  json s = json::object();
  if (c.model == "rr-table") {
    if (c.sdp_form == "cell_counts") {
      std::array<std::int64_t, 4> k{0, 0, 0, 0};
      for (Eigen::Index i = 0; i < c.sdp.rows(); ++i) {
        ++k[static_cast<std::size_t>(cell_of_bits(c.sdp(i, 0), c.sdp(i, 1)))];
      }
      s["cell_counts"] = json::array({k[0], k[1], k[2], k[3]});
    } else {
      json rows = json::array();
      for (Eigen::Index i = 0; i < c.sdp.rows(); ++i) {
        rows.push_back(json::array({json_number(c.sdp(i, 0)), json_number(c.sdp(i, 1))}));
      }
      s["bits"] = std::move(rows);
    }
  } else if (c.model == "dgauss-table") {
    s["counts"] = json_vector(c.sdp.col(0).matrix());
  } else {
    s["values"] = json_vector(c.sdp.col(0).matrix());
  }
  return s;
}

// Privacy accounting implied by the model parameters, echoed for reference.
json derived_block(const RunConfig& c) {
  json d = json::object();
  if (c.model == "rr-table") {
    // Two independent per-bit releases, each log(p / (1-p))-DP.
    if (c.table.keep_prob < 1.0) {
      d["epsilon"] = 2.0 * std::log(c.table.keep_prob / (1.0 - c.table.keep_prob));
    }
  } else if (c.model == "dgauss-table") {
    // Changing one record moves two cell counts by 1 each.
    d["l2_sensitivity"] = 2.0;
    d["zcdp_rho"] = 2.0 / (c.table.sigma * c.table.sigma);
  } else if (c.model == "linreg") {
    const double sens = l1_sensitivity_regression(c.regression.p);
    d["l1_sensitivity"] = sens;
    d["laplace_scale"] = sens / c.regression.epsilon;
  } else {
    d["gamma"] = fraction_missing_info(c.toy.epsilon, c.toy.sigma);
  }
  return d;
}

void check_sampler(const SamplerConfig& s) {
  if (s.niter < 1) fail("config.niter", "must be >= 1");
  if (s.warmup < 0 || s.warmup >= s.niter) fail("config.warmup", "must be in [0, niter)");
  if (s.chains < 1) fail("config.chains", "must be >= 1");
}

void check_varnames(const std::vector<std::string>& names, std::int64_t npar) {
  if (static_cast<std::int64_t>(names.size()) != npar) {
    fail("config.varnames", "expected " + std::to_string(npar) + " names");
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) fail(at("config.varnames", i), "must be nonempty");
    if (names[i].find(',') != std::string::npos) fail(at("config.varnames", i), "must not contain a comma");
    for (std::size_t k = 0; k < i; ++k) {
      if (names[k] == names[i]) fail(at("config.varnames", i), "names must be distinct");
    }
  }
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) fail("config", "must be a JSON object");
  RunConfig c;

  c.model = as_string(require_key(j, "config", "model"), "config.model");
  if (c.model != "rr-table" && c.model != "dgauss-table" && c.model != "linreg" &&
      c.model != "toy-mixing") {
    fail("config.model",
         "unknown model \"" + c.model + "\"; expected rr-table, dgauss-table, linreg, or toy-mixing");
  }

  c.sampler.niter = as_integer(require_key(j, "config", "niter"), "config.niter");
  c.sampler.warmup = as_integer(require_key(j, "config", "warmup"), "config.warmup");
  if (const json* v = find(j, "chains")) c.sampler.chains = as_integer(*v, "config.chains");
  c.sampler.seed = as_seed(require_key(j, "config", "seed"), "config.seed");
  check_sampler(c.sampler);

  if (const json* v = find(j, "out_dir")) {
    c.out_dir = as_string(*v, "config.out_dir");
    if (c.out_dir.empty()) fail("config.out_dir", "must be nonempty");
  }
  if (const json* v = find(j, "init_par")) c.sampler.init_par = as_vector(*v, "config.init_par");
  if (const json* v = find(j, "varnames")) {
    const json& arr = as_array(*v, "config.varnames");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      c.varnames.push_back(as_string(arr[i], at("config.varnames", i)));
    }
  }

  if (c.model == "rr-table" || c.model == "dgauss-table") {
    parse_table_block(j, c);
  } else if (c.model == "linreg") {
    parse_regression_block(j, c);
  } else {
    parse_toy_block(j, c);
  }

  parse_release(j, c);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return parse_run_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

nlohmann::json example_config(const std::string& id, bool published_table) {
  // The two table studies carry their published noisy releases; passing
  // published_table = false re-simulates the release from the confidential
  // cell proportions instead. The other two ids are always simulated.
  if (id == "rr-table") {
    json j = {{"model", "rr-table"}, {"niter", 6000},    {"warmup", 1000},
              {"chains", 4},         {"seed", 1},        {"table", {{"n", 400}, {"keep_prob", 0.75}, {"prior", {1, 1, 1, 1}}}}};
    if (published_table) {
      j["sdp"] = {{"cell_counts", {104, 120, 74, 102}}};
    } else {
      j["sdp_simulate"] = {{"data_seed", 1},
                           {"true_par", {109.0 / 400, 127.0 / 400, 46.0 / 400, 118.0 / 400}}};
    }
    return j;
  }
  if (id == "dgauss-table") {
    json j = {{"model", "dgauss-table"}, {"niter", 2000}, {"warmup", 1000},
              {"chains", 1},             {"seed", 1},     {"table", {{"n", 400}, {"sigma", 6.32}, {"prior", {1, 1, 1, 1}}}}};
    if (published_table) {
      j["sdp"] = {{"counts", {110, 131, 47, 110}}};
    } else {
      j["sdp_simulate"] = {{"data_seed", 1},
                           {"true_par", {109.0 / 400, 127.0 / 400, 46.0 / 400, 118.0 / 400}}};
    }
    return j;
  }
  if (id == "linreg") {
    return {{"model", "linreg"},
            {"niter", 25000},
            {"warmup", 1000},
            {"chains", 1},
            {"seed", 1},
            {"regression",
             {{"n", 50},
              {"p", 2},
              {"mu_x", {0.9, -1.17}},
              {"sigma_noise", 2.0},
              {"tau2", 4.0},
              {"clamp_bound", 10.0},
              {"epsilon", 10.0}}},
            {"sdp_simulate", {{"data_seed", 1}, {"true_par", {-1.79, -2.89, -0.66}}}}};
  }
  if (id == "toy-mixing") {
    return {{"model", "toy-mixing"}, {"niter", 100000}, {"warmup", 1000},
            {"chains", 1},           {"seed", 1},       {"toy", {{"epsilon", 1.0}, {"sigma", 1.0}, {"s", 2.0}}}};
  }
  throw ConfigError("unknown example \"" + id +
                    "\"; available: rr-table, dgauss-table, linreg, toy-mixing");
}

ResolvedRun resolve_run(const RunConfig& config) {
  RunConfig c = config;  // local copy: simulation fills in the release
  check_sampler(c.sampler);
  if (c.out_dir.empty()) fail("config.out_dir", "must be nonempty");

  ResolvedRun r;
  r.out_dir = c.out_dir;

  json m;
  m["model"] = c.model;
  m["niter"] = c.sampler.niter;
  m["warmup"] = c.sampler.warmup;
  m["chains"] = c.sampler.chains;
  m["seed"] = c.sampler.seed;
  m["out_dir"] = c.out_dir;

  if (c.model == "toy-mixing") {
    if (!(c.toy.epsilon > 0.0) || !std::isfinite(c.toy.epsilon)) fail("config.toy.epsilon", "must be positive");
    if (!(c.toy.sigma > 0.0) || !std::isfinite(c.toy.sigma)) fail("config.toy.sigma", "must be positive");
    if (!std::isfinite(c.toy.s)) fail("config.toy.s", "must be finite");
    if (c.sampler.init_par.size() != 0) {
      fail("config.init_par", "toy-mixing always starts the chain at the released value s");
    }
    r.is_toy = true;
    r.toy = c.toy;
    r.varnames = c.varnames.empty() ? std::vector<std::string>{"theta"} : c.varnames;
    check_varnames(r.varnames, 1);
    r.sampler = c.sampler;
    m["toy"] = {{"epsilon", c.toy.epsilon}, {"sigma", c.toy.sigma}, {"s", c.toy.s}};
    m["varnames"] = r.varnames;
    m["derived"] = derived_block(c);
    r.manifest = std::move(m);
    return r;
  }

  if (c.model == "rr-table" || c.model == "dgauss-table") {
    const bool rr = c.model == "rr-table";
    c.table.mechanism = rr ? TableModelSpec::Mechanism::kRandomizedResponse
                           : TableModelSpec::Mechanism::kDiscreteGaussian;
    try {
      r.model = make_table_model(c.table);
    } catch (const ConfigError& e) {
      fail("config.table", e.what());
    }
    json t = {{"n", c.table.n}, {"prior", json_vector(c.table.prior)}};
    if (rr) {
      t["keep_prob"] = c.table.keep_prob;
    } else {
      t["sigma"] = c.table.sigma;
    }
    m["table"] = std::move(t);
  } else if (c.model == "linreg") {
    try {
      r.model = make_regression_model(c.regression);
    } catch (const ConfigError& e) {
      fail("config.regression", e.what());
    }
    m["regression"] = {{"n", c.regression.n},
                       {"p", c.regression.p},
                       {"mu_x", json_vector(c.regression.mu_x)},
                       {"sigma_noise", c.regression.sigma_noise},
                       {"tau2", c.regression.tau2},
                       {"clamp_bound", c.regression.clamp_bound},
                       {"epsilon", c.regression.epsilon}};
  } else {
    fail("config.model", "unknown model \"" + c.model + "\"");
  }

  if (c.has_sdp == c.simulate) {
    fail("config", "exactly one of sdp and sdp_simulate is required");
  }
  if (c.simulate) {
    if (c.model == "linreg") {
      if (c.true_par.size() != c.regression.p + 1 || !c.true_par.allFinite()) {
        fail("config.sdp_simulate.true_par", "expected p + 1 finite coefficients");
      }
    } else {
      if (c.true_par.size() != 4) fail("config.sdp_simulate.true_par", "expected 4 cell probabilities");
      check_simplex(c.true_par, "config.sdp_simulate.true_par");
    }
    simulate_release(c);
  } else {
    check_release_shape(c);
  }
  r.sdp = c.sdp;
  m["sdp"] = sdp_to_json(c);

  // Fill starting point and names, then echo the fully resolved values.
  r.sampler = c.sampler;
  if (r.sampler.init_par.size() == 0) {
    r.sampler.init_par = c.model == "linreg"
                             ? Eigen::VectorXd::Zero(r.model.npar)
                             : Eigen::VectorXd::Constant(4, 0.25);
  }
  if (r.sampler.init_par.size() != r.model.npar) {
    fail("config.init_par", "expected " + std::to_string(r.model.npar) + " entries");
  }
  if (!r.sampler.init_par.allFinite()) fail("config.init_par", "entries must be finite");
  if (c.model != "linreg") check_simplex(r.sampler.init_par, "config.init_par");

  r.varnames = c.varnames.empty() ? r.model.varnames : c.varnames;
  check_varnames(r.varnames, r.model.npar);

  m["init_par"] = json_vector(r.sampler.init_par);
  m["varnames"] = r.varnames;
  m["derived"] = derived_block(c);
  r.manifest = std::move(m);
  return r;
}

}  // namespace privmcmc
