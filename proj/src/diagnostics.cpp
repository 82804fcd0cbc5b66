#include <privmcmc/diagnostics.hpp>

#include <privmcmc/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace privmcmc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Splits every chain in half, dropping the trailing draw of odd-length
// chains; all resulting half-chains share the shortest half length.
std::vector<Eigen::VectorXd> split_chains(const std::vector<Eigen::VectorXd>& chains) {
  std::int64_t len = std::numeric_limits<std::int64_t>::max();
  for (const auto& c : chains) len = std::min(len, c.size() - c.size() % 2);
  std::vector<Eigen::VectorXd> halves;
  if (len < 2) return halves;
  const std::int64_t h = len / 2;
  halves.reserve(2 * chains.size());
  for (const auto& c : chains) {
    halves.push_back(c.head(h));
    halves.push_back(c.segment(h, h));
  }
  return halves;
}

// Average ranks (ties shared), then normal scores via the Blom offset.
std::vector<Eigen::VectorXd> rank_normalize(const std::vector<Eigen::VectorXd>& chains) {
  std::int64_t total = 0;
  for (const auto& c : chains) total += c.size();

  struct Entry {
    double value;
    std::size_t chain;
    std::int64_t pos;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(total));
  for (std::size_t j = 0; j < chains.size(); ++j) {
    for (std::int64_t i = 0; i < chains[j].size(); ++i) entries.push_back({chains[j][i], j, i});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.value < b.value; });

  std::vector<Eigen::VectorXd> out(chains.size());
  for (std::size_t j = 0; j < chains.size(); ++j) out[j].resize(chains[j].size());
  const double denom = static_cast<double>(total) + 0.25;
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t k = i;
    while (k + 1 < entries.size() && entries[k + 1].value == entries[i].value) ++k;
    const double avg_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(k)) + 1.0;
    const double z = inverse_normal_cdf((avg_rank - 0.375) / denom);
    for (std::size_t t = i; t <= k; ++t) out[entries[t].chain][entries[t].pos] = z;
    i = k + 1;
  }
  return out;
}

struct ChainMoments {
  double w = 0.0;         // mean within-chain variance
  double var_plus = 0.0;  // (n-1)/n W + B/n
  std::int64_t n = 0;
  std::int64_t m = 0;
};

ChainMoments chain_moments(const std::vector<Eigen::VectorXd>& chains) {
  ChainMoments mom;
  mom.m = static_cast<std::int64_t>(chains.size());
  mom.n = chains.empty() ? 0 : chains.front().size();
  if (mom.m < 2 || mom.n < 2) return mom;

  const double n = static_cast<double>(mom.n);
  double grand = 0.0;
  std::vector<double> means(chains.size());
  for (std::size_t j = 0; j < chains.size(); ++j) {
    means[j] = chains[j].mean();
    grand += means[j];
  }
  grand /= static_cast<double>(mom.m);

  double w = 0.0, b = 0.0;
  for (std::size_t j = 0; j < chains.size(); ++j) {
    w += (chains[j].array() - means[j]).square().sum() / (n - 1.0);
    b += (means[j] - grand) * (means[j] - grand);
  }
  w /= static_cast<double>(mom.m);
  b *= n / (static_cast<double>(mom.m) - 1.0);
  mom.w = w;
  mom.var_plus = (n - 1.0) / n * w + b / n;
  return mom;
}

// Lag-t autocovariance averaged over chains (divisor n, matching var_plus).
double mean_autocov(const std::vector<Eigen::VectorXd>& chains, std::int64_t t) {
  double acc = 0.0;
  for (const auto& c : chains) {
    const double mean = c.mean();
    const std::int64_t n = c.size();
    double s = 0.0;
    for (std::int64_t i = 0; i + t < n; ++i) s += (c[i] - mean) * (c[i + t] - mean);
    acc += s / static_cast<double>(n);
  }
  return acc / static_cast<double>(chains.size());
}

// Combined-chain ESS with Geyer initial-monotone truncation; expects chains
// already split and transformed. NaN when the draws carry no variance.
double ess_core(const std::vector<Eigen::VectorXd>& halves) {
  const ChainMoments mom = chain_moments(halves);
  if (mom.m < 2 || mom.n < 2) return kNaN;
  if (!(mom.var_plus > 0.0)) return kNaN;

  std::vector<double> rho;
  rho.push_back(1.0);
  rho.push_back(1.0 - (mom.w - mean_autocov(halves, 1)) / mom.var_plus);
  for (std::int64_t t = 2; t + 1 < mom.n; t += 2) {
    const double even = 1.0 - (mom.w - mean_autocov(halves, t)) / mom.var_plus;
    const double odd = 1.0 - (mom.w - mean_autocov(halves, t + 1)) / mom.var_plus;
    if (even + odd <= 0.0) break;
    rho.push_back(even);
    rho.push_back(odd);
  }

  double tau = 0.0, prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k < rho.size(); ++k) {
    double pair = rho[2 * k] + (2 * k + 1 < rho.size() ? rho[2 * k + 1] : 0.0);
    pair = std::min(pair, prev);
    if (pair < 0.0) pair = 0.0;
    prev = pair;
    tau += pair;
  }
  tau = 2.0 * tau - 1.0;

  const double total = static_cast<double>(mom.m) * static_cast<double>(mom.n);
  if (!(tau > 0.0)) return 1.5 * total;  // antithetic beyond the cap
  return std::min(total / tau, 1.5 * total);
}

Eigen::VectorXd pool(const std::vector<Eigen::VectorXd>& chains) {
  std::int64_t total = 0;
  for (const auto& c : chains) total += c.size();
  Eigen::VectorXd out(total);
  std::int64_t at = 0;
  for (const auto& c : chains) {
    out.segment(at, c.size()) = c;
    at += c.size();
  }
  return out;
}

}  // namespace

double quantile(const Eigen::VectorXd& values, double p) {
  if (values.size() == 0) throw ConfigError("quantile of an empty vector");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile probability must be in [0, 1]");
  std::vector<double> v(values.data(), values.data() + values.size());
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + (h - std::floor(h)) * (v[lo + 1] - v[lo]);
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw NumericError("normal quantile needs a probability strictly inside (0, 1)");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
            1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
          1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return q * num / den;
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    val = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    val = num / den;
  }
  return q < 0.0 ? -val : val;
}

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.size() < 2) return kNaN;
  const auto halves = split_chains(chains);
  if (halves.empty()) return kNaN;
  const auto normalized = rank_normalize(halves);
  const ChainMoments mom = chain_moments(normalized);
  if (mom.n < 2) return kNaN;
  return std::sqrt(mom.var_plus / mom.w);
}

double ess_bulk(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.size() < 2) return kNaN;
  const auto halves = split_chains(chains);
  if (halves.size() < 2) return kNaN;
  return ess_core(rank_normalize(halves));
}

double ess_tail(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.size() < 2) return kNaN;
  const auto halves = split_chains(chains);
  if (halves.size() < 2) return kNaN;
  const Eigen::VectorXd pooled = pool(halves);
  double worst = std::numeric_limits<double>::infinity();
  for (const double p : {0.05, 0.95}) {
    const double q = quantile(pooled, p);
    std::vector<Eigen::VectorXd> indicator(halves.size());
    for (std::size_t j = 0; j < halves.size(); ++j) {
      indicator[j] = (halves[j].array() <= q).cast<double>();
    }
    worst = std::min(worst, ess_core(indicator));
  }
  return worst;
}

std::vector<SummaryRow> summarize(const DrawsMatrix& draws) {
  if (draws.chains.empty()) throw ConfigError("summary of an empty draws set");
  const std::int64_t npar = draws.chains.front().cols();
  if (npar < 1 || static_cast<std::int64_t>(draws.varnames.size()) != npar) {
    throw ConfigError("summary: draws columns must match the variable names");
  }
  std::int64_t total = 0;
  for (const auto& c : draws.chains) {
    if (c.cols() != npar) throw ConfigError("summary: chains disagree on variable count");
    total += c.rows();
  }
  if (total < 4) throw ConfigError("summary needs at least 4 draws");

  std::vector<SummaryRow> rows;
  rows.reserve(static_cast<std::size_t>(npar));
  for (std::int64_t v = 0; v < npar; ++v) {
    std::vector<Eigen::VectorXd> per_chain;
    per_chain.reserve(draws.chains.size());
    for (const auto& c : draws.chains) per_chain.push_back(c.col(v));
    const Eigen::VectorXd pooled = pool(per_chain);

    SummaryRow row;
    row.variable = draws.varnames[static_cast<std::size_t>(v)];
    row.mean = pooled.mean();
    row.median = quantile(pooled, 0.5);
    row.sd = std::sqrt((pooled.array() - row.mean).square().sum() /
                       (static_cast<double>(pooled.size()) - 1.0));
    row.mad = 1.4826 * quantile((pooled.array() - row.median).abs(), 0.5);
    row.q5 = quantile(pooled, 0.05);
    row.q95 = quantile(pooled, 0.95);
    row.rhat = split_rhat(per_chain);
    row.ess_bulk = ess_bulk(per_chain);
    row.ess_tail = ess_tail(per_chain);
    rows.push_back(std::move(row));
  }
  return rows;
}

double fraction_missing_info(double epsilon, double sigma) {
  if (!(epsilon > 0.0) || !(sigma > 0.0)) {
    throw ConfigError("fraction of missing information needs positive epsilon and sigma");
  }
  const double noise_var = 1.0 / (epsilon * epsilon);
  const double sigma2 = sigma * sigma;
  // 1 - sigma^2/(sigma^2 + v) in a form that stays positive as v -> 0.
  return noise_var / (sigma2 + noise_var);
}

Eigen::VectorXd toy_model_chain(double epsilon, double sigma, double s, std::int64_t niter,
                                RngStream& rng) {
  if (!(epsilon > 0.0) || !(sigma > 0.0)) {
    throw ConfigError("toy sampler needs positive epsilon and sigma");
  }
  if (niter < 1) throw ConfigError("toy sampler needs at least one iteration");

  const double noise_prec = epsilon * epsilon;  // 1 / epsilon^{-2}
  const double sigma2 = sigma * sigma;
  const double post_prec = noise_prec + 1.0 / sigma2;
  const double tau = std::sqrt(1.0 / post_prec);

  Eigen::VectorXd theta_series(niter);
  double theta = s;
  for (std::int64_t it = 0; it < niter; ++it) {
    const double mu = (s * noise_prec + theta / sigma2) / post_prec;
    const double x = mu + tau * rng.normal();
    theta = x + sigma * rng.normal();
    theta_series[it] = theta;
  }
  return theta_series;
}

double lag1_autocorrelation(const Eigen::VectorXd& series) {
  if (series.size() < 3) throw ConfigError("lag-1 autocorrelation needs at least 3 points");
  const double mean = series.mean();
  const Eigen::ArrayXd centered = series.array() - mean;
  const double denom = centered.square().sum();
  if (!(denom > 0.0)) return 0.0;  // constant series
  const std::int64_t n = series.size();
  const double num = (centered.head(n - 1) * centered.tail(n - 1)).sum();
  return num / denom;
}

}  // namespace privmcmc
