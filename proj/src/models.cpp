#include <privmcmc/models.hpp>

#include <privmcmc/errors.hpp>
#include <privmcmc/mechanisms.hpp>

#include <cmath>
#include <string>

namespace privmcmc {

namespace {

bool is_bit(double v) { return v == 0.0 || v == 1.0; }

// Cell index for a binary row: (1,1) -> 0, (1,0) -> 1, (0,1) -> 2, (0,0) -> 3.
int cell_of(double first, double second) {
  if (!is_bit(first) || !is_bit(second)) {
    throw ConfigError("table record entries must be 0 or 1");
  }
  return 2 * (first == 0.0) + (second == 0.0);
}

Eigen::RowVectorXd bits_of_cell(int cell) {
  Eigen::RowVectorXd row(2);
  row[0] = cell < 2 ? 1.0 : 0.0;
  row[1] = cell % 2 == 0 ? 1.0 : 0.0;
  return row;
}

void check_table_prior(const Eigen::VectorXd& prior) {
  if (prior.size() != 4) throw ConfigError("table prior must have 4 concentrations");
  for (std::int64_t j = 0; j < 4; ++j) {
    if (!(prior[j] > 0.0) || !std::isfinite(prior[j])) {
      throw ConfigError("table prior concentrations must be positive and finite");
    }
  }
}

std::int64_t as_integer(double v, const char* what) {
  const double r = std::round(v);
  if (!(std::abs(v - r) <= 1e-9)) {
    throw ConfigError(std::string(what) + " must be integer-valued");
  }
  return static_cast<std::int64_t>(r);
}

}  // namespace

Eigen::VectorXd dirichlet_posterior_step(const LatentDatabase& dmat, const Eigen::VectorXd& prior,
                                         RngStream& rng) {
  check_table_prior(prior);
  if (dmat.cols() != 2) throw ConfigError("table database must have 2 columns");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(4);
  for (std::int64_t i = 0; i < dmat.rows(); ++i) {
    counts[cell_of(dmat(i, 0), dmat(i, 1))] += 1.0;
  }
  return rng.dirichlet(counts + prior);
}

LatentDatabase multinomial_latent(const Eigen::VectorXd& theta, std::int64_t n, RngStream& rng) {
  if (n < 1) throw ConfigError("table database needs at least one record");
  if (theta.size() != 4) throw ConfigError("table cell probabilities must have length 4");
  double sum = 0.0;
  for (std::int64_t j = 0; j < 4; ++j) {
    if (!(theta[j] >= 0.0) || !std::isfinite(theta[j])) {
      throw ConfigError("table cell probabilities must be nonnegative and finite");
    }
    sum += theta[j];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("table cell probabilities must sum to 1");
  }
  LatentDatabase x(n, 2);
  for (std::int64_t i = 0; i < n; ++i) {
    x.row(i) = bits_of_cell(rng.categorical(theta.data(), 4));
  }
  return x;
}

SummaryValue rr_record_stat(const Eigen::RowVectorXd& xi, std::int64_t n, std::int64_t i) {
  if (xi.size() != 2) throw ConfigError("table record must have 2 entries");
  if (i < 0 || i >= n) throw ConfigError("record index out of range");
  SummaryValue s = SummaryValue::Zero(n, 2);
  s(i, 0) = xi[0];
  s(i, 1) = xi[1];
  return s;
}

SummaryValue cell_indicator_stat(const Eigen::RowVectorXd& xi) {
  if (xi.size() != 2) throw ConfigError("table record must have 2 entries");
  SummaryValue s = SummaryValue::Zero(4, 1);
  s(cell_of(xi[0], xi[1]), 0) = 1.0;
  return s;
}

double dgauss_count_loglik(const SummaryValue& sdp, const SummaryValue& sx, double sigma) {
  if (sdp.rows() != sx.rows() || sdp.cols() != sx.cols()) {
    throw ConfigError("count log-likelihood: shape mismatch");
  }
  const DiscreteGaussian noise(0.0, sigma);
  double ll = 0.0;
  for (std::int64_t j = 0; j < sdp.size(); ++j) {
    const std::int64_t diff =
        as_integer(sdp(j) - sx(j), "count log-likelihood: noisy-count difference");
    ll += noise.log_pmf(diff);
  }
  return ll;
}

Eigen::VectorXd naive_table_posterior(const Eigen::VectorXd& noisy_counts,
                                      const Eigen::VectorXd& prior, RngStream& rng) {
  check_table_prior(prior);
  if (noisy_counts.size() != 4) throw ConfigError("table counts must have length 4");
  const Eigen::VectorXd floored = noisy_counts.cwiseMax(0.0);
  return rng.dirichlet(floored + prior);
}

double clamp_unit(double z, double bound) {
  if (!(bound > 0.0) || !std::isfinite(bound)) {
    throw ConfigError("clamp bound must be positive and finite");
  }
  return std::min(std::max(z, -bound), bound) / bound;
}

SummaryValue regression_record_stat(const Eigen::RowVectorXd& record, double bound) {
  const std::int64_t p = record.size() - 1;
  if (p < 1) throw ConfigError("regression record must hold y and at least one covariate");

  const double y = clamp_unit(record[0], bound);
  Eigen::VectorXd d(p + 1);  // design row (1, clamped x)
  d[0] = 1.0;
  for (std::int64_t j = 1; j <= p; ++j) d[j] = clamp_unit(record[j], bound);

  const std::int64_t len = (p + 1) + 1 + ((p + 1) * (p + 2) / 2 - 1);
  SummaryValue s(len, 1);
  std::int64_t k = 0;
  for (std::int64_t j = 0; j <= p; ++j) s(k++, 0) = d[j] * y;
  s(k++, 0) = y * y;
  // Upper triangle of d d' in column-major order, skipping the constant (0,0).
  for (std::int64_t c = 1; c <= p; ++c) {
    for (std::int64_t r = 0; r <= c; ++r) s(k++, 0) = d[r] * d[c];
  }
  return s;
}

LatentDatabase regression_latent(const Eigen::VectorXd& theta, const RegressionModelSpec& spec,
                                 RngStream& rng) {
  if (spec.n < 1) throw ConfigError("regression database needs at least one record");
  if (spec.p < 1) throw ConfigError("regression needs at least one covariate");
  if (spec.mu_x.size() != spec.p) {
    throw ConfigError("regression covariate mean length must equal p");
  }
  if (theta.size() != spec.p + 1) {
    throw ConfigError("regression coefficients must have length p + 1");
  }
  LatentDatabase out(spec.n, spec.p + 1);
  for (std::int64_t i = 0; i < spec.n; ++i) {
    double y = theta[0];
    for (int j = 0; j < spec.p; ++j) {
      const double xj = spec.mu_x[j] + rng.normal();
      out(i, j + 1) = xj;
      y += theta[j + 1] * xj;
    }
    out(i, 0) = y + spec.sigma_noise * rng.normal();
  }
  return out;
}

Eigen::VectorXd regression_posterior_step(const LatentDatabase& dmat,
                                          const RegressionModelSpec& spec, RngStream& rng) {
  if (dmat.rows() > 0 && dmat.cols() != spec.p + 1) {
    throw ConfigError("regression database must have p + 1 columns");
  }
  if (!(spec.tau2 > 0.0) || !(spec.sigma_noise > 0.0)) {
    throw ConfigError("regression variances must be positive");
  }
  const std::int64_t k = spec.p + 1;
  const double sigma2 = spec.sigma_noise * spec.sigma_noise;

  Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(k, k) / spec.tau2;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  if (dmat.rows() > 0) {
    Eigen::MatrixXd x(dmat.rows(), k);
    x.col(0).setOnes();
    x.rightCols(spec.p) = dmat.rightCols(spec.p);
    const Eigen::VectorXd y = dmat.col(0);
    precision += x.transpose() * x / sigma2;
    rhs = x.transpose() * y / sigma2;
  }

  const Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericError("regression posterior precision is not positive definite");
  }
  const Eigen::VectorXd mean = llt.solve(rhs);
  Eigen::VectorXd z(k);
  for (std::int64_t j = 0; j < k; ++j) z[j] = rng.normal();
  // With precision = L L', solving L' w = z gives Cov(w) = precision^{-1}.
  return mean + llt.matrixU().solve(z);
}

double l1_sensitivity_regression(int p) {
  if (p < 1) throw ConfigError("regression sensitivity needs p >= 1");
  const double pd = p;
  return pd * pd + 4.0 * pd + 3.0;
}

double laplace_regression_loglik(const SummaryValue& sdp, const SummaryValue& sx, double scale) {
  if (sdp.rows() != sx.rows() || sdp.cols() != sx.cols()) {
    throw ConfigError("regression log-likelihood: shape mismatch");
  }
  double ll = 0.0;
  for (std::int64_t j = 0; j < sdp.size(); ++j) {
    ll += laplace_logdensity(sdp(j) - sx(j), 0.0, scale);
  }
  return ll;
}

Eigen::MatrixXd nearest_spd(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw ConfigError("nearest_spd needs a square matrix");
  if (!a.allFinite()) throw ConfigError("nearest_spd needs finite entries");

  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericError("nearest_spd eigendecomposition failed");

  Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  // Strictly positive floor so the result is invertible; degenerate inputs
  // with no positive eigenvalue fall back to an absolute jitter.
  double scale = lambda.maxCoeff();
  if (!(scale > 0.0)) scale = 1.0;
  lambda = lambda.cwiseMax(1e-8 * scale);
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> naive_regression_posterior(const Eigen::VectorXd& sdp,
                                                                       std::int64_t n,
                                                                       double sigma_noise) {
  if (sdp.size() != 9) throw ConfigError("naive regression expects a 9-entry summary");
  if (n < 1) throw ConfigError("naive regression needs a positive record count");
  if (!(sigma_noise > 0.0)) throw ConfigError("naive regression needs a positive noise sd");

  const Eigen::Vector3d xty = sdp.head(3);

  // X'X from the exact record count and the noisy cross-product entries,
  // filling the upper triangle (with diagonal) column by column.
  Eigen::Matrix3d xtx;
  const double m01 = sdp[4], m11 = sdp[5], m02 = sdp[6], m12 = sdp[7], m22 = sdp[8];
  xtx << static_cast<double>(n), m01, m02,
         m01, m11, m12,
         m02, m12, m22;

  Eigen::Matrix3d inv;
  bool invertible = false;
  double det = 0.0;
  xtx.computeInverseAndDetWithCheck(inv, det, invertible);
  if (!invertible || !inv.allFinite()) {
    inv = nearest_spd(xtx).inverse();
  }
  const Eigen::MatrixXd repaired = nearest_spd(inv);
  return {repaired * xty, sigma_noise * sigma_noise * repaired};
}

PrivacyModel make_table_model(const TableModelSpec& spec) {
  check_table_prior(spec.prior);
  if (spec.n < 1) throw ConfigError("table model needs at least one record");

  PrivacyModel m;
  m.npar = 4;
  m.varnames = {"pi_11", "pi_10", "pi_01", "pi_00"};
  const Eigen::VectorXd prior = spec.prior;
  m.posterior_step = [prior](const LatentDatabase& dmat, const Eigen::VectorXd&, RngStream& rng) {
    return dirichlet_posterior_step(dmat, prior, rng);
  };
  const std::int64_t n = spec.n;
  m.latent_sampler = [n](const Eigen::VectorXd& theta, RngStream& rng) {
    return multinomial_latent(theta, n, rng);
  };
  m.record_proposer = [](const Eigen::VectorXd& theta, RngStream& rng) {
    if (theta.size() != 4) throw ConfigError("table cell probabilities must have length 4");
    return bits_of_cell(rng.categorical(theta.data(), 4));
  };

  if (spec.mechanism == TableModelSpec::Mechanism::kRandomizedResponse) {
    if (!(spec.keep_prob > 0.0) || spec.keep_prob > 1.0) {
      throw ConfigError("randomized response keep probability must be in (0, 1]");
    }
    const double keep = spec.keep_prob;
    m.privacy_logdensity = [keep](const SummaryValue& sdp, const SummaryValue& sx) {
      return rr_loglik(sdp, sx, keep);
    };
    m.record_statistic = [n](const Eigen::RowVectorXd& row, const SummaryValue&, std::int64_t i) {
      return rr_record_stat(row, n, i);
    };
  } else {
    if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma)) {
      throw ConfigError("count-noise scale must be positive and finite");
    }
    const double sigma = spec.sigma;
    m.privacy_logdensity = [sigma](const SummaryValue& sdp, const SummaryValue& sx) {
      return dgauss_count_loglik(sdp, sx, sigma);
    };
    m.record_statistic = [](const Eigen::RowVectorXd& row, const SummaryValue&, std::int64_t) {
      return cell_indicator_stat(row);
    };
  }
  return m;
}

PrivacyModel make_regression_model(const RegressionModelSpec& spec) {
  if (!(spec.epsilon > 0.0)) throw ConfigError("regression model needs a positive epsilon");
  const double scale = l1_sensitivity_regression(spec.p) / spec.epsilon;
  const double bound = spec.clamp_bound;
  if (!(bound > 0.0) || !std::isfinite(bound)) {
    throw ConfigError("clamp bound must be positive and finite");
  }

  PrivacyModel m;
  m.npar = spec.p + 1;
  for (int j = 0; j <= spec.p; ++j) m.varnames.push_back("beta" + std::to_string(j));
  const RegressionModelSpec s = spec;
  m.posterior_step = [s](const LatentDatabase& dmat, const Eigen::VectorXd&, RngStream& rng) {
    return regression_posterior_step(dmat, s, rng);
  };
  m.latent_sampler = [s](const Eigen::VectorXd& theta, RngStream& rng) {
    return regression_latent(theta, s, rng);
  };
  m.record_proposer = [s](const Eigen::VectorXd& theta, RngStream& rng) {
    if (theta.size() != s.p + 1) {
      throw ConfigError("regression coefficients must have length p + 1");
    }
    Eigen::RowVectorXd row(s.p + 1);
    double y = theta[0];
    for (int j = 0; j < s.p; ++j) {
      const double xj = s.mu_x[j] + rng.normal();
      row[j + 1] = xj;
      y += theta[j + 1] * xj;
    }
    row[0] = y + s.sigma_noise * rng.normal();
    return row;
  };
  m.privacy_logdensity = [scale](const SummaryValue& sdp, const SummaryValue& sx) {
    return laplace_regression_loglik(sdp, sx, scale);
  };
  m.record_statistic = [bound](const Eigen::RowVectorXd& row, const SummaryValue&, std::int64_t) {
    return regression_record_stat(row, bound);
  };
  return m;
}

}  // namespace privmcmc
