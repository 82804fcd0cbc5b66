// Tests for the brute-force grid posteriors and the total-variation
// certification of the sampler. Expected values are computed independently
// in this file: closed-form Dirichlet posteriors, a literal 9-term hand
// enumeration, and a direct-summation discrete-Gaussian pmf.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <privmcmc/engine.hpp>
#include <privmcmc/errors.hpp>
#include <privmcmc/mechanisms.hpp>
#include <privmcmc/models.hpp>
#include <privmcmc/oracle.hpp>
#include <privmcmc/random.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

namespace {

using privmcmc::ConfigError;
using privmcmc::GridPosterior;
using privmcmc::LatentDatabase;
using privmcmc::PrivacyModel;
using privmcmc::RngStream;
using privmcmc::SamplerConfig;
using privmcmc::SummaryValue;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Discrete-Gaussian pmf by direct summation over a wide window; independent
// of the mechanisms module.
double ref_dgauss_pmf(std::int64_t x, double sigma) {
  const auto span = static_cast<std::int64_t>(60.0 * sigma + 10.0);
  double den = 0.0;
  for (std::int64_t j = -span; j <= span; ++j) {
    den += std::exp(-static_cast<double>(j) * static_cast<double>(j) / (2.0 * sigma * sigma));
  }
  return std::exp(-static_cast<double>(x) * static_cast<double>(x) / (2.0 * sigma * sigma)) / den;
}

Eigen::VectorXd normalize_log(Eigen::VectorXd lw) {
  const double m = lw.maxCoeff();
  lw.array() -= m + std::log((lw.array() - m).exp().sum());
  return lw;
}

void check_same_log_weights(const Eigen::VectorXd& got, const Eigen::VectorXd& expected,
                            double tol) {
  REQUIRE(got.size() == expected.size());
  for (Eigen::Index i = 0; i < got.size(); ++i) {
    if (expected[i] == kNegInf) {
      CHECK(std::exp(got[i]) <= 1e-300);
    } else {
      CHECK(std::abs(got[i] - expected[i]) < tol);
    }
  }
}

// Element comparison that treats two -inf log masses as equal.
void check_log_close(double got, double expected, double tol) {
  if (expected == kNegInf) {
    CHECK(got == kNegInf);
  } else {
    CHECK(std::abs(got - expected) < tol);
  }
}

Eigen::MatrixXd pool_draws(const privmcmc::DrawsMatrix& draws) {
  Eigen::Index rows = 0;
  for (const auto& c : draws.chains) rows += c.rows();
  Eigen::MatrixXd out(rows, draws.chains.front().cols());
  Eigen::Index at = 0;
  for (const auto& c : draws.chains) {
    out.middleRows(at, c.rows()) = c;
    at += c.rows();
  }
  return out;
}

// Two-category randomized-response model over single-bit records; cell 0 is
// bit value 1. Used to certify the engine against the grid oracle.
PrivacyModel make_binary_rr_model(std::int64_t n, double keep_prob) {
  PrivacyModel model;
  model.npar = 2;
  model.varnames = {"p_1", "p_0"};
  model.posterior_step = [n](const LatentDatabase& x, const Eigen::VectorXd&, RngStream& rng) {
    Eigen::VectorXd conc(2);
    const double ones = x.col(0).sum();
    conc << 1.0 + ones, 1.0 + (static_cast<double>(n) - ones);
    return rng.dirichlet(conc);
  };
  model.latent_sampler = [n](const Eigen::VectorXd& theta, RngStream& rng) {
    LatentDatabase x(n, 1);
    for (std::int64_t i = 0; i < n; ++i) {
      x(i, 0) = rng.categorical(theta.data(), 2) == 0 ? 1.0 : 0.0;
    }
    return x;
  };
  model.record_proposer = [](const Eigen::VectorXd& theta, RngStream& rng) {
    Eigen::RowVectorXd row(1);
    row[0] = rng.categorical(theta.data(), 2) == 0 ? 1.0 : 0.0;
    return row;
  };
  model.privacy_logdensity = [keep_prob](const SummaryValue& sdp, const SummaryValue& sx) {
    return privmcmc::rr_loglik(sdp, sx, keep_prob);
  };
  model.record_statistic = [n](const Eigen::RowVectorXd& xi, const SummaryValue&, std::int64_t i) {
    SummaryValue t = SummaryValue::Zero(n, 1);
    t(i, 0) = xi[0];
    return t;
  };
  return model;
}

}  // namespace

TEST_CASE("simplex grid enumerates distinct lattice points that sum to one") {
  const auto fine = privmcmc::simplex_grid(2, 0.01);
  REQUIRE(fine.size() == 101);
  CHECK(fine.front()[0] == 0.0);
  CHECK(fine.front()[1] == 1.0);
  CHECK(fine.back()[0] == 1.0);
  CHECK(fine.back()[1] == 0.0);
  for (std::size_t i = 0; i < fine.size(); ++i) {
    CHECK(std::abs(fine[i].sum() - 1.0) < 1e-12);
    if (i > 0) CHECK(fine[i][0] > fine[i - 1][0]);
  }

  const auto coarse = privmcmc::simplex_grid(3, 0.5);
  REQUIRE(coarse.size() == 6);  // compositions of 2 into 3 parts
  std::set<std::vector<double>> seen;
  for (const auto& p : coarse) {
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    seen.insert({p[0], p[1], p[2]});
  }
  CHECK(seen.size() == coarse.size());

  // 4 cells at 0.02: compositions of 50 into 4 parts = C(53,3).
  CHECK(privmcmc::simplex_grid(4, 0.02).size() == 23426);

  CHECK_THROWS_AS(privmcmc::simplex_grid(1, 0.5), ConfigError);
  CHECK_THROWS_AS(privmcmc::simplex_grid(2, 0.0), ConfigError);
  CHECK_THROWS_AS(privmcmc::simplex_grid(2, 0.03), ConfigError);
  CHECK_THROWS_AS(privmcmc::simplex_grid(2, 1.5), ConfigError);
}

TEST_CASE("grid posterior masses are normalized") {
  Eigen::MatrixXd bits(3, 1);
  bits << 1.0, 0.0, 1.0;
  const auto post =
      privmcmc::exact_rr_posterior(bits, 0.75, privmcmc::simplex_grid(2, 0.01), Eigen::Vector2d::Ones());
  REQUIRE(post.grid.size() == 101);
  REQUIRE(post.log_weights.size() == 101);
  CHECK(std::abs(post.log_weights.array().exp().sum() - 1.0) < 1e-12);
}

TEST_CASE("randomized response oracle with no flipping gives the exact-data posterior") {
  // Single-bit records: 3 ones and 1 zero, uniform prior.
  Eigen::MatrixXd bits(4, 1);
  bits << 1.0, 1.0, 0.0, 1.0;
  const auto grid = privmcmc::simplex_grid(2, 0.01);
  const auto post = privmcmc::exact_rr_posterior(bits, 1.0, grid, Eigen::Vector2d::Ones());

  Eigen::VectorXd expected(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double t1 = grid[g][0] > 0.0 ? 3.0 * std::log(grid[g][0]) : kNegInf;
    const double t0 = grid[g][1] > 0.0 ? std::log(grid[g][1]) : kNegInf;
    expected[static_cast<Eigen::Index>(g)] = t1 + t0;
  }
  check_same_log_weights(post.log_weights, normalize_log(expected), 1e-9);

  // Two-bit records on the 4-cell simplex.
  Eigen::MatrixXd pairs(3, 2);
  pairs << 1.0, 1.0, 0.0, 1.0, 1.0, 0.0;  // cells 0, 2, 1
  const auto grid4 = privmcmc::simplex_grid(4, 0.1);
  const auto post4 = privmcmc::exact_rr_posterior(pairs, 1.0, grid4, Eigen::VectorXd::Ones(4));
  Eigen::VectorXd expected4(static_cast<Eigen::Index>(grid4.size()));
  for (std::size_t g = 0; g < grid4.size(); ++g) {
    double acc = 0.0;
    for (const int cell : {0, 2, 1}) {
      acc += grid4[g][cell] > 0.0 ? std::log(grid4[g][cell]) : kNegInf;
    }
    expected4[static_cast<Eigen::Index>(g)] = acc;
  }
  check_same_log_weights(post4.log_weights, normalize_log(expected4), 1e-9);
}

TEST_CASE("single randomized response record tilts the posterior by the flip odds") {
  Eigen::MatrixXd bits(1, 1);
  bits << 1.0;
  const auto grid = privmcmc::simplex_grid(2, 0.5);  // corners and midpoint
  const auto post = privmcmc::exact_rr_posterior(bits, 0.75, grid, Eigen::Vector2d::Ones());

  const Eigen::VectorXd w = post.log_weights.array().exp();
  // Likelihoods 1/4, 1/2, 3/4 at theta_1 = 0, 1/2, 1.
  CHECK(w[2] / w[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(w[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(w[2] == doctest::Approx(1.0 / 2.0).epsilon(1e-12));
}

TEST_CASE("relabeling categories permutes the randomized-response posterior") {
  Eigen::MatrixXd bits(6, 1);
  bits << 1.0, 1.0, 0.0, 1.0, 0.0, 1.0;
  Eigen::Vector2d prior(2.0, 1.0);
  const auto grid = privmcmc::simplex_grid(2, 0.05);

  // Swap the two categories: flip bits, swap prior, swap each point's cells.
  Eigen::MatrixXd flipped = 1.0 - bits.array();
  Eigen::Vector2d swapped_prior(prior[1], prior[0]);
  std::vector<Eigen::VectorXd> swapped_grid;
  for (const auto& p : grid) swapped_grid.push_back(p.reverse());

  const auto base = privmcmc::exact_rr_posterior(bits, 0.8, grid, prior);
  const auto relabeled = privmcmc::exact_rr_posterior(flipped, 0.8, swapped_grid, swapped_prior);
  for (Eigen::Index i = 0; i < base.log_weights.size(); ++i) {
    check_log_close(relabeled.log_weights[i], base.log_weights[i], 1e-12);
  }
}

TEST_CASE("count oracle matches a literal nine-term hand enumeration") {
  Eigen::Vector2d sdp(1.0, 1.0);
  const auto grid = privmcmc::simplex_grid(2, 0.1);
  const auto post = privmcmc::exact_count_posterior(sdp, 1.0, 2, grid, Eigen::Vector2d::Ones());

  Eigen::VectorXd expected(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double t1 = grid[g][0], t2 = grid[g][1];
    double lik = 0.0;
    for (int c1 = 0; c1 <= 2; ++c1) {
      for (int c2 = 0; c2 <= 2; ++c2) {
        if (c1 + c2 != 2) continue;  // multinomial support
        const double coeff = 2.0 / (std::tgamma(c1 + 1.0) * std::tgamma(c2 + 1.0));
        lik += coeff * std::pow(t1, c1) * std::pow(t2, c2) * ref_dgauss_pmf(1 - c1, 1.0) *
               ref_dgauss_pmf(1 - c2, 1.0);
      }
    }
    expected[static_cast<Eigen::Index>(g)] = lik > 0.0 ? std::log(lik) : kNegInf;
  }
  check_same_log_weights(post.log_weights, normalize_log(expected), 1e-12);
}

TEST_CASE("count oracle with vanishing noise reduces to the Dirichlet-multinomial posterior") {
  Eigen::VectorXd sdp(4);
  sdp << 3.0, 2.0, 1.0, 2.0;
  Eigen::VectorXd prior(4);
  prior << 1.0, 2.0, 1.5, 1.0;
  const auto grid = privmcmc::simplex_grid(4, 0.1);
  const auto post = privmcmc::exact_count_posterior(sdp, 1e-3, 8, grid, prior);

  Eigen::VectorXd expected(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
      const double power = prior[j] + sdp[j] - 1.0;
      if (power == 0.0) continue;
      acc += grid[g][j] > 0.0 ? power * std::log(grid[g][j]) : kNegInf;
    }
    expected[static_cast<Eigen::Index>(g)] = acc;
  }
  check_same_log_weights(post.log_weights, normalize_log(expected), 1e-9);
}

TEST_CASE("count oracle is invariant under jointly permuting cells") {
  Eigen::VectorXd sdp(4);
  sdp << 2.0, 1.0, 1.0, 1.0;
  Eigen::VectorXd prior(4);
  prior << 1.0, 1.5, 2.0, 1.0;
  const auto grid = privmcmc::simplex_grid(4, 0.2);

  const int perm[4] = {2, 0, 3, 1};
  Eigen::VectorXd sdp_p(4), prior_p(4);
  std::vector<Eigen::VectorXd> grid_p;
  for (int j = 0; j < 4; ++j) {
    sdp_p[j] = sdp[perm[j]];
    prior_p[j] = prior[perm[j]];
  }
  for (const auto& point : grid) {
    Eigen::VectorXd q(4);
    for (int j = 0; j < 4; ++j) q[j] = point[perm[j]];
    grid_p.push_back(q);
  }

  const auto base = privmcmc::exact_count_posterior(sdp, 0.8, 5, grid, prior);
  const auto permuted = privmcmc::exact_count_posterior(sdp_p, 0.8, 5, grid_p, prior_p);
  for (Eigen::Index i = 0; i < base.log_weights.size(); ++i) {
    check_log_close(permuted.log_weights[i], base.log_weights[i], 1e-12);
  }
}

TEST_CASE("oracle posteriors are identical for any thread count") {
  Eigen::VectorXd sdp(4);
  sdp << 3.0, 2.0, 1.0, 2.0;
  const auto grid = privmcmc::simplex_grid(4, 0.1);
  const auto ones = Eigen::VectorXd::Ones(4);
  const auto serial = privmcmc::exact_count_posterior(sdp, 1.0, 8, grid, ones, 1);
  const auto parallel = privmcmc::exact_count_posterior(sdp, 1.0, 8, grid, ones, 4);
  const auto automatic = privmcmc::exact_count_posterior(sdp, 1.0, 8, grid, ones, 0);
  CHECK((serial.log_weights.array() == parallel.log_weights.array()).all());
  CHECK((serial.log_weights.array() == automatic.log_weights.array()).all());

  Eigen::MatrixXd bits(5, 1);
  bits << 1.0, 1.0, 0.0, 1.0, 0.0;
  const auto grid2 = privmcmc::simplex_grid(2, 0.01);
  const auto rr1 = privmcmc::exact_rr_posterior(bits, 0.75, grid2, Eigen::Vector2d::Ones(), 1);
  const auto rr4 = privmcmc::exact_rr_posterior(bits, 0.75, grid2, Eigen::Vector2d::Ones(), 4);
  CHECK((rr1.log_weights.array() == rr4.log_weights.array()).all());
}

TEST_CASE("oracle inputs are validated") {
  const auto grid2 = privmcmc::simplex_grid(2, 0.5);
  const auto ones2 = Eigen::Vector2d::Ones();
  Eigen::MatrixXd bits(2, 1);
  bits << 1.0, 0.0;

  CHECK_THROWS_AS(privmcmc::exact_rr_posterior(bits, 0.0, grid2, ones2), ConfigError);
  CHECK_THROWS_AS(privmcmc::exact_rr_posterior(bits, 1.2, grid2, ones2), ConfigError);
  CHECK_THROWS_AS(privmcmc::exact_rr_posterior(Eigen::MatrixXd(0, 1), 0.75, grid2, ones2),
                  ConfigError);
  Eigen::MatrixXd halfbit(1, 1);
  halfbit << 0.5;
  CHECK_THROWS_AS(privmcmc::exact_rr_posterior(halfbit, 0.75, grid2, ones2), ConfigError);
  CHECK_THROWS_AS(
      privmcmc::exact_rr_posterior(bits, 0.75, privmcmc::simplex_grid(3, 0.5), Eigen::Vector3d::Ones()),
      ConfigError);
  CHECK_THROWS_AS(privmcmc::exact_rr_posterior(bits, 0.75, {}, ones2), ConfigError);
  CHECK_THROWS_AS(privmcmc::exact_rr_posterior(bits, 0.75, grid2, Eigen::Vector2d(0.5, 1.0)),
                  ConfigError);

  Eigen::Vector2d sdp(1.0, 1.0);
  CHECK_THROWS_AS(privmcmc::exact_count_posterior(sdp, 1.0, 13, grid2, ones2), ConfigError);
  CHECK_THROWS_AS(privmcmc::exact_count_posterior(sdp, 1.0, 0, grid2, ones2), ConfigError);
  CHECK_THROWS_AS(privmcmc::exact_count_posterior(sdp, 0.0, 2, grid2, ones2), ConfigError);
  CHECK_THROWS_AS(privmcmc::exact_count_posterior(Eigen::Vector2d(0.5, 1.5), 1.0, 2, grid2, ones2),
                  ConfigError);
  CHECK_THROWS_AS(privmcmc::exact_count_posterior(Eigen::Vector3d(1, 1, 0), 1.0, 2, grid2, ones2),
                  ConfigError);

  std::vector<Eigen::VectorXd> off_simplex = {Eigen::Vector2d(0.6, 0.6)};
  CHECK_THROWS_AS(privmcmc::exact_rr_posterior(bits, 0.75, off_simplex, ones2), ConfigError);
  std::vector<Eigen::VectorXd> negative = {Eigen::Vector2d(1.2, -0.2)};
  CHECK_THROWS_AS(privmcmc::exact_rr_posterior(bits, 0.75, negative, ones2), ConfigError);
}

TEST_CASE("total variation distance on matched and disjoint binnings") {
  GridPosterior post;
  post.grid = {Eigen::Vector2d(0.1, 0.9), Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.9, 0.1)};
  post.log_weights = Eigen::Vector3d(std::log(0.2), std::log(0.3), std::log(0.5));

  // Draws with exactly the posterior frequencies land in the same bins.
  Eigen::MatrixXd draws(2000, 2);
  Eigen::Index at = 0;
  const int reps[3] = {400, 600, 1000};
  for (int g = 0; g < 3; ++g) {
    for (int r = 0; r < reps[g]; ++r) draws.row(at++) = post.grid[static_cast<std::size_t>(g)];
  }
  CHECK(privmcmc::tv_distance(draws, post) == doctest::Approx(0.0).epsilon(1e-12));

  // All draws in a bin the posterior never touches.
  Eigen::MatrixXd apart = Eigen::MatrixXd::Zero(50, 2);
  apart.col(0).setConstant(0.3);
  apart.col(1).setConstant(0.7);
  CHECK(privmcmc::tv_distance(apart, post) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(privmcmc::tv_distance(Eigen::MatrixXd(0, 2), post), ConfigError);
  CHECK_THROWS_AS(privmcmc::tv_distance(Eigen::MatrixXd::Zero(5, 3), post), ConfigError);
  CHECK_THROWS_AS(privmcmc::tv_distance(draws, post, 0.0), ConfigError);
  CHECK_THROWS_AS(privmcmc::tv_distance(draws, post, 1.5), ConfigError);
}

TEST_CASE("total variation against exact grid samples shrinks with sample size") {
  Eigen::MatrixXd bits(5, 1);
  bits << 1.0, 1.0, 0.0, 1.0, 0.0;
  const auto post = privmcmc::exact_rr_posterior(bits, 0.75, privmcmc::simplex_grid(2, 0.01),
                                                 Eigen::Vector2d::Ones());
  const Eigen::VectorXd w = post.log_weights.array().exp();

  RngStream rng(90210);
  const auto sample_rows = [&](Eigen::Index count) {
    Eigen::MatrixXd rows(count, 2);
    for (Eigen::Index i = 0; i < count; ++i) {
      rows.row(i) = post.grid[static_cast<std::size_t>(
          rng.categorical(w.data(), static_cast<int>(w.size())))];
    }
    return rows;
  };

  const double tv_small = privmcmc::tv_distance(sample_rows(100), post);
  const double tv_large = privmcmc::tv_distance(sample_rows(100000), post);
  CHECK(tv_large < 0.02);  // sampling-noise bound at 1e5 draws
  CHECK(tv_large < tv_small);
  CHECK(tv_small <= 1.0);
  CHECK(tv_large >= 0.0);
}

TEST_CASE("engine draws match the exact randomized-response posterior") {
  const std::int64_t n = 5;
  Eigen::MatrixXd bits(n, 1);
  bits << 1.0, 1.0, 0.0, 1.0, 0.0;

  SamplerConfig config;
  config.niter = 13500;
  config.warmup = 1000;
  config.chains = 4;
  config.seed = 20240817;
  config.init_par = Eigen::Vector2d(0.5, 0.5);

  const auto out =
      privmcmc::sample_private_posterior(make_binary_rr_model(n, 0.75), bits.array(), config);
  const Eigen::MatrixXd pooled = pool_draws(out.draws);
  REQUIRE(pooled.rows() == 50000);

  const auto post = privmcmc::exact_rr_posterior(bits, 0.75, privmcmc::simplex_grid(2, 0.01),
                                                 Eigen::Vector2d::Ones());
  CHECK(privmcmc::tv_distance(pooled, post) < 0.05);
}

TEST_CASE("engine draws match the exact noisy-count posterior") {
  privmcmc::TableModelSpec spec;
  spec.n = 8;
  spec.mechanism = privmcmc::TableModelSpec::Mechanism::kDiscreteGaussian;
  spec.sigma = 1.0;
  spec.prior = Eigen::VectorXd::Ones(4);

  SummaryValue sdp(4, 1);
  sdp << 3.0, 2.0, 1.0, 2.0;

  SamplerConfig config;
  config.niter = 13500;
  config.warmup = 1000;
  config.chains = 4;
  config.seed = 7;
  config.init_par = Eigen::VectorXd::Constant(4, 0.25);

  const auto out = privmcmc::sample_private_posterior(privmcmc::make_table_model(spec), sdp, config);
  const Eigen::MatrixXd pooled = pool_draws(out.draws);
  REQUIRE(pooled.rows() == 50000);

  const auto post = privmcmc::exact_count_posterior(sdp.col(0).matrix(), 1.0, 8,
                                                    privmcmc::simplex_grid(4, 0.02),
                                                    Eigen::VectorXd::Ones(4));
  CHECK(privmcmc::tv_distance(pooled, post) < 0.05);
}
