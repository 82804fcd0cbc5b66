#include <privmcmc/oracle.hpp>

#include <privmcmc/errors.hpp>
#include <privmcmc/mechanisms.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace privmcmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int resolve_threads(int threads, std::int64_t points) {
  int avail = 1;
#ifdef _OPENMP
  avail = omp_get_max_threads();
#endif
  if (threads > 0) avail = threads;
  return static_cast<int>(std::min<std::int64_t>(avail, std::max<std::int64_t>(points, 1)));
}

// Validates a simplex grid against the prior and returns the cell count.
int check_grid(const std::vector<Eigen::VectorXd>& grid, const Eigen::VectorXd& prior) {
  if (grid.empty()) throw ConfigError("oracle grid must contain at least one point");
  const Eigen::Index k = grid.front().size();
  if (k < 2) throw ConfigError("oracle grid points need at least 2 cells");
  for (const auto& point : grid) {
    if (point.size() != k) throw ConfigError("oracle grid points disagree on dimension");
    if (!point.allFinite() || (point.array() < 0.0).any()) {
      throw ConfigError("oracle grid points must have nonnegative finite cells");
    }
    if (std::abs(point.sum() - 1.0) > 1e-9) {
      throw ConfigError("oracle grid points must lie on the probability simplex");
    }
  }
  if (prior.size() != k) throw ConfigError("oracle prior size must match the grid dimension");
  if (!prior.allFinite() || (prior.array() < 1.0).any()) {
    throw ConfigError(
        "oracle prior concentrations must be >= 1 (the grid includes the simplex boundary)");
  }
  return static_cast<int>(k);
}

// Dirichlet log density at a grid point, up to the normalizing constant;
// the alpha_j = 1 terms vanish, and a zero cell with alpha_j > 1 gives -inf.
double log_prior_at(const Eigen::VectorXd& theta, const Eigen::VectorXd& prior) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (prior[j] == 1.0) continue;
    if (theta[j] == 0.0) return kNegInf;
    acc += (prior[j] - 1.0) * std::log(theta[j]);
  }
  return acc;
}

double logsumexp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!(m > kNegInf)) return kNegInf;
  return m + std::log((v.array() - m).exp().sum());
}

// Normalizes log weights in place so the masses sum to one.
GridPosterior normalized(std::vector<Eigen::VectorXd> grid, Eigen::VectorXd log_weights) {
  const double lse = logsumexp(log_weights);
  if (!std::isfinite(lse)) {
    throw NumericError("oracle posterior mass vanished on the entire grid");
  }
  log_weights.array() -= lse;
  return GridPosterior{std::move(grid), std::move(log_weights)};
}

// Bit b (left to right) of table cell c among 2^B cells: cell 0 is all-ones,
// the last cell all-zeros, matching the models' cell order.
double cell_bit(int cell, int b, int nbits) { return ((cell >> (nbits - 1 - b)) & 1) ? 0.0 : 1.0; }

// All count vectors of n records over k cells, in lexicographic order.
std::vector<Eigen::VectorXi> enumerate_counts(std::int64_t n, int k) {
  std::vector<Eigen::VectorXi> all;
  Eigen::VectorXi work(k);
  const std::function<void(int, std::int64_t)> rec = [&](int cell, std::int64_t left) {
    if (cell == k - 1) {
      work[cell] = static_cast<int>(left);
      all.push_back(work);
      return;
    }
    for (std::int64_t c = 0; c <= left; ++c) {
      work[cell] = static_cast<int>(c);
      rec(cell + 1, left - c);
    }
  };
  rec(0, n);
  return all;
}

}  // namespace

std::vector<Eigen::VectorXd> simplex_grid(int k, double resolution) {
  if (k < 2) throw ConfigError("simplex grid needs at least 2 cells");
  if (!(resolution > 0.0 && resolution <= 1.0)) {
    throw ConfigError("simplex grid resolution must be in (0, 1]");
  }
  const double steps = 1.0 / resolution;
  const auto m = static_cast<std::int64_t>(std::llround(steps));
  if (std::abs(steps - static_cast<double>(m)) > 1e-9) {
    throw ConfigError("simplex grid resolution must divide 1 evenly");
  }

  std::vector<Eigen::VectorXd> grid;
  Eigen::VectorXi work(k);
  const std::function<void(int, std::int64_t)> rec = [&](int cell, std::int64_t left) {
    if (cell == k - 1) {
      work[cell] = static_cast<int>(left);
      grid.push_back(work.cast<double>() / static_cast<double>(m));
      return;
    }
    for (std::int64_t c = 0; c <= left; ++c) {
      work[cell] = static_cast<int>(c);
      rec(cell + 1, left - c);
    }
  };
  rec(0, m);
  return grid;
}

GridPosterior exact_rr_posterior(const Eigen::MatrixXd& sdp_bits, double keep_prob,
                                 const std::vector<Eigen::VectorXd>& theta_grid,
                                 const Eigen::VectorXd& prior, int threads) {
  const int k = check_grid(theta_grid, prior);
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw ConfigError("randomized-response keep probability must be in (0, 1]");
  }
  const auto nbits = static_cast<int>(sdp_bits.cols());
  if (sdp_bits.rows() < 1 || nbits < 1) {
    throw ConfigError("randomized-response release needs at least one record and one bit");
  }
  if (k != (1 << nbits)) {
    throw ConfigError("grid dimension must be 2^bits for the randomized-response oracle");
  }

  // eta(pattern p | cell c) depends on a record only through its own cell
  // index p, so records collapse to pattern counts.
  Eigen::MatrixXd eta = Eigen::MatrixXd::Ones(k, k);
  for (int p = 0; p < k; ++p) {
    for (int c = 0; c < k; ++c) {
      for (int b = 0; b < nbits; ++b) {
        eta(p, c) *= cell_bit(p, b, nbits) == cell_bit(c, b, nbits) ? keep_prob : 1.0 - keep_prob;
      }
    }
  }
  Eigen::VectorXd pattern_count = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < sdp_bits.rows(); ++i) {
    int p = 0;
    for (int b = 0; b < nbits; ++b) {
      const double bit = sdp_bits(i, b);
      if (bit != 0.0 && bit != 1.0) {
        throw ConfigError("randomized-response release entries must be exactly 0 or 1");
      }
      if (bit == 0.0) p |= 1 << (nbits - 1 - b);
    }
    pattern_count[p] += 1.0;
  }

  const auto npoints = static_cast<std::int64_t>(theta_grid.size());
  Eigen::VectorXd lw(npoints);
  const int nthreads = resolve_threads(threads, npoints);
#ifdef _OPENMP
#pragma omp parallel for num_threads(nthreads) schedule(static)
#endif
  for (std::int64_t g = 0; g < npoints; ++g) {
    const Eigen::VectorXd& theta = theta_grid[static_cast<std::size_t>(g)];
    double acc = log_prior_at(theta, prior);
    for (int p = 0; p < k && std::isfinite(acc); ++p) {
      if (pattern_count[p] == 0.0) continue;
      const double lik = eta.row(p).dot(theta);
      acc += lik > 0.0 ? pattern_count[p] * std::log(lik) : kNegInf;
    }
    lw[g] = acc;
  }
  (void)nthreads;
  return normalized(theta_grid, std::move(lw));
}

GridPosterior exact_count_posterior(const Eigen::VectorXd& sdp_counts, double sigma,
                                    std::int64_t n, const std::vector<Eigen::VectorXd>& theta_grid,
                                    const Eigen::VectorXd& prior, int threads) {
  const int k = check_grid(theta_grid, prior);
  if (n < 1) throw ConfigError("count oracle needs at least one record");
  if (n > 12) {
    throw ConfigError("count oracle enumeration is capped at n <= 12 records");
  }
  if (sdp_counts.size() != k) {
    throw ConfigError("noisy count vector size must match the grid dimension");
  }
  Eigen::VectorXi sdp(k);
  for (int j = 0; j < k; ++j) {
    const double rounded = std::nearbyint(sdp_counts[j]);
    if (!std::isfinite(sdp_counts[j]) || std::abs(sdp_counts[j] - rounded) > 1e-9) {
      throw ConfigError("noisy counts must be integers (discrete-Gaussian support)");
    }
    sdp[j] = static_cast<int>(rounded);
  }

  // theta-independent weight of each count vector: the multinomial
  // coefficient and the noise pmf tying it to the released counts.
  const DiscreteGaussian noise(0.0, sigma);
  const auto counts = enumerate_counts(n, k);
  const double log_nfact = std::lgamma(static_cast<double>(n) + 1.0);
  std::vector<double> base(counts.size());
  for (std::size_t t = 0; t < counts.size(); ++t) {
    double acc = log_nfact;
    for (int j = 0; j < k; ++j) {
      acc -= std::lgamma(static_cast<double>(counts[t][j]) + 1.0);
      acc += noise.log_pmf(sdp[j] - counts[t][j]);
    }
    base[t] = acc;
  }

  const auto npoints = static_cast<std::int64_t>(theta_grid.size());
  Eigen::VectorXd lw(npoints);
  const int nthreads = resolve_threads(threads, npoints);
#ifdef _OPENMP
#pragma omp parallel for num_threads(nthreads) schedule(static)
#endif
  for (std::int64_t g = 0; g < npoints; ++g) {
    const Eigen::VectorXd& theta = theta_grid[static_cast<std::size_t>(g)];
    Eigen::ArrayXd log_theta(k);
    for (int j = 0; j < k; ++j) log_theta[j] = theta[j] > 0.0 ? std::log(theta[j]) : kNegInf;

    // log sum over count vectors, streamed with a running maximum to avoid
    // materializing the per-vector terms.
    double best = kNegInf, sum = 0.0;
    for (std::size_t t = 0; t < counts.size(); ++t) {
      double term = base[t];
      for (int j = 0; j < k && term > kNegInf; ++j) {
        if (counts[t][j] > 0) {
          term += log_theta[j] > kNegInf ? counts[t][j] * log_theta[j] : kNegInf;
        }
      }
      if (term == kNegInf) continue;
      if (term > best) {
        sum = sum * std::exp(best - term) + 1.0;
        best = term;
      } else {
        sum += std::exp(term - best);
      }
    }
    const double loglik = best > kNegInf ? best + std::log(sum) : kNegInf;
    const double lp = log_prior_at(theta, prior);
    lw[g] = std::isfinite(lp) ? lp + loglik : kNegInf;
  }
  (void)nthreads;
  return normalized(theta_grid, std::move(lw));
}

double tv_distance(const Eigen::MatrixXd& draws, const GridPosterior& posterior,
                   double bin_width) {
  if (draws.rows() < 1) throw ConfigError("total-variation distance needs at least one draw");
  if (posterior.grid.empty() ||
      posterior.log_weights.size() != static_cast<Eigen::Index>(posterior.grid.size())) {
    throw ConfigError("grid posterior is empty or inconsistent");
  }
  const Eigen::Index k = posterior.grid.front().size();
  if (draws.cols() != k) {
    throw ConfigError("draw columns must match the grid posterior dimension");
  }
  if (!(bin_width > 0.0 && bin_width <= 1.0)) {
    throw ConfigError("bin width must be in (0, 1]");
  }

  const auto nbins = static_cast<int>(std::ceil(1.0 / bin_width - 1e-12));
  const auto bin_of = [&](double v) {
    const int b = static_cast<int>(std::floor(v / bin_width));
    return std::clamp(b, 0, nbins - 1);
  };
  const Eigen::VectorXd weights = posterior.log_weights.array().exp();

  const int free_coords = k == 2 ? 1 : 2;
  double worst = 0.0;
  for (int j = 0; j < free_coords; ++j) {
    Eigen::VectorXd empirical = Eigen::VectorXd::Zero(nbins);
    for (Eigen::Index i = 0; i < draws.rows(); ++i) empirical[bin_of(draws(i, j))] += 1.0;
    empirical /= static_cast<double>(draws.rows());

    Eigen::VectorXd exact = Eigen::VectorXd::Zero(nbins);
    for (std::size_t g = 0; g < posterior.grid.size(); ++g) {
      exact[bin_of(posterior.grid[g][j])] += weights[static_cast<Eigen::Index>(g)];
    }
    worst = std::max(worst, 0.5 * (empirical - exact).cwiseAbs().sum());
  }
  return std::min(worst, 1.0);
}

}  // namespace privmcmc
