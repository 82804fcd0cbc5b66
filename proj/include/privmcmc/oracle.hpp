#pragma once

// Brute-force exact posteriors on tiny instances, used to certify the
// sampler. Parameters live on a finite simplex grid; the privatized-data
// likelihood is computed by full enumeration (per-record sums for randomized
// response, all count vectors for noisy counts), so the resulting grid
// posterior has no Monte-Carlo error of its own.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace privmcmc {

// Exact posterior masses over a finite set of parameter points.
struct GridPosterior {
  std::vector<Eigen::VectorXd> grid;  // distinct simplex points, equal sizes
  Eigen::VectorXd log_weights;        // normalized: exp() sums to 1
};

// All points of the (k-1)-simplex lattice with the given spacing, ordered
// lexicographically by the first k-1 coordinates; 1/resolution must be an
// integer. k=2 at 0.01 gives the 101-point grid used by the certification
// tests; k=4 at 0.02 gives the full table-parameter lattice.
std::vector<Eigen::VectorXd> simplex_grid(int k, double resolution);

// Exact posterior for per-record randomized response. sdp_bits holds one
// released record per row (entries exactly 0 or 1, each bit kept
// independently with probability keep_prob); cells follow the table cell
// order, i.e. cell c of B bits has bit pattern (1 - c's bits). The
// likelihood at theta is prod_i sum_c theta_c * eta(pattern_i | c), and the
// prior is Dirichlet with the given concentrations (all >= 1 so the density
// stays bounded on the closed simplex). threads = 0 uses all cores; the
// result is identical for any thread count.
GridPosterior exact_rr_posterior(const Eigen::MatrixXd& sdp_bits, double keep_prob,
                                 const std::vector<Eigen::VectorXd>& theta_grid,
                                 const Eigen::VectorXd& prior, int threads = 0);

// Exact posterior for discrete-Gaussian count release: the likelihood of the
// integer count vector sdp_counts is sum over all multinomial count vectors
// of n records, Multinomial(counts; n, theta) * prod_j pmf(sdp_j - count_j)
// under the discrete Gaussian with scale sigma. Enumeration is capped at
// n <= 12.
GridPosterior exact_count_posterior(const Eigen::VectorXd& sdp_counts, double sigma,
                                    std::int64_t n, const std::vector<Eigen::VectorXd>& theta_grid,
                                    const Eigen::VectorXd& prior, int threads = 0);

// Total-variation distance between empirical draws (one simplex point per
// row) and the grid posterior, computed on marginal bins of width bin_width
// (floor binning) over the free coordinates: the first coordinate when the
// simplex has two cells, the first two otherwise. Returns the largest
// per-coordinate distance, always in [0, 1].
double tv_distance(const Eigen::MatrixXd& draws, const GridPosterior& posterior,
                   double bin_width = 0.02);

}  // namespace privmcmc
