#pragma once

#include <Eigen/Dense>
#include <vector>

#include "flower/draws.hpp"

namespace flower {

struct TrueModel;

/// G equi-spaced points on [lower, upper], endpoints included.
struct DensityGrid {
  double lower = 0.0, upper = 10.0;
  int size = 300;

  double delta() const { return (upper - lower) / (size - 1); }
  double point(int g) const { return lower + g * delta(); }
  Eigen::VectorXd points() const;
};

/// Grid plus density values (one value per grid point, or G^|L| values in
/// row-major order for joint densities).
struct DensityEstimate {
  DensityGrid grid;
  int dims = 1;
  Eigen::VectorXd values;

  /// Riemann sum sum_g f(x_g) * delta^dims.
  double mass() const;
};

/// Posterior mean of the conditional marginal density of coordinate `l` given
/// the combination `combo` (0-based levels).
DensityEstimate cond_marginal_density(const PosteriorDraws& draws, int l, const std::vector<int>& combo,
                                      const DensityGrid& grid);

/// All conditional marginals of coordinate `l` at once, one row per
/// covariate combination in mixed-radix order (last covariate fastest).
Eigen::MatrixXd cond_marginal_all(const PosteriorDraws& draws, int l, const DensityGrid& grid);

/// Posterior mean of the joint density of the coordinates in `L` given `combo`.
/// The copula factor on the support edges uses normal scores half a grid step
/// inside, since the density is unbounded at corners where every CDF is 0 or 1.
DensityEstimate cond_joint_density(const PosteriorDraws& draws, const std::vector<int>& L,
                                   const std::vector<int>& combo, const DensityGrid& grid);

/// Empirical combination weights w_c = n_c / n, keyed by combination index.
std::vector<std::pair<long long, double>> combination_weights(const ModelInfo& info);

DensityEstimate uncond_density(const PosteriorDraws& draws, int l, const DensityGrid& grid);
DensityEstimate uncond_joint_density(const PosteriorDraws& draws, const std::vector<int>& L, const DensityGrid& grid);

/// Partition layers of one coordinate with the induced partition of all
/// covariate combinations.
struct CoordinatePartition {
  std::vector<std::vector<int>> s;
  std::vector<int> shape;
  std::vector<int> s_star;        // canonical labels (first appearance in cell order)
  std::vector<int> combinations;  // cluster label of every combination
  int frequency = 0;              // draws showing this configuration
  int first_draw = 0;             // index of its first occurrence
};

/// Canonicalized configuration and induced combination partition.
CoordinatePartition make_partition(const std::vector<std::vector<int>>& s, const std::vector<int>& shape,
                                   const std::vector<int>& s_star, const std::vector<int>& levels);

/// Most frequent joint (s, s_star) per coordinate; ties go to the earliest draw.
std::vector<CoordinatePartition> map_partitions(const PosteriorDraws& draws);

/// Unweighted average of the conditional marginals of the combinations that
/// `reference` assigns to cluster `kstar`. Throws ParameterError for an empty cluster.
DensityEstimate cluster_conditional_density(const PosteriorDraws& draws, int l, int kstar,
                                            const CoordinatePartition& reference, const DensityGrid& grid);

/// sum_g (f_true - f_hat)^2 * delta. Throws ParameterError for mismatched grids.
double ise(const DensityEstimate& f_true, const DensityEstimate& f_hat);
double ise(const Eigen::VectorXd& f_true, const Eigen::VectorXd& f_hat, double delta);

/// Adjusted Rand index of two labelings of the same items.
double ari(const std::vector<int>& a, const std::vector<int>& b);

/// Posterior mean of R with its diagonal renormalized to one.
Eigen::MatrixXd correlation_estimate(const PosteriorDraws& draws);

/// Accuracy of a fit against a known data-generating model.
struct Score {
  Eigen::MatrixXd ise;  // d x combinations
  double ise_mean = 0.0;
  double ise_sum = 0.0;
  std::vector<double> ari;  // per coordinate, MAP vs true combination partitions
  double ari_mean = 0.0;
  std::vector<std::vector<bool>> single_cluster;  // per coordinate and covariate, MAP s_h has one cluster
  Eigen::MatrixXd R_hat;
  double R_max_abs_error = 0.0;
};

Score score_fit(const TrueModel& truth, const PosteriorDraws& draws, int grid_size = 300);

/// The true model viewed as a single-draw chain (for truth-versus-truth checks).
PosteriorDraws truth_as_draws(const TrueModel& truth);

}  // namespace flower
