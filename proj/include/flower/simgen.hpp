#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "flower/dataset.hpp"

namespace flower {

class Rng;

/// Data-generating marginal of one coordinate: partitions, one weight vector
/// per second-layer cluster and coordinate-specific truncated-normal atoms.
struct TrueCoordinate {
  std::vector<std::vector<int>> s;  // canonical first-layer labels
  std::vector<int> shape;
  std::vector<int> s_star;  // flat row-major, labels 0..clusters-1
  Eigen::MatrixXd lambda;   // clusters x K_l
  Eigen::VectorXd mu, sigma2;

  int clusters() const { return static_cast<int>(lambda.rows()); }
  int cluster_of(const std::vector<int>& combo) const;
};

/// Gaussian-copula model with partition-indexed truncated-normal mixture marginals.
struct TrueModel {
  std::vector<int> levels;
  double lower = 0.0, upper = 10.0;
  Eigen::MatrixXd R;
  std::vector<TrueCoordinate> coords;
  std::vector<std::string> response_names, covariate_names;

  int d() const { return static_cast<int>(coords.size()); }
  int p() const { return static_cast<int>(levels.size()); }

  /// Throws ParameterError when partitions, weights, atoms or R are invalid.
  void validate() const;

  double density(int l, const std::vector<int>& combo, double x) const;
  double cdf(int l, const std::vector<int>& combo, double x) const;
  /// Inverse of the mixture CDF by monotone bisection to 1e-10.
  double quantile(int l, const std::vector<int>& combo, double u) const;
};

/// Draws every covariate uniformly over its levels.
Eigen::MatrixXi sample_uniform_covariates(const std::vector<int>& levels, int n, Rng& rng);

/// x_i = F^{-1}(Phi(x_delta_i)) with x_delta_i ~ MVN(0, R), one unit at a time.
Dataset sample_dataset(const TrueModel& model, const Eigen::MatrixXi& covariates, Rng& rng);

/// Three responses, five covariates with 6, 2, 4, 5 and 3 levels, AR-type
/// correlation 0.7, sigma = 0.75 atoms, identity second layer and core vectors
/// drawn from Dir_4(1/2).
TrueModel scenario1_model(Rng& rng);
struct SimulatedData {
  TrueModel model;
  Dataset data;
};
SimulatedData scenario1(int n, Rng& rng);

/// Rounded six-dimensional correlation matrix used by the second scenario.
Eigen::MatrixXd scenario2_correlation();

/// Built-in stand-in for a fitted dietary-intake model: sex (2), age (7),
/// race (6) and income (6) covariates, first-layer partitions for six
/// responses, additive location effects on the aggregated cells and skewed
/// unimodal mixtures. Only the first `d` coordinates are kept.
TrueModel nhanes_like_model(int d = 6);

/// Replaces R by the top-left block of the second-scenario matrix and samples
/// responses for the given covariates (or uniformly drawn ones when empty).
SimulatedData scenario2(TrueModel artifact, const Eigen::MatrixXi& covariates, int n, Rng& rng);

/// JSON (de)serialization of a TrueModel; codes and labels are 1-based in the file.
std::string true_model_to_json(const TrueModel& m);
TrueModel true_model_from_json(const std::string& text);

}  // namespace flower
