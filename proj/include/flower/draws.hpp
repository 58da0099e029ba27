#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flower/dataset.hpp"
#include "flower/hyperparameters.hpp"

namespace flower {

/// Partition state and Rao-Blackwellized weights of one coordinate in one draw.
struct CoordinateDraw {
  std::vector<std::vector<int>> s;  // canonical first-layer labels per covariate
  std::vector<int> shape;           // K_h
  std::vector<int> s_star;          // flat row-major tensor of second-layer labels
  std::vector<double> lambda0;      // K
  Eigen::MatrixXd lambda_hat;       // K_star x K
  std::vector<std::vector<double>> eta_hat;
  std::vector<double> eta_star_hat;

  /// Second-layer label of a covariate combination (0-based levels).
  int cluster_of(const std::vector<int>& combo) const;
  /// Number of distinct second-layer labels in use.
  int occupied_clusters() const;
};

/// One retained, allocation-free snapshot of the chain.
struct Draw {
  int iteration = 0;
  std::vector<CoordinateDraw> coords;
  Eigen::VectorXd mu, sigma2;
  double alpha = 0.0, phi = 0.0;
  std::vector<int> b_idx, theta_idx;
  Eigen::VectorXd b, theta;
  Eigen::MatrixXd R;
};

/// Everything about the fitted model that is fixed across draws.
struct ModelInfo {
  int d = 0, p = 0, K = 0, K_star = 0;
  std::vector<int> levels;
  double lower = 0.0, upper = 10.0;
  int n = 0;
  Hyperparameters hp;
  std::vector<std::string> response_names, covariate_names;
  std::vector<std::vector<std::string>> level_labels;
  std::vector<Rescale> rescale;
  /// Observed combination index (mixed radix, last covariate fastest) -> unit count.
  std::map<long long, int> combination_counts;

  static ModelInfo from(const Dataset& data, const Hyperparameters& hp);
};

/// Post-burn-in acceptance rates of every M-H block.
struct AcceptanceSummary {
  double alpha = 0.0, phi = 0.0, mu = 0.0, sigma2 = 0.0, b = 0.0, theta = 0.0;
  std::vector<double> joint_s;  // per coordinate
  double final_var_alpha = 0.0, final_var_phi = 0.0;
};

struct PosteriorDraws {
  ModelInfo info;
  std::vector<Draw> draws;
  AcceptanceSummary acceptance;

  std::size_t size() const { return draws.size(); }
};

}  // namespace flower
