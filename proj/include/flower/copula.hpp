#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "flower/atoms.hpp"

namespace flower {

class Rng;

/// Equi-spaced grid {-h + 2h m/(size-1) : m = 0..size-1}.
struct ParameterGrid {
  int size = 101;
  double half_width = 0.99;

  double value(int m) const { return -half_width + 2.0 * half_width * m / (size - 1); }
  int center() const { return (size - 1) / 2; }
};

inline constexpr double kGridHalfWidthB = 0.99;
inline constexpr double kGridHalfWidthTheta = 3.14;

inline int num_theta(int d) { return (d * d - 3 * d + 2) / 2; }

/// Spherical-coordinate Cholesky parameters, stored as grid positions.
struct CopulaParams {
  int d = 1;
  ParameterGrid grid_b{101, kGridHalfWidthB};
  ParameterGrid grid_theta{101, kGridHalfWidthTheta};
  std::vector<int> b_idx;      // d - 1 entries
  std::vector<int> theta_idx;  // (d^2 - 3d + 2) / 2 entries

  /// All parameters at the grid centre (b = 0, theta = 0, hence R = I).
  static CopulaParams centered(int d, int grid_b_size = 101, int grid_theta_size = 101);

  double b(int i) const { return grid_b.value(b_idx[i]); }
  double theta(int j) const { return grid_theta.value(theta_idx[j]); }
  Eigen::VectorXd b_values() const;
  Eigen::VectorXd theta_values() const;

  void validate() const;
};

struct CorrelationMatrix {
  Eigen::MatrixXd R;
  Eigen::MatrixXd chol_V;     // lower triangular, R = V V^T
  Eigen::MatrixXd precision;  // R^{-1}, assembled from V^{-1}
  double logdet = 0.0;

  int dim() const { return static_cast<int>(R.rows()); }
  /// y^T R^{-1} y by a forward solve against V.
  double quad_form(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  /// tr(R^{-1} S) for a symmetric scatter matrix S.
  double trace_precision_times(const Eigen::MatrixXd& scatter) const;
};

/// Builds V row by row from the spherical parameterization; rows have unit norm.
CorrelationMatrix build_V(std::span<const double> b, std::span<const double> theta);
CorrelationMatrix build_V(const CopulaParams& params);

/// -1/2 logdet - 1/2 y^T (R^{-1} - I) y.
double copula_log_density(const Eigen::Ref<const Eigen::VectorXd>& y, const CorrelationMatrix& R);

/// y_{l,i} = Phi^{-1}(clamp(F_TN(x_{l,i}; mu_z, sigma2_z, [A, B]))), one column per unit.
Eigen::MatrixXd latent_y(const Eigen::MatrixXd& x, const Allocations& z, const Atoms& atoms, double lower,
                         double upper);

struct CopulaState {
  CopulaParams params;
  CorrelationMatrix corr;
  std::uint64_t b_accepted = 0, b_proposed = 0;
  std::uint64_t theta_accepted = 0, theta_proposed = 0;

  explicit CopulaState(CopulaParams p = CopulaParams::centered(1));
  void refresh() { corr = build_V(params); }
};

/// Sufficient statistics of the latent scores for the grid updates: n and sum_i y_i y_i^T.
struct LatentScatter {
  int n = 0;
  Eigen::MatrixXd scatter;
  static LatentScatter from(const Eigen::MatrixXd& y);
};

/// Unnormalized log full conditionals, up to additive constants.
double log_p_b(const CopulaParams& params, const LatentScatter& ys);
double log_p_theta(const CopulaParams& params, const LatentScatter& ys);

/// Neighbourhood proposal on the grid: current index plus its neighbours.
int grid_neighbourhood_size(int idx, int size);

/// One pass over b_1..b_{d-1} in index order.
void update_b(CopulaState& state, const LatentScatter& ys, Rng& rng);
/// One pass over theta_1..theta_{(d-1)(d-2)/2} in index order.
void update_theta(CopulaState& state, const LatentScatter& ys, Rng& rng);

}  // namespace flower
