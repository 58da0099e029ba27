#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace flower {

/// Affine map from the original units of one response to the model support.
struct Rescale {
  double min = 0.0;  // original-scale minimum (maps to A)
  double max = 1.0;  // original-scale maximum (maps to B)
  bool identity = true;

  double to_model(double v, double A, double B) const {
    return identity ? v : A + (B - A) * (v - min) / (max - min);
  }
  double to_original(double v, double A, double B) const {
    return identity ? v : min + (max - min) * (v - A) / (B - A);
  }
  /// d(original) / d(model); densities on the original scale are divided by it.
  double jacobian(double A, double B) const { return identity ? 1.0 : (max - min) / (B - A); }
};

/// Responses on a common support plus categorical covariates.
///
/// Covariate codes are 0-based internally; files use 1-based codes.
struct Dataset {
  Eigen::MatrixXd x;  // d x n
  Eigen::MatrixXi c;  // p x n
  std::vector<int> levels;

  std::vector<std::string> response_names;
  std::vector<std::string> covariate_names;
  std::vector<std::vector<std::string>> level_labels;  // per covariate, label of each code
  std::vector<Rescale> rescale;                        // per response

  int d() const { return static_cast<int>(x.rows()); }
  int n() const { return static_cast<int>(x.cols()); }
  int p() const { return static_cast<int>(levels.size()); }

  /// Fills default names, labels and identity rescalings where missing.
  void fill_defaults();
  /// Throws DataError on shape mismatches, non-finite responses, responses
  /// outside [A, B] or covariate codes outside their level range.
  void validate(double A, double B) const;
};

/// Number of covariate combinations, prod_h d_h.
long long combination_count(const std::vector<int>& levels);
/// Mixed-radix decoding of a combination index (last covariate fastest).
std::vector<int> decode_combination(long long index, const std::vector<int>& levels);
long long encode_combination(const std::vector<int>& combo, const std::vector<int>& levels);

}  // namespace flower
