#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>

namespace flower {

/// How the latent normal scores fed to the copula update are computed.
enum class LatentTransform {
  component,  // CDF of the allocated kernel, Phi^{-1}(F_TN(x; mu_z, sigma2_z))
  mixture,    // CDF of the current conditional marginal mixture of the unit's cell
};

std::string to_string(LatentTransform t);
LatentTransform latent_transform_from_string(const std::string& s);

/// Fixed model and schedule settings. Gamma priors are shape-scale (mean a * b).
struct Hyperparameters {
  int K = 10;
  int K_star = 20;
  double lower = 0.0;  // A
  double upper = 10.0;  // B

  double a_alpha = 2.0, b_alpha = 0.5;
  double a_phi = 2.0, b_phi = 0.5;
  double alpha0 = 1.0;
  double phi_star = 1.0;
  double a_sigma = 2.0, b_sigma = 0.5;
  // Atom location prior TN(m0, s0^2, [A, B]); NaN means "mean / sd of the pooled response".
  double m0 = std::numeric_limits<double>::quiet_NaN();
  double s0 = std::numeric_limits<double>::quiet_NaN();

  double sigma2_mu = 0.5;      // fixed proposal variance for mu
  double sigma2_sigma = 0.5;   // fixed proposal variance for sigma^2
  double sigma2_alpha = 0.5;   // initial log-scale proposal variance for alpha
  double sigma2_phi = 0.5;     // initial log-scale proposal variance for phi
  int adapt_every = 50;
  double target_accept = 0.44;

  int grid_b = 101;
  int grid_theta = 101;
  LatentTransform latent = LatentTransform::mixture;

  int iterations = 30000;
  int burnin = 20000;
  int thin = 5;
  std::uint64_t seed = 1;
  int threads = 1;

  /// Throws ConfigError when an invariant fails. `levels` are the covariate level counts.
  void validate(std::span<const int> levels) const;

  /// Number of retained draws, (iterations - burnin) / thin.
  int retained() const { return (iterations - burnin) / thin; }
};

}  // namespace flower
