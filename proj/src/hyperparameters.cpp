#include "flower/hyperparameters.hpp"

#include <cmath>

#include "flower/error.hpp"

namespace flower {

std::string to_string(LatentTransform t) { return t == LatentTransform::mixture ? "mixture" : "component"; }

LatentTransform latent_transform_from_string(const std::string& s) {
  if (s == "component") return LatentTransform::component;
  if (s == "mixture") return LatentTransform::mixture;
  throw ConfigError("latent transform must be 'component' or 'mixture', got '" + s + "'");
}

void Hyperparameters::validate(std::span<const int> levels) const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(K >= 1, "K must be at least 1");
  double volume = 1.0;
  for (int d : levels) {
    require(d >= 1, "every covariate needs at least one level");
    volume *= d;
  }
  require(K_star >= 1, "K_star must be at least 1");
  require(K_star <= volume, "K_star cannot exceed the number of covariate combinations");
  require(std::isfinite(lower) && std::isfinite(upper) && lower < upper, "support must satisfy A < B");
  for (double v : {a_alpha, b_alpha, a_phi, b_phi, alpha0, phi_star, a_sigma, b_sigma, sigma2_mu, sigma2_sigma,
                   sigma2_alpha, sigma2_phi})
    require(std::isfinite(v) && v > 0.0, "prior and proposal parameters must be positive");
  require(std::isnan(s0) || s0 > 0.0, "s0 must be positive");
  require(std::isnan(m0) || std::isfinite(m0), "m0 must be finite");
  require(adapt_every >= 1, "adapt_every must be positive");
  require(target_accept > 0.0 && target_accept < 1.0, "target acceptance must lie in (0, 1)");
  require(grid_b >= 3 && grid_theta >= 3, "copula grids need at least 3 points");
  require(iterations >= 1, "iterations must be positive");
  require(burnin >= 0 && burnin < iterations, "burn-in must be smaller than the number of iterations");
  require(thin >= 1, "thin must be at least 1");
  require(threads >= 1, "threads must be at least 1");
}

}  // namespace flower
