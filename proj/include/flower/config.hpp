#pragma once

#include <string>
#include <vector>

#include "flower/hyperparameters.hpp"
#include "flower/ingest.hpp"

namespace flower {

inline constexpr int kConfigSchemaVersion = 1;

/// Everything a `fit` run needs, as read from a TOML file.
///
///     schema_version = 1
///     [data]    path, responses, covariates, support = [A, B], rescale
///     [model]   K, K_star, a_alpha, b_alpha, a_phi, b_phi, alpha0, phi_star,
///               a_sigma, b_sigma, m0, s0, grid_b, grid_theta, latent
///     [mcmc]    iterations, burnin, thin, seed, threads, sigma2_mu,
///               sigma2_sigma, sigma2_alpha, sigma2_phi, adapt_every,
///               target_accept
///     [output]  dir
///
/// Unknown sections or keys are rejected. A relative data path is resolved
/// against the directory holding the config file.
struct RunConfig {
  std::string data_path;
  std::vector<std::string> responses;
  std::vector<std::string> covariates;
  RescaleMode rescale = RescaleMode::minmax;
  Hyperparameters hp;
  std::string output_dir = "out";

  IngestOptions ingest_options() const;
};

/// Throws ConfigError on syntax errors, unknown keys, wrong value types or a
/// schema version other than 1; IoError when the file cannot be read.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& base_dir = "");

/// TOML text that `parse_config` reads back to the same RunConfig.
std::string config_to_toml(const RunConfig& config);

}  // namespace flower
