#pragma once

#include <cstdint>
#include <vector>

#include "flower/atoms.hpp"
#include "flower/copula.hpp"
#include "flower/partition.hpp"

namespace flower {

struct Hyperparameters;

/// Log-scale random-walk proposal variances for alpha and phi, with the
/// acceptance counters used for adaptation and reporting.
struct AdaptState {
  double log_var_alpha = 0.0;
  double log_var_phi = 0.0;
  // current adaptation window
  int window_alpha_accepted = 0, window_alpha_proposed = 0;
  int window_phi_accepted = 0, window_phi_proposed = 0;
  // running totals, reset when burn-in ends
  std::uint64_t alpha_accepted = 0, alpha_proposed = 0;
  std::uint64_t phi_accepted = 0, phi_proposed = 0;

  double var_alpha() const;
  double var_phi() const;
};

struct AtomCounters {
  std::uint64_t mu_accepted = 0, mu_proposed = 0;
  std::uint64_t sigma2_accepted = 0, sigma2_proposed = 0;
};

/// One full MCMC state.
struct ChainState {
  Allocations z;                             // d x n
  std::vector<FlowerTensor> tensors;         // one per coordinate
  std::vector<std::vector<double>> lambda0;  // d x K
  double alpha = 1.0;
  double phi = 1.0;
  Atoms atoms;
  CopulaState copula;
  AdaptState adapt;
  AtomCounters atom_counters;

  int d() const { return static_cast<int>(z.size()); }

  /// alpha * lambda0[l], cached; call refresh_weights after alpha or lambda0 change.
  const std::vector<double>& alpha_lambda0(int l) const { return alpha_lambda0_[l]; }
  void refresh_weights();
  CollapsedWeights weights(int l, double phi_star) const;

 private:
  std::vector<std::vector<double>> alpha_lambda0_;
};

}  // namespace flower
