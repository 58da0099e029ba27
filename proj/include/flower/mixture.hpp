#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "flower/hyperparameters.hpp"
#include "flower/state.hpp"

namespace flower {

class Rng;

/// Per-atom constants for fast truncated-normal kernel evaluation.
class KernelTable {
 public:
  KernelTable() = default;
  KernelTable(const Atoms& atoms, double lower, double upper);

  int size() const { return static_cast<int>(mean_.size()); }
  double log_pdf(int k, double x) const {
    const double xi = (x - mean_[k]) * inv_sd_[k];
    return -0.5 * xi * xi - log_norm_[k];
  }
  /// Mixture CDF sum_k w_k F_k(x).
  double mixture_cdf(std::span<const double> w, double x) const;
  double cdf(int k, double x) const;

 private:
  std::vector<double> mean_, inv_sd_, log_norm_;  // log_norm includes log sqrt(2 pi)
  std::vector<double> cdf_lower_, mass_;           // Phi(alpha_k), Phi(beta_k) - Phi(alpha_k)
  double lower_ = 0.0, upper_ = 1.0;
};

/// Log full-conditional weights of z_{l,i} over k given leave-one-out counts
/// `counts` of the unit's second-layer cluster.
void allocation_log_weights(std::span<const double> alpha_lambda0, std::span<const int> counts,
                            const KernelTable& kernels, double x, std::span<double> out);

/// Gibbs update of every z_{l,i} for one coordinate, in unit order.
void update_z(int l, const Eigen::MatrixXd& x, ChainState& state, const KernelTable& kernels, Rng& rng);

/// Number of occupied tables after n customers under concentration a (CRT draw).
int crt_draw(int n, double a, Rng& rng);

/// Auxiliary-table update of lambda0[l].
void update_lambda0(int l, ChainState& state, const Hyperparameters& hp, Rng& rng);

/// Unnormalized log full conditionals (Gamma priors in shape-scale form).
double log_p_alpha(double alpha, const ChainState& state, const Hyperparameters& hp);
double log_p_phi(double phi, const ChainState& state, const Hyperparameters& hp);

/// Log-normal random-walk M-H steps with the Jacobian factor new / cur.
bool update_alpha(ChainState& state, const Hyperparameters& hp, Rng& rng);
bool update_phi(ChainState& state, const Hyperparameters& hp, Rng& rng);

/// Step size applied to the log proposal variances at iteration `iter`.
double adaptation_step(int iter);
/// Every `adapt_every` iterations, moves each log variance towards the target
/// acceptance rate and resets the window. Call once per burn-in iteration.
void adapt_proposals(AdaptState& adapt, int iter, const Hyperparameters& hp);

/// Sufficient statistics of the observations allocated to one atom.
struct AtomStats {
  double count = 0.0, sum = 0.0, sumsq = 0.0;
};
std::vector<AtomStats> atom_statistics(const Eigen::MatrixXd& x, const Allocations& z, int K);

/// log prod_{(l,i): z = k} TN(x_{l,i}; mu, sigma2, [A, B]), from sufficient statistics.
double atom_log_likelihood(const AtomStats& st, double mu, double sigma2, double lower, double upper);
double log_p_mu(double mu, double sigma2, const AtomStats& st, const Hyperparameters& hp);
double log_p_sigma2(double sigma2, double mu, const AtomStats& st, const Hyperparameters& hp);

/// M-H update of mu_k then sigma2_k.
void update_atom(int k, ChainState& state, const AtomStats& st, const Hyperparameters& hp, Rng& rng);

/// Conditional means of the marginalized weights.
Eigen::MatrixXd rao_blackwell_lambda(const FlowerTensor& t, std::span<const double> alpha_lambda0);  // K* x K
std::vector<std::vector<double>> rao_blackwell_eta(const FlowerTensor& t, double phi);
std::vector<double> rao_blackwell_eta_star(const FlowerTensor& t, double phi_star);

}  // namespace flower
