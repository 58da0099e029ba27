#include "flower/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flower/dist.hpp"
#include "flower/rng.hpp"

namespace flower {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_rising(double a, double n) { return n == 0 ? 0.0 : log_gamma(a + n) - log_gamma(a); }

bool metropolis_accept(double log_ratio, Rng& rng) {
  if (std::isnan(log_ratio)) return false;
  return log_ratio >= 0.0 || std::log(rng.uniform_open()) < log_ratio;
}

}  // namespace

double AdaptState::var_alpha() const { return std::exp(log_var_alpha); }
double AdaptState::var_phi() const { return std::exp(log_var_phi); }

void ChainState::refresh_weights() {
  alpha_lambda0_.resize(lambda0.size());
  for (std::size_t l = 0; l < lambda0.size(); ++l) {
    alpha_lambda0_[l].resize(lambda0[l].size());
    for (std::size_t k = 0; k < lambda0[l].size(); ++k) alpha_lambda0_[l][k] = alpha * lambda0[l][k];
  }
}

CollapsedWeights ChainState::weights(int l, double phi_star) const {
  return CollapsedWeights{alpha_lambda0_[l], phi, phi_star};
}

KernelTable::KernelTable(const Atoms& atoms, double lower, double upper) : lower_(lower), upper_(upper) {
  const int K = atoms.size();
  mean_.resize(K);
  inv_sd_.resize(K);
  log_norm_.resize(K);
  cdf_lower_.resize(K);
  mass_.resize(K);
  for (int k = 0; k < K; ++k) {
    const TruncatedNormal tn(atoms.mu[k], atoms.sigma2[k], lower, upper);
    mean_[k] = atoms.mu[k];
    inv_sd_[k] = 1.0 / tn.sd();
    log_norm_[k] = tn.log_scale_normalizer() + kLogSqrt2Pi;
    const double a = (lower - atoms.mu[k]) / tn.sd();
    cdf_lower_[k] = std_normal_cdf(a);
    mass_[k] = std::exp(log_std_normal_interval(a, (upper - atoms.mu[k]) / tn.sd()));
  }
}

double KernelTable::cdf(int k, double x) const {
  if (x <= lower_) return 0.0;
  if (x >= upper_) return 1.0;
  if (mass_[k] < 1e-6) {
    const double sd = 1.0 / inv_sd_[k];
    return TruncatedNormal(mean_[k], sd * sd, lower_, upper_).cdf(x);
  }
  const double v = (std_normal_cdf((x - mean_[k]) * inv_sd_[k]) - cdf_lower_[k]) / mass_[k];
  return std::clamp(v, 0.0, 1.0);
}

double KernelTable::mixture_cdf(std::span<const double> w, double x) const {
  double out = 0.0;
  for (int k = 0; k < size(); ++k)
    if (w[k] > 0.0) out += w[k] * cdf(k, x);
  return std::clamp(out, 0.0, 1.0);
}

void allocation_log_weights(std::span<const double> alpha_lambda0, std::span<const int> counts,
                            const KernelTable& kernels, double x, std::span<double> out) {
  for (int k = 0; k < kernels.size(); ++k) out[k] = std::log(alpha_lambda0[k] + counts[k]) + kernels.log_pdf(k, x);
}

void update_z(int l, const Eigen::MatrixXd& x, ChainState& state, const KernelTable& kernels, Rng& rng) {
  FlowerTensor& t = state.tensors[l];
  std::vector<int>& z = state.z[l];
  const std::vector<double>& al = state.alpha_lambda0(l);
  std::vector<double> logw(kernels.size());
  const int n = static_cast<int>(z.size());
  for (int i = 0; i < n; ++i) {
    t.remove_unit(i, z[i]);
    allocation_log_weights(al, t.cluster_row(t.unit_cluster(i)), kernels, x(l, i), logw);
    z[i] = rng.categorical_log(logw);
    t.add_unit(i, z[i]);
  }
}

int crt_draw(int n, double a, Rng& rng) {
  int tables = 0;
  for (int j = 1; j <= n; ++j)
    if (rng.uniform() * (j - 1 + a) < a) ++tables;
  return tables;
}

void update_lambda0(int l, ChainState& state, const Hyperparameters& hp, Rng& rng) {
  const FlowerTensor& t = state.tensors[l];
  const int K = t.K();
  std::vector<double> conc(K, hp.alpha0 / K);
  for (int ks = 0; ks < t.K_star(); ++ks) {
    if (t.cluster_total(ks) == 0) continue;
    for (int k = 0; k < K; ++k) conc[k] += crt_draw(t.cluster_count(ks, k), state.alpha * state.lambda0[l][k], rng);
  }
  state.lambda0[l] = rng.dirichlet(conc);
}

double log_p_alpha(double alpha, const ChainState& state, const Hyperparameters& hp) {
  if (!(alpha > 0.0)) return kNegInf;
  double out = (hp.a_alpha - 1.0) * std::log(alpha) - alpha / hp.b_alpha;
  for (int l = 0; l < state.d(); ++l) {
    const FlowerTensor& t = state.tensors[l];
    const std::vector<double>& lam = state.lambda0[l];
    double total_weight = 0.0;
    for (double v : lam) total_weight += alpha * v;
    for (int ks = 0; ks < t.K_star(); ++ks) {
      if (t.cluster_total(ks) == 0) continue;
      for (int k = 0; k < t.K(); ++k) out += log_rising(alpha * lam[k], t.cluster_count(ks, k));
      out -= log_rising(total_weight, t.cluster_total(ks));
    }
  }
  return out;
}

double log_p_phi(double phi, const ChainState& state, const Hyperparameters& hp) {
  if (!(phi > 0.0)) return kNegInf;
  double out = (hp.a_phi - 1.0) * std::log(phi) - phi / hp.b_phi;
  for (int l = 0; l < state.d(); ++l) {
    const FlowerTensor& t = state.tensors[l];
    for (int h = 0; h < t.p(); ++h) {
      const int d_h = t.levels()[h];
      const double a = phi / d_h;
      out += log_gamma(phi) - d_h * log_gamma(a) - log_gamma(phi + d_h);
      const std::vector<int> m = t.label_counts(h);
      for (int q = 0; q < d_h; ++q) out += log_gamma(a + (q < static_cast<int>(m.size()) ? m[q] : 0));
    }
  }
  return out;
}

bool update_alpha(ChainState& state, const Hyperparameters& hp, Rng& rng) {
  AdaptState& ad = state.adapt;
  const double cur = state.alpha;
  const double prop = std::exp(std::log(cur) + std::sqrt(ad.var_alpha()) * rng.normal());
  const double log_ratio =
      log_p_alpha(prop, state, hp) - log_p_alpha(cur, state, hp) + std::log(prop) - std::log(cur);
  ++ad.window_alpha_proposed;
  ++ad.alpha_proposed;
  if (!metropolis_accept(log_ratio, rng) || !std::isfinite(prop)) return false;
  ++ad.window_alpha_accepted;
  ++ad.alpha_accepted;
  state.alpha = prop;
  state.refresh_weights();
  return true;
}

bool update_phi(ChainState& state, const Hyperparameters& hp, Rng& rng) {
  AdaptState& ad = state.adapt;
  const double cur = state.phi;
  const double prop = std::exp(std::log(cur) + std::sqrt(ad.var_phi()) * rng.normal());
  const double log_ratio = log_p_phi(prop, state, hp) - log_p_phi(cur, state, hp) + std::log(prop) - std::log(cur);
  ++ad.window_phi_proposed;
  ++ad.phi_proposed;
  if (!metropolis_accept(log_ratio, rng) || !std::isfinite(prop)) return false;
  ++ad.window_phi_accepted;
  ++ad.phi_accepted;
  state.phi = prop;
  return true;
}

double adaptation_step(int iter) { return std::min(0.01, 1.0 / std::sqrt(static_cast<double>(std::max(iter, 1)))); }

void adapt_proposals(AdaptState& adapt, int iter, const Hyperparameters& hp) {
  if (iter <= 0 || iter % hp.adapt_every != 0) return;
  const double step = adaptation_step(iter);
  auto adjust = [&](double& log_var, int& acc, int& prop) {
    if (prop > 0) {
      const double rate = static_cast<double>(acc) / prop;
      if (rate > hp.target_accept)
        log_var += step;
      else if (rate < hp.target_accept)
        log_var -= step;
    }
    acc = 0;
    prop = 0;
  };
  adjust(adapt.log_var_alpha, adapt.window_alpha_accepted, adapt.window_alpha_proposed);
  adjust(adapt.log_var_phi, adapt.window_phi_accepted, adapt.window_phi_proposed);
}

std::vector<AtomStats> atom_statistics(const Eigen::MatrixXd& x, const Allocations& z, int K) {
  std::vector<AtomStats> st(K);
  for (std::size_t l = 0; l < z.size(); ++l)
    for (std::size_t i = 0; i < z[l].size(); ++i) {
      const double v = x(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(i));
      AtomStats& s = st[z[l][i]];
      s.count += 1.0;
      s.sum += v;
      s.sumsq += v * v;
    }
  return st;
}

double atom_log_likelihood(const AtomStats& st, double mu, double sigma2, double lower, double upper) {
  if (st.count == 0.0) return 0.0;
  const double sd = std::sqrt(sigma2);
  const double quad = st.sumsq - 2.0 * mu * st.sum + st.count * mu * mu;
  const double log_mass = log_std_normal_interval((lower - mu) / sd, (upper - mu) / sd);
  return -0.5 * quad / sigma2 - st.count * (std::log(sd) + kLogSqrt2Pi + log_mass);
}

double log_p_mu(double mu, double sigma2, const AtomStats& st, const Hyperparameters& hp) {
  if (mu < hp.lower || mu > hp.upper) return kNegInf;
  const double prior = -0.5 * (mu - hp.m0) * (mu - hp.m0) / (hp.s0 * hp.s0);
  return prior + atom_log_likelihood(st, mu, sigma2, hp.lower, hp.upper);
}

double log_p_sigma2(double sigma2, double mu, const AtomStats& st, const Hyperparameters& hp) {
  if (!(sigma2 > 0.0)) return kNegInf;
  const double prior = -(hp.a_sigma + 1.0) * std::log(sigma2) - hp.b_sigma / sigma2;
  return prior + atom_log_likelihood(st, mu, sigma2, hp.lower, hp.upper);
}

void update_atom(int k, ChainState& state, const AtomStats& st, const Hyperparameters& hp, Rng& rng) {
  double& mu = state.atoms.mu[k];
  double& s2 = state.atoms.sigma2[k];
  AtomCounters& ct = state.atom_counters;

  {
    const TruncatedNormal fwd(mu, hp.sigma2_mu, hp.lower, hp.upper);
    const double prop = fwd.quantile(rng.uniform_open());
    const TruncatedNormal rev(prop, hp.sigma2_mu, hp.lower, hp.upper);
    const double log_ratio = log_p_mu(prop, s2, st, hp) - log_p_mu(mu, s2, st, hp) + rev.log_pdf(mu) -
                             fwd.log_pdf(prop);
    ++ct.mu_proposed;
    if (metropolis_accept(log_ratio, rng)) {
      mu = prop;
      ++ct.mu_accepted;
    }
  }
  {
    const TruncatedNormal fwd(s2, hp.sigma2_sigma, std::max(0.0, s2 - 1.0), s2 + 1.0);
    const double prop = fwd.quantile(rng.uniform_open());
    ++ct.sigma2_proposed;
    if (prop > 0.0) {
      const TruncatedNormal rev(prop, hp.sigma2_sigma, std::max(0.0, prop - 1.0), prop + 1.0);
      const double log_ratio = log_p_sigma2(prop, mu, st, hp) - log_p_sigma2(s2, mu, st, hp) + rev.log_pdf(s2) -
                               fwd.log_pdf(prop);
      if (metropolis_accept(log_ratio, rng)) {
        s2 = prop;
        ++ct.sigma2_accepted;
      }
    }
  }
}

Eigen::MatrixXd rao_blackwell_lambda(const FlowerTensor& t, std::span<const double> alpha_lambda0) {
  const int K = t.K();
  double alpha = 0.0;
  for (double v : alpha_lambda0) alpha += v;
  Eigen::MatrixXd out(t.K_star(), K);
  for (int ks = 0; ks < t.K_star(); ++ks) {
    const double denom = alpha + t.cluster_total(ks);
    for (int k = 0; k < K; ++k) out(ks, k) = (alpha_lambda0[k] + t.cluster_count(ks, k)) / denom;
  }
  return out;
}

std::vector<std::vector<double>> rao_blackwell_eta(const FlowerTensor& t, double phi) {
  std::vector<std::vector<double>> out(t.p());
  for (int h = 0; h < t.p(); ++h) {
    const int d_h = t.levels()[h];
    const std::vector<int> m = t.label_counts(h);
    out[h].resize(d_h);
    for (int q = 0; q < d_h; ++q)
      out[h][q] = (phi / d_h + (q < static_cast<int>(m.size()) ? m[q] : 0)) / (phi + d_h);
  }
  return out;
}

std::vector<double> rao_blackwell_eta_star(const FlowerTensor& t, double phi_star) {
  std::vector<double> out(t.K_star());
  for (int ks = 0; ks < t.K_star(); ++ks)
    out[ks] = (phi_star / t.K_star() + t.m_star(ks)) / (phi_star + t.volume());
  return out;
}

}  // namespace flower
