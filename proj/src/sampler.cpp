#include "flower/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "flower/copula.hpp"
#include "flower/dist.hpp"
#include "flower/error.hpp"

namespace flower {

Hyperparameters resolve_hyperparameters(const Dataset& data, Hyperparameters hp) {
  const double n_total = static_cast<double>(data.x.size());
  if (std::isnan(hp.m0)) hp.m0 = n_total > 0 ? data.x.mean() : 0.5 * (hp.lower + hp.upper);
  if (std::isnan(hp.s0)) {
    double sd = 0.0;
    if (n_total > 1) {
      const double m = data.x.mean();
      sd = std::sqrt((data.x.array() - m).square().sum() / (n_total - 1.0));
    }
    hp.s0 = sd > 0.0 ? sd : 0.25 * (hp.upper - hp.lower);
  }
  return hp;
}

ChainState initial_state(const Dataset& data, const Hyperparameters& hp) {
  const int d = data.d(), n = data.n(), K = hp.K;
  ChainState st;
  st.z.assign(d, std::vector<int>(n, 0));
  for (int l = 0; l < d; ++l) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return data.x(l, a) < data.x(l, b); });
    for (int r = 0; r < n; ++r)
      st.z[l][order[r]] = std::min(K - 1, static_cast<int>(static_cast<long long>(r) * K / std::max(n, 1)));
  }
  st.lambda0.assign(d, std::vector<double>(K, 1.0 / K));
  st.alpha = hp.a_alpha * hp.b_alpha;
  st.phi = hp.a_phi * hp.b_phi;
  st.atoms.mu.resize(K);
  st.atoms.sigma2.resize(K);
  for (int k = 0; k < K; ++k) {
    st.atoms.mu[k] = hp.lower + (hp.upper - hp.lower) * (k + 0.5) / K;
    st.atoms.sigma2[k] = hp.b_sigma;
  }
  for (int l = 0; l < d; ++l) {
    st.tensors.emplace_back(data.levels, K, hp.K_star);
    st.tensors.back().attach(data.c, st.z[l]);
  }
  st.copula = CopulaState(CopulaParams::centered(std::max(d, 1), hp.grid_b, hp.grid_theta));
  st.adapt.log_var_alpha = std::log(hp.sigma2_alpha);
  st.adapt.log_var_phi = std::log(hp.sigma2_phi);
  st.refresh_weights();
  return st;
}

Sampler::Sampler(const Dataset& data, Hyperparameters hp) : data_(data) {
  data_.fill_defaults();
  hp.validate(data_.levels);
  data_.validate(hp.lower, hp.upper);
  if (data_.d() < 1) throw DataError("at least one response coordinate is required");
  hp_ = resolve_hyperparameters(data_, hp);
  state_ = initial_state(data_, hp_);
  for (int l = 0; l < data_.d(); ++l) {
    z_rng_.push_back(Rng::derive(hp_.seed, "z", l));
    lambda_rng_.push_back(Rng::derive(hp_.seed, "lambda0", l));
    partition_rng_.push_back(Rng::derive(hp_.seed, "partition", l));
  }
  hyper_rng_ = Rng::derive(hp_.seed, "hyper");
  atom_rng_ = Rng::derive(hp_.seed, "atoms");
  copula_rng_ = Rng::derive(hp_.seed, "copula");
}

template <typename F>
void Sampler::for_each_coordinate(F&& f) {
  const int d = data_.d();
  const int workers = std::min(hp_.threads, d);
  if (workers <= 1) {
    for (int l = 0; l < d; ++l) f(l);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int l = w; l < d; l += workers) f(l);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void Sampler::coordinate_marginal_block(int l) {
  if (blocks.z) update_z(l, data_.x, state_, kernels_, z_rng_[l]);
  if (blocks.lambda0) update_lambda0(l, state_, hp_, lambda_rng_[l]);
}

void Sampler::coordinate_partition_block(int l) {
  if (!blocks.partitions) return;
  FlowerTensor& t = state_.tensors[l];
  const CollapsedWeights w = state_.weights(l, hp_.phi_star);
  for (int h = 0; h < t.p(); ++h) t.joint_update_s(h, data_.c, state_.z[l], w, partition_rng_[l]);
  t.gibbs_sweep(w, partition_rng_[l]);
}

void Sampler::copula_block() {
  if (!blocks.copula || data_.d() < 2) return;
  Eigen::MatrixXd y;
  if (hp_.latent == LatentTransform::component) {
    y = latent_y(data_.x, state_.z, state_.atoms, hp_.lower, hp_.upper);
  } else {
    const KernelTable kernels(state_.atoms, hp_.lower, hp_.upper);
    y.resize(data_.d(), data_.n());
    for (int l = 0; l < data_.d(); ++l) {
      const FlowerTensor& t = state_.tensors[l];
      const Eigen::MatrixXd lam = rao_blackwell_lambda(t, state_.alpha_lambda0(l));
      std::vector<double> row(hp_.K);
      for (int i = 0; i < data_.n(); ++i) {
        const int ks = t.unit_cluster(i);
        for (int k = 0; k < hp_.K; ++k) row[k] = lam(ks, k);
        y(l, i) = clamped_normal_score(kernels.mixture_cdf(row, data_.x(l, i)));
      }
    }
  }
  const LatentScatter ys = LatentScatter::from(y);
  update_b(state_.copula, ys, copula_rng_);
  update_theta(state_.copula, ys, copula_rng_);
}

void Sampler::iterate(int iter) {
  kernels_ = KernelTable(state_.atoms, hp_.lower, hp_.upper);
  for_each_coordinate([this](int l) { coordinate_marginal_block(l); });
  state_.refresh_weights();

  if (blocks.alpha) update_alpha(state_, hp_, hyper_rng_);
  if (blocks.phi) update_phi(state_, hp_, hyper_rng_);

  if (blocks.atoms) {
    const std::vector<AtomStats> stats = atom_statistics(data_.x, state_.z, hp_.K);
    for (int k = 0; k < hp_.K; ++k) update_atom(k, state_, stats[k], hp_, atom_rng_);
  }

  for_each_coordinate([this](int l) { coordinate_partition_block(l); });
  copula_block();

  if (iter <= hp_.burnin) adapt_proposals(state_.adapt, iter, hp_);
}

Draw Sampler::snapshot(int iter) const {
  Draw dr;
  dr.iteration = iter;
  for (int l = 0; l < data_.d(); ++l) {
    const FlowerTensor& t = state_.tensors[l];
    CoordinateDraw cd;
    cd.s = t.s();
    cd.shape = t.shape();
    cd.s_star = t.s_star();
    cd.lambda0 = state_.lambda0[l];
    cd.lambda_hat = rao_blackwell_lambda(t, state_.alpha_lambda0(l));
    cd.eta_hat = rao_blackwell_eta(t, state_.phi);
    cd.eta_star_hat = rao_blackwell_eta_star(t, hp_.phi_star);
    dr.coords.push_back(std::move(cd));
  }
  dr.mu = state_.atoms.mu;
  dr.sigma2 = state_.atoms.sigma2;
  dr.alpha = state_.alpha;
  dr.phi = state_.phi;
  const CopulaParams& cp = state_.copula.params;
  dr.b_idx = cp.b_idx;
  dr.theta_idx = cp.theta_idx;
  dr.b = cp.b_values();
  dr.theta = cp.theta_values();
  dr.R = state_.copula.corr.R;
  return dr;
}

AcceptanceSummary Sampler::acceptance() const {
  auto rate = [](std::uint64_t a, std::uint64_t p) { return p == 0 ? 0.0 : static_cast<double>(a) / p; };
  const ChainState& s = state_;
  AcceptanceSummary out;
  out.alpha = rate(s.adapt.alpha_accepted, s.adapt.alpha_proposed);
  out.phi = rate(s.adapt.phi_accepted, s.adapt.phi_proposed);
  out.mu = rate(s.atom_counters.mu_accepted, s.atom_counters.mu_proposed);
  out.sigma2 = rate(s.atom_counters.sigma2_accepted, s.atom_counters.sigma2_proposed);
  out.b = rate(s.copula.b_accepted, s.copula.b_proposed);
  out.theta = rate(s.copula.theta_accepted, s.copula.theta_proposed);
  for (const FlowerTensor& t : s.tensors) out.joint_s.push_back(rate(t.joint_accepted, t.joint_proposed));
  out.final_var_alpha = s.adapt.var_alpha();
  out.final_var_phi = s.adapt.var_phi();
  return out;
}

void Sampler::reset_counters() {
  ChainState& s = state_;
  s.adapt.alpha_accepted = s.adapt.alpha_proposed = 0;
  s.adapt.phi_accepted = s.adapt.phi_proposed = 0;
  s.atom_counters = AtomCounters{};
  s.copula.b_accepted = s.copula.b_proposed = 0;
  s.copula.theta_accepted = s.copula.theta_proposed = 0;
  for (FlowerTensor& t : s.tensors) t.joint_accepted = t.joint_proposed = 0;
}

PosteriorDraws Sampler::run(DrawSink* sink, const std::function<void(int, const Sampler&)>& on_iteration) {
  PosteriorDraws out;
  out.info = ModelInfo::from(data_, hp_);
  out.draws.reserve(hp_.retained());
  if (sink) sink->begin(out.info);
  for (int iter = 1; iter <= hp_.iterations; ++iter) {
    iterate(iter);
    if (iter == hp_.burnin) reset_counters();
    if (iter > hp_.burnin && (iter - hp_.burnin) % hp_.thin == 0) {
      out.draws.push_back(snapshot(iter));
      if (sink) sink->write(out.draws.back());
    }
    if (on_iteration) on_iteration(iter, *this);
  }
  out.acceptance = acceptance();
  if (sink) sink->end(out.acceptance);
  return out;
}

void Sampler::check_invariants() const {
  for (int l = 0; l < data_.d(); ++l) {
    state_.tensors[l].check_invariants(data_.c, state_.z[l]);
    double sum = 0.0;
    for (double v : state_.lambda0[l]) {
      if (!(v >= 0.0)) throw std::logic_error("lambda0 has a negative entry");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw std::logic_error("lambda0 does not sum to one");
  }
  for (int k = 0; k < hp_.K; ++k) {
    if (state_.atoms.mu[k] < hp_.lower || state_.atoms.mu[k] > hp_.upper)
      throw std::logic_error("atom location outside the support");
    if (!(state_.atoms.sigma2[k] > 0.0)) throw std::logic_error("atom variance is not positive");
  }
  if (!(state_.alpha > 0.0) || !(state_.phi > 0.0)) throw std::logic_error("concentration is not positive");
}

}  // namespace flower
