#include "flower/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "flower/dist.hpp"
#include "flower/error.hpp"
#include "flower/rng.hpp"

namespace flower {

int hamming_ball_size(int d_h) { return 1 + d_h * (d_h - 1); }

std::vector<int> hamming_ball_propose(std::span<const int> s, Rng& rng) {
  std::vector<int> out(s.begin(), s.end());
  const int d_h = static_cast<int>(s.size());
  const int r = rng.uniform_int(hamming_ball_size(d_h));
  if (r == 0) return out;
  const int pos = (r - 1) / (d_h - 1);
  int label = (r - 1) % (d_h - 1);
  if (label >= out[pos]) ++label;  // skip the current label
  out[pos] = label;
  return out;
}

int canonicalize(std::vector<int>& labels) {
  std::vector<int> map;
  for (int& v : labels) {
    if (v >= static_cast<int>(map.size())) map.resize(v + 1, -1);
    if (map[v] < 0) map[v] = std::count_if(map.begin(), map.end(), [](int m) { return m >= 0; });
    v = map[v];
  }
  return static_cast<int>(std::count_if(map.begin(), map.end(), [](int m) { return m >= 0; }));
}

bool is_canonical(std::span<const int> labels) {
  int next = 0;
  for (int v : labels) {
    if (v > next || v < 0) return false;
    if (v == next) ++next;
  }
  return true;
}

double CollapsedWeights::alpha() const { return std::accumulate(alpha_lambda0.begin(), alpha_lambda0.end(), 0.0); }

namespace {

std::vector<int> strides_of(const std::vector<int>& shape) {
  std::vector<int> st(shape.size());
  int acc = 1;
  for (int h = static_cast<int>(shape.size()) - 1; h >= 0; --h) {
    st[h] = acc;
    acc *= shape[h];
  }
  return st;
}

int product(const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 1, std::multiplies<>()); }

// log Gamma(a + n) - log Gamma(a), zero for n = 0.
inline double log_rising(double a, int n) { return n == 0 ? 0.0 : log_gamma(a + n) - log_gamma(a); }

double first_layer_term(const std::vector<int>& counts, int d_h, double phi) {
  double out = 0.0;
  const double a = phi / d_h;
  for (int q = 0; q < d_h; ++q) out += log_gamma(a + (q < static_cast<int>(counts.size()) ? counts[q] : 0));
  return out;
}

double second_layer_term(std::span<const int> m_star, int volume, double phi_star) {
  const double a = phi_star / static_cast<double>(m_star.size());
  double out = 0.0;
  for (int m : m_star) out += log_gamma(a + m);
  return out - log_gamma(phi_star + volume);
}

std::vector<int> counts_of(std::span<const int> labels, int K) {
  std::vector<int> m(K, 0);
  for (int v : labels) ++m[v];
  return m;
}

}  // namespace

FlowerTensor::FlowerTensor(std::vector<int> levels, int K, int K_star)
    : levels_(std::move(levels)), K_(K), K_star_(K_star) {
  if (K_ < 1 || K_star_ < 1) throw ParameterError("FlowerTensor: K and K_star must be positive");
  for (int d : levels_)
    if (d < 1) throw ParameterError("FlowerTensor: every covariate needs at least one level");
  s_.clear();
  for (int d : levels_) s_.emplace_back(d, 0);
  shape_.assign(levels_.size(), 1);
  strides_ = strides_of(shape_);
  s_star_.assign(1, 0);
  m_star_.assign(K_star_, 0);
  m_star_[0] = 1;
  cell_counts_.assign(K_, 0);
  cell_totals_.assign(1, 0);
  cluster_counts_.assign(static_cast<std::size_t>(K_star_) * K_, 0);
  cluster_totals_.assign(K_star_, 0);
}

std::size_t FlowerTensor::storage_cells() const { return s_star_.size(); }

int FlowerTensor::cell_of(std::span<const int> combo) const {
  if (static_cast<int>(combo.size()) != p()) throw ParameterError("cell_of: combination has the wrong length");
  int cell = 0;
  for (int h = 0; h < p(); ++h) {
    if (combo[h] < 0 || combo[h] >= levels_[h]) throw ParameterError("cell_of: covariate level out of range");
    cell += s_[h][combo[h]] * strides_[h];
  }
  return cell;
}

std::vector<int> FlowerTensor::label_counts(int h) const { return counts_of(s_[h], shape_[h]); }

void FlowerTensor::rebuild(const Eigen::MatrixXi& c, std::span<const int> z) {
  const int n = static_cast<int>(z.size());
  if (p() > 0 && c.cols() != n) throw ParameterError("FlowerTensor: covariates and allocations disagree on n");
  if (c.rows() != p()) throw ParameterError("FlowerTensor: covariate matrix has the wrong number of rows");
  const int V = volume();
  unit_cell_.assign(n, 0);
  cell_counts_.assign(static_cast<std::size_t>(V) * K_, 0);
  cell_totals_.assign(V, 0);
  cluster_counts_.assign(static_cast<std::size_t>(K_star_) * K_, 0);
  cluster_totals_.assign(K_star_, 0);
  m_star_.assign(K_star_, 0);
  for (int v : s_star_) ++m_star_[v];
  for (int i = 0; i < n; ++i) {
    int cell = 0;
    for (int h = 0; h < p(); ++h) cell += s_[h][c(h, i)] * strides_[h];
    unit_cell_[i] = cell;
    const int k = z[i];
    if (k < 0 || k >= K_) throw ParameterError("FlowerTensor: allocation out of range");
    ++cell_counts_[cell * K_ + k];
    ++cell_totals_[cell];
    ++cluster_counts_[s_star_[cell] * K_ + k];
    ++cluster_totals_[s_star_[cell]];
  }
}

void FlowerTensor::attach(const Eigen::MatrixXi& c, std::span<const int> z) { rebuild(c, z); }

void FlowerTensor::set_state(std::vector<std::vector<int>> s, std::vector<int> s_star, const Eigen::MatrixXi& c,
                             std::span<const int> z) {
  if (static_cast<int>(s.size()) != p()) throw ParameterError("set_state: wrong number of first-layer partitions");
  std::vector<int> shape(p());
  for (int h = 0; h < p(); ++h) {
    if (static_cast<int>(s[h].size()) != levels_[h]) throw ParameterError("set_state: partition length mismatch");
    if (!is_canonical(s[h])) throw ParameterError("set_state: first-layer labels must be canonical");
    shape[h] = *std::max_element(s[h].begin(), s[h].end()) + 1;
  }
  if (static_cast<int>(s_star.size()) != product(shape))
    throw ParameterError("set_state: second-layer tensor does not match the first-layer shape");
  for (int v : s_star)
    if (v < 0 || v >= K_star_) throw ParameterError("set_state: second-layer label out of range");
  s_ = std::move(s);
  shape_ = std::move(shape);
  strides_ = strides_of(shape_);
  s_star_ = std::move(s_star);
  rebuild(c, z);
}

void FlowerTensor::remove_unit(int i, int k) {
  const int cell = unit_cell_[i];
  const int ks = s_star_[cell];
  --cell_counts_[cell * K_ + k];
  --cell_totals_[cell];
  --cluster_counts_[ks * K_ + k];
  --cluster_totals_[ks];
}

void FlowerTensor::add_unit(int i, int k) {
  const int cell = unit_cell_[i];
  const int ks = s_star_[cell];
  ++cell_counts_[cell * K_ + k];
  ++cell_totals_[cell];
  ++cluster_counts_[ks * K_ + k];
  ++cluster_totals_[ks];
}

double FlowerTensor::cluster_log_likelihood(std::span<const int> counts, std::span<const int> totals,
                                            const CollapsedWeights& w) const {
  const double alpha = w.alpha();
  double out = 0.0;
  for (int ks = 0; ks < K_star_; ++ks) {
    if (totals[ks] == 0) continue;
    for (int k = 0; k < K_; ++k) out += log_rising(w.alpha_lambda0[k], counts[ks * K_ + k]);
    out -= log_rising(alpha, totals[ks]);
  }
  return out;
}

double FlowerTensor::log_target(int h, const CollapsedWeights& w) const {
  return cluster_log_likelihood(cluster_counts_, cluster_totals_, w) +
         first_layer_term(label_counts(h), levels_[h], w.phi) + second_layer_term(m_star_, volume(), w.phi_star);
}

bool FlowerTensor::joint_update_s(int h, const Eigen::MatrixXi& c, std::span<const int> z, const CollapsedWeights& w,
                                  Rng& rng) {
  ++joint_proposed;
  std::vector<int> s_new = hamming_ball_propose(s_[h], rng);
  const int K_h = canonicalize(s_new);

  std::vector<int> shape = shape_;
  shape[h] = K_h;
  const std::vector<int> strides = strides_of(shape);
  const int V_new = product(shape);
  const int V_old = volume();

  std::vector<int> s_star(V_new);
  for (int& v : s_star) v = rng.uniform_int(K_star_);
  std::vector<int> m_star(K_star_, 0);
  for (int v : s_star) ++m_star[v];

  const int n = static_cast<int>(z.size());
  std::vector<int> unit_cell(n);
  std::vector<int> cell_counts(static_cast<std::size_t>(V_new) * K_, 0);
  std::vector<int> cell_totals(V_new, 0);
  for (int i = 0; i < n; ++i) {
    int cell = 0;
    for (int g = 0; g < p(); ++g) {
      const int lev = c(g, i);
      cell += (g == h ? s_new[lev] : s_[g][lev]) * strides[g];
    }
    unit_cell[i] = cell;
    ++cell_counts[cell * K_ + z[i]];
    ++cell_totals[cell];
  }
  std::vector<int> cluster_counts(static_cast<std::size_t>(K_star_) * K_, 0);
  std::vector<int> cluster_totals(K_star_, 0);
  for (int cell = 0; cell < V_new; ++cell) {
    if (cell_totals[cell] == 0) continue;
    const int ks = s_star[cell];
    for (int k = 0; k < K_; ++k) cluster_counts[ks * K_ + k] += cell_counts[cell * K_ + k];
    cluster_totals[ks] += cell_totals[cell];
  }

  const double log_new = cluster_log_likelihood(cluster_counts, cluster_totals, w) +
                         first_layer_term(counts_of(s_new, K_h), levels_[h], w.phi) +
                         second_layer_term(m_star, V_new, w.phi_star);
  const double log_ratio = log_new - log_target(h, w) + (V_new - V_old) * std::log(static_cast<double>(K_star_));
  if (!(log_ratio >= 0.0 || std::log(rng.uniform_open()) < log_ratio)) return false;

  ++joint_accepted;
  s_[h] = std::move(s_new);
  shape_ = std::move(shape);
  strides_ = strides;
  s_star_ = std::move(s_star);
  m_star_ = std::move(m_star);
  unit_cell_ = std::move(unit_cell);
  cell_counts_ = std::move(cell_counts);
  cell_totals_ = std::move(cell_totals);
  cluster_counts_ = std::move(cluster_counts);
  cluster_totals_ = std::move(cluster_totals);
  return true;
}

void FlowerTensor::move_cell_counts(int cell, int from, int to) {
  if (from == to) return;
  for (int k = 0; k < K_; ++k) {
    const int v = cell_counts_[cell * K_ + k];
    cluster_counts_[from * K_ + k] -= v;
    cluster_counts_[to * K_ + k] += v;
  }
  cluster_totals_[from] -= cell_totals_[cell];
  cluster_totals_[to] += cell_totals_[cell];
  --m_star_[from];
  ++m_star_[to];
}

std::vector<double> FlowerTensor::s_star_log_conditional(int cell, const CollapsedWeights& w) const {
  const int cur = s_star_[cell];
  const double alpha = w.alpha();
  const double prior = w.phi_star / K_star_;
  const int n_cell = cell_totals_[cell];
  std::vector<double> logw(K_star_);
  for (int s = 0; s < K_star_; ++s) {
    const bool self = (s == cur);
    const int m = m_star_[s] - (self ? 1 : 0);
    double lw = std::log(prior + m);
    if (n_cell > 0) {
      for (int k = 0; k < K_; ++k) {
        const int nk = cell_counts_[cell * K_ + k];
        if (nk == 0) continue;
        const int rest = cluster_counts_[s * K_ + k] - (self ? nk : 0);
        lw += log_rising(w.alpha_lambda0[k] + rest, nk);
      }
      const int rest_total = cluster_totals_[s] - (self ? n_cell : 0);
      lw -= log_rising(alpha + rest_total, n_cell);
    }
    logw[s] = lw;
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (double v : logw) total += std::exp(v - mx);
  const double log_total = mx + std::log(total);
  for (double& v : logw) v -= log_total;
  return logw;
}

void FlowerTensor::gibbs_update_cell(int cell, const CollapsedWeights& w, Rng& rng) {
  const std::vector<double> logp = s_star_log_conditional(cell, w);
  const int next = rng.categorical_log(logp);
  move_cell_counts(cell, s_star_[cell], next);
  s_star_[cell] = next;
}

void FlowerTensor::gibbs_sweep(const CollapsedWeights& w, Rng& rng) {
  if (K_star_ == 1) return;
  for (int cell = 0; cell < volume(); ++cell) gibbs_update_cell(cell, w, rng);
}

void FlowerTensor::check_invariants(const Eigen::MatrixXi& c, std::span<const int> z) const {
  auto fail = [](const std::string& what) { throw std::logic_error("FlowerTensor invariant violated: " + what); };
  for (int h = 0; h < p(); ++h) {
    if (!is_canonical(s_[h])) fail("non-canonical first layer");
    if (*std::max_element(s_[h].begin(), s_[h].end()) + 1 != shape_[h]) fail("shape does not match occupied labels");
  }
  if (volume() != product(shape_)) fail("tensor volume differs from the product of cluster counts");
  if (static_cast<int>(cell_totals_.size()) != volume() ||
      cell_counts_.size() != static_cast<std::size_t>(volume()) * K_)
    fail("cell tables have the wrong size");
  FlowerTensor fresh = *this;
  fresh.rebuild(c, z);
  if (fresh.unit_cell_ != unit_cell_) fail("unit cells");
  if (fresh.cell_counts_ != cell_counts_ || fresh.cell_totals_ != cell_totals_) fail("cell counts");
  if (fresh.cluster_counts_ != cluster_counts_ || fresh.cluster_totals_ != cluster_totals_) fail("cluster counts");
  if (fresh.m_star_ != m_star_) fail("second-layer occupancy");
  if (std::accumulate(m_star_.begin(), m_star_.end(), 0) != volume()) fail("occupancy does not sum to the volume");
}

}  // namespace flower
