#include "flower/copula.hpp"

#include <cmath>
#include <string>

#include "flower/atoms.hpp"
#include "flower/dist.hpp"
#include "flower/error.hpp"
#include "flower/rng.hpp"

namespace flower {

CopulaParams CopulaParams::centered(int d, int grid_b_size, int grid_theta_size) {
  CopulaParams p;
  p.d = d;
  p.grid_b = ParameterGrid{grid_b_size, kGridHalfWidthB};
  p.grid_theta = ParameterGrid{grid_theta_size, kGridHalfWidthTheta};
  p.b_idx.assign(std::max(d - 1, 0), p.grid_b.center());
  p.theta_idx.assign(std::max(num_theta(d), 0), p.grid_theta.center());
  return p;
}

Eigen::VectorXd CopulaParams::b_values() const {
  Eigen::VectorXd v(b_idx.size());
  for (std::size_t i = 0; i < b_idx.size(); ++i) v[i] = b(static_cast<int>(i));
  return v;
}

Eigen::VectorXd CopulaParams::theta_values() const {
  Eigen::VectorXd v(theta_idx.size());
  for (std::size_t j = 0; j < theta_idx.size(); ++j) v[j] = theta(static_cast<int>(j));
  return v;
}

void CopulaParams::validate() const {
  if (d < 1) throw ParameterError("copula: dimension must be positive");
  if (grid_b.size < 3 || grid_theta.size < 3) throw ParameterError("copula: grid sizes must be at least 3");
  if (static_cast<int>(b_idx.size()) != d - 1 || static_cast<int>(theta_idx.size()) != num_theta(d))
    throw ParameterError("copula: parameter vector lengths do not match the dimension");
  for (int m : b_idx)
    if (m < 0 || m >= grid_b.size) throw ParameterError("copula: b grid index out of range");
  for (int m : theta_idx)
    if (m < 0 || m >= grid_theta.size) throw ParameterError("copula: theta grid index out of range");
}

double CorrelationMatrix::quad_form(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  const Eigen::VectorXd w = chol_V.triangularView<Eigen::Lower>().solve(y);
  return w.squaredNorm();
}

double CorrelationMatrix::trace_precision_times(const Eigen::MatrixXd& scatter) const {
  return (precision.cwiseProduct(scatter)).sum();
}

CorrelationMatrix build_V(std::span<const double> b, std::span<const double> theta) {
  const int d = static_cast<int>(b.size()) + 1;
  if (static_cast<int>(theta.size()) != num_theta(d))
    throw ParameterError("build_V: expected " + std::to_string(num_theta(d)) + " angles");
  for (double v : b)
    if (!(v > -1.0 && v < 1.0)) throw ParameterError("build_V: b must lie in (-1, 1)");

  CorrelationMatrix out;
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(d, d);
  V(0, 0) = 1.0;
  out.logdet = 0.0;
  for (int row = 1; row < d; ++row) {
    const double bl = b[row - 1];
    // row (0-based) uses angles starting at i1(row+1) - 1 = (row^2 - 3 row + 2) / 2
    const int first = (row * row - 3 * row + 2) / 2;
    const int n_angles = row - 1;
    double running = 1.0;  // product of cosines so far
    for (int col = 0; col < row; ++col) {
      double dir;
      if (col < n_angles) {
        dir = running * std::sin(theta[first + col]);
        running *= std::cos(theta[first + col]);
      } else {
        dir = running;
      }
      V(row, col) = bl * dir;
    }
    V(row, row) = std::sqrt(1.0 - bl * bl);
    out.logdet += std::log1p(-bl * bl);
  }
  out.chol_V = V;
  out.R = V * V.transpose();
  const Eigen::MatrixXd Vinv =
      V.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
  out.precision = Vinv.transpose() * Vinv;
  return out;
}

CorrelationMatrix build_V(const CopulaParams& params) {
  params.validate();
  const Eigen::VectorXd b = params.b_values();
  const Eigen::VectorXd t = params.theta_values();
  return build_V(std::span<const double>(b.data(), b.size()), std::span<const double>(t.data(), t.size()));
}

double copula_log_density(const Eigen::Ref<const Eigen::VectorXd>& y, const CorrelationMatrix& R) {
  if (y.size() != R.dim()) throw ParameterError("copula_log_density: dimension mismatch");
  return -0.5 * R.logdet - 0.5 * (R.quad_form(y) - y.squaredNorm());
}

Eigen::MatrixXd latent_y(const Eigen::MatrixXd& x, const Allocations& z, const Atoms& atoms, double lower,
                         double upper) {
  if (static_cast<Eigen::Index>(z.size()) != x.rows())
    throw ParameterError("latent_y: allocation rows do not match the responses");
  for (const auto& row : z)
    if (static_cast<Eigen::Index>(row.size()) != x.cols())
      throw ParameterError("latent_y: allocation columns do not match the responses");
  std::vector<TruncatedNormal> kernels;
  kernels.reserve(atoms.size());
  for (int k = 0; k < atoms.size(); ++k) kernels.emplace_back(atoms.mu[k], atoms.sigma2[k], lower, upper);

  Eigen::MatrixXd y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i)
    for (Eigen::Index l = 0; l < x.rows(); ++l) y(l, i) = clamped_normal_score(kernels[z[l][i]].cdf(x(l, i)));
  return y;
}

CopulaState::CopulaState(CopulaParams p) : params(std::move(p)) { refresh(); }

LatentScatter LatentScatter::from(const Eigen::MatrixXd& y) {
  LatentScatter s;
  s.n = static_cast<int>(y.cols());
  s.scatter = y * y.transpose();
  return s;
}

double log_p_b(const CopulaParams& params, const LatentScatter& ys) {
  const CorrelationMatrix R = build_V(params);
  return -0.5 * ys.n * R.logdet - 0.5 * R.trace_precision_times(ys.scatter);
}

double log_p_theta(const CopulaParams& params, const LatentScatter& ys) {
  const CorrelationMatrix R = build_V(params);
  return -0.5 * R.trace_precision_times(ys.scatter);
}

int grid_neighbourhood_size(int idx, int size) { return (idx == 0 || idx == size - 1) ? 2 : 3; }

namespace {

int propose_neighbour(int idx, int size, Rng& rng) {
  if (idx == 0) return rng.uniform_int(2);
  if (idx == size - 1) return size - 2 + rng.uniform_int(2);
  return idx - 1 + rng.uniform_int(3);
}

template <typename LogTarget>
bool grid_step(std::vector<int>& indices, int pos, int size, const CopulaParams& base, LogTarget&& log_target,
               Rng& rng) {
  const int cur = indices[pos];
  const int prop = propose_neighbour(cur, size, rng);
  if (prop == cur) return true;

  CopulaParams proposed = base;
  auto& target_indices = (&indices == &base.b_idx) ? proposed.b_idx : proposed.theta_idx;
  target_indices[pos] = prop;
  const double log_ratio = log_target(proposed) - log_target(base) +
                           std::log(static_cast<double>(grid_neighbourhood_size(cur, size))) -
                           std::log(static_cast<double>(grid_neighbourhood_size(prop, size)));
  if (log_ratio >= 0.0 || std::log(rng.uniform_open()) < log_ratio) {
    indices[pos] = prop;
    return true;
  }
  return false;
}

}  // namespace

void update_b(CopulaState& state, const LatentScatter& ys, Rng& rng) {
  auto& p = state.params;
  for (int s = 0; s < static_cast<int>(p.b_idx.size()); ++s) {
    const bool acc =
        grid_step(p.b_idx, s, p.grid_b.size, p, [&](const CopulaParams& q) { return log_p_b(q, ys); }, rng);
    ++state.b_proposed;
    state.b_accepted += acc ? 1 : 0;
  }
  state.refresh();
}

void update_theta(CopulaState& state, const LatentScatter& ys, Rng& rng) {
  auto& p = state.params;
  for (int s = 0; s < static_cast<int>(p.theta_idx.size()); ++s) {
    const bool acc = grid_step(p.theta_idx, s, p.grid_theta.size, p,
                               [&](const CopulaParams& q) { return log_p_theta(q, ys); }, rng);
    ++state.theta_proposed;
    state.theta_accepted += acc ? 1 : 0;
  }
  state.refresh();
}

}  // namespace flower
