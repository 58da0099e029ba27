#include "checks.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "flower/copula.hpp"
#include "flower/dist.hpp"
#include "flower/error.hpp"
#include "flower/partition.hpp"
#include "flower/rng.hpp"
#include "flower/sampler.hpp"

namespace flower::checks {

double integrate(const std::function<double(double)>& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  // Equal panels keep narrow peaks from slipping between the first nodes.
  constexpr int kPanels = 64;
  const double w = (b - a) / kPanels;
  double total = 0.0;
  for (int j = 0; j < kPanels; ++j) {
    const double lo = a + j * w, hi = j + 1 == kPanels ? b : a + (j + 1) * w;
    total += GK::integrate(f, lo, hi, 8, 1e-12);
  }
  return total;
}

double batch_means_se(const std::vector<double>& series, int batches) {
  const std::size_t len = series.size() / batches;
  if (len < 2) throw ParameterError("batch_means_se: series too short");
  std::vector<double> means(batches);
  for (int b = 0; b < batches; ++b)
    means[b] = std::accumulate(series.begin() + b * len, series.begin() + (b + 1) * len, 0.0) / len;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  return std::sqrt(ss / (batches - 1) / batches);
}

namespace {

std::vector<TruncNormalParams> parameter_lattice(Rng& rng, int count) {
  std::vector<TruncNormalParams> out = {
      {5.0, 1.0, -100.0, 100.0}, {0.0, 1.0, 0.0, 1.0},   {0.0, 1.0, 0.0, 10.0},
      {50.0, 1.0, 0.0, 10.0},    {-30.0, 4.0, 0.0, 10.0}, {5.0, 0.0004, 0.0, 10.0},
      {0.0, 1.0, 9.0, 12.0},     {2.0, 25.0, 0.0, 10.0},
  };
  while (static_cast<int>(out.size()) < count) {
    TruncNormalParams p;
    p.mean = -5.0 + 20.0 * rng.uniform();
    p.variance = std::exp(std::log(0.01) + (std::log(25.0) - std::log(0.01)) * rng.uniform());
    p.lower = -3.0 + 8.0 * rng.uniform();
    p.upper = p.lower + 0.5 + 11.5 * rng.uniform();
    out.push_back(p);
  }
  return out;
}

std::string describe(const TruncNormalParams& p) {
  std::ostringstream os;
  os << "TN(" << p.mean << ", " << p.variance << ", [" << p.lower << ", " << p.upper << "])";
  return os.str();
}

CheckResult finish(std::string name, double worst, double tol, std::string detail = {}) {
  return CheckResult{std::move(name), worst <= tol, worst, tol, std::move(detail)};
}

}  // namespace

std::vector<CheckResult> dist_suite(std::uint64_t seed) {
  Rng rng(seed);
  const auto lattice = parameter_lattice(rng, 50);
  const boost::math::normal_distribution<double> std_normal;
  std::vector<CheckResult> out;

  {  // unit mass by adaptive quadrature
    double worst = 0.0;
    std::string at;
    for (const auto& p : lattice) {
      const double mass = integrate([&](double x) { return tn_pdf(x, p); }, p.lower, p.upper);
      if (std::fabs(mass - 1.0) > worst) worst = std::fabs(mass - 1.0), at = describe(p);
    }
    out.push_back(finish("tn_pdf integrates to one", worst, 1e-10, at));
  }
  {  // CDF against quadrature of the density
    double worst = 0.0;
    std::string at;
    for (const auto& p : lattice) {
      for (int j = 1; j < 20; ++j) {
        const double x = p.lower + (p.upper - p.lower) * j / 20.0;
        const double ref = integrate([&](double t) { return tn_pdf(t, p); }, p.lower, x);
        const double err = std::fabs(tn_cdf(x, p) - ref);
        if (err > worst) worst = err, at = describe(p);
      }
    }
    out.push_back(finish("tn_cdf matches quadrature", worst, 1e-8, at));
  }
  {  // quantile(cdf(x)) = x at points carrying density
    double worst = 0.0;
    int used = 0;
    while (used < 1000) {
      const auto& p = lattice[rng.uniform_int(static_cast<int>(lattice.size()))];
      const double x = p.lower + (p.upper - p.lower) * rng.uniform();
      if (tn_pdf(x, p) < 1e-6) continue;  // the inverse is ill-conditioned where F is flat
      worst = std::max(worst, std::fabs(tn_quantile(tn_cdf(x, p), p) - x));
      ++used;
    }
    out.push_back(finish("tn_quantile(tn_cdf(x)) roundtrip", worst, 1e-6, "1000 random x with pdf >= 1e-6"));
  }
  {  // cdf(quantile(u)) = u over a (u, params) lattice
    double worst = 0.0;
    for (const auto& p : lattice)
      for (int j = 0; j < 20; ++j) {
        const double u = j / 19.0;
        worst = std::max(worst, std::fabs(tn_cdf(tn_quantile(u, p), p) - u));
      }
    out.push_back(finish("tn_cdf(tn_quantile(u)) roundtrip", worst, 1e-8, "1000-point (u, params) lattice"));
  }
  {  // density is the derivative of the CDF
    double worst = 0.0;
    std::string at;
    for (const auto& p : lattice) {
      const double sd = std::sqrt(p.variance);
      const double h = 1e-5 * std::min(sd, p.upper - p.lower);
      for (int j = 1; j < 20; ++j) {
        const double x = p.lower + (p.upper - p.lower) * j / 20.0;
        const double fd = (tn_cdf(x + h, p) - tn_cdf(x - h, p)) / (2.0 * h);
        const double f = tn_pdf(x, p);
        const double err = std::fabs(fd - f) / std::max(1.0, f);
        if (err > worst) worst = err, at = describe(p);
      }
    }
    out.push_back(finish("tn_pdf is the derivative of tn_cdf", worst, 1e-5, at));
  }
  {  // monotone CDF, exact boundary values
    double violations = 0.0;
    for (const auto& p : lattice) {
      double prev = 0.0;
      for (int j = 0; j <= 1000; ++j) {
        const double v = tn_cdf(p.lower + (p.upper - p.lower) * j / 1000.0, p);
        if (v < prev) violations += 1.0;
        prev = v;
      }
      if (tn_cdf(p.lower, p) != 0.0 || tn_cdf(p.upper, p) != 1.0) violations += 1.0;
      if (tn_quantile(0.0, p) != p.lower || tn_quantile(1.0, p) != p.upper) violations += 1.0;
      if (tn_pdf(p.lower - 1.0, p) != 0.0 || tn_pdf(p.upper + 1.0, p) != 0.0) violations += 1.0;
    }
    out.push_back(finish("tn_cdf monotone with exact boundary values", violations, 0.0));
  }
  {  // standard normal CDF and quantile against Boost.Math
    double worst = 0.0;
    for (int j = 0; j <= 400; ++j) {
      const double x = -30.0 + 38.0 * j / 400.0;
      const double ref = boost::math::cdf(std_normal, x);
      worst = std::max(worst, std::fabs(std_normal_cdf(x) - ref) / ref);
    }
    out.push_back(finish("std_normal_cdf relative error", worst, 1e-12));

    double qworst = 0.0;
    for (int j = 0; j <= 240; ++j) {
      const double lu = std::log(1e-12) * (1.0 - j / 240.0) + std::log(0.5) * (j / 240.0);
      for (double u : {std::exp(lu), 1.0 - std::exp(lu)}) {
        const double back = boost::math::cdf(std_normal, std_normal_quantile(u));
        qworst = std::max(qworst, std::fabs(back - u) / std::min(u, 1.0 - u));
      }
    }
    out.push_back(finish("Phi(std_normal_quantile(u)) = u, 1e-12 <= u <= 1 - 1e-12", qworst, 1e-9,
                         "relative to min(u, 1 - u)"));

    const double q975 = std_normal_quantile(0.975);
    out.push_back(finish("std_normal_quantile(0.975)", std::fabs(q975 - boost::math::quantile(std_normal, 0.975)), 1e-9));

    double throws = 0.0;
    for (double u : {0.0, 1.0, -0.1, 1.1}) {
      try {
        std_normal_quantile(u);
      } catch (const DomainError&) {
        throws += 1.0;
      }
    }
    out.push_back(finish("std_normal_quantile rejects u outside (0, 1)", 4.0 - throws, 0.0));
  }
  return out;
}

CheckResult copula_random_params(int draws, std::uint64_t seed) {
  Rng rng(seed);
  double worst_diag = 0.0, worst_det = 0.0, worst_prod = 0.0, worst_row = 0.0, min_eig = 1.0;
  for (int t = 0; t < draws; ++t) {
    const int d = 2 + rng.uniform_int(7);
    std::vector<double> b(d - 1), theta(num_theta(d));
    for (double& v : b) v = -kGridHalfWidthB + 2.0 * kGridHalfWidthB * rng.uniform();
    for (double& v : theta) v = -kGridHalfWidthTheta + 2.0 * kGridHalfWidthTheta * rng.uniform();
    const CorrelationMatrix cm = build_V(b, theta);
    worst_diag = std::max(worst_diag, (cm.R.diagonal().array() - 1.0).abs().maxCoeff());
    worst_row = std::max(worst_row, (cm.chol_V.rowwise().squaredNorm().array() - 1.0).abs().maxCoeff());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cm.R);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    double prod = 1.0;
    for (double v : b) prod *= 1.0 - v * v;
    worst_det = std::max(worst_det, std::fabs(std::exp(cm.logdet) - cm.R.determinant()));
    worst_prod = std::max(worst_prod, std::fabs(cm.R.determinant() - prod));
  }
  std::ostringstream os;
  os << "max |diag-1| " << worst_diag << ", max |row norm-1| " << worst_row << ", min eigenvalue " << min_eig
     << ", max |exp(logdet)-det| " << worst_det << ", max |det-prod(1-b^2)| " << worst_prod;
  CheckResult r;
  r.name = "random spherical-Cholesky parameters";
  r.value = std::max(worst_det, worst_prod);
  r.tolerance = 1e-8;
  r.pass = worst_diag <= 1e-12 && worst_row <= 1e-12 && min_eig > 0.0 && worst_det <= 1e-8 && worst_prod <= 1e-8;
  r.detail = os.str();
  return r;
}

namespace {

// The enumerable toy: two covariates with two levels, six units, fixed allocations.
struct Toy {
  std::vector<int> levels{2, 2};
  Eigen::MatrixXi c;
  std::vector<int> z;
  int K = 2, K_star = 2;
  double alpha = 1.0, phi = 1.0, phi_star = 1.0;
  std::vector<double> lambda0{0.6, 0.4};

  Toy() {
    c.resize(2, 6);
    c << 0, 0, 0, 1, 1, 1,
         0, 1, 1, 0, 1, 1;
    z = {0, 0, 1, 1, 1, 0};
  }
};

double log_dm_partition_prior(const std::vector<int>& labels, int d_h, double phi) {
  std::vector<int> m(d_h, 0);
  for (int v : labels) ++m[v];
  double out = std::lgamma(phi) - std::lgamma(phi + d_h);
  for (int q = 0; q < d_h; ++q) out += std::lgamma(phi / d_h + m[q]) - std::lgamma(phi / d_h);
  return out;
}

}  // namespace

std::vector<std::pair<ToyState, double>> toy_exact_posterior() {
  const Toy toy;
  std::map<ToyState, double> mass;
  const int n = static_cast<int>(toy.z.size());
  // Labeled first-layer vectors: 2^2 per covariate.
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      std::vector<std::vector<int>> labeled = {{a & 1, (a >> 1) & 1}, {b & 1, (b >> 1) & 1}};
      double log_prior_s = 0.0;
      std::vector<std::vector<int>> canon = labeled;
      std::vector<int> shape;
      for (int h = 0; h < 2; ++h) {
        log_prior_s += log_dm_partition_prior(labeled[h], toy.levels[h], toy.phi);
        shape.push_back(canonicalize(canon[h]));
      }
      const int V = shape[0] * shape[1];
      std::vector<int> unit_cell(n);
      for (int i = 0; i < n; ++i) unit_cell[i] = canon[0][toy.c(0, i)] * shape[1] + canon[1][toy.c(1, i)];
      for (int code = 0; code < (1 << V); ++code) {
        std::vector<int> s_star(V);
        for (int v = 0; v < V; ++v) s_star[v] = (code >> v) & 1;
        // s_star | V ~ Dirichlet-multinomial with concentration phi_star / K_star.
        std::vector<int> m(toy.K_star, 0);
        for (int v : s_star) ++m[v];
        double lp = log_prior_s + std::lgamma(toy.phi_star) - std::lgamma(toy.phi_star + V);
        for (int k = 0; k < toy.K_star; ++k)
          lp += std::lgamma(toy.phi_star / toy.K_star + m[k]) - std::lgamma(toy.phi_star / toy.K_star);
        // z | s, s_star with cluster weights integrated against Dir(alpha lambda0).
        std::vector<std::vector<int>> counts(toy.K_star, std::vector<int>(toy.K, 0));
        for (int i = 0; i < n; ++i) ++counts[s_star[unit_cell[i]]][toy.z[i]];
        for (int ks = 0; ks < toy.K_star; ++ks) {
          int tot = 0;
          for (int k = 0; k < toy.K; ++k) {
            const double al = toy.alpha * toy.lambda0[k];
            lp += std::lgamma(al + counts[ks][k]) - std::lgamma(al);
            tot += counts[ks][k];
          }
          lp += std::lgamma(toy.alpha) - std::lgamma(toy.alpha + tot);
        }
        mass[ToyState{canon, s_star}] += std::exp(lp);
      }
    }
  }
  double total = 0.0;
  for (const auto& [s, w] : mass) total += w;
  std::vector<std::pair<ToyState, double>> out;
  for (const auto& [s, w] : mass) out.emplace_back(s, w / total);
  return out;
}

EnumerationResult partition_enumeration(int sweeps, int burnin, std::uint64_t seed, double z_tol) {
  const Toy toy;
  Dataset data;
  data.x = Eigen::MatrixXd::Constant(1, static_cast<Eigen::Index>(toy.z.size()), 5.0);
  data.c = toy.c;
  data.levels = toy.levels;
  Hyperparameters hp;
  hp.K = toy.K;
  hp.K_star = toy.K_star;
  hp.phi_star = toy.phi_star;
  hp.iterations = sweeps + burnin;
  hp.burnin = 0;
  hp.seed = seed;
  Sampler sampler(data, hp);
  sampler.blocks = UpdateBlocks{false, false, false, false, false, true, false};
  ChainState& st = sampler.state();
  st.z[0] = toy.z;
  st.lambda0[0] = toy.lambda0;
  st.alpha = toy.alpha;
  st.phi = toy.phi;
  st.tensors[0].attach(data.c, st.z[0]);
  st.refresh_weights();

  const auto exact = toy_exact_posterior();
  std::map<ToyState, int> index;
  for (std::size_t j = 0; j < exact.size(); ++j) index[exact[j].first] = static_cast<int>(j);
  std::vector<std::vector<double>> indicator(exact.size(), std::vector<double>(sweeps, 0.0));
  int unknown = 0;
  for (int t = 1; t <= sweeps + burnin; ++t) {
    sampler.iterate(t);
    if (t <= burnin) continue;
    const FlowerTensor& ft = st.tensors[0];
    const auto it = index.find(ToyState{ft.s(), ft.s_star()});
    if (it == index.end()) {
      ++unknown;
      continue;
    }
    indicator[it->second][t - burnin - 1] = 1.0;
  }
  EnumerationResult res;
  for (std::size_t j = 0; j < exact.size(); ++j) {
    EnumerationRow row;
    row.state = exact[j].first;
    row.exact = exact[j].second;
    row.observed = std::accumulate(indicator[j].begin(), indicator[j].end(), 0.0) / sweeps;
    row.se = batch_means_se(indicator[j]);
    // A state that is never or always visited has a zero batch SE; fall back
    // to the binomial SE at the exact probability.
    const double se = std::max(row.se, std::sqrt(row.exact * (1.0 - row.exact) / sweeps));
    res.max_abs_z = std::max(res.max_abs_z, std::fabs(row.observed - row.exact) / se);
    res.rows.push_back(row);
  }
  res.pass = unknown == 0 && res.max_abs_z <= z_tol;
  return res;
}

GewekeResult geweke(int iterations, std::uint64_t seed, double z_tol) {
  constexpr int n = 8;
  Dataset data;
  data.x = Eigen::MatrixXd::Constant(2, n, 5.0);
  data.c.resize(1, n);
  for (int i = 0; i < n; ++i) data.c(0, i) = i % 2;
  data.levels = {2};
  Hyperparameters hp;
  hp.K = 2;
  hp.K_star = 2;
  hp.a_sigma = 5.0;
  hp.b_sigma = 2.0;
  hp.m0 = 4.0;
  hp.s0 = 2.0;
  hp.iterations = iterations;
  hp.burnin = 0;
  hp.seed = seed;
  Sampler sampler(data, hp);
  sampler.blocks.copula = false;
  Rng xrng = Rng::derive(seed, "geweke-data");

  const int discard = std::min(1000, iterations / 10);
  std::vector<double> alpha, phi, mu, sigma2;
  for (int t = 1; t <= iterations; ++t) {
    sampler.iterate(t);
    const ChainState& st = sampler.state();
    Dataset& dx = sampler.mutable_data();
    for (int l = 0; l < 2; ++l)
      for (int i = 0; i < n; ++i) {
        const int k = st.z[l][i];
        const TruncatedNormal tn(st.atoms.mu[k], st.atoms.sigma2[k], hp.lower, hp.upper);
        dx.x(l, i) = tn.quantile(xrng.uniform_open());
      }
    if (t <= discard) continue;
    alpha.push_back(st.alpha);
    phi.push_back(st.phi);
    mu.push_back(st.atoms.mu[0]);
    sigma2.push_back(st.atoms.sigma2[0]);
  }

  const TruncNormalParams mu_prior{hp.m0, hp.s0 * hp.s0, hp.lower, hp.upper};
  const double mu_mean = integrate([&](double x) { return x * tn_pdf(x, mu_prior); }, hp.lower, hp.upper);
  GewekeResult res;
  auto add = [&](const char* name, const std::vector<double>& s, double prior) {
    GewekeRow r;
    r.name = name;
    r.chain_mean = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
    r.prior_mean = prior;
    r.se = batch_means_se(s);
    r.z = (r.chain_mean - prior) / r.se;
    res.rows.push_back(r);
  };
  add("alpha", alpha, hp.a_alpha * hp.b_alpha);
  add("phi", phi, hp.a_phi * hp.b_phi);
  add("mu_1", mu, mu_mean);
  add("sigma2_1", sigma2, hp.b_sigma / (hp.a_sigma - 1.0));
  res.pass = std::all_of(res.rows.begin(), res.rows.end(), [&](const GewekeRow& r) { return std::fabs(r.z) <= z_tol; });
  return res;
}

}  // namespace flower::checks
