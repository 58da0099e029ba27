#include <boost/math/special_functions/beta.hpp>
#include <algorithm>
#include <cmath>
#include <vector>

#include "checks.hpp"
#include "doctest.h"
#include "flower/dist.hpp"
#include "flower/mixture.hpp"
#include "flower/rng.hpp"

using namespace flower;

namespace {

/// One coordinate, one covariate with a single level, so every unit sits in one cell.
ChainState single_cell_state(const std::vector<int>& z, std::vector<double> lambda0, double alpha) {
  ChainState st;
  const int K = static_cast<int>(lambda0.size());
  Eigen::MatrixXi c = Eigen::MatrixXi::Zero(1, static_cast<int>(z.size()));
  st.z = {z};
  st.tensors.emplace_back(std::vector<int>{1}, K, 1);
  st.tensors[0].attach(c, z);
  st.lambda0 = {std::move(lambda0)};
  st.alpha = alpha;
  st.phi = 1.0;
  st.refresh_weights();
  return st;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_SUITE("mixture") {
  TEST_CASE("allocation weights for two components") {
    Atoms atoms;
    atoms.mu = Eigen::Vector2d(3.0, 6.0);
    atoms.sigma2 = Eigen::Vector2d(1.0, 2.0);
    const KernelTable kt(atoms, 0.0, 10.0);
    const std::vector<double> al0{0.4, 0.6};
    const std::vector<int> counts{5, 2};
    std::vector<double> lw(2);
    const double x = 4.2;
    allocation_log_weights(al0, counts, kt, x, lw);
    const double w0 = (0.4 + 5) * tn_pdf(x, {3.0, 1.0, 0.0, 10.0});
    const double w1 = (0.6 + 2) * tn_pdf(x, {6.0, 2.0, 0.0, 10.0});
    const double p0 = 1.0 / (1.0 + std::exp(lw[1] - lw[0]));
    CHECK(p0 == doctest::Approx(w0 / (w0 + w1)).epsilon(1e-12));
  }

  TEST_CASE("identical kernels and no counts give uniform allocations") {
    Atoms atoms;
    atoms.mu = Eigen::Vector3d(5.0, 5.0, 5.0);
    atoms.sigma2 = Eigen::Vector3d(1.0, 1.0, 1.0);
    const KernelTable kt(atoms, 0.0, 10.0);
    const std::vector<double> al0{1.0 / 3, 1.0 / 3, 1.0 / 3};
    const std::vector<int> counts{0, 0, 0};
    std::vector<double> lw(3);
    allocation_log_weights(al0, counts, kt, 2.0, lw);
    CHECK(lw[0] == doctest::Approx(lw[1]));
    CHECK(lw[1] == doctest::Approx(lw[2]));
  }

  TEST_CASE("table counts follow the Chinese restaurant table law") {
    const int n = 3;
    const double a = 0.7;
    // unsigned Stirling numbers of the first kind by recursion
    std::vector<std::vector<double>> S(n + 1, std::vector<double>(n + 1, 0.0));
    S[0][0] = 1.0;
    for (int m = 1; m <= n; ++m)
      for (int k = 1; k <= m; ++k) S[m][k] = (m - 1) * S[m - 1][k] + S[m - 1][k - 1];
    const double log_norm = std::lgamma(a) - std::lgamma(a + n);
    Rng rng(21);
    const int draws = 100000;
    std::vector<int> freq(n + 1, 0);
    for (int t = 0; t < draws; ++t) ++freq[crt_draw(n, a, rng)];
    CHECK(freq[0] == 0);
    for (int k = 1; k <= n; ++k) {
      const double p = S[n][k] * std::pow(a, k) * std::exp(log_norm);
      const double se = std::sqrt(p * (1 - p) / draws);
      CHECK(std::fabs(static_cast<double>(freq[k]) / draws - p) < 4.0 * se);
    }
    CHECK(crt_draw(1, 0.3, rng) == 1);
    CHECK(crt_draw(0, 0.3, rng) == 0);
  }

  TEST_CASE("base weights without data follow the symmetric Dirichlet prior") {
    Hyperparameters hp;
    hp.K = 4;
    hp.alpha0 = 1.0;
    ChainState st = single_cell_state({}, {0.25, 0.25, 0.25, 0.25}, 1.0);
    Rng rng(22);
    const int draws = 10000;
    std::vector<double> first(draws);
    for (int t = 0; t < draws; ++t) {
      update_lambda0(0, st, hp, rng);
      double s = 0.0;
      for (double v : st.lambda0[0]) s += v;
      REQUIRE(s == doctest::Approx(1.0).epsilon(1e-12));
      first[t] = st.lambda0[0][0];
    }
    // Marginal of Dir(1/4, ..., 1/4) is Beta(1/4, 3/4).
    std::sort(first.begin(), first.end());
    double ks = 0.0;
    for (int t = 0; t < draws; ++t) {
      const double F = boost::math::ibeta(0.25, 0.75, first[t]);
      ks = std::max({ks, std::fabs(F - static_cast<double>(t) / draws), std::fabs(F - static_cast<double>(t + 1) / draws)});
    }
    CHECK(ks < 1.63 / std::sqrt(static_cast<double>(draws)));
  }

  TEST_CASE("alpha target matches the Dirichlet-multinomial arithmetic") {
    Hyperparameters hp;
    ChainState st = single_cell_state({0, 0, 0, 1}, {0.6, 0.4}, 1.0);
    auto direct = [&](double a) {
      const double prior = (hp.a_alpha - 1) * std::log(a) - a / hp.b_alpha;
      return prior + std::lgamma(a) - std::lgamma(a + 4) + std::lgamma(0.6 * a + 3) - std::lgamma(0.6 * a) +
             std::lgamma(0.4 * a + 1) - std::lgamma(0.4 * a);
    };
    CHECK(log_p_alpha(2.5, st, hp) - log_p_alpha(0.7, st, hp) == doctest::Approx(direct(2.5) - direct(0.7)).epsilon(1e-12));
  }

  TEST_CASE("alpha chain without data recovers the prior mean") {
    Hyperparameters hp;
    ChainState st = single_cell_state({}, {0.5, 0.5}, 1.0);
    st.adapt.log_var_alpha = std::log(0.5);
    Rng rng(23);
    const int steps = 200000;
    std::vector<double> trace(steps);
    for (int t = 0; t < steps; ++t) {
      update_alpha(st, hp, rng);
      trace[t] = st.alpha;
    }
    const double se = checks::batch_means_se(trace);
    CHECK(std::fabs(mean_of(trace) - hp.a_alpha * hp.b_alpha) < 3.0 * se);
  }

  TEST_CASE("adaptation steps") {
    Hyperparameters hp;
    CHECK(adaptation_step(10000) == doctest::Approx(0.01));
    CHECK(adaptation_step(100) == doctest::Approx(0.01));
    CHECK(adaptation_step(40000) == doctest::Approx(0.005));

    AdaptState a;
    a.window_alpha_accepted = a.window_alpha_proposed = 50;  // rate 1
    a.window_phi_accepted = 22;
    a.window_phi_proposed = 50;  // rate exactly 0.44
    adapt_proposals(a, 10000, hp);
    CHECK(a.log_var_alpha == doctest::Approx(0.01));
    CHECK(a.log_var_phi == 0.0);
    CHECK(a.window_alpha_proposed == 0);

    AdaptState b;
    b.window_alpha_proposed = 50;  // rate 0
    adapt_proposals(b, 100, hp);
    CHECK(b.log_var_alpha == doctest::Approx(-0.01));

    AdaptState c;
    c.window_alpha_proposed = 50;
    adapt_proposals(c, 120, hp);  // not a multiple of 50
    CHECK(c.log_var_alpha == 0.0);
    CHECK(c.window_alpha_proposed == 50);
  }

  TEST_CASE("atom targets") {
    Hyperparameters hp;
    hp.m0 = 4.0;
    hp.s0 = 2.0;
    const AtomStats none;
    // prior only: TN(m0, s0^2) kernel on [A, B]
    CHECK(log_p_mu(3.0, 1.0, none, hp) - log_p_mu(6.5, 1.0, none, hp) ==
          doctest::Approx(tn_log_pdf(3.0, {4.0, 4.0, 0.0, 10.0}) - tn_log_pdf(6.5, {4.0, 4.0, 0.0, 10.0})));
    CHECK(log_p_mu(-0.1, 1.0, none, hp) == -std::numeric_limits<double>::infinity());

    Eigen::MatrixXd x(1, 3);
    x << 1.5, 2.25, 4.0;
    const Allocations z{{0, 0, 0}};
    const auto st = atom_statistics(x, z, 1);
    CHECK(st[0].count == 3.0);
    const TruncNormalParams p{2.0, 0.8, 0.0, 10.0};
    const double direct = tn_log_pdf(1.5, p) + tn_log_pdf(2.25, p) + tn_log_pdf(4.0, p);
    CHECK(atom_log_likelihood(st[0], 2.0, 0.8, 0.0, 10.0) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(log_p_sigma2(0.8, 2.0, st[0], hp) - log_p_sigma2(1.7, 2.0, st[0], hp) ==
          doctest::Approx(-(hp.a_sigma + 1) * std::log(0.8 / 1.7) - hp.b_sigma / 0.8 + hp.b_sigma / 1.7 + direct -
                          atom_log_likelihood(st[0], 2.0, 1.7, 0.0, 10.0)));
  }

  TEST_CASE("Rao-Blackwellized weights") {
    ChainState st = single_cell_state({0, 0, 0, 1}, {0.5, 0.5}, 1.0);
    const Eigen::MatrixXd lam = rao_blackwell_lambda(st.tensors[0], st.alpha_lambda0(0));
    CHECK(lam(0, 0) == doctest::Approx(0.7));
    CHECK(lam(0, 1) == doctest::Approx(0.3));

    ChainState empty = single_cell_state({}, {0.2, 0.8}, 3.0);
    const Eigen::MatrixXd lam0 = rao_blackwell_lambda(empty.tensors[0], empty.alpha_lambda0(0));
    CHECK(lam0(0, 0) == doctest::Approx(0.2));
    CHECK(lam0(0, 1) == doctest::Approx(0.8));

    ChainState tiny = single_cell_state({0, 0, 0, 1}, {0.5, 0.5}, 1e-9);
    const Eigen::MatrixXd lt = rao_blackwell_lambda(tiny.tensors[0], tiny.alpha_lambda0(0));
    CHECK(lt(0, 0) == doctest::Approx(0.75));
  }

  TEST_CASE("successive-conditional simulation matches the prior") {
    const auto r = checks::geweke(200000, 41);
    for (const auto& row : r.rows) {
      INFO(row.name << " chain " << row.chain_mean << " prior " << row.prior_mean << " z " << row.z);
      CHECK(std::fabs(row.z) < 3.0);
    }
    CHECK(r.pass);
  }
}
