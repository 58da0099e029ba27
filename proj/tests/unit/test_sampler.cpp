#include <cmath>
#include <numeric>

#include "doctest.h"
#include "flower/chain_store.hpp"
#include "flower/error.hpp"
#include "flower/rng.hpp"
#include "flower/sampler.hpp"
#include "flower/simgen.hpp"

using namespace flower;

namespace {

Dataset small_data(int n = 150) {
  Rng rng(7);
  return scenario1(n, rng).data;
}

Hyperparameters short_run(int iterations = 60, int burnin = 20, int thin = 5) {
  Hyperparameters hp;
  hp.iterations = iterations;
  hp.burnin = burnin;
  hp.thin = thin;
  hp.seed = 99;
  return hp;
}

std::string fingerprint(const PosteriorDraws& pd) {
  std::string out;
  for (const Draw& d : pd.draws) out += draw_to_json(d).dump() + "\n";
  return out;
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("retained draw count") {
    for (auto [it, burn, thin] : {std::tuple{60, 20, 5}, std::tuple{61, 20, 5}, std::tuple{30, 0, 1}, std::tuple{40, 39, 3}}) {
      Hyperparameters hp = short_run(it, burn, thin);
      CHECK(hp.retained() == (it - burn) / thin);
      Sampler s(small_data(60), hp);
      const PosteriorDraws pd = s.run();
      CHECK(static_cast<int>(pd.size()) == hp.retained());
      for (const Draw& d : pd.draws) {
        CHECK(d.iteration > burn);
        CHECK((d.iteration - burn) % thin == 0);
      }
    }
    CHECK(Hyperparameters{}.retained() == 2000);
  }

  TEST_CASE("fixed seed reproduces the chain exactly") {
    const Dataset data = small_data();
    const PosteriorDraws a = Sampler(data, short_run()).run();
    const PosteriorDraws b = Sampler(data, short_run()).run();
    CHECK(fingerprint(a) == fingerprint(b));
    Hyperparameters other = short_run();
    other.seed = 100;
    CHECK(fingerprint(Sampler(data, other).run()) != fingerprint(a));
  }

  TEST_CASE("parallel coordinates give bit-identical draws") {
    const Dataset data = small_data();
    Hyperparameters seq = short_run(), par = short_run();
    par.threads = 3;
    CHECK(fingerprint(Sampler(data, seq).run()) == fingerprint(Sampler(data, par).run()));
  }

  TEST_CASE("state invariants and tensor storage hold after every iteration") {
    const Dataset data = small_data();
    Sampler s(data, short_run(80, 40, 4));
    const int full = static_cast<int>(combination_count(data.levels));
    int checked = 0;
    s.run(nullptr, [&](int, const Sampler& sm) {
      sm.check_invariants();
      for (const FlowerTensor& t : sm.state().tensors) {
        const int prod = std::accumulate(t.shape().begin(), t.shape().end(), 1, std::multiplies<>());
        REQUIRE(static_cast<int>(t.storage_cells()) == prod);
        REQUIRE(static_cast<int>(t.storage_cells()) <= full);
      }
      for (int k = 0; k < sm.state().atoms.size(); ++k) {
        REQUIRE(sm.state().atoms.mu[k] >= sm.hp().lower);
        REQUIRE(sm.state().atoms.mu[k] <= sm.hp().upper);
        REQUIRE(sm.state().atoms.sigma2[k] > 0.0);
      }
      ++checked;
    });
    CHECK(checked == 80);
  }

  TEST_CASE("retained summaries are well formed") {
    const Dataset data = small_data();
    const PosteriorDraws pd = Sampler(data, short_run()).run();
    for (const Draw& d : pd.draws) {
      CHECK(d.R.diagonal().isOnes(1e-12));
      for (const CoordinateDraw& cd : d.coords) {
        for (int r = 0; r < cd.lambda_hat.rows(); ++r) CHECK(cd.lambda_hat.row(r).sum() == doctest::Approx(1.0));
        CHECK(std::accumulate(cd.lambda0.begin(), cd.lambda0.end(), 0.0) == doctest::Approx(1.0));
        double eta_star = 0.0;
        for (double v : cd.eta_star_hat) eta_star += v;
        CHECK(eta_star == doctest::Approx(1.0));
      }
    }
    const AcceptanceSummary acc = pd.acceptance;
    CHECK(acc.alpha >= 0.0);
    CHECK(acc.alpha <= 1.0);
  }

  TEST_CASE("invalid settings are rejected before sampling") {
    const Dataset data = small_data(40);
    Hyperparameters hp = short_run();
    hp.burnin = hp.iterations;
    CHECK_THROWS_AS(Sampler(data, hp), ConfigError);
    hp = short_run();
    hp.K_star = 100000;
    CHECK_THROWS_AS(Sampler(data, hp), ConfigError);
    Dataset bad = data;
    bad.x(0, 3) = std::nan("");
    CHECK_THROWS_AS(Sampler(bad, short_run()), DataError);
    bad = data;
    bad.c(0, 1) = 17;
    CHECK_THROWS_AS(Sampler(bad, short_run()), DataError);
  }

  TEST_CASE("pooled mean and standard deviation fill unset atom prior") {
    const Dataset data = small_data(40);
    const Hyperparameters hp = resolve_hyperparameters(data, Hyperparameters{});
    const double mean = data.x.mean();
    const double var = (data.x.array() - mean).square().sum() / (data.x.size() - 1);
    CHECK(hp.m0 == doctest::Approx(mean));
    CHECK(hp.s0 == doctest::Approx(std::sqrt(var)).epsilon(1e-3));
  }
}
