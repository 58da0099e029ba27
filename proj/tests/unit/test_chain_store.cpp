#include <cmath>
#include <sstream>

#include "doctest.h"
#include "flower/chain_store.hpp"
#include "flower/error.hpp"
#include "flower/rng.hpp"
#include "flower/sampler.hpp"
#include "flower/simgen.hpp"

using namespace flower;

namespace {

PosteriorDraws short_chain() {
  Rng rng(4);
  Dataset data = scenario1(80, rng).data;
  data.response_names = {"a", "b", "c"};
  Hyperparameters hp;
  hp.iterations = 30;
  hp.burnin = 10;
  hp.thin = 4;
  return Sampler(data, hp).run();
}

}  // namespace

TEST_SUITE("chain_store") {
  TEST_CASE("draws survive a write and read exactly") {
    const PosteriorDraws pd = short_chain();
    {
      const std::string path = "chain_store_roundtrip.ndjson";
      write_draws(path, pd);
      const PosteriorDraws back = read_draws(path);
      REQUIRE(back.size() == pd.size());
      CHECK(back.info.levels == pd.info.levels);
      CHECK(back.info.response_names == pd.info.response_names);
      CHECK(back.info.combination_counts == pd.info.combination_counts);
      CHECK(back.info.hp.K == pd.info.hp.K);
      CHECK(std::isnan(back.info.hp.m0) == std::isnan(pd.info.hp.m0));
      for (std::size_t t = 0; t < pd.size(); ++t) {
        CHECK(draw_to_json(back.draws[t]).dump() == draw_to_json(pd.draws[t]).dump());
        CHECK(back.draws[t].R == pd.draws[t].R);
        CHECK(back.draws[t].coords[0].lambda_hat == pd.draws[t].coords[0].lambda_hat);
      }
      CHECK(back.acceptance.alpha == pd.acceptance.alpha);
      std::remove(path.c_str());
    }
  }

  TEST_CASE("labels are 1-based in the file") {
    const PosteriorDraws pd = short_chain();
    const nlohmann::json j = draw_to_json(pd.draws[0]);
    int smallest = 1 << 30;
    for (const auto& c : j["coords"])
      for (const auto& row : c["s"])
        for (int v : row) smallest = std::min(smallest, v);
    CHECK(smallest == 1);
  }

  TEST_CASE("an interrupted store still loads") {
    const PosteriorDraws pd = short_chain();
    std::stringstream ss;
    nlohmann::json header = model_info_to_json(pd.info);
    header["type"] = "header";
    header["schema"] = kDrawsSchema;
    ss << header.dump() << '\n' << draw_to_json(pd.draws[0]).dump() << '\n';
    const PosteriorDraws back = read_draws(ss);
    CHECK(back.size() == 1);
  }

  TEST_CASE("malformed stores are reported with their line") {
    std::stringstream empty;
    CHECK_THROWS_AS(read_draws(empty), IoError);
    std::stringstream junk("{\"type\":\"header\",\"schema\":\"flower-draws/1\"}\nnot json\n");
    try {
      read_draws(junk);
      FAIL("expected an IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
    std::stringstream wrong("{\"type\":\"header\",\"schema\":\"something-else/9\"}\n");
    CHECK_THROWS_AS(read_draws(wrong), IoError);
    CHECK_THROWS_AS(read_draws(std::string("/nonexistent/dir/draws.ndjson")), IoError);
  }
}
