#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "flower/error.hpp"
#include "flower/ingest.hpp"
#include "flower/rng.hpp"
#include "flower/simgen.hpp"

using namespace flower;

namespace {

IngestOptions options(std::vector<std::string> responses, std::vector<std::string> covariates,
                      RescaleMode mode = RescaleMode::minmax) {
  IngestOptions o;
  o.responses = std::move(responses);
  o.covariates = std::move(covariates);
  o.rescale = mode;
  return o;
}

std::string error_text(const std::string& csv, const IngestOptions& o) {
  try {
    ingest(parse_csv(csv), o);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("ingest") {
  TEST_CASE("min-max rescaling maps the range onto the support") {
    const Dataset a = ingest(parse_csv("y,g\n0,1\n5,2\n10,1\n"), options({"y"}, {"g"}));
    CHECK(a.x(0, 0) == 0.0);
    CHECK(a.x(0, 1) == 5.0);
    CHECK(a.x(0, 2) == 10.0);
    const Dataset b = ingest(parse_csv("y,g\n1,1\n2,2\n3,1\n"), options({"y"}, {"g"}));
    CHECK(b.x(0, 0) == 0.0);
    CHECK(b.x(0, 1) == doctest::Approx(5.0));
    CHECK(b.x(0, 2) == 10.0);
    CHECK(b.rescale[0].jacobian(0.0, 10.0) == doctest::Approx(0.2));
    CHECK(b.rescale[0].to_original(b.x(0, 1), 0.0, 10.0) == doctest::Approx(2.0));
  }

  TEST_CASE("covariate coding") {
    const Dataset d = ingest(parse_csv("y,sex,age\n1,M,3\n2,F,1\n3,M,2\n4,F,3\n"), options({"y"}, {"sex", "age"}));
    CHECK(d.levels == std::vector<int>{2, 3});
    CHECK(d.level_labels[0] == std::vector<std::string>{"F", "M"});
    CHECK(d.c(0, 0) == 1);
    CHECK(d.c(0, 1) == 0);
    // positive integers are read as 1-based codes
    CHECK(d.level_labels[1] == std::vector<std::string>{"1", "2", "3"});
    CHECK(d.c(1, 0) == 2);
    CHECK(d.c(1, 1) == 0);
    // codes skipped in the data still count as levels
    const Dataset gap = ingest(parse_csv("y,g\n1,1\n2,4\n"), options({"y"}, {"g"}));
    CHECK(gap.levels == std::vector<int>{4});
    // zero is not a code, so the column falls back to labels
    const Dataset zero = ingest(parse_csv("y,g\n1,0\n2,1\n"), options({"y"}, {"g"}));
    CHECK(zero.level_labels[0] == std::vector<std::string>{"0", "1"});
  }

  TEST_CASE("bad values are reported with their rows") {
    const auto o = options({"y"}, {"g"});
    const std::string missing = error_text("y,g\n1,1\n,2\nabc,1\n4,2\n", o);
    CHECK(missing.find("rows 2, 3") != std::string::npos);
    CHECK(error_text("y,g\n2,1\n2,2\n", o).find("constant") != std::string::npos);
    CHECK(error_text("y,g\n1,1\n2,\n", o).find("row 2") != std::string::npos);
    CHECK(error_text("y,g\n1,1\n2,2\n", options({"z"}, {"g"})).find("'z'") != std::string::npos);
    const auto none = options({"y"}, {"g"}, RescaleMode::none);
    CHECK(error_text("y,g\n1,1\n12,2\n-1,1\n", none).find("rows 2, 3") != std::string::npos);
    CHECK(error_text("y,g\n1,1\ninf,2\n", o).find("row 2") != std::string::npos);
  }

  TEST_CASE("quoting and line endings") {
    const CsvTable t = parse_csv("name,\"y\"\r\n\"a, \"\"b\"\"\",1.5\r\nc,2\r\n");
    CHECK(t.header == std::vector<std::string>{"name", "y"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][0] == "a, \"b\"");
    CHECK(t.rows[1][1] == "2");
    CHECK_THROWS_AS(parse_csv("a,b\n1\n"), DataError);
    CHECK_THROWS_AS(parse_csv("a,b\n\"1,2\n"), DataError);
    CHECK_THROWS_AS(parse_csv(""), DataError);
    CHECK_THROWS_AS(read_csv("no/such/file.csv"), IoError);
    CHECK_THROWS_AS(rescale_mode_from_string("zscore"), ConfigError);
  }

  TEST_CASE("written datasets ingest back exactly") {
    Rng rng(11);
    Dataset sim = scenario1(200, rng).data;
    sim.fill_defaults();
    const std::string csv = dataset_to_csv(sim, 0.0, 10.0);
    const Dataset back = ingest(parse_csv(csv), options(sim.response_names, sim.covariate_names, RescaleMode::none));
    CHECK(back.x == sim.x);
    CHECK(back.c == sim.c);
    CHECK(back.levels == sim.levels);

    // labels with separators survive the trip through a file
    Dataset labelled = ingest(parse_csv("y,site\n1,\"a,b\"\n3,c\n2,\"a,b\"\n"), options({"y"}, {"site"}));
    const std::string path = "ingest_roundtrip.csv";
    write_dataset_csv(path, labelled, 0.0, 10.0);
    const Dataset again = ingest_csv(path, options({"y"}, {"site"}));
    std::remove(path.c_str());
    CHECK(again.level_labels == labelled.level_labels);
    CHECK(again.c == labelled.c);
    CHECK(again.x.isApprox(labelled.x, 1e-14));
  }
}
