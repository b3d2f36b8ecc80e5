#include <doctest.h>

#include "drylab/config.hpp"
#include "drylab/errors.hpp"

using namespace drylab;
using nlohmann::json;

TEST_CASE("empty document yields the documented defaults") {
  auto cfg = validate_config(json::object());
  CHECK(cfg.queries_per_request == 5);
  CHECK(cfg.max_results_per_query_per_db == 10);
  CHECK(cfg.max_review_rounds == 6);
  CHECK(cfg.paper_keep_threshold == 4);
  CHECK(cfg.max_code_repair_iterations == 10);
  CHECK(cfg.sandbox.timeout_seconds == 30 * 60);
  CHECK(cfg.sandbox.network);

  CHECK(cfg.agent(roles::kQueryGenerator).temperature == doctest::Approx(0.7));
  CHECK(cfg.agent(roles::kReviewer).temperature == doctest::Approx(0.1));
  CHECK(cfg.agent(roles::kJudge).temperature == doctest::Approx(0.1));
  CHECK(cfg.agent(roles::kFilter).temperature == doctest::Approx(0.5));
  CHECK(cfg.agent(roles::kDesigner).temperature == doctest::Approx(0.5));
  CHECK(cfg.agent(roles::kCodeGenerator).temperature == doctest::Approx(0.5));
}

TEST_CASE("null document behaves like an empty one") {
  auto cfg = validate_config(json());
  CHECK(cfg.queries_per_request == 5);
}

TEST_CASE("violations name the offending field") {
  try {
    validate_config(json{{"max_review_rounds", 0}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(e.violations().size() == 1);
    CHECK(e.violations()[0].find("max_review_rounds") != std::string::npos);
  }
}

TEST_CASE("all violations are reported, not just the first") {
  json raw = {{"max_review_rounds", 0},
              {"queries_per_request", -2},
              {"paper_keep_threshold", 9},
              {"agents", {{"reviewer", {{"temperature", 3.5}}}}}};
  try {
    validate_config(raw);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.violations().size() == 4);
  }
}

TEST_CASE("unknown fields are violations") {
  try {
    validate_config(json{{"max_reviw_rounds", 3}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(e.violations().size() == 1);
    CHECK(e.violations()[0].find("max_reviw_rounds") != std::string::npos);
  }
  CHECK_THROWS_AS(validate_config(json{{"agents", {{"witch", {{"temperature", 0.5}}}}}}),
                  ConfigError);
}

TEST_CASE("agent overrides apply on top of defaults") {
  auto cfg = validate_config(
      json{{"agents", {{"query-generator", {{"temperature", 0.9}, {"model", "m1"}}}}}});
  CHECK(cfg.agent(roles::kQueryGenerator).temperature == doctest::Approx(0.9));
  CHECK(cfg.agent(roles::kQueryGenerator).model == "m1");
  CHECK(cfg.agent(roles::kReviewer).temperature == doctest::Approx(0.1));
}

TEST_CASE("sandbox settings validate") {
  CHECK_THROWS_AS(validate_config(json{{"sandbox", {{"backend", "vm"}}}}), ConfigError);
  CHECK_THROWS_AS(validate_config(json{{"sandbox", {{"timeout_seconds", 0}}}}), ConfigError);
  auto cfg = validate_config(json{
      {"sandbox",
       {{"backend", "process"}, {"interpreter", json::array({"/bin/sh"})}, {"language", "sh"}}}});
  CHECK(cfg.sandbox.backend == "process");
  REQUIRE(cfg.sandbox.interpreter.size() == 1);
  CHECK(cfg.sandbox.interpreter[0] == "/bin/sh");
}

TEST_CASE("profile validation enforces the closed role set") {
  AgentProfile p{"navigator", "x", 0.5, ""};
  CHECK_THROWS_AS(p.validate(), ValidationError);
  AgentProfile hot{roles::kFilter, "filter.system", 2.5, ""};
  CHECK_THROWS_AS(hot.validate(), ValidationError);
  AgentProfile ok{roles::kFilter, "filter.system", 0.5, ""};
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("config serializes and revalidates") {
  auto cfg = validate_config(json{{"queries_per_request", 3}});
  auto cfg2 = validate_config(cfg.to_json());
  CHECK(cfg2.queries_per_request == 3);
  CHECK(cfg2.agent(roles::kJudge).temperature == doctest::Approx(0.1));
}
