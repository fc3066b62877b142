#include <algorithm>
#include <fstream>

#include "doctest.h"
#include "opnc/config.hpp"

using namespace opnc;

namespace {

const char* kSlotted = R"({
  "name": "t",
  "mode": "slotted",
  "channel": {
    "mode": "iid",
    "states": [
      {"id": 1, "freq": 0.5, "p": [0, 0.5, 0.5, 0]},
      {"id": 2, "freq": 0.5, "p": [0, 0, 0, 1]}
    ]
  },
  "schemes": ["routing", "7op_q"],
  "theta_grid": "0.3:0.5:0.1",
  "trials": 3,
  "horizon": 2000,
  "seed": 9,
  "drain": true
})";

bool has_issue(const ConfigError& e, const std::string& field, int line = -1) {
  return std::any_of(e.issues.begin(), e.issues.end(), [&](const ConfigIssue& i) {
    return i.field == field && (line < 0 || i.line == line);
  });
}

ConfigError expect_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("config was accepted");
  return ConfigError({});
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("slotted config parses") {
  ExperimentConfig c = parse_config(kSlotted);
  CHECK(c.name == "t");
  CHECK(c.mode == ConfigMode::Slotted);
  REQUIRE(c.channel.states.size() == 2);
  CHECK(c.channel.states[1].p.both == 1.0);
  CHECK(c.schemes == std::vector<std::string>{"routing", "7op_q"});
  REQUIRE(c.theta_grid.size() == 3);
  CHECK(c.theta_grid[2] == doctest::Approx(0.5));
  CHECK(c.trials == 3);
  CHECK(c.seed == 9);
  CHECK(c.drain);
  CHECK(c.fallback == Fallback::Idle);
}

TEST_CASE("serialization round trips") {
  ExperimentConfig c = parse_config(kSlotted);
  c.directions = {{1, 2}};
  c.arrivals = ArrivalKind::BatchUniform;
  c.batch_max = 4;
  c.fallback = Fallback::FirstFeasible;
  CHECK(parse_config(serialize_config(c)) == c);

  std::ifstream in(std::string(OPNC_CONFIG_DIR) + "/rate_adaptation.json");
  REQUIRE(in);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ExperimentConfig ra = parse_config(text);
  CHECK(ra.mode == ConfigMode::RateAdaptation);
  CHECK(ra.combos.size() == 2);
  CHECK(ra.arrivals == ArrivalKind::Poisson);
  CHECK(parse_config(serialize_config(ra)) == ra);
}

TEST_CASE("shipped configs load") {
  for (const char* f : {"two_state.json", "four_state_skewed.json", "four_state_uniform.json", "rate_adaptation.json", "smoke.json"}) {
    CAPTURE(f);
    CHECK_NOTHROW(load_config(std::string(OPNC_CONFIG_DIR) + "/" + f));
  }
  CHECK_THROWS_AS(load_config("/nonexistent/file.json"), ConfigError);
}

TEST_CASE("errors carry field and line") {
  ConfigError e = expect_error(replace(kSlotted, "\"freq\": 0.5, \"p\": [0, 0, 0, 1]", "\"freq\": 0.5, \"p\": [0, 0, 1]"));
  CHECK(has_issue(e, "/channel/states/1/p", 8));

  e = expect_error(replace(kSlotted, "\"trials\": 3", "\"trials\": 0"));
  CHECK(has_issue(e, "/trials", 13));

  e = expect_error(replace(kSlotted, "\"seed\": 9", "\"seed\": 9, \"colour\": 1"));
  CHECK(has_issue(e, "/colour"));

  e = expect_error(replace(kSlotted, "\"7op_q\"", "\"7op_ra\""));
  CHECK(has_issue(e, "/schemes/1"));
}

TEST_CASE("every problem is reported at once") {
  std::string bad = replace(replace(kSlotted, "\"trials\": 3", "\"trials\": -1"), "\"horizon\": 2000", "\"horizon\": 0");
  ConfigError e = expect_error(bad);
  CHECK(has_issue(e, "/trials"));
  CHECK(has_issue(e, "/horizon"));
  CHECK(e.issues.size() >= 2);
}

TEST_CASE("syntax errors report a line") {
  ConfigError e = expect_error("{\n  \"name\": \"x\",\n  \"mode\": \n}");
  REQUIRE(e.issues.size() == 1);
  CHECK(e.issues[0].line == 4);
}

TEST_CASE("mode-specific checks") {
  ConfigError e = expect_error(replace(kSlotted, "\"mode\": \"slotted\"", "\"mode\": \"rate_adaptation\""));
  CHECK(has_issue(e, "/combos"));
  CHECK_NOTHROW(parse_config(replace(kSlotted, "\"routing\"", "\"blockcode\"")));
  e = expect_error(replace(kSlotted, "\"routing\"", "\"5op_fixed1\""));
  CHECK(has_issue(e, "/schemes/0"));
}

TEST_CASE("theta grids") {
  auto g = parse_theta_grid("0.3:0.6:0.025");
  CHECK(g.size() == 13);
  CHECK(g.front() == doctest::Approx(0.3));
  CHECK(g.back() == doctest::Approx(0.6));
  CHECK(make_grid(0.1, 0.25, 0.1).size() == 2);
  CHECK(make_grid(0.5, 0.5, 0.1) == std::vector<double>{0.5});
  CHECK_THROWS(parse_theta_grid("0.3:0.6"));
  CHECK_THROWS(parse_theta_grid("0.6:0.3:0.1"));
  CHECK_THROWS(parse_theta_grid("0.3:0.6:0"));
  CHECK_THROWS(parse_theta_grid("a:b:c"));

  ExperimentConfig c = parse_config(replace(kSlotted, "\"0.3:0.5:0.1\"", "{\"start\": 0.2, \"stop\": 0.4, \"step\": 0.1}"));
  CHECK(c.theta_grid.size() == 3);
  ConfigError e = expect_error(replace(kSlotted, "\"0.3:0.5:0.1\"", "[0.4, 0.3]"));
  CHECK(has_issue(e, "/theta_grid"));
}
