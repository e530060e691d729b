#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "pilqr/scenarios.hpp"

using namespace pilqr;
using nlohmann::json;

namespace {

json minimal_doc() {
  return json::parse(R"({
    "agents": [
      {"model": "unicycle4", "start": [0,0,0,1], "goal": [5,0,0,0],
       "q_diag": [10,10,1,1], "r_diag": [1,1]},
      {"model": "unicycle4", "start": [5,0,3.14159,1], "goal": [0,0,3.14159,0],
       "q_diag": [10,10,1,1], "r_diag": [1,1]}
    ],
    "coupling": {"beta": 50.0, "d_prox": 2.4},
    "timing": {"dt": 0.1, "plan_horizon_s": 1.0, "duration_s": 10.0}
  })");
}

}  // namespace

TEST_CASE("minimal scenario loads with defaults applied") {
  const ScenarioConfig cfg = load(minimal_doc());
  REQUIRE(cfg.agents.size() == 2);
  CHECK(cfg.agents[0].qt_diag == cfg.agents[0].q_diag);  // default
  CHECK(cfg.beta == 50.0);
  CHECK(cfg.plan_horizon_steps() == 10);
  CHECK(cfg.duration_steps() == 100);
  const GameDefinition game = cfg.make_game();
  CHECK(game.horizon == 100);
  CHECK(game.is_validated());
  CHECK(game.couplings.size() == 2);  // both directions of the one pair
  const VectorXd x0 = cfg.initial_state();
  REQUIRE(x0.size() == 8);
  CHECK(x0[4] == 5.0);
}

TEST_CASE("unknown fields are rejected with their path") {
  json doc = minimal_doc();
  doc["agents"][0]["mass"] = 1.0;
  try {
    load(doc);
    FAIL("expected ScenarioError");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).find("agents[0].mass") != std::string::npos);
  }
  doc = minimal_doc();
  doc["extra_section"] = json::object();
  CHECK_THROWS_AS(load(doc), ScenarioError);
  doc = minimal_doc();
  doc["timing"]["jitter"] = 0.0;
  CHECK_THROWS_AS(load(doc), ScenarioError);
}

TEST_CASE("structural errors are rejected") {
  json doc = minimal_doc();
  doc.erase("timing");
  CHECK_THROWS_AS(load(doc), ScenarioError);
  doc = minimal_doc();
  doc["agents"] = json::array();
  CHECK_THROWS_AS(load(doc), ScenarioError);
  doc = minimal_doc();
  doc["agents"][0]["start"] = {0, 0, 0};  // wrong dimension for unicycle4
  CHECK_THROWS_AS(load(doc), ScenarioError);
  doc = minimal_doc();
  doc["agents"][0]["model"] = "bicycle";
  CHECK_THROWS_AS(load(doc), ScenarioError);
  doc = minimal_doc();
  doc["timing"]["dt"] = 0.0;
  CHECK_THROWS_AS(load(doc), ScenarioError);
  doc = minimal_doc();
  doc["coupling"]["d_prox"] = -1.0;
  CHECK_THROWS_AS(load(doc), ScenarioError);
}

TEST_CASE("asymmetric per-pair overrides are rejected naming the pair") {
  json doc = minimal_doc();
  doc["coupling"]["pairs"] = json::array(
      {{{"i", 0}, {"j", 1}, {"beta", 1.0}}, {{"i", 1}, {"j", 0}, {"beta", 2.0}}});
  try {
    load(doc);
    FAIL("expected ScenarioError");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).find("(0,1)") != std::string::npos);
  }
  // A matching duplicate is fine.
  doc["coupling"]["pairs"] = json::array(
      {{{"i", 0}, {"j", 1}, {"beta", 1.0}}, {{"i", 1}, {"j", 0}, {"beta", 1.0}}});
  CHECK_NOTHROW(load(doc));
}

TEST_CASE("per-pair overrides land in both coupling directions") {
  json doc = minimal_doc();
  doc["coupling"]["pairs"] =
      json::array({{{"i", 0}, {"j", 1}, {"beta", 7.0}, {"d_prox", 1.1}}});
  const ScenarioConfig cfg = load(doc);
  const GameDefinition game = cfg.make_game();
  CHECK(game.couplings.at({0, 1}).beta == 7.0);
  CHECK(game.couplings.at({1, 0}).beta == 7.0);
  CHECK(game.couplings.at({0, 1}).d_prox == 1.1);
  CHECK(game.couplings.at({1, 0}).d_prox == 1.1);
}

TEST_CASE("round trip through to_json preserves the configuration") {
  for (const std::string& name : builtin_names()) {
    const ScenarioConfig a = builtin(name);
    const ScenarioConfig b = load(to_json(a));
    REQUIRE(a.agents.size() == b.agents.size());
    for (std::size_t i = 0; i < a.agents.size(); ++i) {
      CHECK(a.agents[i].model == b.agents[i].model);
      CHECK(a.agents[i].start == b.agents[i].start);
      CHECK(a.agents[i].goal == b.agents[i].goal);
      CHECK(a.agents[i].q_diag == b.agents[i].q_diag);
      CHECK(a.agents[i].r_diag == b.agents[i].r_diag);
      CHECK(a.agents[i].qt_diag == b.agents[i].qt_diag);
    }
    CHECK(a.beta == b.beta);
    CHECK(a.d_prox == b.d_prox);
    CHECK(a.dt == b.dt);
    CHECK(a.plan_horizon_s == b.plan_horizon_s);
    CHECK(a.duration_s == b.duration_s);
    CHECK(a.solver.max_iterations == b.solver.max_iterations);
  }
}

TEST_CASE("builtin intersection3 geometry") {
  const ScenarioConfig cfg = builtin("intersection3");
  REQUIRE(cfg.agents.size() == 3);
  CHECK(cfg.dt == 0.1);
  CHECK(cfg.d_prox == 2.4);
  CHECK(cfg.beta == 50.0);
  for (const auto& a : cfg.agents) {
    CHECK(a.model == "unicycle4");
    CHECK(a.start.head<2>().norm() == doctest::Approx(8.0));
    // Goal is the antipodal point on the circle.
    CHECK((a.goal.head<2>() + a.start.head<2>()).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(a.start[3] == 2.0);   // inbound speed
    CHECK(a.goal[3] == 0.0);    // come to rest
    // Heading points at the origin.
    const double heading_to_origin =
        std::atan2(-a.start[1], -a.start[0]);
    CHECK(std::cos(a.start[2]) == doctest::Approx(std::cos(heading_to_origin)));
    CHECK(std::sin(a.start[2]) == doctest::Approx(std::sin(heading_to_origin)));
  }
}

TEST_CASE("builtin quad scenarios") {
  const ScenarioConfig swap = builtin("quad_swap");
  REQUIRE(swap.agents.size() == 2);
  CHECK(swap.dt == 0.2);
  CHECK(swap.d_prox == 0.8);
  CHECK(swap.agents[0].start.head<3>().isApprox(swap.agents[1].goal.head<3>()));
  CHECK(swap.agents[1].start.head<3>().isApprox(swap.agents[0].goal.head<3>()));
  CHECK(swap.agents[0].start[2] == 2.0);
  CHECK(swap.agents[1].start[2] == 2.0);
  // Initial pitches differ between the two vehicles (symmetry breaker).
  CHECK(swap.agents[0].start[4] != swap.agents[1].start[4]);

  const ScenarioConfig diag = builtin("quad_diagonal");
  REQUIRE(diag.agents.size() == 2);
  for (const auto& a : diag.agents) {
    CHECK(a.goal[2] - a.start[2] == doctest::Approx(1.0));  // 1 m climb
  }
  CHECK_THROWS_AS(builtin("nonexistent"), ScenarioError);
  CHECK(builtin_names().size() == 3);
}

TEST_CASE("mixed unicycle/quadrotor pairs couple in the shared plane") {
  json doc = minimal_doc();
  doc["agents"][1] = json::parse(R"({
    "model": "quadrotor6", "start": [5,0,2,0,0,0], "goal": [0,0,2,0,0,0],
    "q_diag": [10,10,10,1,1,1], "r_diag": [1,1,1,1,1,1]
  })");
  const ScenarioConfig cfg = load(doc);
  const GameDefinition game = cfg.make_game();
  CHECK(game.couplings.at({0, 1}).position_indices_i ==
        std::vector<int>({0, 1}));
  CHECK(game.couplings.at({0, 1}).position_indices_j ==
        std::vector<int>({0, 1}));
}

TEST_CASE("load_file reports unreadable paths") {
  CHECK_THROWS_AS(load_file("/nonexistent/path/scenario.json"), ScenarioError);
}

TEST_CASE("sample_initials is a pure function of seed and index") {
  const ScenarioConfig base = builtin("intersection3");
  MonteCarloConfig mc;
  mc.samples = 100;
  mc.seed = 42;
  const ScenarioConfig a = sample_initials(mc, base, 7);
  const ScenarioConfig b = sample_initials(mc, base, 7);
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    CHECK(a.agents[i].start == b.agents[i].start);  // bitwise
    CHECK(a.agents[i].goal == base.agents[i].goal);  // goals inherited
  }
  const ScenarioConfig c = sample_initials(mc, base, 8);
  CHECK(a.agents[0].start != c.agents[0].start);
  mc.seed = 43;
  const ScenarioConfig d = sample_initials(mc, base, 7);
  CHECK(a.agents[0].start != d.agents[0].start);
}

TEST_CASE("sampled initials respect the configured ranges") {
  const ScenarioConfig base = builtin("intersection3");
  MonteCarloConfig mc;
  mc.samples = 50;
  mc.seed = 3;
  for (int k = 0; k < mc.samples; ++k) {
    const ScenarioConfig s = sample_initials(mc, base, k);
    for (const auto& a : s.agents) {
      CHECK(a.start[0] >= mc.pos_min);
      CHECK(a.start[0] < mc.pos_max);
      CHECK(a.start[1] >= mc.pos_min);
      CHECK(a.start[1] < mc.pos_max);
      CHECK(a.start[2] >= mc.heading_min);
      CHECK(a.start[2] < mc.heading_max);
      CHECK(a.start[3] >= mc.speed_min);
      CHECK(a.start[3] < mc.speed_max);
    }
  }
  CHECK_THROWS_AS(sample_initials(mc, base, -1), std::invalid_argument);
  CHECK_THROWS_AS(sample_initials(mc, base, mc.samples),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_initials(mc, builtin("quad_swap"), 0), ScenarioError);
}
