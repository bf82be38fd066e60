#include <random>

#include "doctest.h"
#include "formplan/errors.hpp"
#include "formplan/planner.hpp"
#include "formplan/scenario.hpp"

using namespace formplan;

namespace {

ConnectionSpec labConnection() { return {0, 1, 1.15, 4.0, 2.0, 0.50, 0.10, 0.10}; }

PlannedPath straightPath(Vec2 a, Vec2 b, int segments) {
  PlannedPath p;
  p.start = a;
  p.goal = b;
  for (int k = 0; k <= segments; ++k) {
    const double t = static_cast<double>(k) / segments;
    p.vertices.push_back(a + (b - a) * t);
    p.vertex_eta.push_back(distance(a, b) * (1.0 - t));
  }
  p.eta = p.vertex_eta.front();
  return p;
}

std::shared_ptr<const MapBundle> openMap(double w, double h) {
  return MapBundle::build(OccupancyGrid(GridGeometry(static_cast<int>(w / 0.05), static_cast<int>(h / 0.05), 0.05)),
                          PlannerConfig{});
}

std::vector<Pose2> posesOf(const std::vector<Vec2>& points, double heading = 0.0) {
  std::vector<Pose2> out;
  for (const auto& p : points) out.push_back({p, heading});
  return out;
}

}  // namespace

TEST_SUITE("planner") {
  TEST_CASE("spring term examples") {
    const ConnectionSpec c = labConnection();
    CHECK(springDelta(c, 2.15) == doctest::Approx(0.50));
    CHECK(springDelta(c, 0.65) == doctest::Approx(-1.0));
    CHECK(springDelta(c, 1.15) == 0.0);
    CHECK(springDelta(c, 1.25) == doctest::Approx(2.0 * 0.01));
  }

  TEST_CASE("spring term is continuous at the rest length") {
    const ConnectionSpec c = labConnection();
    const double below = springDelta(c, std::nextafter(c.rest_length, 0.0));
    const double above = springDelta(c, std::nextafter(c.rest_length, 10.0));
    CHECK(std::abs(below - springDelta(c, c.rest_length)) <= 1e-12);
    CHECK(std::abs(above - springDelta(c, c.rest_length)) <= 1e-12);
  }

  TEST_CASE("damping term examples") {
    const ConnectionSpec c = labConnection();
    CHECK(dampingDelta(c, 1.0, 1.0, 0.05, false) == 0.0);
    CHECK(dampingDelta(c, 0.98, 1.0, 0.05, false) == doctest::Approx(-0.04));
    CHECK(dampingDelta(c, 0.5, 1.5, 0.05, true) == 0.0);
  }

  TEST_CASE("connections at rest leave the desired velocities untouched") {
    FormationSpec spec = equilateralTriangle(1.15);
    for (auto [a, b] : {std::pair{0, 1}, {1, 2}, {2, 0}}) spec.connections.push_back({a, b, 1.15, 4.0, 2.0, 0.5, 0.1, 0.1});
    const auto pos = transformBase(spec, {{2.0, 2.0}, 0.3});
    const std::vector<Vec2> v_des{{0.3, 0.1}, {0.2, -0.1}, {0.0, 0.4}};
    const ConnectionResult r = applyConnections(v_des, pos, spec, RoleAssignment::identity(3, 0), {}, 0.05);
    for (int k = 0; k < 3; ++k) {
      CHECK(r.velocities[k].x == doctest::Approx(v_des[k].x).epsilon(1e-12));
      CHECK(r.velocities[k].y == doctest::Approx(v_des[k].y).epsilon(1e-12));
    }
  }

  TEST_CASE("compressed pair is pushed apart with equal and opposite contributions") {
    FormationSpec spec;
    spec.base_points = {{0.5, 0.0}, {-0.5, 0.0}};
    spec.connections.push_back(labConnection());
    const std::vector<Vec2> pos{{1.0, 1.0}, {1.5, 1.2}};
    const std::vector<Vec2> zero(2);
    const ConnectionResult r = applyConnections(zero, pos, spec, RoleAssignment::identity(2, 0), {}, 0.05);
    const Vec2 ab = pos[1] - pos[0];
    CHECK(r.velocities[0].dot(ab) < 0.0);
    CHECK(r.velocities[1].dot(ab) > 0.0);
    CHECK((r.velocities[0] + r.velocities[1]).norm() <= 1e-12);
    CHECK(r.connections.front().fresh);
  }

  TEST_CASE("coincident robots use the fallback axis") {
    FormationSpec spec;
    spec.base_points = {{0.5, 0.0}, {-0.5, 0.0}};
    spec.connections.push_back(labConnection());
    const std::vector<Vec2> pos{{1.0, 1.0}, {1.0, 1.0}};
    const ConnectionResult r = applyConnections(std::vector<Vec2>(2), pos, spec, RoleAssignment::identity(2, 0), {}, 0.05);
    CHECK(r.connections.front().coincident);
    CHECK(r.velocities[0].x < 0.0);
    CHECK(r.velocities[1].x > 0.0);
  }

  TEST_CASE("obstacle avoidance leaves outward motion alone") {
    const AvoidanceResult r = obstacleAvoidance({0.3, 0.2}, {1.0, 0.0}, 0.6, 0.5, 0.5);
    CHECK_FALSE(r.triggered);
    CHECK(r.velocity == Vec2{0.3, 0.2});
  }

  TEST_CASE("at the avoidance threshold the inward component is removed entirely") {
    const AvoidanceResult r = obstacleAvoidance({-0.4, 0.0}, {2.0, 0.0}, 0.5, 0.5, 0.5);
    CHECK(r.triggered);
    CHECK(r.alpha == 1.0);
    CHECK(std::abs(r.velocity.x) <= 1e-12);
  }

  TEST_CASE("W_B = 0.7 gives an adjustment factor of 0.6") {
    const AvoidanceResult r = obstacleAvoidance({-0.5, 0.3}, {1.5, 0.0}, 0.7, 0.5, 0.5);
    CHECK(r.triggered);
    CHECK(r.alpha == doctest::Approx(0.6));
    CHECK(r.velocity.x == doctest::Approx(-0.5 * 0.4));
    CHECK(r.velocity.y == doctest::Approx(0.3));
  }

  TEST_CASE("a flat ridge cancels the avoidance step") {
    const AvoidanceResult r = obstacleAvoidance({-0.4, 0.1}, {0.01, 0.0}, 0.6, 0.5, 0.5);
    CHECK_FALSE(r.triggered);
  }

  TEST_CASE("avoidance invariants on random inputs") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> comp(-1.0, 1.0), w(0.0, 1.0), mag(0.0, 3.0);
    int triggered = 0;
    for (int trial = 0; trial < 5000; ++trial) {
      const Vec2 v{comp(rng), comp(rng)};
      const Vec2 g = Vec2{comp(rng), comp(rng)}.normalized() * mag(rng);
      const double wb = w(rng);
      const AvoidanceResult r = obstacleAvoidance(v, g, wb, 0.5, 0.5);
      if (!r.triggered) continue;
      ++triggered;
      const Vec2 n = g.normalized();
      const Vec2 t{-n.y, n.x};
      CHECK(std::abs(t.dot(r.velocity) - t.dot(v)) <= 1e-9);
      CHECK(g.dot(r.velocity) >= g.dot(v) - 1e-12);
      if (wb <= 0.5) CHECK(std::abs(n.dot(r.velocity)) <= 1e-9);
    }
    CHECK(triggered > 500);
  }

  TEST_CASE("speed caps") {
    CHECK(directionalSpeedLimit(0.0, 0.5, 0.2) == 0.5);
    CHECK(directionalSpeedLimit(std::numbers::pi / 2, 0.5, 0.2) == 0.2);
    CHECK(directionalSpeedLimit(std::numbers::pi / 4, 0.5, 0.2) == doctest::Approx(0.2626).epsilon(1e-3));
    CHECK(proximitySpeedLimit(1.0, 0.05, 0.5) == 0.5);
    CHECK(proximitySpeedLimit(0.0, 0.05, 0.5) == 0.05);
    CHECK(proximitySpeedLimit(0.5, 0.05, 0.5) == doctest::Approx(0.275));
    CHECK(goalSpeedLimit(0.4, 0.4, 0.5) == doctest::Approx(0.5));
    CHECK(goalSpeedLimit(0.0, 0.4, 0.5) == 0.0);
    CHECK(goalSpeedLimit(0.2, 0.4, 0.5) == doctest::Approx(0.25));
  }

  TEST_CASE("finalized commands") {
    const PlannerConfig cfg;
    CommandCaps caps{directionalSpeedLimit(std::numbers::pi / 2, 0.5, 0.2), 0.5, 10.0};
    const FinalizedCommand lateral = finalizeCommand(0, {0.0, 0.5}, 0.0, caps, cfg);
    CHECK(lateral.command.velocity.norm() == doctest::Approx(0.2));
    CHECK(lateral.command.velocity.x == doctest::Approx(0.0));
    CHECK(lateral.binding == SpeedCap::Direction);
    CHECK(lateral.command.omega == doctest::Approx(cfg.max_yaw_rate));

    const FinalizedCommand still = finalizeCommand(0, {0.0, 0.0}, 1.0, caps, cfg);
    CHECK(still.command.velocity == Vec2{});
    CHECK(still.command.omega == 0.0);

    const FinalizedCommand slow = finalizeCommand(0, {0.05, 0.01}, 0.0, {0.5, 0.5, 0.5}, cfg);
    CHECK(slow.command.velocity == Vec2{0.05, 0.01});
    CHECK(slow.binding == SpeedCap::None);
  }

  TEST_CASE("finalized commands never exceed any cap and keep direction") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> comp(-1.0, 1.0), angle(-4.0, 4.0), w(0.0, 1.0), dist(0.0, 2.0);
    const PlannerConfig cfg;
    for (int trial = 0; trial < 2000; ++trial) {
      const Vec2 v{comp(rng), comp(rng)};
      const double heading = angle(rng);
      const CommandCaps caps{directionalSpeedLimit(v.angle() - heading, 0.5, 0.2), proximitySpeedLimit(w(rng), 0.05, 0.5),
                             goalSpeedLimit(dist(rng), 0.4, 0.5)};
      const Vec2 out = finalizeCommand(0, v, heading, caps, cfg).command.velocity;
      CHECK(out.norm() <= std::min({caps.direction, caps.proximity, caps.goal}) + 1e-12);
      CHECK(std::abs(out.cross(v)) <= 1e-12);
      CHECK(out.dot(v) >= 0.0);
    }
  }

  TEST_CASE("desired velocity follows the first path segment at the cap") {
    const PlannedPath north = straightPath({1.0, 1.0}, {1.0, 3.0}, 4);
    const Vec2 v = desiredVelocity(north, 0.5);
    CHECK(v.x == doctest::Approx(0.0));
    CHECK(v.y == doctest::Approx(0.5));
    CHECK(desiredVelocity(straightPath({1, 1}, {1, 1}, 0), 0.5) == Vec2{});
  }

  TEST_CASE("partial goals along a straight path reproduce the base configuration") {
    const auto maps = openMap(10.0, 6.0);
    const FormationSpec spec = diamondSquare(1.0);
    const PlannedPath path = straightPath({0.5, 3.0}, {8.5, 3.0}, 80);
    const PartialGoals pg = computePartialGoals(path, 2.5, spec, maps->w_b, 0.7);
    CHECK(pg.per_role[0].x == doctest::Approx(3.0));
    CHECK(pg.per_role[0].y == doctest::Approx(3.0));
    CHECK(pg.heading == doctest::Approx(0.0));
    for (int k = 1; k < spec.size(); ++k) {
      const Vec2 expected = spec.base_points[k] - spec.base_points[0];
      CHECK((pg.per_role[k] - pg.per_role[0]).x == doctest::Approx(expected.x));
      CHECK((pg.per_role[k] - pg.per_role[0]).y == doctest::Approx(expected.y));
    }
  }

  TEST_CASE("unshifted partial goals are a rigid copy of the base configuration") {
    const auto maps = openMap(12.0, 12.0);
    const FormationSpec spec = diamondSquare(1.0);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> angle(-3.1, 3.1);
    for (int trial = 0; trial < 50; ++trial) {
      const double a = angle(rng);
      const Vec2 c{6.0, 6.0};
      const PlannedPath path = straightPath(c - unitFromAngle(a) * 3.0, c + unitFromAngle(a) * 3.0, 60);
      const PartialGoals pg = computePartialGoals(path, 2.0, spec, maps->w_b, 0.0);
      for (int i = 0; i < spec.size(); ++i) {
        for (int j = i + 1; j < spec.size(); ++j) {
          const double base = distance(spec.base_points[i], spec.base_points[j]);
          CHECK(std::abs(distance(pg.per_role[i], pg.per_role[j]) - base) <= 1e-9);
        }
      }
    }
  }

  TEST_CASE("partial goals landing on a wall slide toward the leader point") {
    OccupancyGrid grid(GridGeometry(200, 120, 0.05));
    grid.fillRect({0.0, 3.4}, {10.0, 6.0});
    const auto maps = MapBundle::build(grid, PlannerConfig{});
    const FormationSpec spec = diamondSquare(1.0);
    const PlannedPath path = straightPath({0.5, 2.6}, {8.5, 2.6}, 80);
    const PartialGoals pg = computePartialGoals(path, 2.5, spec, maps->w_b, 0.7);
    for (int k = 0; k < spec.size(); ++k) {
      const bool safe = maps->w_b.speed.sampleCell(pg.per_role[k]) >= 0.7;
      CHECK((safe || pg.per_role[k] == pg.per_role[0]));
    }
  }

  TEST_CASE("a lookahead longer than the path puts the leader point at the path end") {
    const auto maps = openMap(10.0, 6.0);
    const PlannedPath path = straightPath({1.0, 3.0}, {3.0, 3.0}, 20);
    const PartialGoals pg = computePartialGoals(path, 2.5, diamondSquare(1.0), maps->w_b, 0.7);
    CHECK(pg.per_role[0].x == doctest::Approx(3.0));
    CHECK(pg.per_role[0].y == doctest::Approx(3.0));
  }

  TEST_CASE("the planner enters FinalGoal exactly when the leader eta drops below the lookahead") {
    const FormationSpec spec = equilateralTriangle(1.15);
    const Pose2 start{{1.5, 3.0}, 0.0};
    const auto poses = posesOf(transformBase(spec, start));
    const double lead_x = poses[0].position.x;
    for (const auto& [gap, expected] : {std::pair{2.4, Phase::FinalGoal}, {2.6, Phase::PartialGoal}}) {
      Planner planner(spec, PlannerConfig{}, openMap(10.0, 6.0));
      planner.setFormationGoal({{lead_x + gap, 3.0}, 0.0});
      const CycleOutput out = planner.planCycle(poses);
      CHECK(out.frame.phase == expected);
    }
  }

  TEST_CASE("goal placement errors") {
    OccupancyGrid grid(GridGeometry(100, 60, 0.05));
    grid.fillRect({2.0, 0.0}, {2.5, 3.0});
    Planner planner(equilateralTriangle(1.0), PlannerConfig{}, MapBundle::build(grid, PlannerConfig{}));
    try {
      planner.setFormationGoal({{2.25, 1.5}, 0.0});
      FAIL("expected PlanningError");
    } catch (const PlanningError& e) {
      CHECK(std::string(e.what()) == "goal in inflated obstacle");
    }
    CHECK_THROWS_AS(planner.setFormationGoal({{20.0, 1.0}, 0.0}), PlanningError);
    CHECK(planner.state().phase == Phase::Inactive);
  }

  TEST_CASE("an idle planner emits zero commands") {
    Planner planner(equilateralTriangle(1.0), PlannerConfig{}, openMap(5.0, 5.0));
    const auto out = planner.planCycle(posesOf(transformBase(equilateralTriangle(1.0), {{2.5, 2.5}, 0.0})));
    CHECK(out.frame.phase == Phase::Inactive);
    for (const auto& c : out.commands) CHECK(c.velocity == Vec2{});
  }

  TEST_CASE("robots already on their goals finish without moving") {
    const FormationSpec spec = equilateralTriangle(1.0);
    const Pose2 goal{{2.5, 2.5}, 0.0};
    Planner planner(spec, PlannerConfig{}, openMap(5.0, 5.0));
    planner.setFormationGoal(goal);
    const auto out = planner.planCycle(posesOf(transformBase(spec, goal)));
    CHECK(out.frame.phase == Phase::Inactive);
    for (const auto& c : out.commands) CHECK(c.velocity.norm() == 0.0);
  }

  TEST_CASE("phase transitions on a full run follow the state machine") {
    const Scenario scenario = findBuiltin("lab-corridor")->scenario;
    std::vector<PlannerFrame> frames;
    std::vector<std::vector<RobotState>> states;
    RunOptions opts;
    opts.on_frame = [&](const PlannerFrame& f, std::span<const RobotState> s) {
      frames.push_back(f);
      states.emplace_back(s.begin(), s.end());
    };
    const RunResult result = runScenario(scenario, opts);
    REQUIRE(result.status == RunStatus::Completed);
    Phase previous = Phase::Inactive;
    bool seen_final = false;
    for (std::size_t k = 0; k < frames.size(); ++k) {
      const auto& f = frames[k];
      const auto& ev = f.events;
      const auto has = [&](const std::string& e) { return std::find(ev.begin(), ev.end(), e) != ev.end(); };
      if (f.phase == Phase::PartialGoal) CHECK_FALSE(seen_final);
      if (previous == Phase::PartialGoal && f.phase != Phase::PartialGoal) CHECK(has("entered FinalGoal"));
      if (f.phase == Phase::FinalGoal) seen_final = true;
      if (seen_final && f.phase == Phase::Inactive) {
        CHECK(has("all robots reached their goals"));
        for (std::size_t r = 0; r < f.robots.size(); ++r) {
          REQUIRE(f.robots[r].goal.has_value());
          CHECK(distance(states[k][r].pose.position, *f.robots[r].goal) <= scenario.planner.goal_tolerance);
        }
        break;
      }
      previous = f.phase;
    }
    CHECK(seen_final);
    CHECK(frames.back().phase == Phase::Inactive);
  }

  TEST_CASE("planner configuration validation") {
    PlannerConfig cfg;
    cfg.rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ScenarioError);
    PlannerConfig ok;
    CHECK_NOTHROW(ok.validate());
  }
}
