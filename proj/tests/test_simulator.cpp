#include "doctest.h"
#include "formplan/scenario.hpp"
#include "formplan/simulator.hpp"

using namespace formplan;

namespace {

Scenario trivialScenario() {
  Scenario s;
  s.name = "trivial";
  s.map = OccupancyGrid(GridGeometry(80, 80, 0.05));
  s.formation = equilateralTriangle(1.0);
  for (auto [a, b] : {std::pair{0, 1}, {1, 2}, {2, 0}}) s.formation.connections.push_back({a, b, 1.0, 4.0, 2.0, 0.5, 0.1, 0.1});
  const Pose2 at{{2.0, 2.0}, 0.0};
  for (const auto& p : transformBase(s.formation, at)) s.initial_poses.push_back({p, 0.0});
  s.schedule.push_back({ScheduledGoal::Trigger::AtTime, 0.0, at});
  s.duration_cap = 10.0;
  return s;
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("without lag a command is tracked exactly") {
    const std::vector<RobotState> s{{0, {{1.0, 1.0}, 0.0}, {}, 0.0}};
    const std::vector<VelocityCommand> c{{0, {0.5, 0.0}, 0.0}};
    const auto next = step(s, c, 0.05, 0.0);
    CHECK(next[0].pose.position.x == doctest::Approx(1.025));
    CHECK(next[0].pose.position.y == doctest::Approx(1.0));
    CHECK(next[0].velocity == Vec2{0.5, 0.0});
  }

  TEST_CASE("commanding the current velocity only integrates the pose") {
    const std::vector<RobotState> s{{0, {{0.0, 0.0}, 0.3}, {0.2, -0.1}, 0.0}};
    const std::vector<VelocityCommand> c{{0, {0.2, -0.1}, 0.0}};
    const auto next = step(s, c, 0.05, 0.15);
    CHECK(next[0].velocity.x == doctest::Approx(0.2));
    CHECK(next[0].velocity.y == doctest::Approx(-0.1));
    CHECK(next[0].pose.position.x == doctest::Approx(0.01));
    CHECK(next[0].pose.heading == doctest::Approx(0.3));
  }

  TEST_CASE("first-order lag reaches 63 percent after one time constant") {
    std::vector<RobotState> s{{0, {}, {}, 0.0}};
    const std::vector<VelocityCommand> c{{0, {1.0, 0.0}, 0.0}};
    for (int k = 0; k < 4; ++k) s = step(s, c, 0.05, 0.2);
    CHECK(s[0].velocity.x == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(0.05));
  }

  TEST_CASE("nearest obstacle distance") {
    OccupancyGrid grid(GridGeometry(40, 40, 0.05));
    CHECK(std::isinf(nearestObstacleDistance(Pose2{{1.0, 1.0}, 0.0}, grid)));
    for (int j = 0; j < 40; ++j) grid.setOccupied({0, j});
    const Vec2 next_to_wall = grid.geometry().cellCenter({1, 20});
    CHECK(nearestObstacleDistance(Pose2{next_to_wall, 0.0}, grid) == doctest::Approx(0.05));

    OccupancyGrid corridor(GridGeometry(60, 26, 0.05));
    for (int i = 0; i < 60; ++i) {
      corridor.setOccupied({i, 0});
      corridor.setOccupied({i, 25});
    }
    CHECK(nearestObstacleDistance(Pose2{{1.5, 0.65}, 0.0}, corridor) == doctest::Approx(0.6).epsilon(0.05));
  }

  TEST_CASE("a scenario starting on its goal finishes within a few cycles") {
    const RunResult r = runScenario(trivialScenario());
    CHECK(r.status == RunStatus::Completed);
    CHECK(r.metrics.rows.size() <= 3);
    for (double e : r.settle_error) CHECK(e <= 0.1);
  }

  TEST_CASE("runs are deterministic and truncated runs are exact prefixes") {
    const Scenario s = findBuiltin("lab-corridor")->scenario;
    const std::string a = runScenario(s).metrics.toCsv();
    const std::string b = runScenario(s).metrics.toCsv();
    CHECK(a == b);
    RunOptions opts;
    opts.until_cycle = 100;
    const RunResult cut = runScenario(s, opts);
    CHECK(cut.status == RunStatus::Truncated);
    CHECK(cut.metrics.rows.size() == 100);
    const std::string prefix = cut.metrics.toCsv();
    CHECK(a.compare(0, prefix.size(), prefix) == 0);
  }

  TEST_CASE("without lag no robot moves faster than the longitudinal limit") {
    Scenario s = findBuiltin("lab-unstructured")->scenario;
    s.lag = 0.0;
    RunOptions opts;
    opts.until_cycle = 300;
    const RunResult r = runScenario(s, opts);
    const double dt = s.planner.dt();
    for (std::size_t k = 1; k < r.metrics.rows.size(); ++k) {
      for (std::size_t i = 0; i < r.metrics.rows[k].poses.size(); ++i) {
        const double step_len = distance(r.metrics.rows[k].poses[i].position, r.metrics.rows[k - 1].poses[i].position);
        CHECK(step_len <= s.planner.limits.v_max_x * dt + 1e-12);
      }
    }
  }

  TEST_CASE("schedule entries trigger at their time or when the planner goes idle") {
    Scenario s = trivialScenario();
    s.schedule.clear();
    s.schedule.push_back({ScheduledGoal::Trigger::AtTime, 0.5, {{2.0, 2.0}, 0.0}});
    s.schedule.push_back({ScheduledGoal::Trigger::OnIdle, 0.0, {{2.3, 2.0}, 0.0}});
    RunOptions opts;
    std::vector<Phase> phases;
    opts.on_frame = [&](const PlannerFrame& f, std::span<const RobotState>) { phases.push_back(f.phase); };
    const RunResult r = runScenario(s, opts);
    CHECK(r.status == RunStatus::Completed);
    REQUIRE(phases.size() > 12);
    for (int k = 0; k < 10; ++k) CHECK(phases[k] == Phase::Inactive);
    CHECK(r.final_states[0].pose.position.x == doctest::Approx(transformBase(s.formation, {{2.3, 2.0}, 0.0})[0].x).epsilon(0.05));
  }

  TEST_CASE("the duration cap ends a run that cannot finish") {
    Scenario s = trivialScenario();
    s.schedule.front().goal = {{3.0, 2.0}, 0.0};
    s.duration_cap = 0.5;
    const RunResult r = runScenario(s);
    CHECK(r.status == RunStatus::DurationCapReached);
    CHECK(r.metrics.rows.size() == 11);
  }

  TEST_CASE("queued commands apply in order while paused") {
    Simulation sim(trivialScenario());
    sim.setUseSchedule(false);
    std::vector<std::pair<std::uint64_t, std::string>> applied;
    const auto record = [&](std::uint64_t cycle, const std::string& err) { applied.emplace_back(cycle, err); };
    sim.enqueue({ControlCommand::Kind::Pause, {}, record});
    sim.enqueue({ControlCommand::Kind::Goal, {{2.5, 2.0}, 0.0}, record});
    sim.enqueue({ControlCommand::Kind::Goal, {{-5.0, 2.0}, 0.0}, record});
    CHECK_FALSE(sim.tick().has_value());
    REQUIRE(applied.size() == 3);
    CHECK(applied[1] == std::pair<std::uint64_t, std::string>{0, ""});
    CHECK_FALSE(applied[2].second.empty());
    sim.enqueue({ControlCommand::Kind::Resume, {}, record});
    const auto tick = sim.tick();
    REQUIRE(tick.has_value());
    CHECK(tick->output.frame.cycle == 0);
    CHECK(tick->output.frame.phase != Phase::Inactive);
    CHECK(tick->output.frame.formation_goal == Pose2{{2.5, 2.0}, 0.0});
  }

  TEST_CASE("metrics CSV layout") {
    const RunResult r = runScenario(trivialScenario());
    const std::string csv = r.metrics.toCsv();
    const std::string header = csv.substr(0, csv.find('\n'));
    CHECK(header == r.metrics.csvHeader());
    CHECK(header.find("pair_dist_1_2") != std::string::npos);
    CHECK(formatNumber(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(formatNumber(0.5, 3) == "0.500");
  }
}
