#include "formplan/simulator.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "formplan/errors.hpp"

namespace formplan {

std::vector<RobotState> step(std::span<const RobotState> states, std::span<const VelocityCommand> commands,
                             double dt, double tau) {
  if (!(dt > 0.0)) throw Error("step: dt must be positive");
  const double gain = tau > 0.0 ? -std::expm1(-dt / tau) : 1.0;
  std::vector<RobotState> next(states.begin(), states.end());
  for (auto& s : next) {
    VelocityCommand cmd{s.id, {}, 0.0};
    for (const auto& c : commands) {
      if (c.robot == s.id) cmd = c;
    }
    s.velocity += (cmd.velocity - s.velocity) * gain;
    s.yaw_rate += (cmd.omega - s.yaw_rate) * gain;
    s.pose.position += s.velocity * dt;
    s.pose.heading = wrapAngle(s.pose.heading + s.yaw_rate * dt);
  }
  return next;
}

double nearestObstacleDistance(Vec2 p, const ArrivalTimeField& obstacle_distance) {
  if (obstacle_distance.sources.empty()) return ScalarField::kInfinity;
  return obstacle_distance.times.bilinear(p);
}

double nearestObstacleDistance(const Pose2& pose, const OccupancyGrid& grid) {
  return nearestObstacleDistance(pose.position, distanceField(grid));
}

void Scenario::validate(const MapBundle& maps) const {
  formation.validate();
  planner.validate();
  const int n = formation.size();
  if (static_cast<int>(initial_poses.size()) != n) {
    throw ScenarioError("robots", 0,
                        "expected " + std::to_string(n) + " robots, got " + std::to_string(initial_poses.size()));
  }
  if (schedule.empty()) throw ScenarioError("goals", 0, "goal schedule must not be empty");
  if (!(duration_cap > 0.0)) throw ScenarioError("duration_cap", 0, "must be positive");
  if (lag < 0.0) throw ScenarioError("lag", 0, "must be non-negative");
  if (jitter < 0.0) throw ScenarioError("jitter", 0, "must be non-negative");
  for (int k = 0; k < n; ++k) {
    const Vec2 p = initial_poses[k].position;
    if (!maps.geometry().inBounds(p) || maps.inflated.occupied(p)) {
      throw ScenarioError("robots", 0, "initial pose of robot " + std::to_string(k + 1) + " is in collision");
    }
  }
  for (const auto& g : schedule) {
    if (!maps.geometry().inBounds(g.goal.position)) throw ScenarioError("goals", 0, "goal out of bounds");
  }
}

std::string formatNumber(double v, int decimals) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  // Avoid "-0.000000" so identical states print identically.
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::vector<std::pair<int, int>> MetricsLog::pairs(int robots) {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < robots; ++a) {
    for (int b = a + 1; b < robots; ++b) out.emplace_back(a, b);
  }
  return out;
}

std::string MetricsLog::csvHeader() const {
  std::ostringstream out;
  out << "cycle,time,phase,leader";
  for (int k = 0; k < robots; ++k) out << ",x_" << k + 1 << ",y_" << k + 1 << ",heading_" << k + 1;
  for (int k = 0; k < robots; ++k) out << ",obstacle_dist_" << k + 1;
  for (const auto& [a, b] : pairs(robots)) out << ",pair_dist_" << a + 1 << "_" << b + 1;
  for (int k = 0; k < robots; ++k) out << ",speed_" << k + 1;
  return out.str();
}

std::string MetricsLog::toCsv() const {
  std::ostringstream out;
  out << csvHeader() << '\n';
  for (const auto& r : rows) {
    out << r.cycle << ',' << formatNumber(r.time, 3) << ',' << phaseName(r.phase) << ','
        << (r.leader ? std::to_string(*r.leader + 1) : std::string());
    for (const auto& p : r.poses) {
      out << ',' << formatNumber(p.position.x) << ',' << formatNumber(p.position.y) << ','
          << formatNumber(p.heading);
    }
    for (double d : r.obstacle_distance) out << ',' << formatNumber(d);
    for (double d : r.pair_distance) out << ',' << formatNumber(d);
    for (double s : r.speed) out << ',' << formatNumber(s);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

Simulation::Simulation(const Scenario& scenario, std::shared_ptr<const MapBundle> maps)
    : scenario_(scenario), maps_(std::move(maps)) {
  if (!maps_) maps_ = MapBundle::build(scenario_.map, scenario_.planner);
  scenario_.validate(*maps_);
  dt_ = scenario_.planner.dt();
  lag_ = scenario_.lag;
  reset();
}

void Simulation::reset() {
  planner_ = std::make_unique<Planner>(scenario_.formation, scenario_.planner, maps_);
  states_ = initialStates();
  next_goal_ = 0;
  cycle_ = 0;
  paused_ = false;
}

std::vector<RobotState> Simulation::initialStates() const {
  std::mt19937_64 rng(scenario_.seed);
  // Portable uniform in [-1, 1) from the raw 64-bit stream.
  const auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0; };
  std::vector<RobotState> out;
  for (std::size_t k = 0; k < scenario_.initial_poses.size(); ++k) {
    RobotState s;
    s.id = static_cast<RobotId>(k);
    s.pose = scenario_.initial_poses[k];
    if (scenario_.jitter > 0.0) {
      const double dx = uniform();
      const double dy = uniform();
      s.pose.position += Vec2{dx, dy} * scenario_.jitter;
    }
    out.push_back(s);
  }
  return out;
}

void Simulation::enqueue(ControlCommand command) { queue_.push_back(std::move(command)); }

MetricsRow Simulation::measure(const CycleOutput& out) const {
  MetricsRow row;
  row.cycle = cycle_;
  row.time = time();
  row.phase = out.frame.phase;
  row.leader = out.frame.leader;
  for (const auto& s : states_) {
    row.poses.push_back(s.pose);
    row.obstacle_distance.push_back(nearestObstacleDistance(s.pose.position, maps_->obstacle_distance));
    row.speed.push_back(s.velocity.norm());
  }
  for (const auto& [a, b] : MetricsLog::pairs(static_cast<int>(states_.size()))) {
    row.pair_distance.push_back(distance(states_[a].pose.position, states_[b].pose.position));
  }
  return row;
}

std::optional<Simulation::Tick> Simulation::tick() {
  const double t = time();
  if (use_schedule_ && !paused_) {
    while (next_goal_ < scenario_.schedule.size()) {
      const auto& entry = scenario_.schedule[next_goal_];
      const bool due = entry.trigger == ScheduledGoal::Trigger::AtTime
                           ? entry.time <= t + 1e-9
                           : planner_->state().phase == Phase::Inactive;
      if (!due) break;
      planner_->setFormationGoal(entry.goal);
      ++next_goal_;
    }
  }
  while (!queue_.empty()) {
    ControlCommand cmd = std::move(queue_.front());
    queue_.pop_front();
    std::string error;
    switch (cmd.kind) {
      case ControlCommand::Kind::Goal:
        try {
          planner_->setFormationGoal(cmd.goal);
        } catch (const PlanningError& e) {
          error = e.what();
        }
        break;
      case ControlCommand::Kind::Pause: paused_ = true; break;
      case ControlCommand::Kind::Resume: paused_ = false; break;
      case ControlCommand::Kind::Reset: {
        const bool use = use_schedule_;
        reset();
        use_schedule_ = use;
        break;
      }
    }
    if (cmd.on_applied) cmd.on_applied(cycle_, error);
  }
  if (paused_) return std::nullopt;

  Tick tick;
  tick.states = states_;
  tick.output = planner_->planCycle([&] {
    std::vector<Pose2> poses;
    for (const auto& s : states_) poses.push_back(s.pose);
    return poses;
  }());
  tick.output.frame.cycle = cycle_;
  tick.metrics = measure(tick.output);
  states_ = step(states_, tick.output.commands, dt_, lag_);
  ++cycle_;
  return tick;
}

std::string_view runStatusName(RunStatus status) {
  switch (status) {
    case RunStatus::Completed: return "completed";
    case RunStatus::DurationCapReached: return "duration_cap_reached";
    case RunStatus::Truncated: return "truncated";
    case RunStatus::PlannerError: return "planner_error";
  }
  return "?";
}

RunResult runScenario(const Scenario& scenario, const RunOptions& options) {
  Simulation sim(scenario);
  if (options.lag) sim.setLag(*options.lag);

  RunResult result;
  const int n = scenario.formation.size();
  result.metrics.robots = n;
  std::optional<Phase> last_phase;
  RobotId last_leader = -1;  // -1: no leader since the last idle period

  while (true) {
    if (options.until_cycle && sim.cycle() >= *options.until_cycle) {
      result.status = RunStatus::Truncated;
      break;
    }
    if (sim.time() > scenario.duration_cap + 1e-9) {
      result.status = RunStatus::DurationCapReached;
      break;
    }
    std::optional<Simulation::Tick> tick;
    try {
      tick = sim.tick();
    } catch (const Error& e) {
      result.status = RunStatus::PlannerError;
      result.error = "t=" + formatNumber(sim.time(), 3) + " s: " + e.what();
      break;
    }
    const PlannerFrame& frame = tick->output.frame;
    if (options.on_frame) options.on_frame(frame, tick->states);
    result.metrics.rows.push_back(tick->metrics);

    if (!last_phase || *last_phase != frame.phase) {
      result.phase_timeline.emplace_back(tick->metrics.time, frame.phase);
      if (frame.phase == Phase::Inactive && last_phase) {
        result.completion_time = tick->metrics.time;
        result.settle_error.assign(n, 0.0);
        for (int k = 0; k < n; ++k) {
          const auto& goal = frame.robots[k].goal;
          result.settle_error[k] = goal ? distance(*goal, tick->states[k].pose.position) : 0.0;
        }
      }
    }
    if (frame.leader && last_leader >= 0 && *frame.leader != last_leader) ++result.leader_switches;
    if (frame.leader) last_leader = *frame.leader;
    if (frame.phase == Phase::Inactive) last_leader = -1;
    last_phase = frame.phase;

    if (sim.scheduleExhausted() && sim.planner().state().phase == Phase::Inactive) {
      result.status = RunStatus::Completed;
      break;
    }
  }
  result.final_states = sim.states();
  return result;
}

}  // namespace formplan
