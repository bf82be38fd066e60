#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "formplan/planner.hpp"

namespace formplan {

struct RobotState {
  RobotId id = 0;
  Pose2 pose;
  Vec2 velocity;
  double yaw_rate = 0.0;
};

/// Holonomic plant with first-order velocity lag (time constant `tau`,
/// zero-order-hold discretization; tau = 0 tracks exactly). The pose is
/// integrated with the updated velocity and yaw rate.
std::vector<RobotState> step(std::span<const RobotState> states, std::span<const VelocityCommand> commands,
                             double dt, double tau);

/// Bilinear sample of the raw-obstacle distance field at `p`; infinity on an
/// obstacle-free map.
double nearestObstacleDistance(Vec2 p, const ArrivalTimeField& obstacle_distance);
double nearestObstacleDistance(const Pose2& pose, const OccupancyGrid& grid);

struct ScheduledGoal {
  enum class Trigger { AtTime, OnIdle };
  Trigger trigger = Trigger::AtTime;
  double time = 0.0;  // s, for AtTime
  Pose2 goal;
};

/// Axis-aligned region used to time a constriction passage.
struct Region {
  Vec2 lo;
  Vec2 hi;
  bool contains(Vec2 p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
};

/// Pass/fail thresholds shipped with a scenario.
struct Thresholds {
  double min_obstacle_clearance = 0.30;  // strict lower bound, m
  double min_pair_distance = 0.60;       // strict lower bound, m
  double settle_tolerance = 0.10;        // m
  double max_completion_time = 0.0;      // s; 0 = duration cap
  /// Shape recovery around a constriction: pairwise distances within
  /// `shape_tolerance` (relative) of `rest_length` before entry and again
  /// within `recovery_time` after exit.
  std::optional<Region> constriction;
  double rest_length = 0.0;
  double shape_tolerance = 0.10;
  double recovery_time = 15.0;
};

struct Scenario {
  std::string name;
  std::string description;
  OccupancyGrid map;
  FormationSpec formation;
  PlannerConfig planner;
  std::vector<Pose2> initial_poses;
  std::vector<ScheduledGoal> schedule;
  double duration_cap = 120.0;  // s
  std::uint64_t seed = 0;
  double jitter = 0.0;  // m, uniform initial-position jitter
  double lag = 0.15;    // s
  Thresholds thresholds;

  /// Throws ScenarioError on an invalid scenario (including initial poses in
  /// collision with the inflated map).
  void validate(const MapBundle& maps) const;
};

struct MetricsRow {
  std::uint64_t cycle = 0;
  double time = 0.0;
  Phase phase = Phase::Inactive;
  std::optional<RobotId> leader;
  std::vector<Pose2> poses;
  std::vector<double> obstacle_distance;
  std::vector<double> pair_distance;  // (0,1), (0,2), ..., (1,2), ...
  std::vector<double> speed;
};

struct MetricsLog {
  int robots = 0;
  std::vector<MetricsRow> rows;

  std::string csvHeader() const;
  std::string toCsv() const;
  static std::vector<std::pair<int, int>> pairs(int robots);
};

/// Fixed-precision decimal used by every text export ("inf" for infinity).
std::string formatNumber(double v, int decimals = 6);

/// Serialized goal/control queue drained at the start of each cycle.
struct ControlCommand {
  enum class Kind { Goal, Pause, Resume, Reset };
  Kind kind = Kind::Goal;
  Pose2 goal;
  std::function<void(std::uint64_t cycle, const std::string& error)> on_applied;
};

/// One scenario's closed loop: schedule -> planner -> plant, one cycle per
/// planner period.
class Simulation {
 public:
  explicit Simulation(const Scenario& scenario, std::shared_ptr<const MapBundle> maps = nullptr);

  struct Tick {
    CycleOutput output;
    MetricsRow metrics;
    std::vector<RobotState> states;  // at the start of the cycle
  };

  /// Runs one cycle: applies due schedule entries and queued commands, plans,
  /// records metrics for the current states, then advances the plant.
  /// Returns nullopt (without advancing) while paused.
  std::optional<Tick> tick();

  /// Queues a command applied at the start of the next cycle.
  void enqueue(ControlCommand command);

  /// When false, the built-in schedule is ignored (goals come from enqueue).
  void setUseSchedule(bool use) { use_schedule_ = use; }
  void reset();

  bool scheduleExhausted() const { return !use_schedule_ || next_goal_ >= scenario_.schedule.size(); }
  bool paused() const { return paused_; }
  std::uint64_t cycle() const { return cycle_; }
  double time() const { return cycle_ * dt_; }
  double dt() const { return dt_; }

  const Planner& planner() const { return *planner_; }
  const std::vector<RobotState>& states() const { return states_; }
  const MapBundle& maps() const { return *maps_; }
  std::shared_ptr<const MapBundle> mapsPtr() const { return maps_; }
  const Scenario& scenario() const { return scenario_; }
  double lag() const { return lag_; }
  void setLag(double tau) { lag_ = tau; }

 private:
  std::vector<RobotState> initialStates() const;
  MetricsRow measure(const CycleOutput& out) const;

  Scenario scenario_;
  std::shared_ptr<const MapBundle> maps_;
  std::unique_ptr<Planner> planner_;
  std::vector<RobotState> states_;
  std::deque<ControlCommand> queue_;
  std::size_t next_goal_ = 0;
  std::uint64_t cycle_ = 0;
  double dt_ = 0.05;
  double lag_ = 0.15;
  bool use_schedule_ = true;
  bool paused_ = false;
};

enum class RunStatus { Completed, DurationCapReached, Truncated, PlannerError };
std::string_view runStatusName(RunStatus status);

struct RunOptions {
  std::optional<std::uint64_t> until_cycle;
  std::optional<double> lag;
  /// Called once per cycle with the frame and the start-of-cycle states.
  std::function<void(const PlannerFrame&, std::span<const RobotState>)> on_frame;
};

struct RunResult {
  RunStatus status = RunStatus::Completed;
  std::string error;
  MetricsLog metrics;
  double completion_time = 0.0;
  int leader_switches = 0;
  std::vector<std::pair<double, Phase>> phase_timeline;
  std::vector<RobotState> final_states;
  /// Distance of each robot to its assigned final goal when the planner went idle.
  std::vector<double> settle_error;
};

RunResult runScenario(const Scenario& scenario, const RunOptions& options = {});

}  // namespace formplan
