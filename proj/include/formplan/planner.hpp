#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "formplan/fast_marching.hpp"
#include "formplan/formation.hpp"
#include "formplan/grid.hpp"

namespace formplan {

struct RobotLimits {
  double v_max_x = 0.50;  // m/s, longitudinal
  double v_max_y = 0.20;  // m/s, lateral
  double v_min = 0.05;    // m/s, floor of the proximity cap
  double d_slowdown = 0.40;  // m
};

struct PlannerConfig {
  double rate = 20.0;             // Hz
  double lookahead = 2.5;         // normalized s
  double d_switch = 0.05;         // normalized s
  double w_min_partial = 0.70;
  double w_min_avoid = 0.50;
  double safe_distance_a = 1.50;  // m, leader velocity map
  double safe_distance_b = 0.50;  // m, follower velocity map
  double inflation_radius = 0.30; // m
  RobotLimits limits;
  /// Optional per-robot overrides, indexed by robot id.
  std::vector<RobotLimits> robot_limits;
  double goal_tolerance = 0.10;   // m
  double yaw_gain = 2.0;          // 1/s
  double max_yaw_rate = 1.5;      // rad/s
  double yaw_deadband = 0.02;     // m/s

  double dt() const { return 1.0 / rate; }
  const RobotLimits& limitsFor(RobotId id) const {
    return id >= 0 && id < static_cast<int>(robot_limits.size()) ? robot_limits[id] : limits;
  }
  /// Throws ScenarioError naming the first invalid field.
  void validate() const;
};

/// Static map products shared read-only by the planner and simulator.
struct MapBundle {
  OccupancyGrid grid;
  OccupancyGrid inflated;
  /// Distance to the nearest raw obstacle (m).
  ArrivalTimeField obstacle_distance;
  /// Distance to the nearest inflated obstacle (m).
  ArrivalTimeField inflated_distance;
  VelocityMap w_a;
  VelocityMap w_b;

  static std::shared_ptr<const MapBundle> build(OccupancyGrid grid, const PlannerConfig& config);
  const GridGeometry& geometry() const { return grid.geometry(); }
};

enum class Phase { Inactive, PartialGoal, FinalGoal };
std::string_view phaseName(Phase phase);

struct VelocityCommand {
  RobotId robot = 0;
  Vec2 velocity;       // world frame, m/s
  double omega = 0.0;  // rad/s
};

enum class SpeedCap { None, Direction, Proximity, Goal };
std::string_view speedCapName(SpeedCap cap);

struct RobotFrame {
  RobotId id = 0;
  int role = 0;
  std::optional<Vec2> goal;
  std::vector<Vec2> path;
  double eta = std::numeric_limits<double>::infinity();
  Vec2 v_des;
  Vec2 v_connections;  // after springs and dampers
  Vec2 v_avoid;        // after obstacle avoidance
  Vec2 v_cmd;
  double omega = 0.0;
  bool avoidance_triggered = false;
  double alpha = 0.0;
  double cap_direction = 0.0;
  double cap_proximity = 0.0;
  double cap_goal = std::numeric_limits<double>::infinity();
  SpeedCap binding_cap = SpeedCap::None;
  bool no_path = false;
  bool recovering = false;
};

struct ConnectionFrame {
  int role_a = 0;
  int role_b = 0;
  RobotId robot_a = 0;
  RobotId robot_b = 0;
  double length = 0.0;
  double rest_length = 0.0;
  double spring = 0.0;
  double damping = 0.0;
  bool fresh = false;
  bool coincident = false;
};

/// Diagnostics for one planner cycle.
struct PlannerFrame {
  std::uint64_t cycle = 0;
  Phase phase = Phase::Inactive;
  std::optional<RobotId> leader;
  std::optional<Pose2> formation_goal;
  std::optional<Vec2> lookahead_point;
  std::vector<RobotFrame> robots;
  std::vector<ConnectionFrame> connections;
  /// Operator-facing notes; robot numbers in them are 1-based like the wire format.
  std::vector<std::string> events;
};

// ---------------------------------------------------------------------------
// Per-stage operations. Pure functions, exposed for testing and bindings.

/// Quadratic spring term, capped at max_att when stretched; negative values push the pair apart.
double springDelta(const ConnectionSpec& conn, double length);
/// Damping term on the length rate; zero for a connection whose robot pair just changed.
double dampingDelta(const ConnectionSpec& conn, double length, double previous_length, double dt, bool fresh);

struct ConnectionMemory {
  RobotId robot_a = -1;
  RobotId robot_b = -1;
  double length = 0.0;
};

struct ConnectionResult {
  std::vector<Vec2> velocities;
  std::vector<ConnectionFrame> connections;
  std::vector<ConnectionMemory> memory;
};

/// Adds each connection's spring and damping terms along the unit vector
/// toward the partner robot. `previous` is indexed like spec.connections and
/// may be empty (every connection fresh).
ConnectionResult applyConnections(std::span<const Vec2> v_des, std::span<const Vec2> positions,
                                  const FormationSpec& spec, const RoleAssignment& assignment,
                                  std::span<const ConnectionMemory> previous, double dt);

struct AvoidanceResult {
  Vec2 velocity;
  bool triggered = false;
  double alpha = 0.0;
};

/// Gradient-projection obstacle avoidance on the follower velocity map. The
/// gradient and value are taken at the robot's containing cell.
AvoidanceResult obstacleAvoidance(Vec2 velocity, CellIndex cell, const VelocityMap& w_b, double w_min_avoid);
/// Same rule with the gradient and map value supplied directly (per-meter gradient).
AvoidanceResult obstacleAvoidance(Vec2 velocity, Vec2 gradient, double w_value, double w_min_avoid,
                                  double safe_distance_b);

/// Radius of the (v_max_x, v_max_y) speed ellipse at body-frame angle theta.
double directionalSpeedLimit(double theta, double v_max_x, double v_max_y);
double proximitySpeedLimit(double w_value, double v_min, double v_max_x);
double goalSpeedLimit(double dist_to_goal, double d_slowdown, double v_max_x);

/// Initial path direction scaled to `v_cap`; zero for a converged path.
Vec2 desiredVelocity(const PlannedPath& path, double v_cap);

struct PartialGoals {
  std::vector<Vec2> per_role;
  double heading = 0.0;
};

/// Point `lookahead` normalized seconds along the path and the path tangent there.
Pose2 lookaheadPoint(const PlannedPath& path, double lookahead, double fallback_heading = 0.0);

/// Per-role partial goals from the leader path; followers that land where
/// W_B < w_min_partial slide toward p_1 in half-cell steps.
PartialGoals computePartialGoals(const PlannedPath& leader_path, double lookahead, const FormationSpec& spec,
                                 const VelocityMap& w_b, double w_min_partial, double fallback_heading = 0.0);

struct CommandCaps {
  double direction = std::numeric_limits<double>::infinity();
  double proximity = std::numeric_limits<double>::infinity();
  double goal = std::numeric_limits<double>::infinity();
};

struct FinalizedCommand {
  VelocityCommand command;
  CommandCaps caps;
  SpeedCap binding = SpeedCap::None;
};

/// Caps the magnitude of v' (direction preserved) and computes the yaw rate.
FinalizedCommand finalizeCommand(RobotId robot, Vec2 v_prime, double robot_heading, const CommandCaps& caps,
                                 const PlannerConfig& config);

// ---------------------------------------------------------------------------

struct PlannerState {
  Phase phase = Phase::Inactive;
  std::optional<Pose2> formation_goal;
  RoleAssignment assignment;
  std::vector<ConnectionMemory> connection_memory;
  std::vector<PlannedPath> paths;
  std::uint64_t cycle = 0;
};

struct CycleOutput {
  std::vector<VelocityCommand> commands;
  PlannerFrame frame;
};

/// The main loop: one call per planner period.
class Planner {
 public:
  Planner(FormationSpec spec, PlannerConfig config, std::shared_ptr<const MapBundle> maps);

  /// Activates (or retargets) the planner. Throws PlanningError when the
  /// goal center is out of bounds or inside an inflated obstacle.
  void setFormationGoal(const Pose2& goal);

  CycleOutput planCycle(std::span<const Pose2> poses);

  const PlannerState& state() const { return state_; }
  const FormationSpec& spec() const { return spec_; }
  const PlannerConfig& config() const { return config_; }
  const MapBundle& maps() const { return *maps_; }
  const std::vector<Vec2>& finalGoals() const { return final_goals_; }

 private:
  void enterFinalGoal();

  FormationSpec spec_;
  PlannerConfig config_;
  std::shared_ptr<const MapBundle> maps_;
  PlannerState state_;
  std::vector<Vec2> final_goals_;
  std::optional<ArrivalTimeField> leader_field_;
  std::map<int, ArrivalTimeField> final_fields_;
  std::map<int, std::string> final_field_errors_;
};

}  // namespace formplan
