#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "formplan/geometry.hpp"

namespace formplan {

/// Robots are identified by their index in the scenario's robot list.
using RobotId = int;

/// Virtual spring-damper between two formation roles. Roles are 0-based here;
/// role 0 is the leader role.
struct ConnectionSpec {
  int role_a = 0;
  int role_b = 1;
  double rest_length = 1.0;  // m
  double k_rep = 1.0;        // 1/(m s)
  double k_att = 1.0;        // 1/(m s)
  double max_att = 0.5;      // m/s
  double b_att = 0.1;
  double b_rep = 0.1;
};

/// Base configuration c_0..c_{N-1} in the formation frame plus connections.
/// The formation center is the frame origin; c_0 lies on the +x axis.
struct FormationSpec {
  std::vector<Vec2> base_points;
  std::vector<ConnectionSpec> connections;

  int size() const { return static_cast<int>(base_points.size()); }

  /// Throws ScenarioError on a structural violation; returns advisory
  /// warnings (e.g. k_att > k_rep).
  std::vector<std::string> validate() const;
};

/// Bijection robots <-> roles. `leader` is empty in the Final Goal phase.
struct RoleAssignment {
  std::vector<int> role_of_robot;
  std::vector<RobotId> robot_of_role;
  std::optional<RobotId> leader;

  static RoleAssignment fromRoles(std::vector<int> role_of_robot, std::optional<RobotId> leader);
  static RoleAssignment identity(int n, std::optional<RobotId> leader = 0);

  int size() const { return static_cast<int>(role_of_robot.size()); }
  bool isBijection() const;

  bool operator==(const RoleAssignment&) const = default;
};

/// Leader selection with hysteresis: a challenger replaces a finite-ETA
/// incumbent only when it is faster by more than `d_switch`. Ties go to the
/// lowest robot id. Throws Error when no ETA is finite.
RobotId selectLeader(std::span<const double> etas, std::optional<RobotId> current_leader, double d_switch);

/// Assigns follower roles so the cyclic bearing order of robots about the
/// leader (in the frame rotated by `heading`) matches the bearing order of
/// the follower roles about c_0. When the follower roles sit at more than one
/// distance from c_0, robots are first grouped by distance rank to the
/// leader and ordered by bearing within each group.
RoleAssignment assignFollowerRoles(const FormationSpec& spec, RobotId leader, std::span<const Vec2> positions,
                                   double heading);

/// Exact minimizer of the sum of squared robot-goal distances (exhaustive,
/// N <= 8); ties resolve to the lexicographically smallest role vector.
RoleAssignment assignFinalGoals(std::span<const Vec2> positions, std::span<const Vec2> goals);

double assignmentCost(std::span<const Vec2> positions, std::span<const Vec2> goals,
                      std::span<const int> role_of_robot);

/// Per-role goal points for a formation pose: R(heading) c_i + center.
std::vector<Vec2> transformBase(const FormationSpec& spec, const Pose2& pose);

/// Regular polygon formations with the leader vertex on +x.
FormationSpec equilateralTriangle(double side);
FormationSpec diamondSquare(double side);

}  // namespace formplan
