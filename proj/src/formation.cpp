#include "formplan/formation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <utility>

#include "formplan/errors.hpp"

namespace formplan {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDistanceGroupTolerance = 1e-6;
constexpr int kMaxExhaustiveRobots = 8;

// Bearing in [0, 2pi), measured counter-clockwise from `heading`.
double bearingFrom(Vec2 d, double heading) {
  double a = std::atan2(d.y, d.x) - heading;
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

}  // namespace

std::vector<std::string> FormationSpec::validate() const {
  const int n = size();
  if (n < 2) throw ScenarioError("formation.base_points", 0, "a formation needs at least 2 roles");
  const Vec2 lead = base_points.front();
  if (!(lead.x > 0.0) || std::abs(lead.y) > 1e-9) {
    throw ScenarioError("formation.base_points", 0, "the leader role c_1 must lie on the positive x-axis");
  }
  std::set<std::pair<int, int>> seen;
  std::vector<std::string> warnings;
  for (const auto& c : connections) {
    if (c.role_a < 0 || c.role_b < 0 || c.role_a >= n || c.role_b >= n || c.role_a == c.role_b) {
      throw ScenarioError("formation.connections", 0, "connection must join two distinct roles in [1, N]");
    }
    const auto key = std::minmax(c.role_a, c.role_b);
    if (!seen.insert(key).second) throw ScenarioError("formation.connections", 0, "duplicate connection pair");
    for (double v : {c.rest_length, c.k_rep, c.k_att, c.max_att, c.b_att, c.b_rep}) {
      if (!(v > 0.0)) throw ScenarioError("formation.connections", 0, "connection parameters must be positive");
    }
    if (c.k_att > c.k_rep) {
      warnings.push_back("connection " + std::to_string(c.role_a + 1) + "-" + std::to_string(c.role_b + 1) +
                         ": k_att exceeds k_rep");
    }
  }
  return warnings;
}

RoleAssignment RoleAssignment::fromRoles(std::vector<int> role_of_robot, std::optional<RobotId> leader) {
  RoleAssignment a;
  a.robot_of_role.assign(role_of_robot.size(), -1);
  for (std::size_t k = 0; k < role_of_robot.size(); ++k) {
    const int r = role_of_robot[k];
    if (r >= 0 && r < static_cast<int>(role_of_robot.size())) a.robot_of_role[r] = static_cast<RobotId>(k);
  }
  a.role_of_robot = std::move(role_of_robot);
  a.leader = leader;
  return a;
}

RoleAssignment RoleAssignment::identity(int n, std::optional<RobotId> leader) {
  std::vector<int> roles(n);
  std::iota(roles.begin(), roles.end(), 0);
  return fromRoles(std::move(roles), leader);
}

bool RoleAssignment::isBijection() const {
  const int n = size();
  if (static_cast<int>(robot_of_role.size()) != n) return false;
  std::vector<bool> used(n, false);
  for (int k = 0; k < n; ++k) {
    const int r = role_of_robot[k];
    if (r < 0 || r >= n || used[r] || robot_of_role[r] != k) return false;
    used[r] = true;
  }
  if (leader && (*leader < 0 || *leader >= n || role_of_robot[*leader] != 0)) return false;
  return true;
}

RobotId selectLeader(std::span<const double> etas, std::optional<RobotId> current_leader, double d_switch) {
  RobotId best = -1;
  double best_eta = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < etas.size(); ++k) {
    if (etas[k] < best_eta) {
      best_eta = etas[k];
      best = static_cast<RobotId>(k);
    }
  }
  if (best < 0) throw Error("selectLeader: no robot has a finite path to the goal");
  if (current_leader && *current_leader >= 0 && *current_leader < static_cast<int>(etas.size())) {
    const double incumbent = etas[*current_leader];
    if (std::isfinite(incumbent) && !(best_eta < incumbent - d_switch)) return *current_leader;
  }
  return best;
}

RoleAssignment assignFollowerRoles(const FormationSpec& spec, RobotId leader, std::span<const Vec2> positions,
                                   double heading) {
  const int n = spec.size();
  if (static_cast<int>(positions.size()) != n) {
    throw Error("assignFollowerRoles: robot count does not match the formation size");
  }
  if (leader < 0 || leader >= n) throw Error("assignFollowerRoles: leader id out of range");

  const Vec2 lead_role = spec.base_points.front();
  const Vec2 lead_pos = positions[leader];

  struct Item {
    int id;
    double dist;
    double bearing;
  };
  std::vector<Item> roles;
  std::vector<Item> robots;
  for (int r = 1; r < n; ++r) {
    const Vec2 d = spec.base_points[r] - lead_role;
    roles.push_back({r, d.norm(), bearingFrom(d, 0.0)});
  }
  bool coincident = false;
  for (int k = 0; k < n; ++k) {
    if (k == leader) continue;
    const Vec2 d = positions[k] - lead_pos;
    coincident = coincident || d.norm() < 1e-9;
    robots.push_back({k, d.norm(), bearingFrom(d, heading)});
  }

  const auto by_distance = [](const Item& a, const Item& b) {
    return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
  };
  const auto by_bearing = [](const Item& a, const Item& b) {
    return a.bearing != b.bearing ? a.bearing < b.bearing : a.id < b.id;
  };
  std::stable_sort(roles.begin(), roles.end(), by_distance);
  std::stable_sort(robots.begin(), robots.end(), by_distance);

  std::vector<int> role_of_robot(n, -1);
  role_of_robot[leader] = 0;

  // Partition follower roles into groups of equal distance from c_0; robots
  // fill the groups in distance-rank order.
  std::size_t begin = 0;
  while (begin < roles.size()) {
    std::size_t end = begin + 1;
    while (end < roles.size() && roles[end].dist - roles[begin].dist <= kDistanceGroupTolerance) ++end;
    std::vector<Item> group_roles(roles.begin() + begin, roles.begin() + end);
    std::vector<Item> group_robots(robots.begin() + begin, robots.begin() + end);
    if (!coincident) {
      std::sort(group_roles.begin(), group_roles.end(), by_bearing);
      std::sort(group_robots.begin(), group_robots.end(), by_bearing);
    }
    for (std::size_t k = 0; k < group_roles.size(); ++k) role_of_robot[group_robots[k].id] = group_roles[k].id;
    begin = end;
  }
  return RoleAssignment::fromRoles(std::move(role_of_robot), leader);
}

double assignmentCost(std::span<const Vec2> positions, std::span<const Vec2> goals,
                      std::span<const int> role_of_robot) {
  double cost = 0.0;
  for (std::size_t k = 0; k < positions.size(); ++k) cost += (positions[k] - goals[role_of_robot[k]]).squaredNorm();
  return cost;
}

RoleAssignment assignFinalGoals(std::span<const Vec2> positions, std::span<const Vec2> goals) {
  const int n = static_cast<int>(positions.size());
  if (static_cast<int>(goals.size()) != n) throw Error("assignFinalGoals: robot and goal counts differ");
  if (n > kMaxExhaustiveRobots) throw Error("assignFinalGoals: exhaustive matching supports at most 8 robots");

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    const double cost = assignmentCost(positions, goals, perm);
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return RoleAssignment::fromRoles(std::move(best), std::nullopt);
}

std::vector<Vec2> transformBase(const FormationSpec& spec, const Pose2& pose) {
  std::vector<Vec2> out;
  out.reserve(spec.base_points.size());
  for (const auto& c : spec.base_points) out.push_back(rotate(c, pose.heading) + pose.position);
  return out;
}

FormationSpec equilateralTriangle(double side) {
  const double r = side / std::sqrt(3.0);
  FormationSpec spec;
  for (int k = 0; k < 3; ++k) spec.base_points.push_back(unitFromAngle(k * kTwoPi / 3.0) * r);
  spec.base_points[0].y = 0.0;
  return spec;
}

FormationSpec diamondSquare(double side) {
  const double r = side / std::numbers::sqrt2;
  FormationSpec spec;
  spec.base_points = {{r, 0.0}, {0.0, r}, {-r, 0.0}, {0.0, -r}};
  return spec;
}

}  // namespace formplan
