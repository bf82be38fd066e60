#include "formplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "formplan/errors.hpp"

namespace formplan {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCoincidentLength = 1e-9;

void requirePositive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ScenarioError(field, 0, "must be a positive number");
}

void validateLimits(const RobotLimits& l, const std::string& prefix) {
  requirePositive(l.v_max_x, (prefix + "v_max_x").c_str());
  requirePositive(l.v_max_y, (prefix + "v_max_y").c_str());
  requirePositive(l.v_min, (prefix + "v_min").c_str());
  requirePositive(l.d_slowdown, (prefix + "d_slowdown").c_str());
  if (l.v_max_y > l.v_max_x) throw ScenarioError(prefix + "v_max_y", 0, "must not exceed v_max_x");
}

}  // namespace

void PlannerConfig::validate() const {
  requirePositive(rate, "planner.rate");
  requirePositive(lookahead, "planner.lookahead");
  requirePositive(d_switch, "planner.d_switch");
  requirePositive(safe_distance_a, "planner.safe_distance_a");
  requirePositive(safe_distance_b, "planner.safe_distance_b");
  requirePositive(inflation_radius, "planner.inflation_radius");
  requirePositive(goal_tolerance, "planner.goal_tolerance");
  requirePositive(yaw_gain, "planner.yaw_gain");
  requirePositive(max_yaw_rate, "planner.max_yaw_rate");
  requirePositive(yaw_deadband, "planner.yaw_deadband");
  if (!(w_min_partial > 0.0 && w_min_partial < 1.0)) {
    throw ScenarioError("planner.w_min_partial", 0, "must lie in (0, 1)");
  }
  if (!(w_min_avoid > 0.0 && w_min_avoid < 1.0)) throw ScenarioError("planner.w_min_avoid", 0, "must lie in (0, 1)");
  validateLimits(limits, "planner.limits.");
  for (const auto& l : robot_limits) validateLimits(l, "robots[].limits.");
}

std::shared_ptr<const MapBundle> MapBundle::build(OccupancyGrid grid, const PlannerConfig& config) {
  auto bundle = std::make_shared<MapBundle>();
  bundle->inflated = inflate(grid, config.inflation_radius);
  bundle->obstacle_distance = distanceField(grid);
  bundle->inflated_distance = distanceField(bundle->inflated);
  bundle->w_a = buildVelocityMap(bundle->inflated, bundle->inflated_distance, config.safe_distance_a);
  bundle->w_b = buildVelocityMap(bundle->inflated, bundle->inflated_distance, config.safe_distance_b);
  bundle->grid = std::move(grid);
  return bundle;
}

std::string_view phaseName(Phase phase) {
  switch (phase) {
    case Phase::Inactive: return "Inactive";
    case Phase::PartialGoal: return "PartialGoal";
    case Phase::FinalGoal: return "FinalGoal";
  }
  return "?";
}

std::string_view speedCapName(SpeedCap cap) {
  switch (cap) {
    case SpeedCap::None: return "none";
    case SpeedCap::Direction: return "direction";
    case SpeedCap::Proximity: return "proximity";
    case SpeedCap::Goal: return "goal";
  }
  return "?";
}

double springDelta(const ConnectionSpec& conn, double length) {
  const double d = length - conn.rest_length;
  if (length < conn.rest_length) return -conn.k_rep * d * d;
  return std::min(conn.k_att * d * d, conn.max_att);
}

double dampingDelta(const ConnectionSpec& conn, double length, double previous_length, double dt, bool fresh) {
  if (fresh) return 0.0;
  const double dl = length - previous_length;
  return (dl < 0.0 ? conn.b_att : conn.b_rep) * dl / dt;
}

ConnectionResult applyConnections(std::span<const Vec2> v_des, std::span<const Vec2> positions,
                                  const FormationSpec& spec, const RoleAssignment& assignment,
                                  std::span<const ConnectionMemory> previous, double dt) {
  ConnectionResult out;
  out.velocities.assign(v_des.begin(), v_des.end());
  for (std::size_t c = 0; c < spec.connections.size(); ++c) {
    const auto& conn = spec.connections[c];
    const RobotId a = assignment.robot_of_role[conn.role_a];
    const RobotId b = assignment.robot_of_role[conn.role_b];
    const Vec2 ab = positions[b] - positions[a];
    const double length = ab.norm();

    ConnectionFrame f;
    f.role_a = conn.role_a;
    f.role_b = conn.role_b;
    f.robot_a = a;
    f.robot_b = b;
    f.length = length;
    f.rest_length = conn.rest_length;
    const bool have_prev = c < previous.size() && previous[c].robot_a >= 0;
    f.fresh = !have_prev || std::minmax(previous[c].robot_a, previous[c].robot_b) != std::minmax(a, b);
    f.spring = springDelta(conn, length);
    f.damping = dampingDelta(conn, length, have_prev ? previous[c].length : length, dt, f.fresh);

    Vec2 toward_b = ab / length;
    if (length < kCoincidentLength) {
      toward_b = {1.0, 0.0};
      f.coincident = true;
    }
    const double delta = f.spring + f.damping;
    out.velocities[a] += toward_b * delta;
    out.velocities[b] -= toward_b * delta;
    out.connections.push_back(f);
    out.memory.push_back({a, b, length});
  }
  return out;
}

AvoidanceResult obstacleAvoidance(Vec2 velocity, Vec2 gradient, double w_value, double w_min_avoid,
                                  double safe_distance_b) {
  const double along = gradient.dot(velocity);
  const double g2 = gradient.squaredNorm();
  const double threshold = 0.5 / safe_distance_b;
  if (!(w_value < 1.0) || !(along < 0.0) || !(std::sqrt(g2) > threshold)) return {velocity, false, 0.0};

  const Vec2 projection = gradient * (along / g2);
  double alpha = 1.0;
  if (w_value > w_min_avoid) alpha = std::clamp((1.0 - w_value) / (1.0 - w_min_avoid), 0.0, 1.0);
  return {velocity - projection * alpha, true, alpha};
}

AvoidanceResult obstacleAvoidance(Vec2 velocity, CellIndex cell, const VelocityMap& w_b, double w_min_avoid) {
  return obstacleAvoidance(velocity, sobelGradient(w_b.speed, cell), w_b.speed(cell), w_min_avoid,
                           w_b.safe_distance);
}

double directionalSpeedLimit(double theta, double v_max_x, double v_max_y) {
  const double a = std::sin(theta) * v_max_x;
  const double b = std::cos(theta) * v_max_y;
  return v_max_x * v_max_y / std::sqrt(a * a + b * b);
}

double proximitySpeedLimit(double w_value, double v_min, double v_max_x) {
  return v_min + w_value * (v_max_x - v_min);
}

double goalSpeedLimit(double dist_to_goal, double d_slowdown, double v_max_x) {
  return dist_to_goal / d_slowdown * v_max_x;
}

Vec2 desiredVelocity(const PlannedPath& path, double v_cap) {
  if (path.vertices.size() < 2) return {};
  return (path.vertices[1] - path.vertices[0]).normalized() * v_cap;
}

Pose2 lookaheadPoint(const PlannedPath& path, double lookahead, double fallback_heading) {
  const auto& v = path.vertices;
  if (v.size() < 2) return {v.empty() ? path.goal : v.front(), fallback_heading};

  const auto tangent = [&](std::size_t k) {
    const std::size_t lo = k >= 2 ? k - 2 : 0;
    const std::size_t hi = std::min(k + 2, v.size() - 1);
    const Vec2 d = v[hi] - v[lo];
    return d.squaredNorm() > 0.0 ? d.angle() : fallback_heading;
  };

  const double target = path.eta - lookahead;
  double prev_eta = path.vertex_eta.front();
  for (std::size_t k = 1; k < v.size(); ++k) {
    const double eta = std::min(prev_eta, path.vertex_eta[k]);
    if (eta <= target) {
      const double span = prev_eta - eta;
      const double t = span > 0.0 ? std::clamp((prev_eta - target) / span, 0.0, 1.0) : 1.0;
      return {v[k - 1] + (v[k] - v[k - 1]) * t, tangent(k)};
    }
    prev_eta = eta;
  }
  return {v.back(), tangent(v.size() - 1)};
}

PartialGoals computePartialGoals(const PlannedPath& leader_path, double lookahead, const FormationSpec& spec,
                                 const VelocityMap& w_b, double w_min_partial, double fallback_heading) {
  const Pose2 p1 = lookaheadPoint(leader_path, lookahead, fallback_heading);
  const double step = 0.5 * w_b.geometry().cellSize();
  const Vec2 lead = spec.base_points.front();

  PartialGoals out;
  out.heading = p1.heading;
  out.per_role.reserve(spec.base_points.size());
  for (const auto& c : spec.base_points) {
    Vec2 p = rotate(c - lead, p1.heading) + p1.position;
    while (w_b.speed.sampleCell(p, 0.0) < w_min_partial) {
      const Vec2 d = p1.position - p;
      if (d.norm() <= step) {
        p = p1.position;
        break;
      }
      p += d.normalized() * step;
    }
    out.per_role.push_back(p);
  }
  return out;
}

FinalizedCommand finalizeCommand(RobotId robot, Vec2 v_prime, double robot_heading, const CommandCaps& caps,
                                 const PlannerConfig& config) {
  FinalizedCommand out;
  out.command.robot = robot;
  out.caps = caps;
  const double speed = v_prime.norm();
  if (!(speed > 0.0)) return out;

  double magnitude = speed;
  const std::pair<double, SpeedCap> candidates[] = {
      {caps.direction, SpeedCap::Direction}, {caps.proximity, SpeedCap::Proximity}, {caps.goal, SpeedCap::Goal}};
  for (const auto& [cap, kind] : candidates) {
    if (cap < magnitude) {
      magnitude = cap;
      out.binding = kind;
    }
  }
  out.command.velocity = v_prime * (magnitude / speed);

  if (magnitude >= config.yaw_deadband) {
    const double error = wrapAngle(out.command.velocity.angle() - robot_heading);
    out.command.omega = std::clamp(config.yaw_gain * error, -config.max_yaw_rate, config.max_yaw_rate);
  }
  return out;
}

// ---------------------------------------------------------------------------

Planner::Planner(FormationSpec spec, PlannerConfig config, std::shared_ptr<const MapBundle> maps)
    : spec_(std::move(spec)), config_(std::move(config)), maps_(std::move(maps)) {
  spec_.validate();
  config_.validate();
  if (!maps_) throw Error("Planner requires a map bundle");
  state_.assignment = RoleAssignment::identity(spec_.size(), std::nullopt);
}

void Planner::setFormationGoal(const Pose2& goal) {
  const auto& geo = maps_->geometry();
  if (!geo.inBounds(goal.position)) throw PlanningError(PlanningError::Kind::OutOfBounds, "goal out of bounds");
  if (!(maps_->w_b.speed.sampleCell(goal.position) > 0.0)) {
    throw PlanningError(PlanningError::Kind::InvalidGoal, "goal in inflated obstacle");
  }
  leader_field_ = solveFromGoal(maps_->w_a, goal.position);
  final_goals_ = transformBase(spec_, goal);
  final_fields_.clear();
  final_field_errors_.clear();

  state_.phase = Phase::PartialGoal;
  state_.formation_goal = goal;
  state_.assignment.leader.reset();
  state_.connection_memory.clear();
  state_.paths.clear();
}

void Planner::enterFinalGoal() {
  state_.phase = Phase::FinalGoal;
  for (int r = 0; r < spec_.size(); ++r) {
    if (final_fields_.contains(r) || final_field_errors_.contains(r)) continue;
    try {
      final_fields_.emplace(r, solveFromGoal(maps_->w_b, final_goals_[r]));
    } catch (const PlanningError& e) {
      final_field_errors_.emplace(r, e.what());
    }
  }
}

CycleOutput Planner::planCycle(std::span<const Pose2> poses) {
  const int n = spec_.size();
  if (static_cast<int>(poses.size()) != n) throw Error("planCycle: pose count does not match the formation size");

  CycleOutput out;
  PlannerFrame& frame = out.frame;
  frame.cycle = state_.cycle++;
  frame.robots.resize(n);
  out.commands.resize(n);
  for (int k = 0; k < n; ++k) {
    frame.robots[k].id = k;
    out.commands[k].robot = k;
  }

  const auto finish = [&]() -> CycleOutput {
    frame.phase = state_.phase;
    frame.leader = state_.assignment.leader;
    frame.formation_goal = state_.formation_goal;
    for (int k = 0; k < n; ++k) frame.robots[k].role = state_.assignment.role_of_robot[k];
    return std::move(out);
  };

  if (state_.phase == Phase::Inactive) return finish();

  const MapBundle& maps = *maps_;
  const auto& geo = maps.geometry();
  const Pose2 goal = *state_.formation_goal;
  std::vector<Vec2> positions(n);
  for (int k = 0; k < n; ++k) {
    positions[k] = poses[k].position;
    if (!geo.inBounds(positions[k])) throw Error("planCycle: robot " + std::to_string(k) + " is out of bounds");
  }

  std::vector<bool> recovering(n);
  for (int k = 0; k < n; ++k) {
    recovering[k] = !(maps.w_b.speed.sampleCell(positions[k]) > 0.0);
    frame.robots[k].recovering = recovering[k];
  }

  std::vector<PlannedPath> paths(n);
  std::vector<bool> has_path(n, false);
  std::vector<Vec2> goals(n);
  std::optional<RobotId> leader;

  if (state_.phase == Phase::PartialGoal) {
    std::vector<double> etas(n, kInf);
    for (int k = 0; k < n; ++k) {
      if (recovering[k]) continue;
      try {
        paths[k] = descend(*leader_field_, maps.w_a, positions[k], goal.position);
        etas[k] = paths[k].eta;
        has_path[k] = true;
      } catch (const PlanningError& e) {
        frame.events.push_back("robot " + std::to_string(k + 1) + ": leader path failed: " + e.what());
      }
    }
    if (std::none_of(etas.begin(), etas.end(), [](double e) { return std::isfinite(e); })) {
      frame.events.push_back("no robot can reach the formation goal");
      for (int k = 0; k < n; ++k) frame.robots[k].no_path = true;
      return finish();
    }

    const RobotId chosen = selectLeader(etas, state_.assignment.leader, config_.d_switch);
    if (state_.assignment.leader && *state_.assignment.leader != chosen) {
      frame.events.push_back("leader switch " + std::to_string(*state_.assignment.leader + 1) + " -> " +
                             std::to_string(chosen + 1));
    }
    const PlannedPath& leader_path = paths[chosen];
    const PartialGoals partial = computePartialGoals(leader_path, config_.lookahead, spec_, maps.w_b,
                                                     config_.w_min_partial, goal.heading);
    state_.assignment = assignFollowerRoles(spec_, chosen, positions, partial.heading);
    leader = chosen;

    if (leader_path.eta < config_.lookahead) {
      enterFinalGoal();
      frame.events.push_back("entered FinalGoal");
    } else {
      frame.lookahead_point = partial.per_role.front();
      for (int k = 0; k < n; ++k) goals[k] = partial.per_role[state_.assignment.role_of_robot[k]];
    }
  }

  if (state_.phase == Phase::FinalGoal) {
    leader.reset();
    state_.assignment = assignFinalGoals(positions, final_goals_);
    bool all_reached = true;
    for (int k = 0; k < n; ++k) {
      goals[k] = final_goals_[state_.assignment.role_of_robot[k]];
      all_reached = all_reached && distance(positions[k], goals[k]) <= config_.goal_tolerance;
    }
    if (all_reached) {
      state_.phase = Phase::Inactive;
      state_.formation_goal.reset();
      state_.connection_memory.clear();
      state_.paths.clear();
      frame.events.push_back("all robots reached their goals");
      for (int k = 0; k < n; ++k) frame.robots[k].goal = goals[k];
      return finish();
    }
  }

  // Local paths on W_B. The leader keeps its W_A path.
  for (int k = 0; k < n; ++k) {
    frame.robots[k].goal = goals[k];
    if (leader && k == *leader) continue;
    has_path[k] = false;
    if (recovering[k]) continue;
    try {
      if (state_.phase == Phase::FinalGoal) {
        const int role = state_.assignment.role_of_robot[k];
        if (const auto err = final_field_errors_.find(role); err != final_field_errors_.end()) {
          throw PlanningError(PlanningError::Kind::InvalidGoal, err->second);
        }
        paths[k] = descend(final_fields_.at(role), maps.w_b, positions[k], goals[k]);
      } else {
        DescentOptions local;
        local.early_stop = true;
        paths[k] = planPath(maps.w_b, positions[k], goals[k], local);
      }
      has_path[k] = true;
    } catch (const PlanningError& e) {
      frame.events.push_back("robot " + std::to_string(k + 1) + ": no path to goal: " + e.what());
    }
  }

  std::vector<Vec2> v_des(n);
  for (int k = 0; k < n; ++k) {
    auto& rf = frame.robots[k];
    const double v_cap = config_.limitsFor(k).v_max_x;
    if (recovering[k]) {
      const Vec2 away = sobelGradient(maps.obstacle_distance.times, geo.cellOf(positions[k]));
      v_des[k] = std::isfinite(away.x) && std::isfinite(away.y) ? away.normalized() * v_cap : Vec2{};
      frame.events.push_back("robot " + std::to_string(k + 1) + " recovering from inflated obstacle");
    } else if (has_path[k]) {
      v_des[k] = desiredVelocity(paths[k], v_cap);
      rf.path = paths[k].vertices;
      rf.eta = paths[k].eta;
    } else {
      rf.no_path = true;
    }
    rf.v_des = v_des[k];
  }

  ConnectionResult springs = applyConnections(v_des, positions, spec_, state_.assignment,
                                              state_.connection_memory, config_.dt());
  state_.connection_memory = springs.memory;
  for (const auto& c : springs.connections) {
    if (c.coincident) {
      frame.events.push_back("robots " + std::to_string(c.robot_a + 1) + " and " + std::to_string(c.robot_b + 1) +
                             " coincide; fallback axis used");
    }
  }
  frame.connections = std::move(springs.connections);

  for (int k = 0; k < n; ++k) {
    auto& rf = frame.robots[k];
    rf.v_connections = springs.velocities[k];
    if (rf.no_path) continue;

    const CellIndex cell = geo.cellOf(positions[k]);
    const AvoidanceResult avoid = obstacleAvoidance(springs.velocities[k], cell, maps.w_b, config_.w_min_avoid);
    rf.v_avoid = avoid.velocity;
    rf.avoidance_triggered = avoid.triggered;
    rf.alpha = avoid.alpha;

    const RobotLimits& lim = config_.limitsFor(k);
    CommandCaps caps;
    caps.direction = directionalSpeedLimit(avoid.velocity.angle() - poses[k].heading, lim.v_max_x, lim.v_max_y);
    caps.proximity = proximitySpeedLimit(maps.w_b.speed(cell), lim.v_min, lim.v_max_x);
    if (state_.phase == Phase::FinalGoal) {
      caps.goal = goalSpeedLimit(distance(positions[k], goals[k]), lim.d_slowdown, lim.v_max_x);
    }
    const FinalizedCommand fc = finalizeCommand(k, avoid.velocity, poses[k].heading, caps, config_);
    out.commands[k] = fc.command;
    rf.v_cmd = fc.command.velocity;
    rf.omega = fc.command.omega;
    rf.cap_direction = caps.direction;
    rf.cap_proximity = caps.proximity;
    rf.cap_goal = caps.goal;
    rf.binding_cap = fc.binding;
  }

  state_.assignment.leader = leader;
  state_.paths = std::move(paths);
  return finish();
}

}  // namespace formplan
