// Shipped experiment scenarios. Obstacle layouts are reconstructions: they
// keep the gap widths relative to the formation size, not the exact geometry.

#include "formplan/scenario.hpp"

namespace formplan {
namespace {

constexpr double kCell = 0.05;

OccupancyGrid emptyRoom(double width_m, double height_m) {
  OccupancyGrid grid(GridGeometry(static_cast<int>(width_m / kCell + 0.5), static_cast<int>(height_m / kCell + 0.5),
                                  kCell));
  grid.fillBorder();
  return grid;
}

void clearRect(OccupancyGrid& grid, Vec2 lo, Vec2 hi) {
  const auto& g = grid.geometry();
  for (int j = 0; j < g.height(); ++j) {
    for (int i = 0; i < g.width(); ++i) {
      const Vec2 c = g.cellCenter({i, j});
      if (c.x >= lo.x && c.x <= hi.x && c.y >= lo.y && c.y <= hi.y) grid.setOccupied({i, j}, false);
    }
  }
}

ConnectionSpec connection(int a, int b, double rest, double k_rep, double k_att, double max_att, double b_att,
                          double b_rep) {
  return {a, b, rest, k_rep, k_att, max_att, b_att, b_rep};
}

FormationSpec labTriangle() {
  FormationSpec spec = equilateralTriangle(1.15);
  for (auto [a, b] : {std::pair{0, 1}, {1, 2}, {2, 0}}) {
    spec.connections.push_back(connection(a, b, 1.15, 4.0, 2.0, 0.50, 0.10, 0.10));
  }
  return spec;
}

FormationSpec simSquare() {
  FormationSpec spec = diamondSquare(1.0);
  for (auto [a, b] : {std::pair{0, 1}, {1, 2}, {2, 3}, {3, 0}}) {
    spec.connections.push_back(connection(a, b, 1.0, 4.5, 1.25, 0.4, 0.1, 0.04));
  }
  for (auto [a, b] : {std::pair{0, 2}, {1, 3}}) {
    spec.connections.push_back(connection(a, b, 1.41, 3.0, 0.9, 0.3, 0.1, 0.04));
  }
  return spec;
}

std::vector<Pose2> formationPoses(const FormationSpec& spec, const Pose2& center) {
  std::vector<Pose2> out;
  for (const auto& p : transformBase(spec, center)) out.push_back({p, center.heading});
  return out;
}

Scenario labBase(std::string name, std::string description) {
  Scenario s;
  s.name = std::move(name);
  s.description = std::move(description);
  s.formation = labTriangle();
  s.planner.lookahead = 2.5;
  s.duration_cap = 150.0;
  s.thresholds.min_obstacle_clearance = s.planner.inflation_radius;
  s.thresholds.min_pair_distance = 2.0 * s.planner.inflation_radius;
  s.thresholds.settle_tolerance = s.planner.goal_tolerance;
  return s;
}

Scenario simBase(std::string name, std::string description) {
  Scenario s = labBase(std::move(name), std::move(description));
  s.formation = simSquare();
  s.planner.lookahead = 5.0;
  return s;
}

ScenarioBundle labCorridor() {
  Scenario s = labBase("lab-corridor", "Triangle formation through a 1.2 m wide corridor with two bends");
  OccupancyGrid map = emptyRoom(9.5, 6.5);
  map.fillRect({3.6, 0.0}, {7.0, 6.5});
  // Z-shaped corridor, 1.2 m wide: east, north, east.
  clearRect(map, {3.5, 0.9}, {5.8, 2.1});
  clearRect(map, {4.6, 0.9}, {5.8, 5.5});
  clearRect(map, {4.6, 4.3}, {7.1, 5.5});
  s.map = std::move(map);
  s.initial_poses = formationPoses(s.formation, {{1.0, 1.5}, 0.0});
  s.schedule.push_back({ScheduledGoal::Trigger::AtTime, 0.0, {{8.3, 4.9}, 0.0}});
  s.thresholds.constriction = Region{{3.6, 0.0}, {7.0, 6.5}};
  s.thresholds.rest_length = 1.15;
  s.thresholds.shape_tolerance = 0.10;
  s.thresholds.recovery_time = 15.0;
  return {std::move(s), "lab-corridor"};
}

ScenarioBundle labUnstructured() {
  Scenario s = labBase("lab-unstructured", "Triangle formation through a cluster of box-shaped obstacles");
  OccupancyGrid map = emptyRoom(9.5, 6.5);
  map.fillRect({3.0, 2.6}, {3.6, 3.4});
  map.fillRect({3.4, 5.0}, {4.0, 6.5});
  map.fillRect({4.6, 0.0}, {5.2, 1.6});
  map.fillRect({5.0, 3.6}, {5.6, 4.4});
  map.fillDisc({6.6, 2.4}, 0.3);
  map.fillRect({6.4, 4.8}, {7.6, 5.2});
  s.map = std::move(map);
  s.initial_poses = formationPoses(s.formation, {{1.4, 3.25}, 0.0});
  s.schedule.push_back({ScheduledGoal::Trigger::AtTime, 0.0, {{8.3, 3.2}, 0.0}});
  return {std::move(s), "lab-unstructured"};
}

ScenarioBundle simSquareClutter() {
  Scenario s = simBase("sim-square-clutter",
                       "Square formation across a cluttered 14 x 10 m map with a gap narrower than the square");
  OccupancyGrid map = emptyRoom(14.0, 10.0);
  map.fillRect({2.5, 6.8}, {3.5, 7.6});
  map.fillDisc({4.0, 3.0}, 0.5);
  // Dividing wall with a 1.8 m gap.
  map.fillRect({6.8, 0.0}, {7.2, 4.1});
  map.fillRect({6.8, 5.9}, {7.2, 10.0});
  map.fillRect({9.0, 6.5}, {10.2, 7.1});
  map.fillDisc({9.6, 2.6}, 0.4);
  map.fillRect({11.2, 3.8}, {11.6, 4.8});
  s.map = std::move(map);
  s.initial_poses = formationPoses(s.formation, {{2.0, 4.5}, 0.0});
  s.schedule.push_back({ScheduledGoal::Trigger::AtTime, 0.0, {{12.6, 6.0}, 0.0}});
  s.duration_cap = 200.0;
  return {std::move(s), "sim-square-clutter"};
}

ScenarioBundle coneSplit() {
  Scenario s = simBase("cone-split", "Square formation passing a small cone that one follower takes on the other side");
  OccupancyGrid map = emptyRoom(10.0, 6.0);
  map.fillDisc({5.0, 3.25}, 0.15);
  s.map = std::move(map);
  s.initial_poses = formationPoses(s.formation, {{1.5, 3.0}, 0.0});
  s.schedule.push_back({ScheduledGoal::Trigger::AtTime, 0.0, {{8.5, 3.0}, 0.0}});
  return {std::move(s), "cone-split"};
}

}  // namespace

std::vector<ScenarioBundle> builtinScenarios() {
  return {simSquareClutter(), coneSplit(), labUnstructured(), labCorridor()};
}

const ScenarioBundle* findBuiltin(const std::string& name) {
  static const std::vector<ScenarioBundle> bundles = builtinScenarios();
  for (const auto& b : bundles) {
    if (b.scenario.name == name) return &b;
  }
  return nullptr;
}

}  // namespace formplan
