#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "formplan/errors.hpp"
#include "formplan/formation.hpp"

using namespace formplan;

namespace {

double bruteForceCost(const std::vector<Vec2>& robots, const std::vector<Vec2>& goals) {
  std::vector<int> perm(robots.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t k = 0; k < robots.size(); ++k) cost += (robots[k] - goals[perm[k]]).squaredNorm();
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double bearing(Vec2 d, double heading) {
  double a = std::atan2(d.y, d.x) - heading;
  while (a < 0.0) a += 2.0 * std::numbers::pi;
  while (a >= 2.0 * std::numbers::pi) a -= 2.0 * std::numbers::pi;
  return a;
}

// Indices of `values` sorted ascending.
std::vector<int> argsort(const std::vector<double>& values) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return values[a] < values[b]; });
  return idx;
}

bool isCyclicShift(const std::vector<int>& seq) {
  const int m = static_cast<int>(seq.size());
  for (int k = 0; k < m; ++k) {
    if (seq[(k + 1) % m] != (seq[k] + 1) % m) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("formation") {
  TEST_CASE("leader selection examples") {
    CHECK(selectLeader(std::vector{10.0, 9.97}, 0, 0.05) == 0);
    CHECK(selectLeader(std::vector{10.0, 9.90}, 0, 0.05) == 1);
    CHECK(selectLeader(std::vector{5.0, 7.0}, std::nullopt, 0.05) == 0);
  }

  TEST_CASE("leader selection edge cases") {
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(selectLeader(std::vector{inf, 3.0}, 0, 0.05) == 1);
    CHECK(selectLeader(std::vector{4.0, 4.0, 4.0}, std::nullopt, 0.05) == 0);
    CHECK_THROWS_AS(selectLeader(std::vector{inf, inf}, std::nullopt, 0.05), Error);
  }

  TEST_CASE("adding a constant to every eta never changes the selection") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> eta(0.0, 20.0), shift(-5.0, 5.0);
    std::uniform_int_distribution<int> robot(0, 4);
    for (int trial = 0; trial < 2000; ++trial) {
      std::vector<double> etas(5);
      for (auto& e : etas) e = std::round(eta(rng) * 64.0) / 64.0;
      const double c = std::round(shift(rng) * 64.0) / 64.0;
      std::vector<double> shifted = etas;
      for (auto& e : shifted) e += c;
      const std::optional<RobotId> current = trial % 3 == 0 ? std::nullopt : std::optional(robot(rng));
      CHECK(selectLeader(etas, current, 0.05) == selectLeader(shifted, current, 0.05));
    }
  }

  TEST_CASE("robots standing on the formation keep the matching roles") {
    const FormationSpec spec = equilateralTriangle(1.15);
    const Pose2 pose{{3.0, 2.0}, 0.7};
    const auto points = transformBase(spec, pose);
    const RoleAssignment a = assignFollowerRoles(spec, 0, points, pose.heading);
    CHECK(a == RoleAssignment::identity(3, 0));
  }

  TEST_CASE("swapping the two followers swaps their roles") {
    const FormationSpec spec = equilateralTriangle(1.15);
    auto points = transformBase(spec, {{0.0, 0.0}, 0.0});
    std::swap(points[1], points[2]);
    const RoleAssignment a = assignFollowerRoles(spec, 0, points, 0.0);
    CHECK(a.role_of_robot == std::vector<int>{0, 2, 1});
  }

  TEST_CASE("square formation: exchanged side robots receive exchanged roles") {
    const FormationSpec spec = diamondSquare(1.0);
    auto points = transformBase(spec, {{5.0, 5.0}, 0.0});
    CHECK(assignFollowerRoles(spec, 0, points, 0.0) == RoleAssignment::identity(4, 0));
    std::swap(points[1], points[3]);
    const RoleAssignment a = assignFollowerRoles(spec, 0, points, 0.0);
    CHECK(a.role_of_robot == std::vector<int>{0, 3, 2, 1});
    CHECK(a.isBijection());
  }

  TEST_CASE("follower bearings keep the cyclic order of their roles") {
    FormationSpec spec;
    spec.base_points = {{1.0, 0.0}};
    for (double deg : {100.0, 140.0, 180.0, 220.0, 260.0}) {
      spec.base_points.push_back(Vec2{1.0, 0.0} + unitFromAngle(deg * std::numbers::pi / 180.0));
    }
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> coord(-3.0, 3.0), angle(-3.0, 3.0);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<Vec2> pos(spec.size());
      for (auto& p : pos) p = {coord(rng), coord(rng)};
      const RobotId leader = trial % spec.size();
      const double heading = angle(rng);
      const RoleAssignment a = assignFollowerRoles(spec, leader, pos, heading);
      REQUIRE(a.isBijection());
      std::vector<int> followers;
      std::vector<double> robot_bearings;
      for (int k = 0; k < spec.size(); ++k) {
        if (k == leader) continue;
        followers.push_back(k);
        robot_bearings.push_back(bearing(pos[k] - pos[leader], heading));
      }
      std::vector<double> role_bearings;
      for (int r = 1; r < spec.size(); ++r) role_bearings.push_back(bearing(spec.base_points[r] - spec.base_points[0], 0));
      const auto role_rank = [&] {
        std::vector<int> rank(role_bearings.size());
        const auto order = argsort(role_bearings);
        for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = static_cast<int>(k);
        return rank;
      }();
      std::vector<int> seq;
      for (int idx : argsort(robot_bearings)) seq.push_back(role_rank[a.role_of_robot[followers[idx]] - 1]);
      CHECK(isCyclicShift(seq));
    }
  }

  TEST_CASE("robots coincident with the leader fall back to distance ranking") {
    const FormationSpec spec = diamondSquare(1.0);
    const std::vector<Vec2> pos{{0, 0}, {0, 0}, {2, 0}, {0.5, 0.5}};
    const RoleAssignment a = assignFollowerRoles(spec, 0, pos, 0.0);
    CHECK(a.isBijection());
  }

  TEST_CASE("final goals: perfect and crossed matchings") {
    const std::vector<Vec2> goals{{0, 0}, {1, 0}, {0, 1}};
    const RoleAssignment exact = assignFinalGoals(goals, goals);
    CHECK(exact.role_of_robot == std::vector<int>{0, 1, 2});
    CHECK(assignmentCost(goals, goals, exact.role_of_robot) == 0.0);
    CHECK_FALSE(exact.leader.has_value());

    const std::vector<Vec2> g2{{0, 0}, {4, 0}};
    const std::vector<Vec2> r2{{3.9, 0.1}, {0.2, -0.1}};
    CHECK(assignFinalGoals(r2, g2).role_of_robot == std::vector<int>{1, 0});
  }

  TEST_CASE("final goals match factorial brute force") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> coord(-5.0, 5.0);
    for (int n = 2; n <= 6; ++n) {
      for (int trial = 0; trial < 60; ++trial) {
        std::vector<Vec2> robots(n), goals(n);
        for (auto& p : robots) p = {coord(rng), coord(rng)};
        for (auto& p : goals) p = {coord(rng), coord(rng)};
        const RoleAssignment a = assignFinalGoals(robots, goals);
        CHECK(a.isBijection());
        CHECK(assignmentCost(robots, goals, a.role_of_robot) == bruteForceCost(robots, goals));
      }
    }
  }

  TEST_CASE("exhaustive matching refuses more than 8 robots") {
    const std::vector<Vec2> nine(9);
    CHECK_THROWS_AS(assignFinalGoals(nine, nine), Error);
  }

  TEST_CASE("transformBase rotates then translates the base configuration") {
    const FormationSpec spec = diamondSquare(1.0);
    const auto at_origin = transformBase(spec, {{0, 0}, 0.0});
    for (int k = 0; k < spec.size(); ++k) CHECK(at_origin[k] == spec.base_points[k]);
    const Vec2 center{2.0, -1.0};
    const auto turned = transformBase(spec, {center, std::numbers::pi / 2});
    for (int k = 0; k < spec.size(); ++k) {
      const Vec2 c = spec.base_points[k];
      CHECK(turned[k].x == doctest::Approx(-c.y + center.x));
      CHECK(turned[k].y == doctest::Approx(c.x + center.y));
    }
  }

  TEST_CASE("formation validation") {
    FormationSpec spec = equilateralTriangle(1.0);
    spec.connections.push_back({0, 1, 1.0, 1.0, 2.0, 0.5, 0.1, 0.1});
    CHECK(spec.validate().size() == 1);
    spec.connections.push_back({1, 0, 1.0, 1.0, 1.0, 0.5, 0.1, 0.1});
    CHECK_THROWS_AS(spec.validate(), ScenarioError);
    FormationSpec bad;
    bad.base_points = {{0.0, 1.0}, {1.0, 0.0}};
    CHECK_THROWS_AS(bad.validate(), ScenarioError);
  }
}
