#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "formplan/grid.hpp"

namespace formplan::testing {

inline std::filesystem::path sourceDir() { return FORMPLAN_SOURCE_DIR; }
inline std::filesystem::path scenarioDir() { return sourceDir() / "scenarios"; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratchDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("formplan-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Shortest travel time over the cell graph with the given neighbor offsets.
/// Edge cost is step length over the speed of the target cell; zero-speed
/// cells are never entered.
inline std::vector<double> dijkstra(const ScalarField& speed, CellIndex source,
                                    const std::vector<CellIndex>& offsets) {
  const auto& g = speed.geometry();
  std::vector<double> dist(g.cellCount(), ScalarField::kInfinity);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist[g.linear(source)] = 0.0;
  heap.push({0.0, g.linear(source)});
  while (!heap.empty()) {
    const auto [d, k] = heap.top();
    heap.pop();
    if (d > dist[k]) continue;
    const CellIndex c = g.cellAt(k);
    for (const auto& o : offsets) {
      const CellIndex n{c.i + o.i, c.j + o.j};
      if (!g.inBounds(n) || speed(n) <= 0.0) continue;
      const double nd = d + g.cellSize() * std::hypot(o.i, o.j) / speed(n);
      if (nd < dist[g.linear(n)]) {
        dist[g.linear(n)] = nd;
        heap.push({nd, g.linear(n)});
      }
    }
  }
  return dist;
}

inline std::vector<CellIndex> stencil8() {
  return {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
}

inline std::vector<CellIndex> stencil16() {
  auto out = stencil8();
  for (int a : {1, -1}) {
    for (int b : {2, -2}) {
      out.push_back({a, b});
      out.push_back({b, a});
    }
  }
  return out;
}

/// Smooth random speed field in [floor, 1] (sum of Gaussian bumps, min-max
/// normalized) with a few zero-speed rectangles.
inline ScalarField randomSpeedField(std::mt19937_64& rng, int n, double h, double floor, int blocks) {
  GridGeometry g(n, n, h);
  ScalarField field(g, 0.0);
  std::uniform_real_distribution<double> pos(0.0, n), width(3.0, n / 4.0), amp(-1.0, 1.0);
  struct Bump {
    double x, y, s, a;
  };
  std::vector<Bump> bumps;
  for (int k = 0; k < 6; ++k) bumps.push_back({pos(rng), pos(rng), width(rng), amp(rng)});
  double lo = ScalarField::kInfinity, hi = -ScalarField::kInfinity;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (const auto& b : bumps) v += b.a * std::exp(-((i - b.x) * (i - b.x) + (j - b.y) * (j - b.y)) / (2 * b.s * b.s));
      field({i, j}) = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  for (auto& v : field.values()) v = floor + (1.0 - floor) * (hi > lo ? (v - lo) / (hi - lo) : 1.0);
  std::uniform_int_distribution<int> corner(0, n - 1), extent(2, n / 5);
  for (int k = 0; k < blocks; ++k) {
    const int i0 = corner(rng), j0 = corner(rng), w = extent(rng), h2 = extent(rng);
    for (int j = j0; j < std::min(n, j0 + h2); ++j) {
      for (int i = i0; i < std::min(n, i0 + w); ++i) field({i, j}) = 0.0;
    }
  }
  return field;
}

}  // namespace formplan::testing
