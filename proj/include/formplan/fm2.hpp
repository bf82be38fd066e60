#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "formplan/fast_marching.hpp"

namespace formplan {

/// Every intermediate product of a single two-pass Fast Marching Square plan.
struct Fm2Plan {
  OccupancyGrid grid;
  OccupancyGrid inflated;
  /// Distance to the nearest inflated obstacle (first pass).
  ArrivalTimeField d1;
  /// Saturated velocity map derived from `d1`.
  VelocityMap w2;
  /// Arrival times from the goal over `w2` (second pass).
  ArrivalTimeField d2;
  PlannedPath path;
  /// Smallest distance from any path vertex to an uninflated obstacle (m).
  double min_clearance = 0.0;
};

/// Throws PlanningError when the goal is unreachable or sits in an obstacle.
Fm2Plan planFm2(const OccupancyGrid& grid, Vec2 start, Vec2 goal, double safe_distance,
                double inflation_radius = 0.30);

/// Writes grid, inflated, d1, w2 and d2 as both `.csv` (one grid row per
/// line, bottom row first, `inf` for unreachable) and `.npy` (float64,
/// shape height x width), plus `path.csv` with columns x,y,eta.
/// Returns the written paths.
std::vector<std::filesystem::path> writeFm2Artifacts(const Fm2Plan& plan, const std::filesystem::path& dir);

/// A 10 x 8 m room with a wall, an L-shaped partition and two blocks, in the
/// spirit of the classic two-pass planning illustration.
OccupancyGrid planningDemoMap();

/// Minimal NumPy `.npy` writer for a row-major float64 matrix.
void writeNpy(const std::filesystem::path& path, const std::vector<double>& values, int rows, int cols);

}  // namespace formplan
