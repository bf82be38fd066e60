#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "formplan/grid.hpp"

namespace formplan {

/// Arrival times of a wavefront, in normalized seconds: the traversal time of
/// a robot whose speed is the velocity map scaled to a 1 m/s maximum.
struct ArrivalTimeField {
  ScalarField times;
  std::vector<CellIndex> sources;
};

/// Occupancy-derived propagation speed in [0, 1], saturated at `safe_distance`.
struct VelocityMap {
  ScalarField speed;
  double safe_distance = 0.0;

  const GridGeometry& geometry() const { return speed.geometry(); }
};

struct PlannedPath {
  std::vector<Vec2> vertices;
  /// Interpolated arrival time at each vertex; front() == eta.
  std::vector<double> vertex_eta;
  double eta = 0.0;
  Vec2 start;
  Vec2 goal;

  bool converged() const { return vertices.size() <= 1; }
  double length() const;
};

/// Early termination for a solve that only needs values around one cell.
struct EikonalStop {
  CellIndex target;
  /// Normalized seconds the front keeps marching after `target` is finalized.
  double margin = 0.0;
};

/// First-order Fast Marching solve of |grad D| W = 1 from `sources`.
///
/// Each trial update takes the smaller of the upwind Godunov solutions on the
/// axis-aligned stencil (spacing h) and the diagonal stencil (spacing h*sqrt 2).
/// Cells with speed <= 0 are never reached. When `accept_order` is given it
/// receives linear cell indices in the order they are finalized. With `stop`
/// the march ends early and every unfinalized cell reads as infinity.
ArrivalTimeField solveEikonal(const ScalarField& speed, std::span<const CellIndex> sources,
                              std::vector<std::size_t>* accept_order = nullptr,
                              const EikonalStop* stop = nullptr);

/// Distance (meters) from every cell center to the nearest occupied cell
/// center. With no occupied cells the field is all-infinity and `sources` is
/// empty; a grid with no free cells throws SolverError.
ArrivalTimeField distanceField(const OccupancyGrid& grid);

/// W = min(distance / safe_distance, 1), and 0 on occupied cells.
VelocityMap buildVelocityMap(const OccupancyGrid& grid, double safe_distance);
VelocityMap buildVelocityMap(const OccupancyGrid& grid, const ArrivalTimeField& distance,
                             double safe_distance);

struct DescentOptions {
  /// Step length in cells.
  double step_cells = 0.5;
  /// Termination radius in cells.
  double goal_tolerance_cells = 1.0;
  /// Iteration budget as a multiple of the grid perimeter in cells.
  double budget_perimeters = 10.0;
  /// Let planPath stop the goal-side solve shortly after it reaches the start.
  bool early_stop = false;
};

/// Arrival-time field rooted at `goal` on `vmap`. Throws PlanningError
/// (InvalidGoal / OutOfBounds) when the goal cell cannot be a source. With
/// `stop_at` the field is only complete up to a margin past that point.
ArrivalTimeField solveFromGoal(const VelocityMap& vmap, Vec2 goal, const Vec2* stop_at = nullptr);

/// Gradient descent on `arrival` from `start`, using the bilinearly
/// interpolated central-difference gradient.
PlannedPath descend(const ArrivalTimeField& arrival, const VelocityMap& vmap, Vec2 start, Vec2 goal,
                    const DescentOptions& options = {});

/// solveFromGoal followed by descend.
PlannedPath planPath(const VelocityMap& vmap, Vec2 start, Vec2 goal, const DescentOptions& options = {});

/// Sobel estimate of the spatial gradient (per meter) on the 3x3 patch around
/// `cell`; out-of-bounds neighbors replicate the nearest in-bounds value.
Vec2 sobelGradient(const ScalarField& field, CellIndex cell);

}  // namespace formplan
