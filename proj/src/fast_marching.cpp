#include "formplan/fast_marching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <queue>
#include <string>
#include <utility>

#include "formplan/errors.hpp"

namespace formplan {
namespace {

constexpr double kInf = ScalarField::kInfinity;
constexpr double kSqrt2 = std::numbers::sqrt2;
// Extra front travel past the start cell in an early-stopped solve, in cells
// of unit-speed travel.
constexpr double kStopMarginCells = 20.0;

// Upwind solution of (T - a)^2 + (T - b)^2 = f^2 with T >= max(a, b), or the
// one-sided update when the quadratic has no causal root.
double godunovUpdate(double a, double b, double f) {
  if (a > b) std::swap(a, b);
  if (a == kInf) return kInf;
  if (b == kInf || b - a >= f) return a + f;
  const double d = a - b;
  return 0.5 * (a + b + std::sqrt(2.0 * f * f - d * d));
}

enum class CellState : std::uint8_t { Far, Trial, Known };

class Marcher {
 public:
  Marcher(const ScalarField& speed, std::vector<std::size_t>* accept_order)
      : speed_(speed),
        geo_(speed.geometry()),
        times_(geo_, kInf),
        state_(geo_.cellCount(), CellState::Far),
        accept_order_(accept_order) {}

  void seed(CellIndex c) {
    const auto k = geo_.linear(c);
    if (state_[k] == CellState::Known) return;
    times_(c) = 0.0;
    state_[k] = CellState::Trial;
    heap_.emplace(0.0, k);
  }

  // Marches until the heap empties or, with `stop`, until the front passes
  // T(stop->target) + stop->margin. Cells left unfinalized read as infinity.
  ScalarField run(const EikonalStop* stop = nullptr) {
    double limit = kInf;
    const std::size_t target = stop ? geo_.linear(stop->target) : 0;
    while (!heap_.empty()) {
      const auto [t, k] = heap_.top();
      heap_.pop();
      if (state_[k] == CellState::Known || t > times_.at(k)) continue;
      if (t > limit) break;
      if (stop && k == target) limit = t + stop->margin;
      state_[k] = CellState::Known;
      if (accept_order_) accept_order_->push_back(k);
      const CellIndex c = geo_.cellAt(k);
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          relax({c.i + di, c.j + dj});
        }
      }
    }
    if (std::isfinite(limit)) {
      for (std::size_t k = 0; k < state_.size(); ++k) {
        if (state_[k] != CellState::Known) times_.values()[k] = kInf;
      }
    }
    return std::move(times_);
  }

 private:
  bool passable(CellIndex c) const { return geo_.inBounds(c) && speed_(c) > 0.0; }

  double known(int i, int j) const {
    const CellIndex c{i, j};
    if (!geo_.inBounds(c) || state_[geo_.linear(c)] != CellState::Known) return kInf;
    return times_(c);
  }

  // Diagonal neighbor value, unless both cells sharing the corner are blocked.
  double knownDiagonal(CellIndex c, int di, int dj) const {
    if (!passable({c.i + di, c.j}) && !passable({c.i, c.j + dj})) return kInf;
    return known(c.i + di, c.j + dj);
  }

  void relax(CellIndex c) {
    if (!passable(c)) return;
    const auto k = geo_.linear(c);
    if (state_[k] == CellState::Known) return;

    const double f = geo_.cellSize() / speed_(c);
    const double ax = std::min(known(c.i - 1, c.j), known(c.i + 1, c.j));
    const double ay = std::min(known(c.i, c.j - 1), known(c.i, c.j + 1));
    const double d1 = std::min(knownDiagonal(c, -1, -1), knownDiagonal(c, 1, 1));
    const double d2 = std::min(knownDiagonal(c, -1, 1), knownDiagonal(c, 1, -1));
    const double t = std::min(godunovUpdate(ax, ay, f), godunovUpdate(d1, d2, kSqrt2 * f));

    if (t < times_.at(k)) {
      times_(c) = t;
      state_[k] = CellState::Trial;
      heap_.emplace(t, k);
    }
  }

  using Entry = std::pair<double, std::size_t>;

  const ScalarField& speed_;
  const GridGeometry& geo_;
  ScalarField times_;
  std::vector<CellState> state_;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
  std::vector<std::size_t>* accept_order_;
};

// Central difference along one axis with one-sided fallback; 0 when neither
// neighbor is finite.
double axisDifference(double lo, double mid, double hi, double h) {
  const bool lo_ok = std::isfinite(lo);
  const bool hi_ok = std::isfinite(hi);
  if (lo_ok && hi_ok) return (hi - lo) / (2.0 * h);
  if (hi_ok) return (hi - mid) / h;
  if (lo_ok) return (mid - lo) / h;
  return 0.0;
}

// Gradient of the arrival field at a cell center; invalid when the cell is unreached.
struct CellGradient {
  Vec2 g;
  bool valid = false;
};

CellGradient cellGradient(const ScalarField& field, CellIndex c) {
  const auto& geo = field.geometry();
  if (!geo.inBounds(c)) return {};
  const double mid = field(c);
  if (!std::isfinite(mid)) return {};
  const double h = geo.cellSize();
  return {{axisDifference(field.valueOr({c.i - 1, c.j}, kInf), mid, field.valueOr({c.i + 1, c.j}, kInf), h),
           axisDifference(field.valueOr({c.i, c.j - 1}, kInf), mid, field.valueOr({c.i, c.j + 1}, kInf), h)},
          true};
}

Vec2 interpolatedGradient(const ScalarField& field, Vec2 p) {
  const Vec2 g = field.geometry().toGridCoords(p);
  const int i0 = static_cast<int>(std::floor(g.x));
  const int j0 = static_cast<int>(std::floor(g.y));
  const double fx = g.x - i0;
  const double fy = g.y - j0;
  Vec2 sum;
  double weight = 0.0;
  const auto accumulate = [&](int i, int j, double w) {
    if (w <= 0.0) return;
    const auto cg = cellGradient(field, {i, j});
    if (!cg.valid) return;
    sum += cg.g * w;
    weight += w;
  };
  accumulate(i0, j0, (1.0 - fx) * (1.0 - fy));
  accumulate(i0 + 1, j0, fx * (1.0 - fy));
  accumulate(i0, j0 + 1, (1.0 - fx) * fy);
  accumulate(i0 + 1, j0 + 1, fx * fy);
  return weight > 0.0 ? sum / weight : Vec2{};
}

// Lowest finite 8-neighbor of the containing cell, used when the smooth
// gradient degenerates or would step into an unreached cell.
bool lowestNeighborCenter(const ScalarField& field, CellIndex c, Vec2& out) {
  const auto& geo = field.geometry();
  double best = field.valueOr(c, kInf);
  bool found = false;
  for (int dj = -1; dj <= 1; ++dj) {
    for (int di = -1; di <= 1; ++di) {
      if (di == 0 && dj == 0) continue;
      const CellIndex n{c.i + di, c.j + dj};
      const double v = field.valueOr(n, kInf);
      if (v < best) {
        best = v;
        out = geo.cellCenter(n);
        found = true;
      }
    }
  }
  return found;
}

}  // namespace

double PlannedPath::length() const {
  double total = 0.0;
  for (std::size_t k = 1; k < vertices.size(); ++k) total += distance(vertices[k - 1], vertices[k]);
  return total;
}

ArrivalTimeField solveEikonal(const ScalarField& speed, std::span<const CellIndex> sources,
                              std::vector<std::size_t>* accept_order, const EikonalStop* stop) {
  if (sources.empty()) throw SolverError("solveEikonal: empty source set");
  const auto& geo = speed.geometry();
  bool any_passable = false;
  for (const auto& s : sources) {
    if (!geo.inBounds(s)) throw SolverError("solveEikonal: source out of bounds");
    any_passable = any_passable || speed(s) > 0.0;
  }
  if (!any_passable) throw SolverError("solveEikonal: all sources lie on zero-speed cells");
  if (stop && !geo.inBounds(stop->target)) stop = nullptr;

  Marcher marcher(speed, accept_order);
  for (const auto& s : sources) marcher.seed(s);
  return {marcher.run(stop), std::vector<CellIndex>(sources.begin(), sources.end())};
}

ArrivalTimeField distanceField(const OccupancyGrid& grid) {
  const auto& geo = grid.geometry();
  std::vector<CellIndex> sources;
  for (int j = 0; j < geo.height(); ++j) {
    for (int i = 0; i < geo.width(); ++i) {
      if (grid.occupied(CellIndex{i, j})) sources.push_back({i, j});
    }
  }
  if (sources.empty()) return {ScalarField(geo, kInf), {}};
  if (sources.size() == geo.cellCount()) throw SolverError("distanceField: grid has no free cells");
  return solveEikonal(ScalarField(geo, 1.0), sources);
}

VelocityMap buildVelocityMap(const OccupancyGrid& grid, double safe_distance) {
  return buildVelocityMap(grid, distanceField(grid), safe_distance);
}

VelocityMap buildVelocityMap(const OccupancyGrid& grid, const ArrivalTimeField& distance,
                             double safe_distance) {
  if (!(safe_distance > 0.0)) throw SolverError("safe_distance must be positive");
  const auto& geo = grid.geometry();
  ScalarField speed(geo, 1.0);
  for (std::size_t k = 0; k < geo.cellCount(); ++k) {
    const CellIndex c = geo.cellAt(k);
    speed(c) = grid.occupied(c) ? 0.0 : std::min(distance.times.at(k) / safe_distance, 1.0);
  }
  return {std::move(speed), safe_distance};
}

ArrivalTimeField solveFromGoal(const VelocityMap& vmap, Vec2 goal, const Vec2* stop_at) {
  const auto& geo = vmap.geometry();
  const CellIndex g = geo.cellOf(goal);
  if (!geo.inBounds(g)) throw PlanningError(PlanningError::Kind::OutOfBounds, "goal out of bounds");
  if (!(vmap.speed(g) > 0.0)) {
    throw PlanningError(PlanningError::Kind::InvalidGoal, "goal in inflated obstacle");
  }
  const CellIndex sources[] = {g};
  if (stop_at) {
    const EikonalStop stop{geo.cellOf(*stop_at), kStopMarginCells * geo.cellSize()};
    return solveEikonal(vmap.speed, sources, nullptr, &stop);
  }
  return solveEikonal(vmap.speed, sources);
}

PlannedPath descend(const ArrivalTimeField& arrival, const VelocityMap& vmap, Vec2 start, Vec2 goal,
                    const DescentOptions& options) {
  const auto& geo = vmap.geometry();
  const ScalarField& field = arrival.times;
  const double h = geo.cellSize();
  const double step = options.step_cells * h;
  const double tolerance = options.goal_tolerance_cells * h;

  if (!geo.inBounds(start)) throw PlanningError(PlanningError::Kind::OutOfBounds, "start out of bounds");

  PlannedPath path;
  path.start = start;
  path.goal = goal;
  path.vertices.push_back(start);
  if (distance(start, goal) <= tolerance) {
    path.eta = 0.0;
    path.vertex_eta.push_back(0.0);
    return path;
  }

  const CellIndex start_cell = geo.cellOf(start);
  if (!(vmap.speed(start_cell) > 0.0) || !std::isfinite(field(start_cell))) {
    throw PlanningError(PlanningError::Kind::Unreachable, "goal unreachable from start");
  }
  path.eta = field.bilinear(start);
  path.vertex_eta.push_back(path.eta);

  const auto budget = static_cast<std::size_t>(options.budget_perimeters * 2.0 * (geo.width() + geo.height()));
  Vec2 p = start;
  for (std::size_t iter = 0; iter < budget; ++iter) {
    const Vec2 grad = interpolatedGradient(field, p);
    const double gnorm = grad.norm();
    Vec2 next = p - grad * (step / std::max(gnorm, 1e-300));

    const bool degenerate = !(gnorm > 1e-12);
    const CellIndex next_cell = geo.cellOf(next);
    if (degenerate || !geo.inBounds(next_cell) || !std::isfinite(field(next_cell))) {
      const CellIndex here = geo.cellOf(p);
      Vec2 target;
      if (here == geo.cellOf(goal)) {
        target = goal;
      } else if (!lowestNeighborCenter(field, here, target)) {
        throw PlanningError(PlanningError::Kind::BudgetExceeded, "gradient descent stalled in a local minimum");
      }
      const Vec2 d = target - p;
      next = d.norm() <= step ? target : p + d.normalized() * step;
    }

    p = next;
    path.vertices.push_back(p);
    path.vertex_eta.push_back(field.bilinear(p));
    if (distance(p, goal) <= tolerance) return path;
  }
  throw PlanningError(PlanningError::Kind::BudgetExceeded,
                      "gradient descent exceeded its iteration budget (" + std::to_string(budget) + ")");
}

PlannedPath planPath(const VelocityMap& vmap, Vec2 start, Vec2 goal, const DescentOptions& options) {
  const auto& geo = vmap.geometry();
  if (!geo.inBounds(start)) throw PlanningError(PlanningError::Kind::OutOfBounds, "start out of bounds");
  if (distance(start, goal) <= options.goal_tolerance_cells * geo.cellSize()) {
    return descend(ArrivalTimeField{ScalarField(geo, kInf), {}}, vmap, start, goal, options);
  }
  return descend(solveFromGoal(vmap, goal, options.early_stop ? &start : nullptr), vmap, start, goal, options);
}

Vec2 sobelGradient(const ScalarField& field, CellIndex cell) {
  const auto& geo = field.geometry();
  const auto at = [&](int di, int dj) {
    const CellIndex c{std::clamp(cell.i + di, 0, geo.width() - 1), std::clamp(cell.j + dj, 0, geo.height() - 1)};
    return field(c);
  };
  const double gx = (at(1, -1) + 2.0 * at(1, 0) + at(1, 1)) - (at(-1, -1) + 2.0 * at(-1, 0) + at(-1, 1));
  const double gy = (at(-1, 1) + 2.0 * at(0, 1) + at(1, 1)) - (at(-1, -1) + 2.0 * at(0, -1) + at(1, -1));
  return Vec2{gx, gy} / (8.0 * geo.cellSize());
}

}  // namespace formplan
