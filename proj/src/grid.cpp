#include "formplan/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "formplan/errors.hpp"

namespace formplan {

GridGeometry::GridGeometry(int width, int height, double cell_size, Vec2 origin)
    : width_(width), height_(height), cell_size_(cell_size), origin_(origin) {
  if (width < 1 || height < 1) {
    throw MapError("grid dimensions must be at least 1x1, got " + std::to_string(width) + "x" +
                   std::to_string(height));
  }
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw MapError("cell_size must be positive, got " + std::to_string(cell_size));
  }
}

bool GridGeometry::inBounds(Vec2 p) const { return inBounds(cellOf(p)); }

Vec2 GridGeometry::cellCenter(CellIndex c) const {
  return {origin_.x + (c.i + 0.5) * cell_size_, origin_.y + (c.j + 0.5) * cell_size_};
}

CellIndex GridGeometry::cellOf(Vec2 p) const {
  return {static_cast<int>(std::floor((p.x - origin_.x) / cell_size_)),
          static_cast<int>(std::floor((p.y - origin_.y) / cell_size_))};
}

Vec2 GridGeometry::toGridCoords(Vec2 p) const {
  return {(p.x - origin_.x) / cell_size_ - 0.5, (p.y - origin_.y) / cell_size_ - 0.5};
}

OccupancyGrid::OccupancyGrid(GridGeometry geometry)
    : geometry_(geometry), cells_(geometry.cellCount(), 0) {}

void OccupancyGrid::setOccupied(CellIndex c, bool value) {
  if (geometry_.inBounds(c)) cells_[geometry_.linear(c)] = value ? 1 : 0;
}

std::size_t OccupancyGrid::occupiedCount() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

namespace {

template <typename Pred>
void fillWhere(OccupancyGrid& grid, Pred&& inside) {
  const auto& geo = grid.geometry();
  for (int j = 0; j < geo.height(); ++j) {
    for (int i = 0; i < geo.width(); ++i) {
      if (inside(geo.cellCenter({i, j}))) grid.setOccupied({i, j});
    }
  }
}

}  // namespace

void OccupancyGrid::fillRect(Vec2 lo, Vec2 hi) {
  fillWhere(*this, [&](Vec2 p) { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; });
}

void OccupancyGrid::fillDisc(Vec2 center, double radius) {
  fillWhere(*this, [&](Vec2 p) { return (p - center).squaredNorm() <= radius * radius; });
}

void OccupancyGrid::fillSegment(Vec2 a, Vec2 b, double half_width) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  fillWhere(*this, [&](Vec2 p) {
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + ab * t)).squaredNorm() <= half_width * half_width;
  });
}

void OccupancyGrid::fillBorder() {
  const int w = geometry_.width();
  const int h = geometry_.height();
  for (int i = 0; i < w; ++i) {
    setOccupied({i, 0});
    setOccupied({i, h - 1});
  }
  for (int j = 0; j < h; ++j) {
    setOccupied({0, j});
    setOccupied({w - 1, j});
  }
}

ScalarField::ScalarField(GridGeometry geometry, double fill)
    : geometry_(geometry), values_(geometry.cellCount(), fill) {}

double ScalarField::bilinear(Vec2 p) const {
  if (!geometry_.inBounds(p)) return kInfinity;
  const Vec2 g = geometry_.toGridCoords(p);
  const int i0 = static_cast<int>(std::floor(g.x));
  const int j0 = static_cast<int>(std::floor(g.y));
  const double fx = g.x - i0;
  const double fy = g.y - j0;

  double sum = 0.0;
  double weight = 0.0;
  const auto accumulate = [&](int i, int j, double w) {
    if (w <= 0.0) return;
    const CellIndex c{i, j};
    if (!geometry_.inBounds(c)) return;
    const double v = (*this)(c);
    if (!std::isfinite(v)) return;
    sum += w * v;
    weight += w;
  };
  accumulate(i0, j0, (1.0 - fx) * (1.0 - fy));
  accumulate(i0 + 1, j0, fx * (1.0 - fy));
  accumulate(i0, j0 + 1, (1.0 - fx) * fy);
  accumulate(i0 + 1, j0 + 1, fx * fy);
  if (weight <= 0.0) return kInfinity;
  return sum / weight;
}

OccupancyGrid inflate(const OccupancyGrid& grid, double radius) {
  if (radius < 0.0) throw MapError("inflation radius must be non-negative");
  OccupancyGrid out = grid;
  const auto& geo = grid.geometry();
  const double r_cells = radius / geo.cellSize();
  const int reach = static_cast<int>(std::floor(r_cells + 1e-9));
  if (reach == 0) return out;

  const double limit = r_cells * r_cells + 1e-9;
  std::vector<CellIndex> stamp;
  for (int dj = -reach; dj <= reach; ++dj) {
    for (int di = -reach; di <= reach; ++di) {
      if (di * di + dj * dj <= limit) stamp.push_back({di, dj});
    }
  }

  for (int j = 0; j < geo.height(); ++j) {
    for (int i = 0; i < geo.width(); ++i) {
      if (!grid.occupied(CellIndex{i, j})) continue;
      for (const auto& d : stamp) out.setOccupied({i + d.i, j + d.j});
    }
  }
  return out;
}

}  // namespace formplan
