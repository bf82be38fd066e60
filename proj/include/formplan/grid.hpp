#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

#include "formplan/geometry.hpp"

namespace formplan {

/// Cell indices: `i` along world +x, `j` along world +y (row 0 is the bottom row).
struct CellIndex {
  int i = 0;
  int j = 0;

  constexpr bool operator==(const CellIndex&) const = default;
};

/// Shared cell/world convention for every grid in the library. Cell (0,0)
/// has its lower-left corner at `origin`.
class GridGeometry {
 public:
  GridGeometry() = default;
  GridGeometry(int width, int height, double cell_size, Vec2 origin = {});

  int width() const { return width_; }
  int height() const { return height_; }
  double cellSize() const { return cell_size_; }
  Vec2 origin() const { return origin_; }
  std::size_t cellCount() const { return static_cast<std::size_t>(width_) * height_; }

  bool inBounds(CellIndex c) const { return c.i >= 0 && c.j >= 0 && c.i < width_ && c.j < height_; }
  bool inBounds(Vec2 p) const;

  std::size_t linear(CellIndex c) const { return static_cast<std::size_t>(c.j) * width_ + c.i; }
  CellIndex cellAt(std::size_t linear_index) const {
    return {static_cast<int>(linear_index % width_), static_cast<int>(linear_index / width_)};
  }

  Vec2 cellCenter(CellIndex c) const;
  /// Containing cell (may be out of bounds).
  CellIndex cellOf(Vec2 p) const;
  /// Continuous coordinates in cell units where cell centers sit at integers.
  Vec2 toGridCoords(Vec2 p) const;

  /// Map extent in meters.
  Vec2 extent() const { return {width_ * cell_size_, height_ * cell_size_}; }

  bool operator==(const GridGeometry&) const = default;

 private:
  int width_ = 1;
  int height_ = 1;
  double cell_size_ = 1.0;
  Vec2 origin_;
};

/// Binary occupancy map. Out-of-bounds queries report occupied.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(GridGeometry geometry);

  const GridGeometry& geometry() const { return geometry_; }

  bool occupied(CellIndex c) const {
    return !geometry_.inBounds(c) || cells_[geometry_.linear(c)] != 0;
  }
  bool occupied(Vec2 p) const { return occupied(geometry_.cellOf(p)); }
  void setOccupied(CellIndex c, bool value = true);

  std::size_t occupiedCount() const;
  const std::vector<std::uint8_t>& cells() const { return cells_; }

  /// Marks every cell whose center lies inside the axis-aligned rectangle.
  void fillRect(Vec2 lo, Vec2 hi);
  /// Marks every cell whose center lies inside the disc.
  void fillDisc(Vec2 center, double radius);
  /// Marks every cell whose center lies within `half_width` of the segment.
  void fillSegment(Vec2 a, Vec2 b, double half_width);
  /// Marks the outermost ring of cells.
  void fillBorder();

  bool operator==(const OccupancyGrid&) const = default;

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> cells_ = std::vector<std::uint8_t>(1, 0);
};

/// Real-valued grid. Infinity marks unreached cells.
class ScalarField {
 public:
  static constexpr double kInfinity = std::numeric_limits<double>::infinity();

  ScalarField() = default;
  ScalarField(GridGeometry geometry, double fill);

  const GridGeometry& geometry() const { return geometry_; }

  double operator()(CellIndex c) const { return values_[geometry_.linear(c)]; }
  double& operator()(CellIndex c) { return values_[geometry_.linear(c)]; }
  double at(std::size_t linear_index) const { return values_[linear_index]; }

  /// Value at a cell, or `fallback` when out of bounds.
  double valueOr(CellIndex c, double fallback) const {
    return geometry_.inBounds(c) ? (*this)(c) : fallback;
  }
  /// Value of the containing cell; out of bounds reads as `fallback`.
  double sampleCell(Vec2 p, double fallback = 0.0) const { return valueOr(geometry_.cellOf(p), fallback); }

  /// Bilinear interpolation between cell centers using finite values only
  /// (weights renormalized). Returns infinity when no surrounding value is
  /// finite or the point is out of bounds.
  double bilinear(Vec2 p) const;

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  GridGeometry geometry_;
  std::vector<double> values_ = std::vector<double>(1, 0.0);
};

/// Occupied iff the cell center lies within `radius` of an occupied cell
/// center (Euclidean, center-to-center).
OccupancyGrid inflate(const OccupancyGrid& grid, double radius);

}  // namespace formplan
