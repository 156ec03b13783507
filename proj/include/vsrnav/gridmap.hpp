#pragma once

// Occupancy grids and the boundary-extraction pipeline that turns them into
// clockwise obstacle polygons:
//
//   binarize -> morph_open -> extract_contours -> simplify_contour
//            -> orient_clockwise
//
// Cell (col, row) has its center at origin + R(theta) * ((col + 0.5) * res,
// (row + 0.5) * res); rows grow with world y.

#include <cstdint>
#include <optional>
#include <vector>

#include "vsrnav/geometry.hpp"

namespace vsrnav {

struct Cell {
  int col = 0;
  int row = 0;
  friend bool operator==(Cell, Cell) = default;
  friend auto operator<=>(Cell, Cell) = default;
};

/// Raster geometry shared by every grid type.
struct GridInfo {
  int width = 0;
  int height = 0;
  double resolution = 0.05;  // meters per cell
  Pose2 origin;              // world pose of the (0,0) cell corner

  bool contains(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width && c.row < height; }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(c.col);
  }
  std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

  Vec2 cell_center(Cell c) const;
  // Cell containing the world point (may be outside the grid).
  Cell cell_of(Vec2 world) const;
  // World point -> continuous grid coordinates in cell units.
  Vec2 to_grid(Vec2 world) const;

  // Throws InvalidArgument unless width, height >= 1 and resolution > 0.
  void validate() const;
};

/// Grayscale occupancy: 0 = free ... 255 = occupied. When unknown_value is set,
/// cells holding exactly that value are unexplored.
struct OccupancyGrid {
  GridInfo info;
  std::vector<std::uint8_t> cells;
  std::optional<std::uint8_t> unknown_value;

  std::uint8_t at(Cell c) const { return cells[info.index(c)]; }
  void validate() const;
};

/// Obstacle raster: cells are 0 or 1. `unknown` is either empty or one flag per
/// cell; unknown cells are never obstacles but are impassable for motion.
struct BinaryGrid {
  GridInfo info;
  std::vector<std::uint8_t> cells;
  std::vector<std::uint8_t> unknown;

  static BinaryGrid empty_like(const GridInfo& info);

  bool obstacle(Cell c) const { return info.contains(c) && cells[info.index(c)] != 0; }
  bool is_unknown(Cell c) const {
    return info.contains(c) && !unknown.empty() && unknown[info.index(c)] != 0;
  }
  // In bounds, not an obstacle, not unknown.
  bool free(Cell c) const { return info.contains(c) && cells[info.index(c)] == 0 && !is_unknown(c); }
  bool free_at(Vec2 world) const { return free(info.cell_of(world)); }

  void set(Cell c, bool value) { cells[info.index(c)] = value ? 1 : 0; }
};

enum class Orientation { Clockwise, Counterclockwise };

/// Closed boundary trace in cell coordinates. Consecutive points are
/// 8-neighbors and the last point connects back to the first.
struct Contour {
  std::vector<Cell> points;
  Orientation orientation = Orientation::Clockwise;
};

struct Polygon2D {
  std::vector<Vec2> vertices;
  bool clockwise = false;
};

BinaryGrid binarize(const OccupancyGrid& grid, std::uint8_t threshold);

/// Opening with a disk structuring element. Cells outside the grid count as
/// obstacle during erosion and as free during dilation, so walls touching the
/// map edge survive.
BinaryGrid morph_open(const BinaryGrid& grid, int radius);

/// Obstacle grid with every free region that cannot reach the map border
/// (4-connected) marked as obstacle.
BinaryGrid fill_enclosed_free(const BinaryGrid& grid);

/// Outer border of each 8-connected obstacle component, traced by Suzuki-Abe
/// border following. Interior holes are filled first and never traced.
std::vector<Contour> extract_contours(const BinaryGrid& grid);

/// Ramer-Douglas-Peucker reduction of a closed contour, in world meters.
/// Contours with fewer than three distinct cells become the box of their
/// cells. Other zero-area contours (one-cell-wide lines) become a thin tube
/// around the line, so every cell center stays within epsilon of the edge.
Polygon2D simplify_contour(const Contour& contour, const BinaryGrid& grid, double epsilon);

/// Reverses the vertex order when the turn at the highest vertex (max y, then
/// min x) is counterclockwise.
Polygon2D orient_clockwise(const Polygon2D& poly);

}  // namespace vsrnav
