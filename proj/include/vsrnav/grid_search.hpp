#pragma once

// Collision checks and shortest paths on a BinaryGrid. "Free" always means
// in bounds, not an obstacle and not unknown.

#include <optional>
#include <vector>

#include "vsrnav/gridmap.hpp"

namespace vsrnav {

/// Cells touched by the segment a-b, in traversal order. Crossing exactly
/// through a cell corner reports both side cells.
std::vector<Cell> cells_on_segment(const GridInfo& info, Vec2 a, Vec2 b);

bool segment_clear(const BinaryGrid& grid, Vec2 a, Vec2 b);

bool polyline_clear(const BinaryGrid& grid, const Polyline& line);

/// Center of the free cell closest to `p` within `radius` meters.
std::optional<Vec2> nearest_free_center(const BinaryGrid& grid, Vec2 p, double radius);

/// Single-source shortest grid distances (8-connected, octile step costs, no
/// diagonal corner cutting).
class DistanceField {
 public:
  DistanceField(const BinaryGrid& grid, Vec2 source);

  bool reachable(Cell c) const;
  bool reachable(Vec2 p) const { return reachable(grid_->info.cell_of(p)); }
  // Octile distance in meters between cell centers; +inf when unreachable.
  double distance(Cell c) const;

  /// Source point -> cell centers -> target point, shortcut where the
  /// straight segment stays clear. Empty when unreachable.
  Polyline path_to(Vec2 target) const;

 private:
  const BinaryGrid* grid_;
  Vec2 source_;
  std::vector<double> dist_;
  std::vector<int> parent_;
};

/// Greedy line-of-sight shortcutting; never lengthens the path.
Polyline shortcut(const BinaryGrid& grid, const Polyline& path);

/// Straight segment when clear, otherwise the shortcut grid path. Empty when
/// no path exists.
Polyline shortest_path(const BinaryGrid& grid, Vec2 a, Vec2 b);

}  // namespace vsrnav
