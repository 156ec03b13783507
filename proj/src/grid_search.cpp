#include "vsrnav/grid_search.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace vsrnav {

std::vector<Cell> cells_on_segment(const GridInfo& info, Vec2 a, Vec2 b) {
  const Vec2 g0 = info.to_grid(a);
  const Vec2 g1 = info.to_grid(b);
  Cell cur{static_cast<int>(std::floor(g0.x)), static_cast<int>(std::floor(g0.y))};
  const Cell end{static_cast<int>(std::floor(g1.x)), static_cast<int>(std::floor(g1.y))};
  std::vector<Cell> out{cur};
  if (cur == end) return out;

  const double dx = g1.x - g0.x;
  const double dy = g1.y - g0.y;
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  double tmax_x = sx > 0 ? (cur.col + 1 - g0.x) / dx : sx < 0 ? (g0.x - cur.col) / -dx : inf;
  double tmax_y = sy > 0 ? (cur.row + 1 - g0.y) / dy : sy < 0 ? (g0.y - cur.row) / -dy : inf;
  const double tdelta_x = sx != 0 ? 1.0 / std::abs(dx) : inf;
  const double tdelta_y = sy != 0 ? 1.0 / std::abs(dy) : inf;

  const int limit = std::abs(end.col - cur.col) + std::abs(end.row - cur.row) + 4;
  for (int guard = 0; guard < limit && !(cur == end); ++guard) {
    constexpr double tie = 1e-12;
    if (std::abs(tmax_x - tmax_y) <= tie) {
      if (tmax_x > 1.0) break;
      out.push_back({cur.col + sx, cur.row});
      out.push_back({cur.col, cur.row + sy});
      cur.col += sx;
      cur.row += sy;
      tmax_x += tdelta_x;
      tmax_y += tdelta_y;
    } else if (tmax_x < tmax_y) {
      if (tmax_x > 1.0) break;
      cur.col += sx;
      tmax_x += tdelta_x;
    } else {
      if (tmax_y > 1.0) break;
      cur.row += sy;
      tmax_y += tdelta_y;
    }
    out.push_back(cur);
  }
  return out;
}

bool segment_clear(const BinaryGrid& grid, Vec2 a, Vec2 b) {
  for (const Cell c : cells_on_segment(grid.info, a, b))
    if (!grid.free(c)) return false;
  return true;
}

bool polyline_clear(const BinaryGrid& grid, const Polyline& line) {
  if (line.size() == 1) return grid.free_at(line[0]);
  for (std::size_t i = 1; i < line.size(); ++i)
    if (!segment_clear(grid, line[i - 1], line[i])) return false;
  return true;
}

std::optional<Vec2> nearest_free_center(const BinaryGrid& grid, Vec2 p, double radius) {
  const GridInfo& info = grid.info;
  const Cell center = info.cell_of(p);
  const int span = static_cast<int>(std::ceil(radius / info.resolution)) + 1;
  std::optional<Vec2> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int r = center.row - span; r <= center.row + span; ++r)
    for (int c = center.col - span; c <= center.col + span; ++c) {
      if (!grid.free({c, r})) continue;
      const Vec2 q = info.cell_center({c, r});
      const double d = distance(p, q);
      if (d <= radius && d < best_d) {
        best_d = d;
        best = q;
      }
    }
  return best;
}

DistanceField::DistanceField(const BinaryGrid& grid, Vec2 source) : grid_(&grid), source_(source) {
  const GridInfo& info = grid.info;
  dist_.assign(info.size(), std::numeric_limits<double>::infinity());
  parent_.assign(info.size(), -1);
  const Cell s = info.cell_of(source);
  if (!grid.free(s)) return;

  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  const int si = static_cast<int>(info.index(s));
  dist_[si] = 0.0;
  open.push({0.0, si});
  const double straight = info.resolution;
  const double diagonal = info.resolution * std::numbers::sqrt2;
  constexpr int dc[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  constexpr int dr[8] = {0, 0, 1, -1, 1, -1, 1, -1};

  while (!open.empty()) {
    const auto [d, i] = open.top();
    open.pop();
    if (d > dist_[i]) continue;
    const Cell cur{i % info.width, i / info.width};
    for (int k = 0; k < 8; ++k) {
      const Cell n{cur.col + dc[k], cur.row + dr[k]};
      if (!grid.free(n)) continue;
      if (k >= 4 && (!grid.free({cur.col + dc[k], cur.row}) || !grid.free({cur.col, cur.row + dr[k]}))) continue;
      const int ni = static_cast<int>(info.index(n));
      const double nd = d + (k < 4 ? straight : diagonal);
      if (nd < dist_[ni]) {
        dist_[ni] = nd;
        parent_[ni] = i;
        open.push({nd, ni});
      }
    }
  }
}

bool DistanceField::reachable(Cell c) const {
  return grid_->info.contains(c) && std::isfinite(dist_[grid_->info.index(c)]);
}

double DistanceField::distance(Cell c) const {
  if (!grid_->info.contains(c)) return std::numeric_limits<double>::infinity();
  return dist_[grid_->info.index(c)];
}

Polyline DistanceField::path_to(Vec2 target) const {
  const GridInfo& info = grid_->info;
  const Cell t = info.cell_of(target);
  if (!reachable(t)) return {};
  std::vector<Cell> cells;
  for (int i = static_cast<int>(info.index(t)); i >= 0; i = parent_[i]) cells.push_back({i % info.width, i / info.width});
  Polyline raw{source_};
  for (auto it = cells.rbegin(); it != cells.rend(); ++it) raw.push_back(info.cell_center(*it));
  raw.push_back(target);
  return shortcut(*grid_, raw);
}

Polyline shortcut(const BinaryGrid& grid, const Polyline& path) {
  if (path.size() <= 2) return path;
  Polyline out{path.front()};
  std::size_t i = 0;
  while (i + 1 < path.size()) {
    std::size_t j = i + 1;
    while (j + 1 < path.size() && segment_clear(grid, path[i], path[j + 1])) ++j;
    if (!(path[j] == out.back())) out.push_back(path[j]);
    i = j;
  }
  return out;
}

Polyline shortest_path(const BinaryGrid& grid, Vec2 a, Vec2 b) {
  if (!grid.free_at(a) || !grid.free_at(b)) return {};
  if (segment_clear(grid, a, b)) return {a, b};
  return DistanceField(grid, a).path_to(b);
}

}  // namespace vsrnav
