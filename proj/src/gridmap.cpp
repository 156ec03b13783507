#include "vsrnav/gridmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "vsrnav/error.hpp"

namespace vsrnav {

Vec2 GridInfo::cell_center(Cell c) const {
  const double gx = (c.col + 0.5) * resolution;
  const double gy = (c.row + 0.5) * resolution;
  const double cs = std::cos(origin.theta);
  const double sn = std::sin(origin.theta);
  return {origin.x + cs * gx - sn * gy, origin.y + sn * gx + cs * gy};
}

Vec2 GridInfo::to_grid(Vec2 world) const {
  const double dx = world.x - origin.x;
  const double dy = world.y - origin.y;
  const double cs = std::cos(origin.theta);
  const double sn = std::sin(origin.theta);
  return {(cs * dx + sn * dy) / resolution, (-sn * dx + cs * dy) / resolution};
}

Cell GridInfo::cell_of(Vec2 world) const {
  const Vec2 g = to_grid(world);
  return {static_cast<int>(std::floor(g.x)), static_cast<int>(std::floor(g.y))};
}

void GridInfo::validate() const {
  if (width < 1 || height < 1) throw Error(ErrorKind::InvalidArgument, "grid must be at least 1x1");
  if (!(resolution > 0.0) || !std::isfinite(resolution))
    throw Error(ErrorKind::InvalidArgument, "grid resolution must be positive");
}

void OccupancyGrid::validate() const {
  info.validate();
  if (cells.size() != info.size())
    throw Error(ErrorKind::InvalidArgument,
                "occupancy grid has " + std::to_string(cells.size()) + " cells, expected " +
                    std::to_string(info.size()));
}

BinaryGrid BinaryGrid::empty_like(const GridInfo& info) {
  BinaryGrid g;
  g.info = info;
  g.cells.assign(info.size(), 0);
  return g;
}

BinaryGrid binarize(const OccupancyGrid& grid, std::uint8_t threshold) {
  grid.validate();
  BinaryGrid out = BinaryGrid::empty_like(grid.info);
  if (grid.unknown_value) out.unknown.assign(grid.info.size(), 0);
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const std::uint8_t v = grid.cells[i];
    if (grid.unknown_value && v == *grid.unknown_value) {
      out.unknown[i] = 1;
      continue;
    }
    out.cells[i] = v >= threshold ? 1 : 0;
  }
  return out;
}

namespace {

// Cells whose centers lie within radius + 1/2 of the origin: radius 1 is the
// 3x3 square, radius 2 the 5x5 square without its corners.
std::vector<Cell> disk_offsets(int radius) {
  std::vector<Cell> offsets;
  const int limit = radius * radius + radius;  // (r + 1/2)^2 rounded down
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= limit) offsets.push_back({dx, dy});
  return offsets;
}

}  // namespace

BinaryGrid morph_open(const BinaryGrid& grid, int radius) {
  if (radius <= 0) return grid;
  const GridInfo& info = grid.info;
  const auto disk = disk_offsets(radius);

  BinaryGrid eroded = grid;
  for (int r = 0; r < info.height; ++r) {
    for (int c = 0; c < info.width; ++c) {
      bool keep = grid.cells[info.index({c, r})] != 0;
      for (std::size_t k = 0; keep && k < disk.size(); ++k) {
        const Cell n{c + disk[k].col, r + disk[k].row};
        if (info.contains(n) && grid.cells[info.index(n)] == 0) keep = false;
      }
      eroded.cells[info.index({c, r})] = keep ? 1 : 0;
    }
  }

  BinaryGrid opened = grid;
  std::fill(opened.cells.begin(), opened.cells.end(), 0);
  for (int r = 0; r < info.height; ++r) {
    for (int c = 0; c < info.width; ++c) {
      if (eroded.cells[info.index({c, r})] == 0) continue;
      for (const Cell d : disk) {
        const Cell n{c + d.col, r + d.row};
        if (info.contains(n)) opened.cells[info.index(n)] = 1;
      }
    }
  }
  return opened;
}

BinaryGrid fill_enclosed_free(const BinaryGrid& grid) {
  const GridInfo& info = grid.info;
  std::vector<std::uint8_t> outside(info.size(), 0);
  std::queue<Cell> frontier;
  auto seed = [&](Cell c) {
    const std::size_t i = info.index(c);
    if (grid.cells[i] == 0 && !outside[i]) {
      outside[i] = 1;
      frontier.push(c);
    }
  };
  for (int c = 0; c < info.width; ++c) {
    seed({c, 0});
    seed({c, info.height - 1});
  }
  for (int r = 0; r < info.height; ++r) {
    seed({0, r});
    seed({info.width - 1, r});
  }
  constexpr std::array<Cell, 4> four{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  while (!frontier.empty()) {
    const Cell cur = frontier.front();
    frontier.pop();
    for (const Cell d : four) {
      const Cell n{cur.col + d.col, cur.row + d.row};
      if (info.contains(n)) seed(n);
    }
  }
  BinaryGrid filled = grid;
  for (std::size_t i = 0; i < info.size(); ++i)
    if (grid.cells[i] == 0 && !outside[i]) filled.cells[i] = 1;
  return filled;
}

namespace {

// Counterclockwise (y-up) ring of 8-neighbors starting east.
constexpr std::array<Cell, 8> kRing{{{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}}};

int ring_index(Cell from, Cell to) {
  const Cell d{to.col - from.col, to.row - from.row};
  for (int k = 0; k < 8; ++k)
    if (kRing[k] == d) return k;
  return -1;
}

Cell step(Cell c, int k) { return {c.col + kRing[k].col, c.row + kRing[k].row}; }

// Border following from the lowest-then-leftmost pixel of a component. The
// start's west and southern neighbors are background.
std::vector<Cell> follow_border(const BinaryGrid& g, Cell start) {
  const Cell west{start.col - 1, start.row};
  // First obstacle neighbor scanning counterclockwise from the west neighbor.
  const int w = ring_index(start, west);
  int first = -1;
  for (int s = 1; s <= 8; ++s) {
    const int k = (w + s) % 8;
    if (g.obstacle(step(start, k))) {
      first = k;
      break;
    }
  }
  if (first < 0) return {start};

  const Cell p1 = step(start, first);
  std::vector<Cell> trace;
  Cell prev = p1;
  Cell cur = start;
  while (true) {
    // Scan clockwise around cur, starting just past prev.
    const int from = ring_index(cur, prev);
    Cell next = cur;
    for (int s = 1; s <= 8; ++s) {
      const int k = ((from - s) % 8 + 8) % 8;
      const Cell n = step(cur, k);
      if (g.obstacle(n)) {
        next = n;
        break;
      }
    }
    trace.push_back(cur);
    if (next == start && cur == p1) break;
    prev = cur;
    cur = next;
  }
  return trace;
}

}  // namespace

std::vector<Contour> extract_contours(const BinaryGrid& grid) {
  const BinaryGrid filled = fill_enclosed_free(grid);
  const GridInfo& info = filled.info;
  std::vector<int> label(info.size(), -1);
  std::vector<Contour> contours;

  for (int r = 0; r < info.height; ++r) {
    for (int c = 0; c < info.width; ++c) {
      const Cell start{c, r};
      const std::size_t si = info.index(start);
      if (filled.cells[si] == 0 || label[si] >= 0) continue;

      const int id = static_cast<int>(contours.size());
      std::queue<Cell> q;
      q.push(start);
      label[si] = id;
      while (!q.empty()) {
        const Cell cur = q.front();
        q.pop();
        for (int k = 0; k < 8; ++k) {
          const Cell n = step(cur, k);
          if (!filled.obstacle(n)) continue;
          const std::size_t ni = info.index(n);
          if (label[ni] < 0) {
            label[ni] = id;
            q.push(n);
          }
        }
      }

      Contour contour;
      contour.points = follow_border(filled, start);
      std::vector<Vec2> ring;
      ring.reserve(contour.points.size());
      for (const Cell p : contour.points) ring.push_back({double(p.col), double(p.row)});
      const double area = signed_area(ring);
      // Zero-area traces (lines, single cells) follow the tracer's native
      // direction, which is clockwise for this scan order.
      contour.orientation = area > 0.0 ? Orientation::Counterclockwise : Orientation::Clockwise;
      contours.push_back(std::move(contour));
    }
  }
  return contours;
}

namespace {

void rdp(std::span<const Vec2> pts, std::size_t first, std::size_t last, double epsilon,
         std::vector<std::uint8_t>& keep) {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{first, last}};
  while (!stack.empty()) {
    const auto [a, b] = stack.back();
    stack.pop_back();
    double worst = -1.0;
    std::size_t index = a;
    for (std::size_t i = a + 1; i < b; ++i) {
      const double d = point_segment_distance(pts[i], pts[a], pts[b]);
      if (d > worst) {
        worst = d;
        index = i;
      }
    }
    if (index != a && worst > epsilon) {
      keep[index] = 1;
      stack.push_back({a, index});
      stack.push_back({index, b});
    }
  }
}

Polygon2D cell_box(std::span<const Cell> cells, const GridInfo& info) {
  int c0 = std::numeric_limits<int>::max(), r0 = c0;
  int c1 = std::numeric_limits<int>::min(), r1 = c1;
  for (const Cell c : cells) {
    c0 = std::min(c0, c.col);
    c1 = std::max(c1, c.col);
    r0 = std::min(r0, c.row);
    r1 = std::max(r1, c.row);
  }
  const double res = info.resolution;
  const double cs = std::cos(info.origin.theta);
  const double sn = std::sin(info.origin.theta);
  auto at = [&](double gx, double gy) {
    return Vec2{info.origin.x + cs * gx - sn * gy, info.origin.y + sn * gx + cs * gy};
  };
  const double x0 = c0 * res, x1 = (c1 + 1) * res;
  const double y0 = r0 * res, y1 = (r1 + 1) * res;
  Polygon2D box;
  box.vertices = {at(x0, y1), at(x1, y1), at(x1, y0), at(x0, y0)};
  box.clockwise = signed_area(box.vertices) < 0.0;
  return box;
}

// Closed-ring RDP, split at the point farthest from the first one.
std::vector<Vec2> reduce_ring(const std::vector<Vec2>& pts, double epsilon) {
  std::vector<Vec2> kept;
  if (epsilon <= 0.0 || pts.size() < 3) {
    kept = pts;
  } else {
    std::size_t far = 0;
    double best = -1.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double d = distance(pts[0], pts[i]);
      if (d > best) {
        best = d;
        far = i;
      }
    }
    std::vector<Vec2> closed = pts;
    closed.push_back(pts[0]);
    std::vector<std::uint8_t> keep(closed.size(), 0);
    keep[0] = keep[far] = keep[closed.size() - 1] = 1;
    rdp(closed, 0, far, epsilon, keep);
    rdp(closed, far, closed.size() - 1, epsilon, keep);
    for (std::size_t i = 0; i + 1 < closed.size(); ++i)
      if (keep[i]) kept.push_back(closed[i]);
  }
  std::vector<Vec2> ring;
  for (const Vec2 p : kept)
    if (ring.empty() || !(ring.back() == p)) ring.push_back(p);
  while (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
  return ring;
}

bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

bool simple_ring(const std::vector<Vec2>& v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
    }
  return true;
}

// A walk that retraces itself (a one-cell-wide line) has no area. Trace one
// side of it at distance h instead: a thin tube around the line, with
// square caps at the dead ends. side is +1 for the right, -1 for the left.
std::vector<Vec2> tube_around(const std::vector<Vec2>& walk, double h, double side) {
  const std::size_t n = walk.size();
  std::vector<Vec2> out;
  auto right = [side](Vec2 d) { return Vec2{d.y * side, -d.x * side}; };
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = walk[i];
    const Vec2 din = normalized(p - walk[(i + n - 1) % n]);
    const Vec2 dout = normalized(walk[(i + 1) % n] - p);
    const Vec2 rin = right(din), rout = right(dout);
    const double c = dot(din, dout);
    if (c < -0.5) {
      out.push_back(p + (rin + din) * h);
      out.push_back(p + (rout + din) * h);
    } else {
      out.push_back(p + (rin + rout) * (h / (1.0 + c)));
    }
  }
  return out;
}

double ring_deviation(const std::vector<Vec2>& pts, const std::vector<Vec2>& ring) {
  double worst = 0.0;
  for (const Vec2 p : pts) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ring.size(); ++i)
      best = std::min(best, point_segment_distance(p, ring[i], ring[(i + 1) % ring.size()]));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

Polygon2D simplify_contour(const Contour& contour, const BinaryGrid& grid, double epsilon) {
  if (contour.points.empty()) throw Error(ErrorKind::InvalidArgument, "empty contour");
  const GridInfo& info = grid.info;
  const double tiny = 1e-12 * info.resolution * info.resolution;

  std::vector<Vec2> pts;
  pts.reserve(contour.points.size());
  for (const Cell c : contour.points) {
    const Vec2 p = info.cell_center(c);
    if (pts.empty() || !(pts.back() == p)) pts.push_back(p);
  }
  while (pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();

  std::vector<Vec2> ring = reduce_ring(pts, epsilon);
  const bool flat = ring.size() < 3 || std::abs(signed_area(ring)) <= tiny;
  if (flat) {
    std::vector<Vec2> distinct = pts;
    std::sort(distinct.begin(), distinct.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3 || epsilon <= 0.0) return cell_box(contour.points, info);

    // Nearly flat walks can still enclose a sliver, and the offset folds
    // over on the sliver's side. Try both sides, then thinner tubes.
    bool found = false;
    for (double h = std::min(epsilon / 2.0, info.resolution / 4.0); !found && h > info.resolution / 64.0; h /= 2.0) {
      for (const bool simplify : {true, false}) {
        const std::vector<Vec2> walk = simplify ? reduce_ring(pts, epsilon - h) : pts;
        if (walk.size() < 2) continue;
        for (const double side : {1.0, -1.0}) {
          std::vector<Vec2> tube = tube_around(walk, h, side);
          if (tube.size() >= 3 && std::abs(signed_area(tube)) > tiny && simple_ring(tube) &&
              ring_deviation(pts, tube) <= epsilon * (1.0 + 1e-9)) {
            ring = std::move(tube);
            found = true;
            break;
          }
        }
        if (found) break;
      }
    }
    if (!found) return cell_box(contour.points, info);
  }

  Polygon2D poly;
  poly.vertices = std::move(ring);
  poly.clockwise = signed_area(poly.vertices) < 0.0;
  return poly;
}

Polygon2D orient_clockwise(const Polygon2D& poly) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  if (n < 3) throw Error(ErrorKind::InvalidArgument, "polygon needs at least 3 vertices");

  std::size_t top = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (v[i].y > v[top].y || (v[i].y == v[top].y && v[i].x < v[top].x)) top = i;

  const Vec2 prev = v[(top + n - 1) % n];
  const Vec2 next = v[(top + 1) % n];
  double turn = cross(v[top] - prev, next - v[top]);
  // Collinear neighbors at the extreme vertex only happen on degenerate
  // input; fall back to the area sign.
  if (turn == 0.0) turn = signed_area(v);

  Polygon2D out = poly;
  if (turn > 0.0) std::reverse(out.vertices.begin(), out.vertices.end());
  out.clockwise = true;
  return out;
}

}  // namespace vsrnav
