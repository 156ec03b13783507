#include "vsrnav/coverage.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <string>

#include "vsrnav/error.hpp"
#include "vsrnav/grid_search.hpp"
#include "vsrnav/tsp.hpp"

namespace vsrnav {

namespace {

// Longest miter, in multiples of the offset distance.
constexpr double kMiterLimit = 3.0;
constexpr int kSplitDepth = 4;

Vec2 left_normal(Vec2 d) { return normalized(Vec2{-d.y, d.x}); }

}  // namespace

Polygon2D offset_polygon(const Polygon2D& poly, double delta, const BinaryGrid& grid) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  if (n < 3) throw Error(ErrorKind::InvalidArgument, "polygon needs at least 3 vertices");
  if (delta < 0.0) throw Error(ErrorKind::InvalidArgument, "offset must be >= 0");
  if (delta == 0.0) return poly;

  std::vector<Vec2> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 prev = v[(i + n - 1) % n];
    const Vec2 next = v[(i + 1) % n];
    const Vec2 in = v[i] - prev;
    const Vec2 outgoing = next - v[i];
    // Clockwise ring: the free side is to the left of travel.
    const Vec2 n1 = left_normal(in);
    const Vec2 n2 = left_normal(outgoing);
    Vec2 bisector = n1 + n2;
    double length = delta;
    if (norm(bisector) < 1e-9) {
      bisector = normalized(in);
    } else {
      bisector = normalized(bisector);
      length = delta / std::max(dot(bisector, n1), 1.0 / kMiterLimit);
    }
    const Vec2 displaced = v[i] + bisector * length;
    if (grid.free_at(displaced)) {
      out.push_back(displaced);
    } else if (auto moved = nearest_free_center(grid, displaced, 4.0 * delta)) {
      out.push_back(*moved);
    }
  }

  std::vector<Vec2> ring;
  for (const Vec2 p : out)
    if (ring.empty() || !(ring.back() == p)) ring.push_back(p);
  while (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
  if (ring.size() < 3 || signed_area(ring) >= 0.0)
    throw Error(ErrorKind::OffsetInfeasible,
                "only " + std::to_string(ring.size()) + " offset vertices reach free space");
  return Polygon2D{std::move(ring), true};
}

namespace {

// Intermediate points making a-b clear, or nullopt.
std::optional<std::vector<Vec2>> split_edge(const BinaryGrid& grid, Vec2 a, Vec2 b, int depth) {
  if (segment_clear(grid, a, b)) return std::vector<Vec2>{};
  if (depth == 0) return std::nullopt;
  // One detour point off the midpoint, free side (left) first.
  const double res = grid.info.resolution;
  const Vec2 n = left_normal(b - a);
  for (double t = res; t <= distance(a, b); t += res)
    for (const double side : {1.0, -1.0}) {
      const Vec2 p = 0.5 * (a + b) + n * (side * t);
      if (grid.free_at(p) && segment_clear(grid, a, p) && segment_clear(grid, p, b)) return std::vector<Vec2>{p};
    }
  Vec2 mid = 0.5 * (a + b);
  if (!grid.free_at(mid)) {
    const auto moved = nearest_free_center(grid, mid, std::max(distance(a, b), 2.0 * grid.info.resolution));
    if (!moved) return std::nullopt;
    mid = *moved;
  }
  if (mid == a || mid == b) return std::nullopt;
  auto left = split_edge(grid, a, mid, depth - 1);
  if (!left) return std::nullopt;
  auto right = split_edge(grid, mid, b, depth - 1);
  if (!right) return std::nullopt;
  left->push_back(mid);
  left->insert(left->end(), right->begin(), right->end());
  return left;
}

}  // namespace

CoverageGraph build_graph(const std::vector<Polygon2D>& rings, Vec2 start, const BinaryGrid& grid) {
  if (!grid.free_at(start)) throw Error(ErrorKind::InvalidArgument, "start is not in free space");

  CoverageGraph g;
  g.nodes.push_back({0, start, std::nullopt, 0});
  std::vector<std::pair<std::size_t, std::size_t>> ring_span;  // first node, count
  for (std::size_t p = 0; p < rings.size(); ++p) {
    const auto& v = rings[p].vertices;
    std::vector<Vec2> refined;
    for (std::size_t i = 0; i < v.size(); ++i) {
      refined.push_back(v[i]);
      if (auto extra = split_edge(grid, v[i], v[(i + 1) % v.size()], kSplitDepth))
        refined.insert(refined.end(), extra->begin(), extra->end());
    }
    const std::size_t first = g.nodes.size();
    for (std::size_t i = 0; i < refined.size(); ++i) {
      if (!grid.free_at(refined[i]))
        throw Error(ErrorKind::InvalidArgument, "ring vertex " + std::to_string(i) + " of polygon " +
                                                    std::to_string(p) + " is not in free space");
      g.nodes.push_back({static_cast<int>(g.nodes.size()), refined[i], static_cast<int>(p), static_cast<int>(i)});
    }
    ring_span.push_back({first, refined.size()});
  }

  const std::size_t m = g.nodes.size();
  g.adjacency.assign(m * m, -1.0);  // -1 marks impassable until big is known
  g.paths.assign(m * m, {});
  for (std::size_t i = 0; i < m; ++i) g.cost(i, i) = 0.0;

  const DistanceField from_start(grid, start);
  for (std::size_t i = 1; i < m; ++i)
    if (!from_start.reachable(g.nodes[i].position))
      throw Error(ErrorKind::DisconnectedWorld, "node " + std::to_string(i) + " is unreachable from the start");

  std::vector<std::unique_ptr<DistanceField>> fields(m);
  auto route = [&](std::size_t i, std::size_t j) -> Polyline {
    const Vec2 a = g.nodes[i].position, b = g.nodes[j].position;
    if (segment_clear(grid, a, b)) return {a, b};
    if (!fields[i]) fields[i] = std::make_unique<DistanceField>(grid, a);
    Polyline p = fields[i]->path_to(b);
    if (p.empty()) throw Error(ErrorKind::DisconnectedWorld, "no route between nodes");
    return p;
  };
  auto set_both = [&](std::size_t i, std::size_t j, Polyline p) {
    const double len = polyline_length(p);
    g.cost(i, j) = g.cost(j, i) = len;
    g.paths[j * m + i] = Polyline(p.rbegin(), p.rend());
    g.paths[i * m + j] = std::move(p);
  };

  // Ring edges, forward direction only.
  for (const auto& [first, count] : ring_span)
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = first + k, j = first + (k + 1) % count;
      Polyline p = route(i, j);
      g.cost(i, j) = polyline_length(p);
      g.paths[i * m + j] = std::move(p);
    }

  // Start and cross-ring pairs in both directions.
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const auto& a = g.nodes[i];
      const auto& b = g.nodes[j];
      if (a.polygon_id && b.polygon_id && *a.polygon_id == *b.polygon_id) continue;
      set_both(i, j, route(i, j));
    }

  double finite = 0.0;
  for (double c : g.adjacency)
    if (c > 0.0) finite += c;
  g.big = 1.0 + finite;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (g.cost(i, j) < 0.0) g.cost(i, j) = g.big;
  return g;
}

void attach_paths(const CoverageGraph& graph, Tour& tour) {
  tour.segment_paths.clear();
  if (graph.paths.empty()) return;
  // Ring successor per node; leaving a ring first drives its closing edge
  // back to the entry so every side gets seen.
  std::vector<int> ring_next(graph.size(), -1);
  std::map<int, std::vector<int>> rings;
  for (const auto& n : graph.nodes)
    if (n.polygon_id) rings[*n.polygon_id].push_back(n.id);
  for (auto& [poly, members] : rings) {
    std::sort(members.begin(), members.end(),
              [&](int a, int b) { return graph.nodes[a].ring_index < graph.nodes[b].ring_index; });
    if (members.size() < 2) continue;
    for (std::size_t i = 0; i < members.size(); ++i) ring_next[members[i]] = members[(i + 1) % members.size()];
  }
  auto same_ring = [&](int a, int b) {
    return graph.nodes[a].polygon_id && graph.nodes[b].polygon_id &&
           *graph.nodes[a].polygon_id == *graph.nodes[b].polygon_id;
  };
  for (std::size_t k = 1; k < tour.order.size(); ++k) {
    const int a = tour.order[k - 1], b = tour.order[k];
    if (a == b) {
      tour.segment_paths.push_back({graph.nodes[a].position});
      continue;
    }
    const int closing = ring_next[a];
    if (closing < 0 || same_ring(a, b) || !graph.passable(a, closing)) {
      tour.segment_paths.push_back(*graph.path(a, b));
      continue;
    }
    Polyline p = *graph.path(a, closing);
    if (closing != b) {
      const Polyline& rest = *graph.path(closing, b);
      p.insert(p.end(), rest.begin() + 1, rest.end());
    }
    tour.segment_paths.push_back(std::move(p));
  }
}

CoveragePlan plan_coverage(const OccupancyGrid& grid, const CoverageParams& params, Vec2 start) {
  const BinaryGrid passable = binarize(grid, params.threshold);
  const BinaryGrid opened = morph_open(passable, params.open_radius);
  const double epsilon = params.epsilon.value_or(2.0 * grid.info.resolution);

  CoveragePlan plan;
  for (const Contour& contour : extract_contours(opened)) {
    Polygon2D obstacle = orient_clockwise(simplify_contour(contour, opened, epsilon));
    Polygon2D ring = offset_polygon(obstacle, params.offset, passable);
    if (params.camera_side == CameraSide::Left) {
      std::reverse(ring.vertices.begin(), ring.vertices.end());
      ring.clockwise = false;
    }
    plan.obstacles.push_back(std::move(obstacle));
    plan.rings.push_back(std::move(ring));
  }

  plan.graph = build_graph(plan.rings, start, passable);
  plan.tour = plan.graph.size() <= params.exact_limit ? solve_tsp_exact(plan.graph)
                                                      : solve_tsp_heuristic(plan.graph, params.seed);
  return plan;
}

}  // namespace vsrnav
