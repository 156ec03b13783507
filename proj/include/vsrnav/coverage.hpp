#pragma once

// Coverage graph over offset obstacle polygons and the closed tour that
// encircles every obstacle with the side camera facing it.

#include <cstdint>
#include <optional>
#include <vector>

#include "vsrnav/gridmap.hpp"

namespace vsrnav {

struct CoverageNode {
  int id = 0;
  Vec2 position;
  std::optional<int> polygon_id;  // nullopt for the start node
  int ring_index = 0;
};

/// Directed travel costs between nodes. Node 0 is the start. Entries equal to
/// `big` mark impassable directions; big = 1 + sum of all finite costs.
struct CoverageGraph {
  std::vector<CoverageNode> nodes;
  std::vector<double> adjacency;  // row-major M x M
  double big = 1.0;
  // Collision-free route per ordered pair (empty for impassable pairs), may
  // be left empty entirely for synthetic graphs.
  std::vector<Polyline> paths;

  std::size_t size() const { return nodes.size(); }
  double cost(std::size_t i, std::size_t j) const { return adjacency[i * nodes.size() + j]; }
  double& cost(std::size_t i, std::size_t j) { return adjacency[i * nodes.size() + j]; }
  bool passable(std::size_t i, std::size_t j) const { return cost(i, j) < big; }
  const Polyline* path(std::size_t i, std::size_t j) const {
    if (paths.empty()) return nullptr;
    return &paths[i * nodes.size() + j];
  }
};

struct Tour {
  std::vector<int> order;  // starts and ends at node 0
  double total_cost = 0.0;
  std::vector<Polyline> segment_paths;
};

enum class CameraSide { Right, Left };

struct CoverageParams {
  std::uint8_t threshold = 128;
  int open_radius = 2;                // cells
  std::optional<double> epsilon;      // meters; default 2 x resolution
  double offset = 0.3;                // meters of standoff from the boundary
  CameraSide camera_side = CameraSide::Right;
  std::size_t exact_limit = 16;       // largest M handed to the exact solver
  std::uint64_t seed = 1;
};

/// Everything plan_coverage derived along the way, for inspection and export.
struct CoveragePlan {
  std::vector<Polygon2D> obstacles;  // simplified, clockwise
  std::vector<Polygon2D> rings;      // offset rings in traversal order
  CoverageGraph graph;
  Tour tour;
};

/// Miter offset of every vertex along its angle-bisector normal. Vertices
/// landing outside free space move to the nearest free cell center within
/// 4 x delta of the displaced point; the rest are dropped. Throws
/// OffsetInfeasible when fewer than 3 vertices remain.
Polygon2D offset_polygon(const Polygon2D& poly, double delta, const BinaryGrid& grid);

/// Nodes are the start followed by each ring's vertices in the given order.
/// Ring edges whose straight segment is blocked are split at (relocated)
/// midpoints, falling back to a grid route. Throws DisconnectedWorld when a
/// node cannot be reached from the start.
CoverageGraph build_graph(const std::vector<Polygon2D>& rings, Vec2 start, const BinaryGrid& grid);

/// Fills order-matching segment paths from the graph's stored routes. The
/// step leaving a ring starts with that ring's closing edge (last member back
/// to the entry), so the robot drives all the way around; total_cost is
/// still the plain adjacency sum.
void attach_paths(const CoverageGraph& graph, Tour& tour);

CoveragePlan plan_coverage(const OccupancyGrid& grid, const CoverageParams& params, Vec2 start);

}  // namespace vsrnav
