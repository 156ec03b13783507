#pragma once

#include <cstdint>
#include <span>

#include "vsrnav/coverage.hpp"

namespace vsrnav {

inline constexpr std::size_t kExactSolverLimit = 16;

double tour_cost(const CoverageGraph& graph, std::span<const int> order);

/// True when no step of the order uses an impassable (big) edge.
bool tour_feasible(const CoverageGraph& graph, std::span<const int> order);

/// True when every ring is encircled in one go: once a ring is entered at any
/// member, the following steps walk its remaining members in ring order
/// before anything else is visited. Both solvers only return such orders.
bool ring_order_respected(const CoverageGraph& graph, std::span<const int> order);

/// Held-Karp over subsets. Among optimal tours (costs within a relative 1e-9)
/// the lexicographically smallest order is returned.
/// Throws TooLarge for M > 16 and Infeasible when every tour needs a big edge.
Tour solve_tsp_exact(const CoverageGraph& graph);

/// Nearest-neighbor construction over rings (two variants, cheaper kept),
/// then descent with Or-opt moves of 1-3 whole rings plus re-choosing a
/// ring's entry member, then seeded perturbation rounds that re-run the
/// descent and keep strict improvements. Nothing is ever reversed, so
/// asymmetric costs stay valid.
Tour solve_tsp_heuristic(const CoverageGraph& graph, std::uint64_t seed);

}  // namespace vsrnav
