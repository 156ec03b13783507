#include "vsrnav/tsp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>

#include "vsrnav/error.hpp"

namespace vsrnav {

double tour_cost(const CoverageGraph& graph, std::span<const int> order) {
  double total = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) total += graph.cost(order[i - 1], order[i]);
  return total;
}

bool tour_feasible(const CoverageGraph& graph, std::span<const int> order) {
  for (std::size_t i = 1; i < order.size(); ++i)
    if (!graph.passable(order[i - 1], order[i])) return false;
  return true;
}

namespace {

// Rings as visiting groups, members in ring order. Nodes whose polygon does
// not form a complete ring are groups of their own. Node 0 (the start)
// belongs to none.
struct Rings {
  std::vector<int> group;  // per node, -1 for the start
  std::vector<int> next;   // ring successor (itself for singletons)
  std::vector<std::vector<int>> members;
};

Rings find_rings(const CoverageGraph& graph) {
  Rings r;
  r.group.assign(graph.size(), -1);
  r.next.assign(graph.size(), -1);
  std::map<int, std::vector<int>> by_polygon;
  std::vector<int> loose;
  for (std::size_t v = 1; v < graph.size(); ++v) {
    const auto& n = graph.nodes[v];
    if (n.polygon_id)
      by_polygon[*n.polygon_id].push_back(static_cast<int>(v));
    else
      loose.push_back(static_cast<int>(v));
  }
  auto add_group = [&](std::vector<int> members) {
    const int id = static_cast<int>(r.members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
      r.group[members[i]] = id;
      r.next[members[i]] = members[(i + 1) % members.size()];
    }
    r.members.push_back(std::move(members));
  };
  for (auto& [poly, members] : by_polygon) {
    std::sort(members.begin(), members.end(),
              [&](int a, int b) { return graph.nodes[a].ring_index < graph.nodes[b].ring_index; });
    bool complete = true;
    for (std::size_t i = 0; i < members.size(); ++i)
      if (graph.nodes[members[i]].ring_index != static_cast<int>(i)) complete = false;
    if (complete) {
      add_group(members);
    } else {
      for (int v : members) add_group({v});
    }
  }
  for (int v : loose) add_group({v});
  return r;
}

}  // namespace

bool ring_order_respected(const CoverageGraph& graph, std::span<const int> order) {
  const Rings rings = find_rings(graph);
  std::vector<char> started(rings.members.size(), 0);
  int open = -1;          // group being encircled
  std::size_t left = 0;   // members of it still to visit
  int prev = 0;
  for (std::size_t k = 1; k + 1 < order.size(); ++k) {
    const int v = order[k];
    if (v <= 0 || static_cast<std::size_t>(v) >= graph.size()) return false;
    const int g = rings.group[v];
    if (open >= 0) {
      if (v != rings.next[prev]) return false;
    } else {
      if (started[g]) return false;
      started[g] = 1;
      open = g;
      left = rings.members[g].size();
    }
    if (--left == 0) open = -1;
    prev = v;
  }
  return open < 0;
}

namespace {

Tour finish(const CoverageGraph& graph, std::vector<int> order) {
  Tour t;
  t.order = std::move(order);
  t.total_cost = tour_cost(graph, t.order);
  if (!tour_feasible(graph, t.order))
    throw Error(ErrorKind::Infeasible, "every tour uses an impassable edge");
  if (!ring_order_respected(graph, t.order))
    throw Error(ErrorKind::Infeasible, "tour does not encircle every ring in order");
  attach_paths(graph, t);
  return t;
}

}  // namespace

Tour solve_tsp_exact(const CoverageGraph& graph) {
  const std::size_t n = graph.size();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "graph has no nodes");
  if (n > kExactSolverLimit)
    throw Error(ErrorKind::TooLarge, "exact solver handles at most " + std::to_string(kExactSolverLimit) +
                                         " nodes, got " + std::to_string(n));
  if (n == 1) return finish(graph, {0, 0});

  // rest[S][j]: cheapest path from node j+1 through every node in S (bit b is
  // node b+1), ending at the start. Only defined for j not in S.
  const std::size_t k = n - 1;
  const std::size_t subsets = std::size_t{1} << k;

  // Bit masks over nodes 1..n-1: each node's ring and its ring successor.
  const Rings rings = find_rings(graph);
  std::vector<std::size_t> ring_mask(k, 0), next_bit(k, 0);
  for (std::size_t a = 0; a < k; ++a) {
    next_bit[a] = std::size_t{1} << (rings.next[a + 1] - 1);
    for (int member : rings.members[rings.group[a + 1]]) ring_mask[a] |= std::size_t{1} << (member - 1);
  }
  // May node m+1 follow node `from` once `visited` is done? A started ring
  // must be finished in order before anything else is entered.
  auto allowed = [&](std::size_t visited, std::size_t from, std::size_t m) {
    if (from != 0 && (visited & ring_mask[from - 1]) != ring_mask[from - 1]) return next_bit[from - 1] == (std::size_t{1} << m);
    return (visited & ring_mask[m]) == 0;
  };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> rest(subsets * k, inf);
  auto at = [&](std::size_t s, std::size_t j) -> double& { return rest[s * k + j]; };

  for (std::size_t j = 0; j < k; ++j) at(0, j) = graph.cost(j + 1, 0);
  for (std::size_t s = 1; s < subsets; ++s) {
    for (std::size_t j = 0; j < k; ++j) {
      if (s & (std::size_t{1} << j)) continue;
      double best = inf;
      for (std::size_t m = 0; m < k; ++m) {
        const std::size_t bit = std::size_t{1} << m;
        if (!(s & bit) || !allowed((subsets - 1) ^ s, j + 1, m)) continue;
        best = std::min(best, graph.cost(j + 1, m + 1) + at(s ^ bit, m));
      }
      at(s, j) = best;
    }
  }

  const std::size_t full = subsets - 1;
  double optimum = inf;
  for (std::size_t m = 0; m < k; ++m)
    optimum = std::min(optimum, graph.cost(0, m + 1) + at(full ^ (std::size_t{1} << m), m));
  const double tol = 1e-9 * std::max(1.0, std::abs(optimum));

  // Walk forward taking the smallest node id that still completes an
  // optimal tour; this yields the lexicographically smallest optimum.
  std::vector<int> order{0};
  std::size_t remaining = full;
  std::size_t current = 0;
  double target = optimum;
  while (remaining) {
    bool advanced = false;
    for (std::size_t m = 0; m < k; ++m) {
      const std::size_t bit = std::size_t{1} << m;
      if (!(remaining & bit) || !allowed(full ^ remaining, current, m)) continue;
      const double tail = at(remaining ^ bit, m);
      if (graph.cost(current, m + 1) + tail <= target + tol) {
        order.push_back(static_cast<int>(m + 1));
        remaining ^= bit;
        current = m + 1;
        target = tail;
        advanced = true;
        break;
      }
    }
    if (!advanced) throw Error(ErrorKind::Infeasible, "tour reconstruction failed");
  }
  order.push_back(0);
  return finish(graph, std::move(order));
}

namespace {

// A tour is a sequence of blocks; each block walks one ring once, entering at
// `entry` and leaving from the member before it.
struct Block {
  int group = 0;
  int entry = 0;
};

class BlockTour {
 public:
  BlockTour(const CoverageGraph& g, const Rings& r) : g_(g), r_(r) {
    for (const auto& members : r.members) {
      const std::size_t n = members.size();
      std::vector<double> cost(n, 0.0);
      for (std::size_t e = 0; e < n; ++e)
        for (std::size_t i = 0; i + 1 < n; ++i) cost[e] += g.cost(members[(e + i) % n], members[(e + i + 1) % n]);
      inner_.push_back(std::move(cost));
    }
  }

  int first(const Block& b) const { return r_.members[b.group][b.entry]; }
  int last(const Block& b) const {
    const auto& m = r_.members[b.group];
    return m[(b.entry + m.size() - 1) % m.size()];
  }
  double inner(const Block& b) const { return inner_[b.group][b.entry]; }
  std::size_t ring_size(int group) const { return r_.members[group].size(); }

  double cost(const std::vector<Block>& seq) const {
    double total = 0.0;
    int prev = 0;
    for (const Block& b : seq) {
      total += g_.cost(prev, first(b)) + inner(b);
      prev = last(b);
    }
    return total + g_.cost(prev, 0);
  }

  std::vector<int> expand(const std::vector<Block>& seq) const {
    std::vector<int> order{0};
    for (const Block& b : seq) {
      const auto& m = r_.members[b.group];
      for (std::size_t i = 0; i < m.size(); ++i) order.push_back(m[(b.entry + i) % m.size()]);
    }
    order.push_back(0);
    return order;
  }

  // Node ending the block before position i / starting the block at i.
  int tail_before(const std::vector<Block>& seq, long i) const { return i <= 0 ? 0 : last(seq[i - 1]); }
  int head_at(const std::vector<Block>& seq, long i) const {
    return i >= static_cast<long>(seq.size()) ? 0 : first(seq[i]);
  }

  // Best-improvement descent over two moves: relocating 1-3 consecutive
  // blocks elsewhere (no reversal) and re-entering one ring at another member.
  void descend(std::vector<Block>& seq) const {
    const double scale = std::max(1.0, cost(seq));
    const long n = static_cast<long>(seq.size());
    while (true) {
      double best_delta = -1e-12 * scale;
      int kind = 0;
      long best_i = 0, best_len = 0, best_edge = 0;
      int best_entry = 0;
      for (long len = 1; len <= 3 && len < n; ++len)
        for (long i = 0; i + len <= n; ++i) {
          const int a = first(seq[i]), b = last(seq[i + len - 1]);
          const int prev = tail_before(seq, i), next = head_at(seq, i + len);
          const double removed = g_.cost(prev, a) + g_.cost(b, next) - g_.cost(prev, next);
          for (long e = -1; e < n; ++e) {
            if (e >= i - 1 && e <= i + len - 1) continue;
            const int u = tail_before(seq, e + 1), v = head_at(seq, e + 1);
            const double delta = g_.cost(u, a) + g_.cost(b, v) - g_.cost(u, v) - removed;
            if (delta < best_delta) {
              best_delta = delta;
              kind = 1;
              best_i = i;
              best_len = len;
              best_edge = e;
            }
          }
        }
      for (long i = 0; i < n; ++i) {
        const int prev = tail_before(seq, i), next = head_at(seq, i + 1);
        const double now = g_.cost(prev, first(seq[i])) + inner(seq[i]) + g_.cost(last(seq[i]), next);
        for (std::size_t e = 0; e < ring_size(seq[i].group); ++e) {
          const Block alt{seq[i].group, static_cast<int>(e)};
          const double delta = g_.cost(prev, first(alt)) + inner(alt) + g_.cost(last(alt), next) - now;
          if (delta < best_delta) {
            best_delta = delta;
            kind = 2;
            best_i = i;
            best_entry = static_cast<int>(e);
          }
        }
      }
      if (kind == 0) return;
      if (kind == 1)
        relocate(seq, static_cast<std::size_t>(best_i), static_cast<std::size_t>(best_len), best_edge);
      else
        seq[best_i].entry = best_entry;
    }
  }

  // Moves seq[i, i+len) so it follows original position `edge` (-1: the start).
  static void relocate(std::vector<Block>& seq, std::size_t i, std::size_t len, long edge) {
    std::vector<Block> segment(seq.begin() + i, seq.begin() + i + len);
    std::vector<Block> out;
    out.reserve(seq.size());
    if (edge < 0) out.insert(out.end(), segment.begin(), segment.end());
    for (std::size_t p = 0; p < seq.size(); ++p) {
      if (p >= i && p < i + len) continue;
      out.push_back(seq[p]);
      if (static_cast<long>(p) == edge) out.insert(out.end(), segment.begin(), segment.end());
    }
    seq = std::move(out);
  }

  // Greedy construction: repeatedly enter the nearest unvisited ring, at the
  // member minimizing the entry cost, optionally plus the walk around it.
  std::vector<Block> nearest(bool count_inner) const {
    std::vector<char> done(r_.members.size(), 0);
    std::vector<Block> seq;
    int cur = 0;
    for (std::size_t step = 0; step < r_.members.size(); ++step) {
      Block best{-1, 0};
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t grp = 0; grp < r_.members.size(); ++grp) {
        if (done[grp]) continue;
        for (std::size_t e = 0; e < r_.members[grp].size(); ++e) {
          const Block b{static_cast<int>(grp), static_cast<int>(e)};
          const double c = g_.cost(cur, first(b)) + (count_inner ? inner(b) : 0.0);
          if (c < best_cost) {
            best_cost = c;
            best = b;
          }
        }
      }
      done[best.group] = 1;
      seq.push_back(best);
      cur = last(best);
    }
    return seq;
  }

 private:
  const CoverageGraph& g_;
  const Rings& r_;
  std::vector<std::vector<double>> inner_;
};

}  // namespace

Tour solve_tsp_heuristic(const CoverageGraph& graph, std::uint64_t seed) {
  const std::size_t n = graph.size();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "graph has no nodes");
  if (n == 1) return finish(graph, {0, 0});

  const Rings rings = find_rings(graph);
  const BlockTour bt(graph, rings);
  std::vector<Block> best = bt.nearest(false);
  {
    std::vector<Block> alt = bt.nearest(true);
    if (bt.cost(alt) < bt.cost(best)) best = std::move(alt);
  }
  bt.descend(best);
  double best_cost = bt.cost(best);

  // Perturbation rounds: a few random moves, then descend again; only strict
  // improvements are kept.
  std::mt19937_64 rng(seed);
  auto below = [&](std::size_t bound) { return static_cast<std::size_t>(rng() % bound); };
  const std::size_t m = best.size();
  const int rounds = m < 2 ? 0 : static_cast<int>(std::min<std::size_t>(40 + 4 * m, 300));
  for (int r = 0; r < rounds; ++r) {
    std::vector<Block> trial = best;
    for (int kick = 0; kick < 3; ++kick) {
      if (rng() % 2 == 0) {
        Block& b = trial[below(m)];
        b.entry = static_cast<int>(below(bt.ring_size(b.group)));
        continue;
      }
      const std::size_t len = 1 + below(std::min<std::size_t>(3, m - 1));
      const std::size_t i = below(m - len + 1);
      const long edge = static_cast<long>(below(m + 1)) - 1;
      if (edge >= static_cast<long>(i) - 1 && edge <= static_cast<long>(i + len) - 1) continue;
      BlockTour::relocate(trial, i, len, edge);
    }
    bt.descend(trial);
    const double c = bt.cost(trial);
    if (c < best_cost - 1e-12 * std::max(1.0, best_cost)) {
      best = std::move(trial);
      best_cost = c;
    }
  }
  return finish(graph, bt.expand(best));
}

}  // namespace vsrnav
