#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "maxmarg/bounds.hpp"
#include "maxmarg/dp.hpp"
#include "maxmarg/model.hpp"

namespace maxmarg {

enum class Traversal { Bfs, Dfs, Best };

// The search stops (reporting an interval instead of a certificate) when the
// frontier — the pending layer for breadth-first, the open list otherwise —
// outgrows max_frontier_nodes, or when the visited-node count passes
// max_total_nodes.
struct EarlyStop {
  std::size_t max_frontier_nodes = 400000;
  std::size_t max_total_nodes = 2000000;
  bool enabled = true;
};

struct SearchConfig {
  BoundConfig bounds = BoundConfig::parse("simple");
  Traversal traversal = Traversal::Bfs;
  // A node is pruned only when its upper bound falls below the incumbent by
  // more than this, so ties survive to the leaves.
  double tie_tolerance = 1e-9;
  EarlyStop early_stop;
  bool report_all_optima = true;  // otherwise keep the first best leaf only
  bool record_trace = false;      // collect visited prefixes (tests)
  ResourceBudget budget;
};

enum class SearchStatus { Exact, EarlyStopped };

struct SearchReport {
  SearchStatus status = SearchStatus::Exact;
  // Exact: optimum == optimum_lower == optimum_upper.  EarlyStopped: the
  // optimum lies in [optimum_lower, optimum_upper] and `optimum` repeats the
  // lower end (best value proven reachable).
  LogWeight optimum = kLogZero;
  LogWeight optimum_lower = kLogZero;
  LogWeight optimum_upper = kLogZero;
  // All maximizers within tie_tolerance of the optimum, lexicographically
  // sorted (trustworthy only when status == Exact).
  std::vector<std::vector<int>> argmax_paths;
  // Best concrete path seen, with its true mass (may trail optimum_lower when
  // a value-only bound supplied the final lower end).
  std::vector<int> incumbent_path;
  LogWeight incumbent_mass = kLogZero;
  // Visited = evaluated and not pruned; the root is not counted.
  std::size_t nodes_total = 0;
  std::vector<std::size_t> nodes_per_layer;  // index k-1 for layers 1..n
  // upper_wins[i]: visited nodes whose binding upper bound came from spec i.
  // lower_wins[i]: incumbent improvements credited to spec i.
  std::vector<std::size_t> upper_wins;
  std::vector<std::size_t> lower_wins;
  std::vector<std::vector<int>> trace;  // visited prefixes in visit order
};

// Exact maximizer of the path mass over all length-n symbol paths, by
// branch-and-bound over the prefix tree.
SearchReport branch_and_bound(const PairChain& chain, const SearchConfig& config);

// Same, with caller-prepared tables and a caller-owned bound evaluator.
SearchReport branch_and_bound(const PairChain& chain, const SuffixMass& suffix,
                              BoundEvaluator& bounds, const SearchConfig& config);

}  // namespace maxmarg
