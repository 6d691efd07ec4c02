#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "maxmarg/dp.hpp"
#include "maxmarg/model.hpp"

namespace testutil {

using namespace maxmarg;

// Samples a triplet model, simulates n steps, and conditions on the simulated
// observations.  The standard way tests obtain a generic chain.
inline PairChain random_chain(std::uint64_t seed, int n, int cx = 2, int cu = 2, int cy = 2,
                              double alpha = 1.0) {
  Rng rng(seed);
  TripletModel model = sample_tmm(cx, cu, cy, alpha, rng);
  Trajectory traj = simulate(model, n, rng);
  return condition_on_observations(model, traj.y);
}

// All card_x^n paths in lexicographic order with their log masses.
inline std::vector<std::pair<std::vector<int>, LogWeight>> all_paths(const PairChain& chain) {
  std::vector<std::pair<std::vector<int>, LogWeight>> out;
  std::vector<int> path(chain.n, 0);
  for (;;) {
    out.emplace_back(path, path_mass(chain, path));
    int t = chain.n - 1;
    while (t >= 0 && path[t] == chain.card_x - 1) path[t--] = 0;
    if (t < 0) break;
    ++path[t];
  }
  return out;
}

// Depth-first visit of every prefix-tree node (the root included); fn
// receives the forward state and the prefix symbols.
template <typename Fn>
void walk_nodes(const PairChain& chain, const SuffixMass& suffix, Fn&& fn) {
  std::vector<int> path;
  auto rec = [&](auto&& self, const AlphaState& node) -> void {
    fn(node, path);
    if (node.k == chain.n) return;
    for (int sym = 0; sym < chain.card_x; ++sym) {
      path.push_back(sym);
      self(self, extend(node, sym, chain, suffix));
      path.pop_back();
    }
  };
  rec(rec, root_state(chain, suffix));
}

// Most-significant-first code of the last `width` symbols of the prefix,
// matching what the search feeds to BoundEvaluator::evaluate.
inline long window_code_of(const std::vector<int>& path, int card_x, int width) {
  const int len = std::min<int>(static_cast<int>(path.size()), width);
  long code = 0;
  for (std::size_t i = path.size() - len; i < path.size(); ++i)
    code = code * card_x + path[i];
  return code;
}

inline PairChain shifted_chain(PairChain chain, double c) {
  for (LogWeight& w : chain.initial_weight)
    if (!is_log_zero(w)) w += c;
  return chain;
}

}  // namespace testutil
