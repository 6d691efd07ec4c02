#include "maxmarg/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace maxmarg {

namespace {

void check_budget(int positions, int card_x, const OracleBudget& budget, const char* what) {
  double log2_paths = positions * std::log2(static_cast<double>(card_x));
  if (log2_paths > std::log2(static_cast<double>(budget.max_paths)) + 1e-9)
    throw BudgetError(std::string(what) + ": enumeration exceeds the path budget");
}

void collect_tied(std::vector<std::pair<std::vector<int>, LogWeight>>& candidates,
                  LogWeight optimum, double tie_tol, OracleReport& out) {
  for (auto& [path, w] : candidates)
    if (w >= optimum - tie_tol) out.argmax_paths.push_back(std::move(path));
  std::sort(out.argmax_paths.begin(), out.argmax_paths.end());
}

}  // namespace

OracleReport exhaustive_naive(const PairChain& chain, double tie_tol, OracleBudget budget) {
  check_budget(chain.n, chain.card_x, budget, "exhaustive_naive");
  OracleReport rep;
  std::vector<int> path(chain.n, 0);
  std::vector<std::pair<std::vector<int>, LogWeight>> candidates;
  for (;;) {
    ++rep.nodes_processed;
    LogWeight w = path_mass(chain, path);
    rep.optimum = std::max(rep.optimum, w);
    if (!is_log_zero(w) && w >= rep.optimum - tie_tol) {
      candidates.emplace_back(path, w);
      if (candidates.size() > 4096) {
        std::erase_if(candidates,
                      [&](const auto& c) { return c.second < rep.optimum - tie_tol; });
      }
    }
    // Odometer increment, most significant digit first.
    int i = chain.n - 1;
    while (i >= 0 && path[i] == chain.card_x - 1) path[i--] = 0;
    if (i < 0) break;
    ++path[i];
  }
  std::erase_if(candidates, [&](const auto& c) { return c.second < rep.optimum - tie_tol; });
  collect_tied(candidates, rep.optimum, tie_tol, rep);
  if (is_log_zero(rep.optimum)) rep.argmax_paths.clear();
  return rep;
}

namespace {

struct DcSweep {
  const PairChain& chain;
  const SuffixMass& suffix;
  double tie_tol;
  OracleReport rep;
  std::vector<int> path;
  std::vector<std::pair<std::vector<int>, LogWeight>> candidates;

  void visit(const AlphaState& state) {
    for (int x = 0; x < chain.card_x; ++x) {
      AlphaState child = extend(state, x, chain, suffix);
      ++rep.nodes_processed;
      path.push_back(x);
      if (child.k == chain.n) {
        LogWeight w = child.prefix_mass;
        if (w > rep.optimum) rep.optimum = w;
        if (!is_log_zero(w) && w >= rep.optimum - tie_tol) {
          candidates.emplace_back(path, w);
          if (candidates.size() > 4096)
            std::erase_if(candidates,
                          [&](const auto& c) { return c.second < rep.optimum - tie_tol; });
        }
      } else {
        visit(child);
      }
      path.pop_back();
    }
  }
};

}  // namespace

OracleReport exhaustive_dc(const PairChain& chain, double tie_tol, OracleBudget budget) {
  check_budget(chain.n, chain.card_x, budget, "exhaustive_dc");
  SuffixMass suffix = suffix_mass(chain);
  DcSweep sweep{chain, suffix, tie_tol, {}, {}, {}};
  AlphaState root = root_state(chain, suffix);
  sweep.visit(root);
  std::erase_if(sweep.candidates,
                [&](const auto& c) { return c.second < sweep.rep.optimum - tie_tol; });
  collect_tied(sweep.candidates, sweep.rep.optimum, tie_tol, sweep.rep);
  if (is_log_zero(sweep.rep.optimum)) sweep.rep.argmax_paths.clear();
  return sweep.rep;
}

std::uint64_t dc_node_count(int n, int card_x) {
  std::uint64_t total = 0, layer = 1;
  for (int k = 1; k <= n; ++k) {
    layer *= static_cast<std::uint64_t>(card_x);
    total += layer;
  }
  return total;
}

LogWeight suffix_max_oracle(const PairChain& chain, std::span<const int> prefix,
                            OracleBudget budget) {
  const int k = static_cast<int>(prefix.size());
  if (k > chain.n) throw std::invalid_argument("suffix_max_oracle: prefix longer than chain");
  check_budget(chain.n - k, chain.card_x, budget, "suffix_max_oracle");
  std::vector<int> path(prefix.begin(), prefix.end());
  path.resize(chain.n, 0);
  if (k == chain.n) return path_mass(chain, path);
  LogWeight best = kLogZero;
  for (;;) {
    best = std::max(best, path_mass(chain, path));
    int i = chain.n - 1;
    while (i >= k && path[i] == chain.card_x - 1) path[i--] = 0;
    if (i < k) break;
    ++path[i];
  }
  return best;
}

LogWeight power_sum_oracle(const PairChain& chain, std::span<const int> prefix, int r,
                           OracleBudget budget) {
  if (r < 1) throw std::invalid_argument("power_sum_oracle: r must be at least 1");
  const int k = static_cast<int>(prefix.size());
  if (k > chain.n) throw std::invalid_argument("power_sum_oracle: prefix longer than chain");
  check_budget(chain.n - k, chain.card_x, budget, "power_sum_oracle");
  std::vector<int> path(prefix.begin(), prefix.end());
  path.resize(chain.n, 0);
  if (k == chain.n) return log_pow(path_mass(chain, path), r);
  LseAcc acc;
  for (;;) {
    acc.add(log_pow(path_mass(chain, path), r));
    int i = chain.n - 1;
    while (i >= k && path[i] == chain.card_x - 1) path[i--] = 0;
    if (i < k) break;
    ++path[i];
  }
  return acc.value();
}

}  // namespace maxmarg
