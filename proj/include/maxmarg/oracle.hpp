#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "maxmarg/dp.hpp"
#include "maxmarg/model.hpp"

namespace maxmarg {

struct OracleBudget {
  std::uint64_t max_paths = std::uint64_t{1} << 20;
};

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleReport {
  LogWeight optimum = kLogZero;
  std::vector<std::vector<int>> argmax_paths;  // lexicographic order
  std::uint64_t nodes_processed = 0;
};

// Enumerates all card_x^n paths in lexicographic order and evaluates each one
// with the backward path_mass kernel.
OracleReport exhaustive_naive(const PairChain& chain, double tie_tol = 1e-9,
                              OracleBudget budget = {});

// Depth-first sweep over the prefix tree reusing the forward alpha state;
// nodes_processed counts every tree node below the root.
OracleReport exhaustive_dc(const PairChain& chain, double tie_tol = 1e-9,
                           OracleBudget budget = {});

// Closed-form node count of the exhaustive_dc sweep.
std::uint64_t dc_node_count(int n, int card_x);

// Exact max over all continuations of the given prefix: max_{x_{k+1:n}} p(x_{1:n}).
LogWeight suffix_max_oracle(const PairChain& chain, std::span<const int> prefix,
                            OracleBudget budget = {});

// Exact power sum over continuations: log sum_{x_{k+1:n}} p(x_{1:n})^r.
LogWeight power_sum_oracle(const PairChain& chain, std::span<const int> prefix, int r,
                           OracleBudget budget = {});

}  // namespace maxmarg
