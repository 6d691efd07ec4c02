#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "maxmarg/logdomain.hpp"
#include "maxmarg/model.hpp"

namespace maxmarg {

// Total weight of all continuations after position t, conditional on the state
// at t: m[t](x, u) = log sum over (x, u)_{t+1:n} of the remaining factors.
// m[n] is identically log 1.
struct SuffixMass {
  int n = 0, card_x = 0, card_u = 0;
  std::vector<std::vector<LogWeight>> m;  // index t = 1..n, tensor (x*card_u + u)

  LogWeight at(int t, int x, int u) const { return m[t][x * card_u + u]; }
};

// Backward joint maximum: delta[t](x, u) = log max over (x, u)_{t+1:n} of the
// remaining factors, with argmax successor links for path reconstruction.
struct JointMaxTable {
  int n = 0, card_x = 0, card_u = 0;
  std::vector<std::vector<LogWeight>> delta;  // t = 1..n
  std::vector<std::vector<std::int32_t>> arg; // t = 1..n-1, packed successor x*card_u + u

  LogWeight at(int t, int x, int u) const { return delta[t][x * card_u + u]; }
};

// Forward state of a fixed prefix x_{1:k}: alpha(u) = log p(x_{1:k}, u_k) and
// prefix_mass = log p(x_{1:k}) obtained by folding alpha against SuffixMass.
// k = 0 encodes the root (empty prefix, alpha unused).
struct AlphaState {
  int k = 0;
  int last_x = -1;
  std::vector<LogWeight> alpha;
  LogWeight prefix_mass = kLogZero;
};

SuffixMass suffix_mass(const PairChain& chain);
JointMaxTable joint_max_table(const PairChain& chain);
std::pair<SuffixMass, JointMaxTable> suffix_tables(const PairChain& chain);

AlphaState root_state(const PairChain& chain, const SuffixMass& suffix);
AlphaState extend(const AlphaState& state, int next_x, const PairChain& chain,
                  const SuffixMass& suffix);

// Allocation-free core of extend() for search loops: writes the child alpha
// into out_alpha (size card_u) and returns the child prefix mass.
LogWeight extend_into(std::span<const LogWeight> alpha, int k, int last_x, int next_x,
                      const PairChain& chain, const SuffixMass& suffix,
                      std::span<LogWeight> out_alpha);

LogWeight path_mass(const PairChain& chain, std::span<const int> x);
LogWeight total_mass(const PairChain& chain);

struct JointPath {
  std::vector<int> x, u;
  LogWeight weight = kLogZero;
};
// Argmax over joint (x, u) paths; ties resolved toward the lexicographically
// smallest interleaved (x_t, u_t) sequence.
JointPath joint_viterbi(const PairChain& chain);

struct PmapResult {
  std::vector<int> path;
  // log_marginals[t-1][x] = log p(x_t = x | factors), normalized per position.
  std::vector<std::vector<double>> log_marginals;
};
PmapResult pmap_path(const PairChain& chain);

}  // namespace maxmarg
