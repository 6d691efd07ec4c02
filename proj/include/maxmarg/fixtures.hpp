#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "maxmarg/model.hpp"

namespace maxmarg {

// A chain with analytically known quantities.  expected_log holds named
// log-scale values derived from the construction parameters; tests re-derive
// each one through the engine.
struct FixtureChain {
  std::string name;
  PairChain chain;
  LogWeight expected_optimum = kLogZero;
  std::vector<std::vector<int>> expected_optima;  // lexicographic order
  std::map<std::string, double> expected_log;
};

// Builds a normalized chain realizing an explicit path distribution by
// encoding the full history into u.  card_u = card_x^(n-1).  Paths absent
// from the table carry probability zero.
PairChain chain_from_path_table(
    int n, int card_x, const std::vector<std::pair<std::vector<int>, double>>& table);

// Uniform distribution over the n binary sequences with exactly one zero;
// u tracks the zero position, card_u = n.
FixtureChain single_zero_process(int n);

// Left-to-right switching regime: all-ones has mass p^n, a single zero at
// position i has mass p^(i-1)(1-p), everything else is impossible.
FixtureChain switching_chain(double p, int n);

// Length-3 process whose six possible outcomes 111,100,101,001,011,010 have
// odds (1+eps):1:1:1:1:1.
FixtureChain odds_process(double eps);

// Small three-step chain with hand-picked leaf masses, used to pin down
// search semantics (prefix masses 0.7575/0.2425, optimum 0.2887 at 000).
FixtureChain demo_chain();

// Parses "d1:n=4", "d2:p=0.7,n=10", "d3:eps=0.1", or "demo".
FixtureChain fixture_by_name(const std::string& spec);

}  // namespace maxmarg
