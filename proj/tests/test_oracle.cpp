#include <algorithm>
#include <vector>

#include <doctest.h>

#include "helpers.hpp"
#include "maxmarg/fixtures.hpp"
#include "maxmarg/oracle.hpp"

using namespace maxmarg;

TEST_CASE("naive and divide-and-conquer sweeps agree") {
  for (std::uint64_t seed : {1u, 7u, 21u}) {
    for (int n : {3, 5, 6}) {
      PairChain chain = testutil::random_chain(seed, n, 2, 2);
      OracleReport a = exhaustive_naive(chain);
      OracleReport b = exhaustive_dc(chain);
      CHECK(log_close(a.optimum, b.optimum, 1e-12));
      CHECK(a.argmax_paths == b.argmax_paths);
    }
  }
}

TEST_CASE("oracle optimum matches direct enumeration") {
  PairChain chain = testutil::random_chain(33, 6, 2, 3);
  auto paths = testutil::all_paths(chain);
  LogWeight best = kLogZero;
  for (const auto& [path, mass] : paths) best = std::max(best, mass);
  OracleReport rep = exhaustive_dc(chain);
  CHECK(log_close(rep.optimum, best, 1e-12));
  REQUIRE(rep.argmax_paths.size() >= 1);
  for (const auto& path : rep.argmax_paths)
    CHECK(log_close(path_mass(chain, path), best, 1e-9));
  CHECK(std::is_sorted(rep.argmax_paths.begin(), rep.argmax_paths.end()));
}

TEST_CASE("node counts follow the closed form") {
  CHECK(dc_node_count(3, 2) == 14);
  CHECK(dc_node_count(4, 2) == 30);
  CHECK(dc_node_count(2, 3) == 12);
  FixtureChain fx = demo_chain();
  OracleReport rep = exhaustive_dc(fx.chain);
  CHECK(rep.nodes_processed == 14);
  OracleReport naive = exhaustive_naive(fx.chain);
  CHECK(naive.nodes_processed == 8);  // one per complete path
}

TEST_CASE("budgets refuse oversized enumerations") {
  PairChain chain = testutil::random_chain(2, 12, 2, 2);
  OracleBudget tiny;
  tiny.max_paths = 100;
  CHECK_THROWS_AS(exhaustive_naive(chain, 1e-9, tiny), BudgetError);
  CHECK_THROWS_AS(exhaustive_dc(chain, 1e-9, tiny), BudgetError);
  std::vector<int> empty_prefix;
  CHECK_THROWS_AS(suffix_max_oracle(chain, empty_prefix, tiny), BudgetError);
}

TEST_CASE("suffix max oracle agrees with enumeration at every node") {
  PairChain chain = testutil::random_chain(9, 5, 2, 2);
  SuffixMass suffix = suffix_mass(chain);
  auto paths = testutil::all_paths(chain);
  testutil::walk_nodes(chain, suffix, [&](const AlphaState&, const std::vector<int>& prefix) {
    LogWeight best = kLogZero;
    for (const auto& [path, mass] : paths)
      if (std::equal(prefix.begin(), prefix.end(), path.begin())) best = std::max(best, mass);
    CHECK(log_close(suffix_max_oracle(chain, prefix), best, 1e-12));
  });
}

TEST_CASE("power sum oracle reduces to prefix mass at r=1") {
  PairChain chain = testutil::random_chain(14, 5, 2, 3);
  SuffixMass suffix = suffix_mass(chain);
  testutil::walk_nodes(chain, suffix, [&](const AlphaState& node, const std::vector<int>& prefix) {
    CHECK(log_close(power_sum_oracle(chain, prefix, 1), node.prefix_mass, 1e-9));
  });
}

TEST_CASE("power sum oracle matches manual squares") {
  PairChain chain = testutil::random_chain(15, 4, 2, 2);
  auto paths = testutil::all_paths(chain);
  LseAcc sq;
  for (const auto& [path, mass] : paths) sq.add(log_pow(mass, 2));
  std::vector<int> empty_prefix;
  CHECK(log_close(power_sum_oracle(chain, empty_prefix, 2), sq.value(), 1e-12));

  // a fixed one-symbol prefix
  std::vector<int> prefix = {1};
  LseAcc sq1;
  for (const auto& [path, mass] : paths)
    if (path[0] == 1) sq1.add(log_pow(mass, 2));
  CHECK(log_close(power_sum_oracle(chain, prefix, 2), sq1.value(), 1e-12));
  CHECK_THROWS_AS(power_sum_oracle(chain, prefix, 0), std::invalid_argument);
}

TEST_CASE("complete prefixes evaluate to their own mass") {
  PairChain chain = testutil::random_chain(16, 4, 2, 2);
  std::vector<int> full = {0, 1, 1, 0};
  CHECK(log_close(suffix_max_oracle(chain, full), path_mass(chain, full), 1e-12));
  CHECK(log_close(power_sum_oracle(chain, full, 3), log_pow(path_mass(chain, full), 3), 1e-12));
}
