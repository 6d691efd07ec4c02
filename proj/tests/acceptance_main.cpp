// Acceptance gate: eight end-to-end criteria, one pass/fail line each.
// Usage: acceptance_tests --cli <path-to-maxmarg-binary>
//
// Every tolerance is pinned here, next to the check that uses it.  The binary
// exits 0 only if all criteria pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "maxmarg/bounds.hpp"
#include "maxmarg/dp.hpp"
#include "maxmarg/experiments.hpp"
#include "maxmarg/fixtures.hpp"
#include "maxmarg/oracle.hpp"
#include "maxmarg/search.hpp"

using namespace maxmarg;

namespace {

std::string g_cli;  // path to the command-line binary, from --cli

// Collects failure details; empty means the criterion passed.
class Failures {
 public:
  void add(const std::string& msg) {
    ++count_;
    if (count_ <= 5) text_ += "        " + msg + "\n";
  }
  bool any() const { return count_ > 0; }
  std::string summary() const {
    if (count_ == 0) return {};
    std::string out = text_;
    if (count_ > 5) out += "        ... and " + std::to_string(count_ - 5) + " more\n";
    return out;
  }

 private:
  int count_ = 0;
  std::string text_;
};

std::string fmt_path(const std::vector<int>& p) {
  std::string s;
  for (int v : p) s += std::to_string(v);
  return s;
}

SearchConfig exact_config(const std::string& bounds) {
  SearchConfig cfg;
  cfg.bounds = BoundConfig::parse(bounds);
  cfg.traversal = Traversal::Bfs;
  cfg.early_stop.enabled = false;
  cfg.report_all_optima = true;
  return cfg;
}

NodeBounds eval_node(CompositeBounds& bounds, const PairChain& chain, const AlphaState& node,
                     const std::vector<int>& prefix) {
  const int wlen = std::min(node.k, bounds.window_symbols());
  const long code = testutil::window_code_of(prefix, chain.card_x, wlen);
  return bounds.evaluate(node, code, wlen);
}

// ---- criterion 1: exact search vs exhaustive enumeration ----------------------

std::string exact_vs_oracle() {
  const std::vector<std::string> configs = {
      "simple", "samuelson", "ps:r=2",  "ps:r=3", "ps:r=5",
      "sms:m=1", "sms:m=2",  "simple,mviterbi:m=2", "ux"};
  Failures fails;
  for (int i = 0; i < 200; ++i) {
    const int n = 4 + i % 7;
    const int cx = 2 + i % 2;
    const int cu = 2 + (i / 2) % 2;
    PairChain chain = testutil::random_chain(1 + static_cast<std::uint64_t>(i), n, cx, cu, 2, 1.0);
    OracleReport oracle = exhaustive_dc(chain);
    for (const std::string& cfg : configs) {
      SearchReport rep = branch_and_bound(chain, exact_config(cfg));
      std::ostringstream where;
      where << "chain " << i << " (n=" << n << " cx=" << cx << " cu=" << cu << ") config " << cfg;
      if (rep.status != SearchStatus::Exact)
        fails.add(where.str() + ": not exact");
      else if (!log_close(rep.optimum, oracle.optimum, 1e-9))
        fails.add(where.str() + ": optimum off by " +
                  std::to_string(rep.optimum - oracle.optimum));
      else if (rep.argmax_paths != oracle.argmax_paths)
        fails.add(where.str() + ": argmax sets differ (" +
                  std::to_string(rep.argmax_paths.size()) + " vs " +
                  std::to_string(oracle.argmax_paths.size()) + ")");
    }
  }
  return fails.summary();
}

// ---- criterion 2: every bound interval contains the suffix maximum ------------

std::string bounds_contain_suffix_max() {
  const std::vector<std::string> configs = {
      "simple",   "ps:r=2",  "ps:r=3",  "ps-alt:r=3",
      "samuelson", "sms:m=1", "sms:m=3", "simple,mviterbi:m=1",
      "simple,mviterbi:m=3", "ux"};
  Failures fails;
  for (int i = 0; i < 100; ++i) {
    const int n = 10;
    PairChain chain = testutil::random_chain(1000 + static_cast<std::uint64_t>(i), n);
    SuffixMass suffix = suffix_mass(chain);
    std::vector<LogWeight> leaf(std::size_t(1) << n);
    {
      std::size_t idx = 0;
      for (const auto& pm : testutil::all_paths(chain)) leaf[idx++] = pm.second;
    }
    std::vector<std::unique_ptr<CompositeBounds>> evals;
    for (const std::string& cfg : configs)
      evals.push_back(std::make_unique<CompositeBounds>(chain, suffix, BoundConfig::parse(cfg)));
    testutil::walk_nodes(chain, suffix, [&](const AlphaState& node,
                                            const std::vector<int>& prefix) {
      const std::size_t width = std::size_t(1) << (n - node.k);
      const std::size_t base =
          static_cast<std::size_t>(testutil::window_code_of(prefix, 2, node.k)) * width;
      LogWeight pstar = kLogZero;
      for (std::size_t j = 0; j < width; ++j) pstar = std::max(pstar, leaf[base + j]);
      for (std::size_t c = 0; c < evals.size(); ++c) {
        NodeBounds nb = eval_node(*evals[c], chain, node, prefix);
        if (nb.upper < pstar - 1e-9 || nb.lower > pstar + 1e-9) {
          std::ostringstream msg;
          msg << "chain " << i << " config " << configs[c] << " node " << fmt_path(prefix)
              << ": [" << nb.lower << ", " << nb.upper << "] misses " << pstar;
          fails.add(msg.str());
        }
      }
    });
  }
  return fails.summary();
}

// ---- criterion 3: the two power-sum recursions agree with enumeration ---------

std::string power_sum_equivalence() {
  Failures fails;
  for (int i = 0; i < 50; ++i) {
    const int n = 3 + i % 4;
    const int cu = 2 + i % 2;
    PairChain chain = testutil::random_chain(3000 + static_cast<std::uint64_t>(i), n, 2, cu);
    SuffixMass suffix = suffix_mass(chain);
    for (int r : {1, 2, 3, 5}) {
      PsTables ps = ps_prepare(chain, suffix, r, {});
      CountPsTables cps = count_ps_prepare(chain, r, {});
      testutil::walk_nodes(chain, suffix, [&](const AlphaState& node,
                                              const std::vector<int>& prefix) {
        const LogWeight a = ps_log_power_sum(ps, chain, node);
        const LogWeight b = count_ps_log_power_sum(cps, chain, node);
        const LogWeight o = power_sum_oracle(chain, prefix, r);
        std::ostringstream where;
        where << "chain " << i << " r=" << r << " node " << fmt_path(prefix);
        if (r == 1 && a != node.prefix_mass)
          fails.add(where.str() + ": first power sum not bitwise equal to the prefix mass");
        if (r == 1 && !log_close(b, node.prefix_mass, 1e-12))
          fails.add(where.str() + ": count recursion off the prefix mass");
        if (!log_close(a, b, 1e-8)) fails.add(where.str() + ": recursions disagree");
        if (!log_close(a, o, 1e-8)) fails.add(where.str() + ": enumeration disagrees");
      });
    }
  }
  return fails.summary();
}

// ---- criterion 4: fixture manifests reproduce ----------------------------------

std::string fixture_manifests() {
  Failures fails;
  auto expect = [&](bool ok, const std::string& msg) {
    if (!ok) fails.add(msg);
  };

  {
    FixtureChain d1 = fixture_by_name("d1:n=4");
    OracleReport rep = exhaustive_dc(d1.chain);
    expect(log_close(rep.optimum, std::log(0.25), 1e-12), "d1: optimum is not log 1/4");
    expect(rep.argmax_paths == d1.expected_optima, "d1: argmax set mismatch");
    expect(rep.argmax_paths.size() == 4, "d1: expected 4 tied optima");
    SuffixMass s = suffix_mass(d1.chain);
    expect(is_log_zero(mviterbi_prepare(d1.chain, s, 1, {}).root_mass),
           "d1: order-1 greedy path should be impossible");
    expect(log_close(mviterbi_prepare(d1.chain, s, 2, {}).root_mass, std::log(0.25), 1e-12),
           "d1: order-2 greedy path should carry mass 1/4");
  }
  {
    FixtureChain d2 = fixture_by_name("d2:p=0.7,n=10");
    OracleReport rep = exhaustive_dc(d2.chain);
    expect(log_close(rep.optimum, std::log(0.3), 1e-12), "d2: optimum is not log 0.3");
    SuffixMass s = suffix_mass(d2.chain);
    expect(log_close(mviterbi_prepare(d2.chain, s, 1, {}).root_mass, 10.0 * std::log(0.7), 1e-12),
           "d2: order-1 greedy path should freeze all-ones");
    JointPath jp = joint_viterbi(d2.chain);
    expect(log_close(path_mass(d2.chain, jp.x), std::log(0.3), 1e-12),
           "d2: joint-argmax path should carry mass 0.3");
    expect(log_close(path_mass(d2.chain, jp.x), d2.expected_log.at("ux_mass"), 1e-12),
           "d2: joint-argmax mass disagrees with the manifest");
  }
  {
    FixtureChain d3 = fixture_by_name("d3:eps=0.1");
    SuffixMass s = suffix_mass(d3.chain);
    expect(log_close(mviterbi_prepare(d3.chain, s, 0, {}).root_mass, std::log(1.1 / 6.1), 1e-12),
           "d3: order-0 greedy mass should be 1.1/6.1");
    MViterbiTables t1 = mviterbi_prepare(d3.chain, s, 1, {});
    expect(log_close(t1.root_mass, std::log(1.0 / 6.1), 1e-12),
           "d3: order-1 greedy mass should be 1/6.1");
    for (int code = 0; code < 8; ++code) {
      std::vector<int> path = {(code >> 2) & 1, (code >> 1) & 1, code & 1};
      const std::string key = "q:" + fmt_path(path);
      if (!log_close(mviterbi_q_value(t1, path), d3.expected_log.at(key), 1e-12))
        fails.add("d3: factorization value mismatch at " + key);
    }
  }
  {
    FixtureChain demo = demo_chain();
    OracleReport rep = exhaustive_dc(demo.chain);
    expect(log_close(rep.optimum, demo.expected_optimum, 1e-12), "demo: optimum mismatch");
    expect(rep.nodes_processed == 14, "demo: exhaustive sweep should touch 14 nodes");
    expect(dc_node_count(3, 2) == 14, "demo: closed-form node count should be 14");
  }
  return fails.summary();
}

// ---- criterion 5: visited-node benchmark lands in the reference bands ----------

std::string node_benchmark_bands() {
  ExperimentSpec spec = node_benchmark_defaults();  // 200 models, n=25, seed 1
  NodeBenchmarkResult res = run_node_benchmark(spec);
  const std::vector<double> target = {18.4, 14.1, 11.5, 9.1, 15.1, 13.4, 16.5, 6.2, 6.1};
  Failures fails;
  if (res.summary.size() != target.size()) return "        unexpected summary shape\n";
  for (std::size_t c = 0; c < target.size(); ++c) {
    const NodeBenchmarkSummary& s = res.summary[c];
    std::ostringstream msg;
    msg << s.config << ": log2 mean visited " << s.log2_mean_nodes << " vs reference "
        << target[c];
    if (s.models != spec.models)
      fails.add(s.config + ": only " + std::to_string(s.models) + " models succeeded");
    else if (std::abs(s.log2_mean_nodes - target[c]) > 1.5)
      fails.add(msg.str() + " (band 1.5)");
  }
  // ordering facts: no pruning guide beats the plain subtree mass, and adding
  // the greedy-completion floor helps each counterpart
  for (std::size_t c = 1; c < res.summary.size(); ++c)
    if (res.summary[0].log2_mean_nodes < res.summary[c].log2_mean_nodes - 1e-9)
      fails.add("plain subtree-mass pruning should visit the most nodes, but " +
                res.summary[c].config + " visited more");
  const std::vector<std::pair<std::size_t, std::size_t>> pairs = {{6, 0}, {7, 3}, {8, 5}};
  for (auto [with, without] : pairs)
    if (res.summary[with].log2_mean_nodes >= res.summary[without].log2_mean_nodes)
      fails.add(res.summary[with].config + " should beat " + res.summary[without].config);
  return fails.summary();
}

// ---- criterion 6: estimator-distance benchmark lands in the reference bands ----

std::string estimator_benchmark_bands() {
  ExperimentSpec spec = estimator_benchmark_defaults();  // 100 models, n=100, seed 1
  EstimatorBenchmarkResult res = run_estimator_benchmark(spec);
  Failures fails;
  if (res.summary.size() != 7) return "        unexpected summary shape\n";
  for (const EstimatorBenchmarkSummary& s : res.summary)
    if (s.models != spec.models)
      fails.add(s.estimator + ": only " + std::to_string(s.models) + " models succeeded");
  auto band = [&](std::size_t idx, double center, double tol) {
    const EstimatorBenchmarkSummary& s = res.summary[idx];
    if (std::abs(s.mean_dist_lower - center) > tol) {
      std::ostringstream msg;
      msg << s.estimator << ": mean lower distance " << s.mean_dist_lower << " vs reference "
          << center << " (band " << tol << ")";
      fails.add(msg.str());
    }
  };
  band(0, 6.6, 1.5);  // order-0 greedy
  band(6, 2.5, 1.5);  // joint-argmax path
  for (std::size_t idx : {3, 4, 5})
    if (std::abs(res.summary[idx].mean_dist_lower) > 0.2)
      fails.add(res.summary[idx].estimator + ": mean lower distance " +
                std::to_string(res.summary[idx].mean_dist_lower) + " should be within 0.2 of 0");
  return fails.summary();
}

// ---- criterion 7: structural invariants ----------------------------------------

std::string structural_invariants() {
  Failures fails;

  // (a) a full conditioning window makes the greedy decode exact
  for (int n = 4; n <= 8; ++n) {
    PairChain chain = testutil::random_chain(7000 + static_cast<std::uint64_t>(n), n);
    SuffixMass suffix = suffix_mass(chain);
    MViterbiTables t = mviterbi_prepare(chain, suffix, n - 1, {});
    OracleReport rep = exhaustive_dc(chain);
    if (!log_close(t.root_mass, rep.optimum, 1e-9))
      fails.add("full-window greedy missed the optimum at n=" + std::to_string(n));
    if (std::find(rep.argmax_paths.begin(), rep.argmax_paths.end(), t.root_path) ==
        rep.argmax_paths.end())
      fails.add("full-window greedy path is not an argmax at n=" + std::to_string(n));
  }

  // (b) with a single regime the block relaxation and the joint-argmax floor
  // are exact at every node
  {
    PairChain chain = testutil::random_chain(7100, 8, 2, 1);
    SuffixMass suffix = suffix_mass(chain);
    CompositeBounds ux(chain, suffix, BoundConfig::parse("ux"));
    for (int m : {1, 2}) {
      SmsTables t = sms_prepare(chain, m, {});
      std::vector<std::optional<std::vector<double>>> memo(chain.n + 1);
      testutil::walk_nodes(chain, suffix, [&](const AlphaState& node,
                                              const std::vector<int>& prefix) {
        const LogWeight pstar = suffix_max_oracle(chain, prefix);
        if (!log_close(sms_upper(t, chain, node, memo), pstar, 1e-9))
          fails.add("single-regime block relaxation not exact at node " + fmt_path(prefix) +
                    " (m=" + std::to_string(m) + ")");
        if (m == 1) {
          NodeBounds nb = eval_node(ux, chain, node, prefix);
          if (!log_close(nb.lower, pstar, 1e-9))
            fails.add("single-regime joint-argmax floor not exact at node " + fmt_path(prefix));
        }
      });
    }
  }

  // (c) higher power-sum orders only tighten the interval
  {
    PairChain chain = testutil::random_chain(7200, 6);
    SuffixMass suffix = suffix_mass(chain);
    std::vector<std::unique_ptr<CompositeBounds>> by_r;
    for (int r = 1; r <= 5; ++r)
      by_r.push_back(std::make_unique<CompositeBounds>(
          chain, suffix, BoundConfig::parse("ps:r=" + std::to_string(r))));
    testutil::walk_nodes(chain, suffix, [&](const AlphaState& node,
                                            const std::vector<int>& prefix) {
      NodeBounds prev = eval_node(*by_r[0], chain, node, prefix);
      for (std::size_t i = 1; i < by_r.size(); ++i) {
        NodeBounds cur = eval_node(*by_r[i], chain, node, prefix);
        if (cur.upper > prev.upper + 1e-9 || cur.lower < prev.lower - 1e-9)
          fails.add("power-sum interval widened between r=" + std::to_string(i) + " and r=" +
                    std::to_string(i + 1) + " at node " + fmt_path(prefix));
        prev = cur;
      }
    });
  }

  // (d) adding a constant to the log weights shifts values, not decisions
  {
    const double c = 3.7;
    PairChain chain = testutil::random_chain(7300, 6, 2, 3);
    PairChain shifted = testutil::shifted_chain(chain, c);
    for (const char* cfg : {"ps:r=2,mviterbi:m=1", "samuelson,sms:m=2,ux"}) {
      SearchConfig sc = exact_config(cfg);
      sc.record_trace = true;
      SearchReport a = branch_and_bound(chain, sc);
      SearchReport b = branch_and_bound(shifted, sc);
      if (!log_close(b.optimum, a.optimum + c, 1e-9))
        fails.add(std::string(cfg) + ": optimum did not shift by the constant");
      if (a.argmax_paths != b.argmax_paths)
        fails.add(std::string(cfg) + ": argmax set changed under the shift");
      if (a.trace != b.trace)
        fails.add(std::string(cfg) + ": visit sequence changed under the shift");
      SuffixMass sa = suffix_mass(chain);
      SuffixMass sb = suffix_mass(shifted);
      CompositeBounds ba(chain, sa, BoundConfig::parse(cfg));
      CompositeBounds bb(shifted, sb, BoundConfig::parse(cfg));
      NodeBounds ra = ba.evaluate(root_state(chain, sa), 0, 0);
      NodeBounds rb = bb.evaluate(root_state(shifted, sb), 0, 0);
      if (!log_close(rb.upper, ra.upper + c, 1e-9) || !log_close(rb.lower, ra.lower + c, 1e-9))
        fails.add(std::string(cfg) + ": root bounds did not shift by the constant");
    }
  }
  return fails.summary();
}

// ---- criterion 8: command-line runs are byte-deterministic ---------------------

std::optional<std::string> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string cli_determinism() {
  if (g_cli.empty()) return "        --cli <path> was not provided\n";
  Failures fails;
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "maxmarg_acceptance";
  std::error_code ec;
  fs::create_directories(dir, ec);
  auto run = [&](const std::string& args, const fs::path& out) -> bool {
    std::string cmd =
        "\"" + g_cli + "\" " + args + " --out \"" + out.string() + "\" > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  struct Job {
    const char* label;
    std::string args;
  };
  for (const Job& job : {Job{"table3", "table3 --models 6 --n 12 --seed 9"},
                         Job{"table4", "table4 --models 4 --n 30 --seed 9"}}) {
    fs::path f1 = dir / (std::string(job.label) + "_a.csv");
    fs::path f2 = dir / (std::string(job.label) + "_b.csv");
    fs::path f3 = dir / (std::string(job.label) + "_c.csv");
    if (!run(job.args + " --threads 2", f1) || !run(job.args + " --threads 2", f2) ||
        !run(job.args + " --threads 4", f3)) {
      fails.add(std::string(job.label) + ": command failed");
      continue;
    }
    auto a = read_file(f1), b = read_file(f2), c = read_file(f3);
    if (!a || !b || !c) {
      fails.add(std::string(job.label) + ": output file missing");
      continue;
    }
    if (*a != *b) fails.add(std::string(job.label) + ": two identical runs differ");
    if (*a != *c) fails.add(std::string(job.label) + ": thread count changed the bytes");
    if (a->find("row,") == std::string::npos)
      fails.add(std::string(job.label) + ": output has no header row");
  }
  return fails.summary();
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) g_cli = argv[++i];
  }

  struct Criterion {
    const char* name;
    std::function<std::string()> run;
  };
  const std::vector<Criterion> criteria = {
      {"exact search matches exhaustive enumeration", exact_vs_oracle},
      {"bound intervals contain the suffix maximum at every node", bounds_contain_suffix_max},
      {"power-sum recursions agree with each other and enumeration", power_sum_equivalence},
      {"fixture manifests reproduce", fixture_manifests},
      {"visited-node benchmark lands in the reference bands", node_benchmark_bands},
      {"estimator-distance benchmark lands in the reference bands", estimator_benchmark_bands},
      {"structural invariants hold", structural_invariants},
      {"command-line runs are byte-deterministic", cli_determinism},
  };

  int passed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    try {
      detail = criteria[i].run();
    } catch (const std::exception& e) {
      detail = "        unhandled exception: " + std::string(e.what()) + "\n";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(1);
    line << (detail.empty() ? "[PASS] " : "[FAIL] ") << (i + 1) << ". " << criteria[i].name
         << " (" << secs << "s)";
    std::cout << line.str() << "\n" << detail;
    if (detail.empty()) ++passed;
  }
  std::cout << "acceptance: " << passed << "/" << criteria.size() << " criteria passed\n";
  return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
