// Command line front end: sample models, decode chains, run the exhaustive
// oracles, and drive the two benchmark studies.
#include <charconv>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "maxmarg/bounds.hpp"
#include "maxmarg/dp.hpp"
#include "maxmarg/experiments.hpp"
#include "maxmarg/fixtures.hpp"
#include "maxmarg/model.hpp"
#include "maxmarg/oracle.hpp"
#include "maxmarg/search.hpp"

namespace {

using namespace maxmarg;

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join_path(const std::vector<int>& path) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(path[i]);
  }
  return out;
}

std::string join_counts(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(v[i]);
  }
  return out;
}

// Labels per-bound win tallies with the grammar name of each configured bound.
std::string join_wins(const std::vector<std::size_t>& wins, const BoundConfig& config) {
  std::string out;
  for (std::size_t i = 0; i < wins.size() && i < config.specs.size(); ++i) {
    if (wins[i] == 0) continue;
    BoundConfig one;
    one.specs = {config.specs[i]};
    if (!out.empty()) out += ';';
    out += one.to_string() + ":" + std::to_string(wins[i]);
  }
  return out.empty() ? "-" : out;
}

// A positional input names either a chain JSON file on disk or a fixture
// ("d1:n=4", "d2:p=0.7,n=10", "d3:eps=0.1", "demo").
PairChain resolve_chain(const std::string& input, std::string& label) {
  if (std::filesystem::exists(input)) {
    label = input;
    return load_chain_json(input);
  }
  FixtureChain fixture = fixture_by_name(input);
  label = fixture.name;
  return std::move(fixture.chain);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct SearchFlags {
  std::string bounds = "simple";
  std::string traversal = "bfs";
  std::size_t layer_limit = 0;
  std::size_t total_limit = 0;
  bool no_early_stop = false;
  bool all_optima = true;

  void attach(CLI::App* cmd) {
    cmd->add_option("--bounds", bounds, "bound configuration, e.g. simple,ps:r=5,mviterbi:m=2");
    cmd->add_option("--traversal", traversal, "bfs, dfs, or best")
        ->check(CLI::IsMember({"bfs", "dfs", "best"}));
    cmd->add_option("--early-stop-layer", layer_limit, "stop once a layer holds this many nodes");
    cmd->add_option("--early-stop-total", total_limit, "stop once this many nodes were visited");
    cmd->add_flag("--no-early-stop", no_early_stop, "run to completion regardless of size");
    cmd->add_flag("--all-optima,!--no-all-optima", all_optima,
                  "collect every tied optimal path (default on)");
  }

  SearchConfig to_config() const {
    SearchConfig cfg;
    cfg.bounds = BoundConfig::parse(bounds);
    if (traversal == "dfs")
      cfg.traversal = Traversal::Dfs;
    else if (traversal == "best")
      cfg.traversal = Traversal::Best;
    if (layer_limit > 0) cfg.early_stop.max_frontier_nodes = layer_limit;
    if (total_limit > 0) cfg.early_stop.max_total_nodes = total_limit;
    cfg.early_stop.enabled = !no_early_stop;
    cfg.report_all_optima = all_optima;
    return cfg;
  }
};

int cmd_sample(int card_x, int card_u, int card_y, double alpha, std::uint64_t seed, int n,
               const std::string& model_out, const std::string& obs_out,
               const std::string& chain_out) {
  Rng rng(seed);
  TripletModel model = sample_tmm(card_x, card_u, card_y, alpha, rng);
  Trajectory traj = simulate(model, n, rng);
  PairChain chain = condition_on_observations(model, traj.y);
  ChainDiagnostics diag = validate(chain);
  if (!diag.ok) {
    for (const std::string& issue : diag.issues) std::fprintf(stderr, "invalid chain: %s\n", issue.c_str());
    return 2;
  }
  save_tmm_json(model, model_out);
  save_observations(traj.y, obs_out);
  save_chain_json(chain, chain_out);
  std::printf("model: %s\n", model_out.c_str());
  std::printf("observations: %s\n", obs_out.c_str());
  std::printf("chain: %s\n", chain_out.c_str());
  for (const std::string& warning : diag.warnings)
    std::printf("warning: %s\n", warning.c_str());
  return 0;
}

int cmd_decode(const std::string& input, const SearchFlags& flags, const std::string& out_path) {
  std::string label;
  PairChain chain = resolve_chain(input, label);
  SearchConfig cfg = flags.to_config();
  SearchReport rep = branch_and_bound(chain, cfg);

  std::string text;
  text += "chain: " + label + " n=" + std::to_string(chain.n) +
          " card_x=" + std::to_string(chain.card_x) + " card_u=" + std::to_string(chain.card_u) +
          "\n";
  text += "bounds: " + cfg.bounds.to_string() + "\n";
  text += "traversal: " + flags.traversal + "\n";
  text += std::string("status: ") +
          (rep.status == SearchStatus::Exact ? "exact" : "early_stopped") + "\n";
  text += "log_optimum: " + fmt(rep.optimum) + "\n";
  text += "log_optimum_normalized: " + fmt(rep.optimum - chain.log_norm) + "\n";
  if (rep.status == SearchStatus::EarlyStopped) {
    text += "optimum_lower: " + fmt(rep.optimum_lower) + "\n";
    text += "optimum_upper: " + fmt(rep.optimum_upper) + "\n";
  }
  text += "argmax_count: " + std::to_string(rep.argmax_paths.size()) + "\n";
  for (const std::vector<int>& path : rep.argmax_paths) text += "argmax: " + join_path(path) + "\n";
  if (!rep.incumbent_path.empty())
    text += "incumbent: " + join_path(rep.incumbent_path) + " mass " + fmt(rep.incumbent_mass) +
            "\n";
  text += "nodes_total: " + std::to_string(rep.nodes_total) + "\n";
  text += "nodes_per_layer: " + join_counts(rep.nodes_per_layer) + "\n";
  text += "upper_wins: " + join_wins(rep.upper_wins, cfg.bounds) + "\n";
  text += "lower_wins: " + join_wins(rep.lower_wins, cfg.bounds) + "\n";
  std::fputs(text.c_str(), stdout);
  if (!out_path.empty()) write_text(out_path, text);
  return 0;
}

int cmd_oracle(const std::string& input, const std::string& mode, std::uint64_t max_paths) {
  std::string label;
  PairChain chain = resolve_chain(input, label);
  OracleBudget budget;
  if (max_paths > 0) budget.max_paths = max_paths;
  OracleReport rep =
      mode == "naive" ? exhaustive_naive(chain, 1e-9, budget) : exhaustive_dc(chain, 1e-9, budget);
  std::printf("chain: %s\n", label.c_str());
  std::printf("mode: %s\n", mode.c_str());
  std::printf("log_optimum: %s\n", fmt(rep.optimum).c_str());
  std::printf("log_optimum_normalized: %s\n", fmt(rep.optimum - chain.log_norm).c_str());
  std::printf("argmax_count: %zu\n", rep.argmax_paths.size());
  for (const std::vector<int>& path : rep.argmax_paths)
    std::printf("argmax: %s\n", join_path(path).c_str());
  std::printf("nodes_processed: %llu\n", static_cast<unsigned long long>(rep.nodes_processed));
  return 0;
}

void emit_csv(const std::string& csv, const std::string& out_path) {
  if (out_path.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_text(out_path, csv);
    std::printf("wrote %s\n", out_path.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact and approximate decoders for pairwise Markov chains"};
  app.require_subcommand(1);

  // --- sample ---------------------------------------------------------
  auto* sample = app.add_subcommand("sample", "sample a model, simulate, and condition");
  int s_cx = 2, s_cu = 2, s_cy = 2, s_n = 25;
  double s_alpha = 1.0;
  std::uint64_t s_seed = 1;
  std::string s_model = "model.json", s_obs = "observations.txt", s_chain = "chain.json";
  sample->add_option("--cx", s_cx, "x alphabet size")->check(CLI::PositiveNumber);
  sample->add_option("--cu", s_cu, "u alphabet size")->check(CLI::PositiveNumber);
  sample->add_option("--cy", s_cy, "observation alphabet size")->check(CLI::PositiveNumber);
  sample->add_option("--alpha", s_alpha, "Dirichlet concentration")->check(CLI::PositiveNumber);
  sample->add_option("--seed", s_seed, "random seed");
  sample->add_option("--n", s_n, "chain length")->check(CLI::PositiveNumber);
  sample->add_option("--out-model", s_model, "model JSON path");
  sample->add_option("--out-obs", s_obs, "observation file path");
  sample->add_option("--out-chain", s_chain, "conditioned chain JSON path");

  // --- decode ---------------------------------------------------------
  auto* decode = app.add_subcommand("decode", "branch-and-bound decode a chain or fixture");
  std::string d_input, d_out;
  SearchFlags d_flags;
  decode->add_option("input", d_input, "chain JSON path or fixture name (d1:n=4, demo, ...)")
      ->required();
  d_flags.attach(decode);
  decode->add_option("--out", d_out, "also write the report to this file");

  // --- oracle ---------------------------------------------------------
  auto* oracle = app.add_subcommand("oracle", "exhaustive search over all paths");
  std::string o_input, o_mode = "dc";
  std::uint64_t o_max_paths = 0;
  oracle->add_option("input", o_input, "chain JSON path or fixture name")->required();
  oracle->add_option("--mode", o_mode, "naive or dc")->check(CLI::IsMember({"naive", "dc"}));
  oracle->add_option("--max-paths", o_max_paths, "path budget (0 = default)");

  // --- benchmarks ------------------------------------------------------
  auto attach_spec = [](CLI::App* cmd, ExperimentSpec& spec, std::vector<std::string>& bounds,
                        std::string& out) {
    cmd->add_option("--models", spec.models, "number of sampled models")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--n", spec.n, "chain length")->check(CLI::PositiveNumber);
    cmd->add_option("--cx", spec.card_x)->check(CLI::PositiveNumber);
    cmd->add_option("--cu", spec.card_u)->check(CLI::PositiveNumber);
    cmd->add_option("--cy", spec.card_y)->check(CLI::PositiveNumber);
    cmd->add_option("--alpha", spec.alpha)->check(CLI::PositiveNumber);
    cmd->add_option("--seed", spec.seed);
    cmd->add_option("--threads", spec.threads, "worker threads (0 = all cores)");
    cmd->add_option("--bounds", bounds, "bound configuration (repeatable)");
    cmd->add_option("--out", out, "CSV output path (default: stdout)");
    return cmd;
  };

  auto* table3 = app.add_subcommand("table3", "visited-node benchmark across bound configs");
  ExperimentSpec t3 = node_benchmark_defaults();
  std::vector<std::string> t3_bounds;
  std::string t3_out;
  std::size_t t3_layer = 0, t3_total = 0;
  attach_spec(table3, t3, t3_bounds, t3_out);
  table3->add_option("--early-stop-layer", t3_layer, "enable early stop at this layer size");
  table3->add_option("--early-stop-total", t3_total, "enable early stop at this node total");

  auto* table4 = app.add_subcommand("table4", "approximation-quality benchmark");
  ExperimentSpec t4 = estimator_benchmark_defaults();
  std::vector<std::string> t4_bounds;
  std::string t4_out;
  std::size_t t4_layer = 0, t4_total = 0;
  attach_spec(table4, t4, t4_bounds, t4_out);
  table4->add_option("--early-stop-layer", t4_layer, "layer-size stop threshold");
  table4->add_option("--early-stop-total", t4_total, "node-total stop threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sample->parsed())
      return cmd_sample(s_cx, s_cu, s_cy, s_alpha, s_seed, s_n, s_model, s_obs, s_chain);
    if (decode->parsed()) return cmd_decode(d_input, d_flags, d_out);
    if (oracle->parsed()) return cmd_oracle(o_input, o_mode, o_max_paths);
    if (table3->parsed()) {
      if (!t3_bounds.empty()) t3.bound_configs = t3_bounds;
      if (t3_layer > 0) {
        t3.early_stop.max_frontier_nodes = t3_layer;
        t3.early_stop.enabled = true;
      }
      if (t3_total > 0) {
        t3.early_stop.max_total_nodes = t3_total;
        t3.early_stop.enabled = true;
      }
      emit_csv(run_node_benchmark(t3).csv, t3_out);
      return 0;
    }
    if (table4->parsed()) {
      if (!t4_bounds.empty()) t4.bound_configs = t4_bounds;
      if (t4_layer > 0) t4.early_stop.max_frontier_nodes = t4_layer;
      if (t4_total > 0) t4.early_stop.max_total_nodes = t4_total;
      emit_csv(run_estimator_benchmark(t4).csv, t4_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
