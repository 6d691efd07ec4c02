#include "maxmarg/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <functional>
#include <thread>

#include "maxmarg/bounds.hpp"
#include "maxmarg/dp.hpp"
#include "maxmarg/model.hpp"

namespace maxmarg {
namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(std::uint64_t v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(int v) { return fmt(static_cast<std::uint64_t>(v)); }

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += fmt(static_cast<std::uint64_t>(v[i]));
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += fmt(v[i]);
  }
  return out;
}

// In CSV cells the bound list is joined with ';' so the cell never contains
// the column delimiter; the --bounds grammar itself uses ','.
std::string config_cell(std::string s) {
  for (char& c : s)
    if (c == ',') c = ';';
  return s;
}

// Keeps free-form error text from colliding with the CSV separators.
std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == ';' || c == '\n' || c == '\r') c = ' ';
  return s;
}

const char* traversal_name(Traversal t) {
  switch (t) {
    case Traversal::Bfs: return "bfs";
    case Traversal::Dfs: return "dfs";
    case Traversal::Best: return "best";
  }
  return "bfs";
}

const char* status_name(SearchStatus s) {
  return s == SearchStatus::Exact ? "exact" : "early_stopped";
}

std::string early_stop_desc(const EarlyStop& es) {
  if (!es.enabled) return "off";
  return "layer:" + fmt(static_cast<std::uint64_t>(es.max_frontier_nodes)) +
         ",total:" + fmt(static_cast<std::uint64_t>(es.max_total_nodes));
}

std::string spec_line(const ExperimentSpec& spec) {
  return "# models=" + fmt(spec.models) + " n=" + fmt(spec.n) + " cx=" + fmt(spec.card_x) +
         " cu=" + fmt(spec.card_u) + " cy=" + fmt(spec.card_y) + " alpha=" + fmt(spec.alpha) +
         " seed=" + fmt(spec.seed) + " traversal=" + traversal_name(spec.traversal) +
         " early_stop=" + early_stop_desc(spec.early_stop) + "\n";
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  for (std::thread& th : pool) th.join();
}

int pick_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

PairChain sampled_chain(const ExperimentSpec& spec, std::uint64_t model_seed) {
  Rng rng(model_seed);
  TripletModel model = sample_tmm(spec.card_x, spec.card_u, spec.card_y, spec.alpha, rng);
  Trajectory traj = simulate(model, spec.n, rng);
  return condition_on_observations(model, traj.y);
}

}  // namespace

ExperimentSpec node_benchmark_defaults() {
  ExperimentSpec spec;
  spec.models = 200;
  spec.n = 25;
  spec.bound_configs = {"simple",
                        "samuelson",
                        "ps:r=5",
                        "ps:r=10",
                        "sms:m=1",
                        "sms:m=10",
                        "simple,mviterbi:m=2",
                        "ps:r=10,mviterbi:m=2",
                        "sms:m=10,mviterbi:m=2"};
  spec.early_stop.enabled = false;  // node counts stay exact
  return spec;
}

ExperimentSpec estimator_benchmark_defaults() {
  ExperimentSpec spec;
  spec.models = 100;
  spec.n = 100;
  spec.bound_configs = {"mviterbi:m=5,sms:m=5,ps:r=5"};
  spec.early_stop = EarlyStop{};  // stock thresholds, enabled
  return spec;
}

NodeBenchmarkResult run_node_benchmark(const ExperimentSpec& spec) {
  const int configs = static_cast<int>(spec.bound_configs.size());
  NodeBenchmarkResult out;
  out.rows.resize(static_cast<std::size_t>(spec.models) * configs);
  parallel_for(spec.models, pick_threads(spec.threads), [&](int i) {
    const std::uint64_t mseed = spec.seed + static_cast<std::uint64_t>(i);
    NodeBenchmarkRow* rows = out.rows.data() + static_cast<std::size_t>(i) * configs;
    for (int c = 0; c < configs; ++c) {
      rows[c].model_id = i;
      rows[c].seed = mseed;
      rows[c].config = spec.bound_configs[c];
    }
    PairChain chain;
    try {
      chain = sampled_chain(spec, mseed);
    } catch (const std::exception& e) {
      for (int c = 0; c < configs; ++c) {
        rows[c].failed = true;
        rows[c].error = e.what();
      }
      return;
    }
    SuffixMass suffix = suffix_mass(chain);
    for (int c = 0; c < configs; ++c) {
      try {
        SearchConfig cfg;
        cfg.bounds = BoundConfig::parse(spec.bound_configs[c]);
        cfg.traversal = spec.traversal;
        cfg.early_stop = spec.early_stop;
        cfg.report_all_optima = false;
        cfg.budget = spec.budget;
        CompositeBounds bounds(chain, suffix, cfg.bounds, cfg.budget);
        SearchReport rep = branch_and_bound(chain, suffix, bounds, cfg);
        rows[c].status = rep.status;
        rows[c].nodes_total = rep.nodes_total;
        rows[c].nodes_per_layer = std::move(rep.nodes_per_layer);
      } catch (const std::exception& e) {
        rows[c].failed = true;
        rows[c].error = e.what();
      }
    }
  });

  for (int c = 0; c < configs; ++c) {
    NodeBenchmarkSummary s;
    s.config = spec.bound_configs[c];
    s.mean_nodes_per_layer.assign(spec.n, 0.0);
    double sum_nodes = 0.0, sum_log2 = 0.0;
    for (int i = 0; i < spec.models; ++i) {
      const NodeBenchmarkRow& row = out.rows[static_cast<std::size_t>(i) * configs + c];
      if (row.failed) continue;
      ++s.models;
      sum_nodes += static_cast<double>(row.nodes_total);
      sum_log2 += std::log2(static_cast<double>(row.nodes_total));
      for (std::size_t l = 0; l < row.nodes_per_layer.size(); ++l)
        s.mean_nodes_per_layer[l] += static_cast<double>(row.nodes_per_layer[l]);
    }
    if (s.models > 0) {
      s.mean_nodes = sum_nodes / s.models;
      s.log2_mean_nodes = std::log2(s.mean_nodes);
      s.mean_log2_nodes = sum_log2 / s.models;
      for (double& v : s.mean_nodes_per_layer) v /= s.models;
    }
    out.summary.push_back(std::move(s));
  }

  std::string csv;
  csv += "# node benchmark: branch-and-bound visited-node counts per bound configuration\n";
  csv += spec_line(spec);
  csv += "# a node counts as visited when it was evaluated and not pruned; the root is excluded\n";
  csv += "row,model_id,seed,config,status,nodes_total,mean_nodes,log2_mean_nodes,mean_log2_nodes,"
         "nodes_per_layer,error\n";
  for (const NodeBenchmarkRow& row : out.rows) {
    csv += "model," + fmt(row.model_id) + "," + fmt(row.seed) + "," + config_cell(row.config) + ",";
    if (row.failed) {
      csv += "failed,,,,,," + sanitize(row.error) + "\n";
    } else {
      csv += std::string(status_name(row.status)) + "," +
             fmt(static_cast<std::uint64_t>(row.nodes_total)) + ",,,," +
             join(row.nodes_per_layer) + ",\n";
    }
  }
  for (const NodeBenchmarkSummary& s : out.summary)
    csv += "summary,,," + config_cell(s.config) + ",," + fmt(static_cast<std::uint64_t>(s.models)) + "," +
           fmt(s.mean_nodes) + "," + fmt(s.log2_mean_nodes) + "," + fmt(s.mean_log2_nodes) + "," +
           join(s.mean_nodes_per_layer) + ",\n";
  out.csv = std::move(csv);
  return out;
}

EstimatorBenchmarkResult run_estimator_benchmark(const ExperimentSpec& spec) {
  const std::vector<int> orders = {0, 1, 2, 3, 4, 5};
  const int per_model = static_cast<int>(orders.size()) + 1;  // + the joint-argmax row
  const std::string search_config =
      spec.bound_configs.empty() ? std::string("mviterbi:m=5,sms:m=5,ps:r=5")
                                 : spec.bound_configs.front();
  EstimatorBenchmarkResult out;
  out.rows.resize(static_cast<std::size_t>(spec.models) * per_model);
  parallel_for(spec.models, pick_threads(spec.threads), [&](int i) {
    const std::uint64_t mseed = spec.seed + static_cast<std::uint64_t>(i);
    EstimatorBenchmarkRow* rows = out.rows.data() + static_cast<std::size_t>(i) * per_model;
    for (int e = 0; e < per_model; ++e) {
      rows[e].model_id = i;
      rows[e].seed = mseed;
      rows[e].estimator = e < static_cast<int>(orders.size()) ? "m" + fmt(orders[e]) : "ux";
    }
    try {
      PairChain chain = sampled_chain(spec, mseed);
      SuffixMass suffix = suffix_mass(chain);

      SearchConfig cfg;
      cfg.bounds = BoundConfig::parse(search_config);
      cfg.traversal = spec.traversal;
      cfg.early_stop = spec.early_stop;
      cfg.report_all_optima = false;
      cfg.budget = spec.budget;
      CompositeBounds bounds(chain, suffix, cfg.bounds, cfg.budget);
      SearchReport rep = branch_and_bound(chain, suffix, bounds, cfg);

      for (int e = 0; e < per_model; ++e) {
        EstimatorBenchmarkRow& row = rows[e];
        if (e < static_cast<int>(orders.size())) {
          MViterbiTables tables = mviterbi_prepare(chain, suffix, orders[e], spec.budget);
          row.path_log_mass = tables.root_mass;
        } else {
          JointPath jp = joint_viterbi(chain);
          row.path_log_mass = path_mass(chain, jp.x);
        }
        row.status = rep.status;
        row.bb_lower = rep.optimum_lower;
        row.bb_upper = rep.optimum_upper;
        row.dist_lower = rep.optimum_lower - row.path_log_mass;
        row.dist_upper = rep.optimum_upper - row.path_log_mass;
      }
    } catch (const std::exception& e) {
      for (int r = 0; r < per_model; ++r) {
        rows[r].failed = true;
        rows[r].error = e.what();
      }
    }
  });

  for (int e = 0; e < per_model; ++e) {
    EstimatorBenchmarkSummary s;
    s.estimator = e < static_cast<int>(orders.size()) ? "m" + fmt(orders[e]) : "ux";
    double sum_lo = 0.0, sum_hi = 0.0;
    for (int i = 0; i < spec.models; ++i) {
      const EstimatorBenchmarkRow& row = out.rows[static_cast<std::size_t>(i) * per_model + e];
      if (row.failed) continue;
      ++s.models;
      sum_lo += row.dist_lower;
      sum_hi += row.dist_upper;
    }
    if (s.models > 0) {
      s.mean_dist_lower = sum_lo / s.models;
      s.mean_dist_upper = sum_hi / s.models;
    }
    out.summary.push_back(std::move(s));
  }
  {
    double gap = 0.0;
    int cnt = 0;
    for (int i = 0; i < spec.models; ++i) {
      const EstimatorBenchmarkRow& row = out.rows[static_cast<std::size_t>(i) * per_model];
      if (row.failed) continue;
      gap += row.bb_upper - row.bb_lower;
      ++cnt;
    }
    out.mean_stop_gap = cnt > 0 ? gap / cnt : 0.0;
  }

  std::string csv;
  csv += "# estimator benchmark: true path log mass of each decoder vs the search bounds\n";
  csv += spec_line(spec);
  csv += "# search=" + search_config + "\n";
  csv += "# the ux row scores the marginal mass of the joint-argmax path, not its joint weight\n";
  csv += "row,model_id,seed,status,estimator,path_log_mass,bb_lower,bb_upper,dist_lower,"
         "dist_upper,error\n";
  for (const EstimatorBenchmarkRow& row : out.rows) {
    csv += "model," + fmt(row.model_id) + "," + fmt(row.seed) + ",";
    if (row.failed) {
      csv += "failed," + row.estimator + ",,,,,," + sanitize(row.error) + "\n";
    } else {
      csv += std::string(status_name(row.status)) + "," + row.estimator + "," +
             fmt(row.path_log_mass) + "," + fmt(row.bb_lower) + "," + fmt(row.bb_upper) + "," +
             fmt(row.dist_lower) + "," + fmt(row.dist_upper) + ",\n";
    }
  }
  for (const EstimatorBenchmarkSummary& s : out.summary)
    csv += "summary,," + fmt(static_cast<std::uint64_t>(s.models)) + ",," + s.estimator + ",,,," +
           fmt(s.mean_dist_lower) + "," + fmt(s.mean_dist_upper) + ",\n";
  csv += "summary,," + fmt(static_cast<std::uint64_t>(out.summary.empty() ? 0 : out.summary[0].models)) +
         ",,stop_gap,,,," + fmt(out.mean_stop_gap) + "," + fmt(out.mean_stop_gap) + ",\n";
  out.csv = std::move(csv);
  return out;
}

}  // namespace maxmarg
