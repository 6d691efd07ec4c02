#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "maxmarg/search.hpp"

namespace maxmarg {

// Shared driver settings for the benchmark commands.  Models are sampled as
// triplet models with Dirichlet(alpha) rows, simulated for n steps, and
// conditioned on the simulated observations; model i uses seed `seed + i` so
// results are independent of the thread count.
struct ExperimentSpec {
  int models = 200;
  int n = 25;
  int card_x = 2;
  int card_u = 2;
  int card_y = 2;
  double alpha = 1.0;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  std::vector<std::string> bound_configs;
  Traversal traversal = Traversal::Bfs;
  EarlyStop early_stop;
  ResourceBudget budget;
};

// Visited-node benchmark defaults: 200 models, n=25, nine reference bound
// configurations, BFS with early stopping off (counts are exact).
ExperimentSpec node_benchmark_defaults();

// Approximation-quality benchmark defaults: 100 models, n=100, search guided
// by mviterbi:m=5,sms:m=5,ps:r=5 with the stock early-stop thresholds.
ExperimentSpec estimator_benchmark_defaults();

struct NodeBenchmarkRow {
  int model_id = 0;
  std::uint64_t seed = 0;
  std::string config;
  SearchStatus status = SearchStatus::Exact;
  bool failed = false;
  std::string error;
  std::size_t nodes_total = 0;
  std::vector<std::size_t> nodes_per_layer;
};

struct NodeBenchmarkSummary {
  std::string config;
  int models = 0;  // rows included in the means (failures excluded)
  double mean_nodes = 0.0;
  double log2_mean_nodes = 0.0;
  double mean_log2_nodes = 0.0;
  std::vector<double> mean_nodes_per_layer;
};

struct NodeBenchmarkResult {
  std::vector<NodeBenchmarkRow> rows;  // model-major, config-minor order
  std::vector<NodeBenchmarkSummary> summary;
  std::string csv;
};

// Runs branch_and_bound once per (model, bound config) and tabulates visited
// node counts, total and per layer.
NodeBenchmarkResult run_node_benchmark(const ExperimentSpec& spec);

struct EstimatorBenchmarkRow {
  int model_id = 0;
  std::uint64_t seed = 0;
  SearchStatus status = SearchStatus::Exact;
  bool failed = false;
  std::string error;
  std::string estimator;  // "m0".."m5", "ux"
  double path_log_mass = kLogZero;
  double bb_lower = kLogZero;
  double bb_upper = kLogZero;
  double dist_lower = 0.0;  // bb_lower - path_log_mass
  double dist_upper = 0.0;  // bb_upper - path_log_mass
};

struct EstimatorBenchmarkSummary {
  std::string estimator;
  int models = 0;
  double mean_dist_lower = 0.0;
  double mean_dist_upper = 0.0;
};

struct EstimatorBenchmarkResult {
  std::vector<EstimatorBenchmarkRow> rows;  // model-major, estimator-minor
  std::vector<EstimatorBenchmarkSummary> summary;
  double mean_stop_gap = 0.0;  // mean of bb_upper - bb_lower per model
  std::string csv;
};

// Decodes each model with the window-conditional approximations (orders 0..5)
// and the joint-argmax path, scores every path by its true log mass, and
// reports the distance of that mass from the early-stopped search bounds.
// The joint-argmax ("ux") row uses the marginal mass of the decoded path, not
// its joint weight; the CSV metadata restates this.
EstimatorBenchmarkResult run_estimator_benchmark(const ExperimentSpec& spec);

}  // namespace maxmarg
