// Python bindings for the decoding toolkit: model sampling and conditioning,
// exact oracles, bound evaluation, branch-and-bound decoding, fixtures, and
// the two benchmark drivers.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "maxmarg/bounds.hpp"
#include "maxmarg/dp.hpp"
#include "maxmarg/experiments.hpp"
#include "maxmarg/fixtures.hpp"
#include "maxmarg/model.hpp"
#include "maxmarg/oracle.hpp"
#include "maxmarg/search.hpp"

namespace py = pybind11;
using namespace maxmarg;

namespace {

// Seeded sampling pipeline shared with the benchmark drivers: draw a triplet
// model, simulate observations, condition on them.
PairChain sample_chain(std::uint64_t seed, int n, int card_x, int card_u, int card_y,
                       double alpha) {
  Rng rng(seed);
  TripletModel model = sample_tmm(card_x, card_u, card_y, alpha, rng);
  Trajectory traj = simulate(model, n, rng);
  return condition_on_observations(model, traj.y);
}

void check_prefix(const PairChain& chain, const std::vector<int>& prefix) {
  if (static_cast<int>(prefix.size()) > chain.n)
    throw std::invalid_argument("prefix longer than the chain");
  for (int sym : prefix)
    if (sym < 0 || sym >= chain.card_x) throw std::invalid_argument("prefix symbol out of range");
}

NodeBounds bound_interval(const PairChain& chain, const std::string& config,
                          const std::vector<int>& prefix) {
  check_prefix(chain, prefix);
  SuffixMass suffix = suffix_mass(chain);
  CompositeBounds bounds(chain, suffix, BoundConfig::parse(config));
  AlphaState node = root_state(chain, suffix);
  for (int sym : prefix) node = extend(node, sym, chain, suffix);
  const int w = std::min<int>(node.k, bounds.window_symbols());
  long code = 0;
  for (std::size_t i = prefix.size() - w; i < prefix.size(); ++i)
    code = code * chain.card_x + prefix[i];
  return bounds.evaluate(node, code, w);
}

SearchReport decode(const PairChain& chain, const std::string& bounds, Traversal traversal,
                    double tie_tolerance, bool early_stop, std::size_t max_frontier_nodes,
                    std::size_t max_total_nodes, bool report_all_optima, bool record_trace) {
  SearchConfig cfg;
  cfg.bounds = BoundConfig::parse(bounds);
  cfg.traversal = traversal;
  cfg.tie_tolerance = tie_tolerance;
  cfg.early_stop = EarlyStop{max_frontier_nodes, max_total_nodes, early_stop};
  cfg.report_all_optima = report_all_optima;
  cfg.record_trace = record_trace;
  return branch_and_bound(chain, cfg);
}

}  // namespace

PYBIND11_MODULE(_maxmarg, m) {
  m.doc() = "Exact and bounded decoding of the maximal marginal path in pairwise Markov chains";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ResourceError>(m, "ResourceError");
  py::register_exception<BudgetError>(m, "BudgetError");

  py::enum_<Traversal>(m, "Traversal")
      .value("Bfs", Traversal::Bfs)
      .value("Dfs", Traversal::Dfs)
      .value("Best", Traversal::Best);

  py::enum_<SearchStatus>(m, "SearchStatus")
      .value("Exact", SearchStatus::Exact)
      .value("EarlyStopped", SearchStatus::EarlyStopped);

  py::class_<TripletModel>(m, "TripletModel")
      .def_readonly("card_x", &TripletModel::card_x)
      .def_readonly("card_u", &TripletModel::card_u)
      .def_readonly("card_y", &TripletModel::card_y)
      .def("to_json", &tmm_to_json)
      .def_static("from_json", &tmm_from_json, py::arg("text"))
      .def("__repr__", [](const TripletModel& t) {
        return "TripletModel(card_x=" + std::to_string(t.card_x) +
               ", card_u=" + std::to_string(t.card_u) + ", card_y=" + std::to_string(t.card_y) +
               ")";
      });

  py::class_<PairChain>(m, "PairChain")
      .def_readonly("n", &PairChain::n)
      .def_readonly("card_x", &PairChain::card_x)
      .def_readonly("card_u", &PairChain::card_u)
      .def_readonly("log_norm", &PairChain::log_norm)
      .def("to_json", &chain_to_json)
      .def_static("from_json", &chain_from_json, py::arg("text"))
      .def("__repr__", [](const PairChain& c) {
        return "PairChain(n=" + std::to_string(c.n) + ", card_x=" + std::to_string(c.card_x) +
               ", card_u=" + std::to_string(c.card_u) + ")";
      });

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("x", &Trajectory::x)
      .def_readonly("u", &Trajectory::u)
      .def_readonly("y", &Trajectory::y);

  py::class_<ChainDiagnostics>(m, "ChainDiagnostics")
      .def_readonly("ok", &ChainDiagnostics::ok)
      .def_readonly("issues", &ChainDiagnostics::issues)
      .def_readonly("warnings", &ChainDiagnostics::warnings);

  py::class_<JointPath>(m, "JointPath")
      .def_readonly("x", &JointPath::x)
      .def_readonly("u", &JointPath::u)
      .def_readonly("weight", &JointPath::weight);

  py::class_<PmapResult>(m, "PmapResult")
      .def_readonly("path", &PmapResult::path)
      .def_readonly("log_marginals", &PmapResult::log_marginals);

  py::class_<OracleReport>(m, "OracleReport")
      .def_readonly("optimum", &OracleReport::optimum)
      .def_readonly("argmax_paths", &OracleReport::argmax_paths)
      .def_readonly("nodes_processed", &OracleReport::nodes_processed);

  py::class_<NodeBounds>(m, "NodeBounds")
      .def_readonly("upper", &NodeBounds::upper)
      .def_readonly("lower", &NodeBounds::lower)
      .def_readonly("upper_source", &NodeBounds::upper_source)
      .def_readonly("lower_source", &NodeBounds::lower_source)
      .def_readonly("lower_has_path", &NodeBounds::lower_has_path)
      .def("__repr__", [](const NodeBounds& b) {
        return "NodeBounds(lower=" + std::to_string(b.lower) +
               ", upper=" + std::to_string(b.upper) + ")";
      });

  py::class_<BoundConfig>(m, "BoundConfig")
      .def_static("parse", &BoundConfig::parse, py::arg("text"))
      .def("to_string", &BoundConfig::to_string)
      .def("__repr__",
           [](const BoundConfig& c) { return "BoundConfig('" + c.to_string() + "')"; });

  py::class_<EarlyStop>(m, "EarlyStop")
      .def(py::init<>())
      .def_readwrite("max_frontier_nodes", &EarlyStop::max_frontier_nodes)
      .def_readwrite("max_total_nodes", &EarlyStop::max_total_nodes)
      .def_readwrite("enabled", &EarlyStop::enabled);

  py::class_<ResourceBudget>(m, "ResourceBudget")
      .def(py::init<>())
      .def_readwrite("max_table_cells", &ResourceBudget::max_table_cells);

  py::class_<SearchConfig>(m, "SearchConfig")
      .def(py::init<>())
      .def_readwrite("bounds", &SearchConfig::bounds)
      .def_readwrite("traversal", &SearchConfig::traversal)
      .def_readwrite("tie_tolerance", &SearchConfig::tie_tolerance)
      .def_readwrite("early_stop", &SearchConfig::early_stop)
      .def_readwrite("report_all_optima", &SearchConfig::report_all_optima)
      .def_readwrite("record_trace", &SearchConfig::record_trace)
      .def_readwrite("budget", &SearchConfig::budget);

  py::class_<SearchReport>(m, "SearchReport")
      .def_readonly("status", &SearchReport::status)
      .def_readonly("optimum", &SearchReport::optimum)
      .def_readonly("optimum_lower", &SearchReport::optimum_lower)
      .def_readonly("optimum_upper", &SearchReport::optimum_upper)
      .def_readonly("argmax_paths", &SearchReport::argmax_paths)
      .def_readonly("incumbent_path", &SearchReport::incumbent_path)
      .def_readonly("incumbent_mass", &SearchReport::incumbent_mass)
      .def_readonly("nodes_total", &SearchReport::nodes_total)
      .def_readonly("nodes_per_layer", &SearchReport::nodes_per_layer)
      .def_readonly("upper_wins", &SearchReport::upper_wins)
      .def_readonly("lower_wins", &SearchReport::lower_wins)
      .def_readonly("trace", &SearchReport::trace)
      .def("__repr__", [](const SearchReport& r) {
        return std::string("SearchReport(status=") +
               (r.status == SearchStatus::Exact ? "Exact" : "EarlyStopped") +
               ", optimum=" + std::to_string(r.optimum) +
               ", nodes_total=" + std::to_string(r.nodes_total) + ")";
      });

  py::class_<FixtureChain>(m, "FixtureChain")
      .def_readonly("name", &FixtureChain::name)
      .def_readonly("chain", &FixtureChain::chain)
      .def_readonly("expected_optimum", &FixtureChain::expected_optimum)
      .def_readonly("expected_optima", &FixtureChain::expected_optima)
      .def_readonly("expected_log", &FixtureChain::expected_log);

  py::class_<ExperimentSpec>(m, "ExperimentSpec")
      .def(py::init<>())
      .def_readwrite("models", &ExperimentSpec::models)
      .def_readwrite("n", &ExperimentSpec::n)
      .def_readwrite("card_x", &ExperimentSpec::card_x)
      .def_readwrite("card_u", &ExperimentSpec::card_u)
      .def_readwrite("card_y", &ExperimentSpec::card_y)
      .def_readwrite("alpha", &ExperimentSpec::alpha)
      .def_readwrite("seed", &ExperimentSpec::seed)
      .def_readwrite("threads", &ExperimentSpec::threads)
      .def_readwrite("bound_configs", &ExperimentSpec::bound_configs)
      .def_readwrite("traversal", &ExperimentSpec::traversal)
      .def_readwrite("early_stop", &ExperimentSpec::early_stop)
      .def_readwrite("budget", &ExperimentSpec::budget);

  py::class_<NodeBenchmarkRow>(m, "NodeBenchmarkRow")
      .def_readonly("model_id", &NodeBenchmarkRow::model_id)
      .def_readonly("seed", &NodeBenchmarkRow::seed)
      .def_readonly("config", &NodeBenchmarkRow::config)
      .def_readonly("status", &NodeBenchmarkRow::status)
      .def_readonly("failed", &NodeBenchmarkRow::failed)
      .def_readonly("error", &NodeBenchmarkRow::error)
      .def_readonly("nodes_total", &NodeBenchmarkRow::nodes_total)
      .def_readonly("nodes_per_layer", &NodeBenchmarkRow::nodes_per_layer);

  py::class_<NodeBenchmarkSummary>(m, "NodeBenchmarkSummary")
      .def_readonly("config", &NodeBenchmarkSummary::config)
      .def_readonly("models", &NodeBenchmarkSummary::models)
      .def_readonly("mean_nodes", &NodeBenchmarkSummary::mean_nodes)
      .def_readonly("log2_mean_nodes", &NodeBenchmarkSummary::log2_mean_nodes)
      .def_readonly("mean_log2_nodes", &NodeBenchmarkSummary::mean_log2_nodes)
      .def_readonly("mean_nodes_per_layer", &NodeBenchmarkSummary::mean_nodes_per_layer);

  py::class_<NodeBenchmarkResult>(m, "NodeBenchmarkResult")
      .def_readonly("rows", &NodeBenchmarkResult::rows)
      .def_readonly("summary", &NodeBenchmarkResult::summary)
      .def_readonly("csv", &NodeBenchmarkResult::csv);

  py::class_<EstimatorBenchmarkRow>(m, "EstimatorBenchmarkRow")
      .def_readonly("model_id", &EstimatorBenchmarkRow::model_id)
      .def_readonly("seed", &EstimatorBenchmarkRow::seed)
      .def_readonly("status", &EstimatorBenchmarkRow::status)
      .def_readonly("failed", &EstimatorBenchmarkRow::failed)
      .def_readonly("error", &EstimatorBenchmarkRow::error)
      .def_readonly("estimator", &EstimatorBenchmarkRow::estimator)
      .def_readonly("path_log_mass", &EstimatorBenchmarkRow::path_log_mass)
      .def_readonly("bb_lower", &EstimatorBenchmarkRow::bb_lower)
      .def_readonly("bb_upper", &EstimatorBenchmarkRow::bb_upper)
      .def_readonly("dist_lower", &EstimatorBenchmarkRow::dist_lower)
      .def_readonly("dist_upper", &EstimatorBenchmarkRow::dist_upper);

  py::class_<EstimatorBenchmarkSummary>(m, "EstimatorBenchmarkSummary")
      .def_readonly("estimator", &EstimatorBenchmarkSummary::estimator)
      .def_readonly("models", &EstimatorBenchmarkSummary::models)
      .def_readonly("mean_dist_lower", &EstimatorBenchmarkSummary::mean_dist_lower)
      .def_readonly("mean_dist_upper", &EstimatorBenchmarkSummary::mean_dist_upper);

  py::class_<EstimatorBenchmarkResult>(m, "EstimatorBenchmarkResult")
      .def_readonly("rows", &EstimatorBenchmarkResult::rows)
      .def_readonly("summary", &EstimatorBenchmarkResult::summary)
      .def_readonly("mean_stop_gap", &EstimatorBenchmarkResult::mean_stop_gap)
      .def_readonly("csv", &EstimatorBenchmarkResult::csv);

  // model pipeline
  m.def(
      "sample_model",
      [](int card_x, int card_u, int card_y, double alpha, std::uint64_t seed) {
        Rng rng(seed);
        return sample_tmm(card_x, card_u, card_y, alpha, rng);
      },
      py::arg("card_x"), py::arg("card_u"), py::arg("card_y"), py::arg("alpha") = 1.0,
      py::arg("seed") = 1, "Draw a triplet Markov model with Dirichlet(alpha) rows.");
  m.def(
      "simulate",
      [](const TripletModel& model, int n, std::uint64_t seed) {
        Rng rng(seed);
        return simulate(model, n, rng);
      },
      py::arg("model"), py::arg("n"), py::arg("seed") = 1,
      "Sample a length-n trajectory (x, u, y) from the model.");
  m.def(
      "condition_on_observations",
      [](const TripletModel& model, const std::vector<int>& y) {
        return condition_on_observations(model, y);
      },
      py::arg("model"), py::arg("y"),
      "Fix the observation sequence and return the factor chain over (x, u).");
  m.def("sample_chain", &sample_chain, py::arg("seed"), py::arg("n"), py::arg("card_x") = 2,
        py::arg("card_u") = 2, py::arg("card_y") = 2, py::arg("alpha") = 1.0,
        "Sample a model, simulate observations, and condition on them (one seed).");
  m.def("validate", [](const PairChain& chain) { return validate(chain); }, py::arg("chain"));
  m.def("validate", [](const TripletModel& model) { return validate(model); }, py::arg("model"));

  // path functionals
  m.def(
      "path_mass",
      [](const PairChain& chain, const std::vector<int>& x) { return path_mass(chain, x); },
      py::arg("chain"), py::arg("x"), "Log mass of one complete symbol path.");
  m.def("total_mass", &total_mass, py::arg("chain"), "Log total mass over all paths.");
  m.def("joint_viterbi", &joint_viterbi, py::arg("chain"),
        "Argmax over joint (x, u) paths with its joint log weight.");
  m.def("pmap_path", &pmap_path, py::arg("chain"),
        "Positionwise argmax of the per-position marginals.");

  // exact oracles (exponential in n; guarded by max_paths)
  m.def(
      "exhaustive_dc",
      [](const PairChain& chain, double tie_tol, std::uint64_t max_paths) {
        return exhaustive_dc(chain, tie_tol, OracleBudget{max_paths});
      },
      py::arg("chain"), py::arg("tie_tol") = 1e-9,
      py::arg("max_paths") = std::uint64_t{1} << 20,
      py::call_guard<py::gil_scoped_release>(),
      "Exact optimum and argmax set by a full prefix-tree sweep.");
  m.def(
      "suffix_max_oracle",
      [](const PairChain& chain, const std::vector<int>& prefix, std::uint64_t max_paths) {
        check_prefix(chain, prefix);
        return suffix_max_oracle(chain, prefix, OracleBudget{max_paths});
      },
      py::arg("chain"), py::arg("prefix"), py::arg("max_paths") = std::uint64_t{1} << 20,
      py::call_guard<py::gil_scoped_release>(),
      "Exact max path mass over all continuations of the prefix.");
  m.def(
      "power_sum_oracle",
      [](const PairChain& chain, const std::vector<int>& prefix, int r,
         std::uint64_t max_paths) {
        check_prefix(chain, prefix);
        return power_sum_oracle(chain, prefix, r, OracleBudget{max_paths});
      },
      py::arg("chain"), py::arg("prefix"), py::arg("r"),
      py::arg("max_paths") = std::uint64_t{1} << 20,
      py::call_guard<py::gil_scoped_release>(),
      "Exact log sum of r-th powers of continuation masses.");

  // bounds and search
  m.def("bound_interval", &bound_interval, py::arg("chain"), py::arg("config"),
        py::arg("prefix") = std::vector<int>{},
        py::call_guard<py::gil_scoped_release>(),
        "Evaluate a composite bound config at a prefix node.");
  m.def("branch_and_bound",
        py::overload_cast<const PairChain&, const SearchConfig&>(&branch_and_bound),
        py::arg("chain"), py::arg("config") = SearchConfig{},
        py::call_guard<py::gil_scoped_release>(),
        "Run the prefix-tree search with an explicit configuration.");
  m.def("decode", &decode, py::arg("chain"), py::arg("bounds") = "simple",
        py::arg("traversal") = Traversal::Bfs, py::arg("tie_tolerance") = 1e-9,
        py::arg("early_stop") = true, py::arg("max_frontier_nodes") = std::size_t{400000},
        py::arg("max_total_nodes") = std::size_t{2000000}, py::arg("report_all_optima") = true,
        py::arg("record_trace") = false, py::call_guard<py::gil_scoped_release>(),
        "Maximize the marginal path mass by branch and bound (keyword front end).");

  // fixtures
  m.def("fixture_by_name", &fixture_by_name, py::arg("spec"),
        "Analytic test chains: 'd1:n=4', 'd2:p=0.7,n=10', 'd3:eps=0.1', 'demo'.");

  // benchmark drivers
  m.def("node_benchmark_defaults", &node_benchmark_defaults);
  m.def("estimator_benchmark_defaults", &estimator_benchmark_defaults);
  m.def("run_node_benchmark", &run_node_benchmark, py::arg("spec"),
        py::call_guard<py::gil_scoped_release>(),
        "Visited-node counts per (model, bound config), with CSV output.");
  m.def("run_estimator_benchmark", &run_estimator_benchmark, py::arg("spec"),
        py::call_guard<py::gil_scoped_release>(),
        "True-mass distance of the window and joint-argmax decoders, with CSV output.");
}
