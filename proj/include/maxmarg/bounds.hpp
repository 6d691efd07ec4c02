#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "maxmarg/dp.hpp"
#include "maxmarg/model.hpp"

namespace maxmarg {

// Precomputed tables are refused (not truncated) when they would exceed this
// many scalar cells in total.
struct ResourceBudget {
  std::size_t max_table_cells = std::size_t(1) << 25;
};

struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class BoundKind {
  Simple,           // subtree total mass, and the total spread over the leaf count
  PowerSum,         // r-th power sums via r independent copies of u
  PowerSumCompact,  // r-th power sums on multiset counts of u
  Samuelson,        // mean/variance envelope from the first two power sums
  SumMaxSum,        // block relaxation: max over symbols inside length-m blocks
  MViterbi,         // true mass of the order-m greedy completion
  JointMax,         // best single (x, u) completion of the prefix
};

struct BoundSpec {
  BoundKind kind = BoundKind::Simple;
  int order = 0;  // r for the power sums, m for the window methods
  bool operator==(const BoundSpec&) const = default;
};

// Comma-separated list: "simple", "ps:r=N", "ps-alt:r=N", "samuelson",
// "sms:m=N", "mviterbi:m=N", "ux".  The simple bound is always included.
struct BoundConfig {
  std::vector<BoundSpec> specs;
  static BoundConfig parse(const std::string& text);
  std::string to_string() const;
};

struct NodeBounds {
  LogWeight upper = kLogZero;
  LogWeight lower = kLogZero;
  int upper_source = -1;  // index into the config's spec list
  int lower_source = -1;
  bool lower_has_path = false;  // materialize_lower_path can rebuild the witness
};

// ---- r-th power sums over completions, expanded into r independent copies of u

struct PsTables {
  int r = 1;
  int n = 0, card_x = 0, card_u = 0;
  std::size_t dummy = 1;               // card_u^r
  std::vector<std::vector<double>> b;  // [k-1] for k=1..n: x*dummy + code(u_1..u_r)
};

PsTables ps_prepare(const PairChain& chain, const SuffixMass& suffix, int r,
                    const ResourceBudget& budget);

// log of sum over completions of the r-th power of the continuation mass.
// node.k == 0 evaluates the whole tree.
LogWeight ps_log_power_sum(const PsTables& t, const PairChain& chain, const AlphaState& node);

// ---- the same power sums on multiset counts of the u copies

struct CountPsFlow {
  int dst = 0;                              // destination count-vector index
  double log_coef = 0.0;                    // multinomial split multiplicity
  std::vector<std::array<int, 3>> powers;   // (u, u', exponent) with exponent > 0
};

struct CountPsTables {
  int r = 1;
  int n = 0, card_x = 0, card_u = 0;
  std::vector<std::vector<int>> lambdas;     // count vectors over u summing to r
  std::vector<double> log_multinom;          // log r!/prod(lambda_u!)
  std::vector<std::vector<CountPsFlow>> flows;  // per source count vector
  std::vector<std::vector<double>> b;        // [k-1]: x*lambdas.size() + lambda
};

CountPsTables count_ps_prepare(const PairChain& chain, int r, const ResourceBudget& budget);

LogWeight count_ps_log_power_sum(const CountPsTables& t, const PairChain& chain,
                                 const AlphaState& node);

// ---- sum-max-sum block relaxation

struct SmsTables {
  int m = 1;
  int n = 0, card_x = 0, card_u = 0;
  // v[j] bounds the completions beyond position n-j*m as a function of the
  // (x, u) state there; entries x*card_u + u.
  std::vector<std::vector<double>> v;
};

SmsTables sms_prepare(const PairChain& chain, int m, const ResourceBudget& budget);

// Upper value over completions of the node.  partial_memo caches, per layer k,
// the table bridging k to the next block boundary (indexed like v[j]).
LogWeight sms_upper(const SmsTables& t, const PairChain& chain, const AlphaState& node,
                    std::vector<std::optional<std::vector<double>>>& partial_memo);

// ---- greedy completion under the order-m conditional factorization

struct MViterbiTables {
  int m = 0;      // conditioning window
  int big_m = 1;  // max(m, 1): context carried for the continuation tables
  int n = 0, card_x = 0, card_u = 0;
  std::vector<std::vector<double>> cond;   // [t-1]: code(h)*card_x + x, |h| = min(m, t-1)
  std::vector<std::vector<double>> delta;  // [t-1]: code(h) -> value of the chosen tail
  std::vector<std::vector<int>> gamma;     // [t-1]: code(h) -> chosen symbol
  // cont_beta[t - big_m - 1] for t in big_m+1..n+1: code(w)*card_u + u, where w
  // is the length-big_m window ending at t-1; sums the true weights along the
  // canonical completion from t on.
  std::vector<std::vector<double>> cont_beta;
  std::vector<int> root_path;          // decode from the empty prefix
  LogWeight root_mass = kLogZero;      // its true mass
};

MViterbiTables mviterbi_prepare(const PairChain& chain, const SuffixMass& suffix, int m,
                                const ResourceBudget& budget);

// True mass of prefix + canonical completion.  window_code packs the node's
// last window_len symbols (window_len >= min(node.k, big_m)).
LogWeight mviterbi_lower(const MViterbiTables& t, const PairChain& chain, const AlphaState& node,
                         long window_code, int window_len);

// The canonical completion symbols for positions k+1..n.
std::vector<int> mviterbi_completion(const MViterbiTables& t, int k, long window_code,
                                     int window_len);

// Value of the order-m factorization at a full path (sum of conditionals).
LogWeight mviterbi_q_value(const MViterbiTables& t, const std::vector<int>& path);

// ---- composite evaluator used by the search

class BoundEvaluator {
 public:
  virtual ~BoundEvaluator() = default;
  // node.k == 0 evaluates the root (empty alpha, prefix_mass = total mass).
  virtual NodeBounds evaluate(const AlphaState& node, long window_code, int window_len) = 0;
  // Completion symbols (positions k+1..n) witnessing the lower bound from
  // spec_index; empty when that bound carries no path.
  virtual std::vector<int> materialize_lower_path(const AlphaState& node, long window_code,
                                                  int window_len, int spec_index) = 0;
  // How many trailing prefix symbols evaluate() needs in window_code.
  virtual int window_symbols() const = 0;
};

class CompositeBounds : public BoundEvaluator {
 public:
  CompositeBounds(const PairChain& chain, const SuffixMass& suffix, const BoundConfig& config,
                  const ResourceBudget& budget = {});

  NodeBounds evaluate(const AlphaState& node, long window_code, int window_len) override;
  std::vector<int> materialize_lower_path(const AlphaState& node, long window_code,
                                          int window_len, int spec_index) override;
  int window_symbols() const override { return window_symbols_; }

  const BoundConfig& config() const { return config_; }
  const MViterbiTables* mviterbi_tables(int m) const;
  const PsTables* ps_tables(int r) const;
  const CountPsTables* count_ps_tables(int r) const;

 private:
  const PairChain& chain_;
  const SuffixMass& suffix_;
  BoundConfig config_;
  int window_symbols_ = 0;

  // Per-spec prepared state, parallel to config_.specs (null when unused).
  std::vector<std::unique_ptr<PsTables>> ps_;
  std::vector<std::unique_ptr<CountPsTables>> count_ps_;
  std::vector<std::unique_ptr<SmsTables>> sms_;
  std::vector<std::unique_ptr<MViterbiTables>> mv_;
  std::unique_ptr<PsTables> samuelson_s2_;  // shared r=2 tables for all Samuelson specs
  std::unique_ptr<JointMaxTable> joint_;
  JointPath root_joint_;
  std::vector<std::vector<std::optional<std::vector<double>>>> sms_memo_;  // per sms spec

  LogWeight joint_lower(const AlphaState& node, int* best_x, int* best_u) const;
};

}  // namespace maxmarg
