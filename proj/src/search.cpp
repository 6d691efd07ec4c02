#include "maxmarg/search.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>

#include "maxmarg/logdomain.hpp"

namespace maxmarg {
namespace {

struct Rec {
  std::int32_t arena = -1;
  long window = 0;
  double upper = 0.0;  // bound at evaluation time
  AlphaState st;
};

class Searcher {
 public:
  Searcher(const PairChain& chain, const SuffixMass& suffix, BoundEvaluator& bounds,
           const SearchConfig& config)
      : chain_(chain), suffix_(suffix), bounds_(bounds), cfg_(config) {
    w_ = bounds.window_symbols();
    pw_.assign(w_ + 1, 1);
    for (int i = 1; i <= w_; ++i) pw_[i] = pw_[i - 1] * chain.card_x;
    rep_.nodes_per_layer.assign(chain.n, 0);
  }

  SearchReport run() {
    Rec root;
    root.st = root_state(chain_, suffix_);
    NodeBounds rb = bounds_.evaluate(root.st, 0, 0);
    root.upper = rb.upper_source >= 0 ? rb.upper : std::numeric_limits<double>::infinity();
    if (rb.lower_source >= 0) {
      if (rb.lower > best_lower_) {
        best_lower_ = rb.lower;
        tally(rep_.lower_wins, rb.lower_source);
      }
      if (rb.lower_has_path) fold_incumbent(root.st, 0, 0, rb.lower_source, root.arena);
    }
    switch (cfg_.traversal) {
      case Traversal::Bfs: run_bfs(root); break;
      case Traversal::Dfs: run_dfs(root); break;
      case Traversal::Best: run_best(root); break;
    }
    finalize();
    return std::move(rep_);
  }

 private:
  void tally(std::vector<std::size_t>& v, int i) {
    if (i < 0) return;
    if (v.size() <= static_cast<std::size_t>(i)) v.resize(i + 1, 0);
    ++v[i];
  }

  std::vector<int> path_of(std::int32_t id) const {
    std::vector<int> out;
    while (id >= 0) {
      out.push_back(arena_[id].second);
      id = arena_[id].first;
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  void consider_leaf(std::vector<int>&& path, double mass) {
    if (mass > best_lower_) best_lower_ = mass;
    if (mass > incumbent_mass_) {
      incumbent_mass_ = mass;
      incumbent_ = path;
    }
    if (cfg_.report_all_optima) {
      if (!is_log_zero(mass) && mass >= best_lower_ - cfg_.tie_tolerance) {
        candidates_.emplace_back(std::move(path), mass);
        if (candidates_.size() > 4096)
          std::erase_if(candidates_, [&](const auto& c) {
            return c.second < best_lower_ - cfg_.tie_tolerance;
          });
      }
    } else if (candidates_.empty() || mass > candidates_[0].second) {
      candidates_.assign(1, {std::move(path), mass});
    }
  }

  void fold_incumbent(const AlphaState& st, long wcode, int wlen, int spec, std::int32_t arena_id) {
    std::vector<int> completion = bounds_.materialize_lower_path(st, wcode, wlen, spec);
    if (completion.empty() && st.k < chain_.n) return;
    AlphaState cur = st;
    for (int sym : completion) cur = extend(cur, sym, chain_, suffix_);
    const double mass = cur.prefix_mass;
    if (mass > incumbent_mass_) {
      std::vector<int> path = path_of(arena_id);
      path.insert(path.end(), completion.begin(), completion.end());
      incumbent_mass_ = mass;
      incumbent_ = std::move(path);
    }
    if (mass > best_lower_) best_lower_ = mass;
  }

  // Evaluates one child; returns true when it survives and is not a leaf (the
  // caller then owns scheduling it).
  bool make_child(const Rec& parent, int sym, int layer, Rec& out) {
    out.st = extend(parent.st, sym, chain_, suffix_);
    out.window = 0;
    if (w_ > 0)
      out.window = (layer <= w_ ? parent.window : parent.window % pw_[w_ - 1]) * chain_.card_x + sym;
    const int wlen = std::min(layer, w_);
    NodeBounds nb = bounds_.evaluate(out.st, out.window, wlen);
    const double upper =
        nb.upper_source >= 0 ? nb.upper : std::numeric_limits<double>::infinity();
    if (upper < best_lower_ - cfg_.tie_tolerance) return false;  // pruned, not counted
    ++rep_.nodes_total;
    ++rep_.nodes_per_layer[layer - 1];
    tally(rep_.upper_wins, nb.upper_source);
    out.arena = static_cast<std::int32_t>(arena_.size());
    arena_.emplace_back(parent.arena, sym);
    out.upper = upper;
    if (cfg_.record_trace) rep_.trace.push_back(path_of(out.arena));
    if (layer == chain_.n) {
      consider_leaf(path_of(out.arena), out.st.prefix_mass);
      return false;
    }
    if (nb.lower_source >= 0 && nb.lower > best_lower_) {
      best_lower_ = nb.lower;
      tally(rep_.lower_wins, nb.lower_source);
      if (nb.lower_has_path) fold_incumbent(out.st, out.window, wlen, nb.lower_source, out.arena);
    }
    return true;
  }

  void stop_with(double frontier_upper) {
    rep_.status = SearchStatus::EarlyStopped;
    stopped_ = true;
    stop_upper_ = std::max(best_lower_, frontier_upper);
  }

  void run_bfs(const Rec& root) {
    std::vector<Rec> frontier;
    frontier.push_back(root);
    for (int layer = 1; layer <= chain_.n; ++layer) {
      std::vector<Rec> next;
      for (const Rec& p : frontier)
        for (int sym = 0; sym < chain_.card_x; ++sym) {
          Rec child;
          if (make_child(p, sym, layer, child)) next.push_back(std::move(child));
        }
      if (layer == chain_.n) break;
      if (cfg_.early_stop.enabled && (next.size() > cfg_.early_stop.max_frontier_nodes ||
                                      rep_.nodes_total > cfg_.early_stop.max_total_nodes)) {
        double up = kLogZero;
        for (const Rec& r : next) up = std::max(up, r.upper);
        stop_with(up);
        return;
      }
      frontier = std::move(next);
    }
  }

  void run_dfs(const Rec& root) {
    std::vector<Rec> stack;
    stack.push_back(root);
    std::vector<Rec> kids;
    while (!stack.empty()) {
      if (cfg_.early_stop.enabled && (stack.size() > cfg_.early_stop.max_frontier_nodes ||
                                      rep_.nodes_total > cfg_.early_stop.max_total_nodes)) {
        double up = kLogZero;
        for (const Rec& r : stack) up = std::max(up, r.upper);
        stop_with(up);
        return;
      }
      Rec p = std::move(stack.back());
      stack.pop_back();
      if (p.arena >= 0 && p.upper < best_lower_ - cfg_.tie_tolerance) continue;  // stale
      kids.clear();
      const int layer = p.st.k + 1;
      for (int sym = 0; sym < chain_.card_x; ++sym) {
        Rec child;
        if (make_child(p, sym, layer, child)) kids.push_back(std::move(child));
      }
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(std::move(*it));
    }
  }

  void run_best(const Rec& root) {
    struct PqRec {
      Rec rec;
      std::vector<int> path;
    };
    auto worse = [](const PqRec& a, const PqRec& b) {
      if (a.rec.upper != b.rec.upper) return a.rec.upper < b.rec.upper;
      if (a.rec.st.k != b.rec.st.k) return a.rec.st.k > b.rec.st.k;
      return a.path > b.path;
    };
    std::priority_queue<PqRec, std::vector<PqRec>, decltype(worse)> open(worse);
    open.push({root, {}});
    while (!open.empty()) {
      if (cfg_.early_stop.enabled && (open.size() > cfg_.early_stop.max_frontier_nodes ||
                                      rep_.nodes_total > cfg_.early_stop.max_total_nodes)) {
        stop_with(open.top().rec.upper);  // the top holds the largest upper
        return;
      }
      PqRec p = open.top();
      open.pop();
      if (p.rec.arena >= 0 && p.rec.upper < best_lower_ - cfg_.tie_tolerance) continue;
      const int layer = p.rec.st.k + 1;
      for (int sym = 0; sym < chain_.card_x; ++sym) {
        Rec child;
        if (make_child(p.rec, sym, layer, child)) {
          std::vector<int> path = p.path;
          path.push_back(sym);
          open.push({std::move(child), std::move(path)});
        }
      }
    }
  }

  void finalize() {
    if (stopped_) {
      rep_.optimum = best_lower_;
      rep_.optimum_lower = best_lower_;
      rep_.optimum_upper = stop_upper_;
    } else {
      double opt = kLogZero;
      for (const auto& c : candidates_) opt = std::max(opt, c.second);
      rep_.status = SearchStatus::Exact;
      rep_.optimum = opt;
      rep_.optimum_lower = opt;
      rep_.optimum_upper = opt;
    }
    const double floor = stopped_ ? best_lower_ : rep_.optimum;
    if (!is_log_zero(floor)) {
      for (auto& c : candidates_)
        if (c.second >= floor - cfg_.tie_tolerance) rep_.argmax_paths.push_back(std::move(c.first));
      std::sort(rep_.argmax_paths.begin(), rep_.argmax_paths.end());
    }
    rep_.incumbent_path = std::move(incumbent_);
    rep_.incumbent_mass = incumbent_mass_;
  }

  const PairChain& chain_;
  const SuffixMass& suffix_;
  BoundEvaluator& bounds_;
  const SearchConfig& cfg_;
  SearchReport rep_;
  std::vector<std::pair<std::int32_t, std::int32_t>> arena_;
  std::vector<std::pair<std::vector<int>, double>> candidates_;
  std::vector<int> incumbent_;
  double incumbent_mass_ = kLogZero;
  double best_lower_ = kLogZero;
  std::vector<long> pw_;
  int w_ = 0;
  bool stopped_ = false;
  double stop_upper_ = kLogZero;
};

}  // namespace

SearchReport branch_and_bound(const PairChain& chain, const SuffixMass& suffix,
                              BoundEvaluator& bounds, const SearchConfig& config) {
  return Searcher(chain, suffix, bounds, config).run();
}

SearchReport branch_and_bound(const PairChain& chain, const SearchConfig& config) {
  SuffixMass suffix = suffix_mass(chain);
  CompositeBounds bounds(chain, suffix, config.bounds, config.budget);
  return branch_and_bound(chain, suffix, bounds, config);
}

}  // namespace maxmarg
