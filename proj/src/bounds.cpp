#include "maxmarg/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "maxmarg/logdomain.hpp"

namespace maxmarg {
namespace {

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t");
  auto b = s.find_last_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

int parse_order(const std::string& tok, const std::string& head, const std::string& key) {
  auto rest = trim(tok.substr(head.size() + 1));
  if (rest.size() < key.size() + 2 || rest.compare(0, key.size() + 1, key + "=") != 0)
    throw std::invalid_argument("bound " + head + " expects " + key + "=<int>: " + tok);
  std::size_t used = 0;
  int v = std::stoi(rest.substr(key.size() + 1), &used);
  if (used != rest.size() - key.size() - 1)
    throw std::invalid_argument("bad integer in bound spec: " + tok);
  return v;
}

// powers of base up to exponent e, guarded against blowing the table budget
std::vector<long> powers(int base, int e, long limit) {
  std::vector<long> pw(e + 1, 1);
  for (int i = 1; i <= e; ++i) {
    if (pw[i - 1] > limit / base) throw ResourceError("bound tables exceed the cell budget");
    pw[i] = pw[i - 1] * base;
  }
  return pw;
}

}  // namespace

BoundConfig BoundConfig::parse(const std::string& text) {
  BoundConfig cfg;
  std::stringstream ss(text);
  std::string tok;
  auto push = [&cfg](BoundSpec spec) {
    if (std::find(cfg.specs.begin(), cfg.specs.end(), spec) == cfg.specs.end())
      cfg.specs.push_back(spec);
  };
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    if (tok == "simple") {
      push({BoundKind::Simple, 0});
    } else if (tok == "samuelson") {
      push({BoundKind::Samuelson, 0});
    } else if (tok == "ux") {
      push({BoundKind::JointMax, 0});
    } else if (tok.rfind("ps-alt:", 0) == 0) {
      int r = parse_order(tok, "ps-alt", "r");
      if (r < 1) throw std::invalid_argument("ps-alt needs r >= 1");
      push({BoundKind::PowerSumCompact, r});
    } else if (tok.rfind("ps:", 0) == 0) {
      int r = parse_order(tok, "ps", "r");
      if (r < 1) throw std::invalid_argument("ps needs r >= 1");
      push({BoundKind::PowerSum, r});
    } else if (tok.rfind("sms:", 0) == 0) {
      int m = parse_order(tok, "sms", "m");
      if (m < 1) throw std::invalid_argument("sms needs m >= 1");
      push({BoundKind::SumMaxSum, m});
    } else if (tok.rfind("mviterbi:", 0) == 0) {
      int m = parse_order(tok, "mviterbi", "m");
      if (m < 0) throw std::invalid_argument("mviterbi needs m >= 0");
      push({BoundKind::MViterbi, m});
    } else {
      throw std::invalid_argument("unknown bound spec: " + tok);
    }
  }
  bool has_simple = std::find_if(cfg.specs.begin(), cfg.specs.end(), [](const BoundSpec& s) {
                      return s.kind == BoundKind::Simple;
                    }) != cfg.specs.end();
  if (!has_simple) cfg.specs.insert(cfg.specs.begin(), {BoundKind::Simple, 0});
  return cfg;
}

std::string BoundConfig::to_string() const {
  std::string out;
  for (const BoundSpec& s : specs) {
    if (!out.empty()) out += ",";
    switch (s.kind) {
      case BoundKind::Simple: out += "simple"; break;
      case BoundKind::PowerSum: out += "ps:r=" + std::to_string(s.order); break;
      case BoundKind::PowerSumCompact: out += "ps-alt:r=" + std::to_string(s.order); break;
      case BoundKind::Samuelson: out += "samuelson"; break;
      case BoundKind::SumMaxSum: out += "sms:m=" + std::to_string(s.order); break;
      case BoundKind::MViterbi: out += "mviterbi:m=" + std::to_string(s.order); break;
      case BoundKind::JointMax: out += "ux"; break;
    }
  }
  return out;
}

// ---- power sums via independent copies --------------------------------------

PsTables ps_prepare(const PairChain& chain, const SuffixMass& suffix, int r,
                    const ResourceBudget& budget) {
  if (r < 1) throw std::invalid_argument("ps_prepare: r must be >= 1");
  PsTables t;
  t.r = r;
  t.n = chain.n;
  t.card_x = chain.card_x;
  t.card_u = chain.card_u;
  const int cu = chain.card_u;
  std::size_t dummy = 1;
  for (int j = 0; j < r; ++j) {
    if (dummy > budget.max_table_cells / cu) throw ResourceError("power-sum table too large");
    dummy *= cu;
  }
  t.dummy = dummy;
  std::size_t cells = static_cast<std::size_t>(chain.n) * chain.card_x * dummy;
  if (cells > budget.max_table_cells) throw ResourceError("power-sum table too large");

  t.b.resize(chain.n);
  if (r == 1) {
    // Shares the exact recursion (and therefore the exact bits) of the plain
    // suffix masses.
    for (int k = 1; k <= chain.n; ++k) t.b[k - 1] = suffix.m[k];
    return t;
  }

  const std::size_t row = static_cast<std::size_t>(chain.card_x) * dummy;
  t.b[chain.n - 1].assign(row, kLogOne);
  std::vector<double> cur(dummy), nxt(dummy), out(dummy);
  std::vector<double> w(static_cast<std::size_t>(cu) * cu);
  for (int k = chain.n - 1; k >= 1; --k) {
    t.b[k - 1].assign(row, kLogZero);
    const std::vector<LogWeight>& prev = t.b[k];
    for (int x = 0; x < chain.card_x; ++x) {
      for (int x2 = 0; x2 < chain.card_x; ++x2) {
        for (int u = 0; u < cu; ++u)
          for (int u2 = 0; u2 < cu; ++u2) w[u * cu + u2] = chain.step(k + 1, x, u, x2, u2);
        std::copy(prev.begin() + x2 * dummy, prev.begin() + (x2 + 1) * dummy, cur.begin());
        // Contract every copy of u from destination to source index, one
        // tensor mode at a time.
        std::size_t outer = 1, stride = dummy / cu;
        for (int mode = 0; mode < r; ++mode) {
          for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t in = 0; in < stride; ++in)
              for (int d = 0; d < cu; ++d) {
                LseAcc acc;
                for (int d2 = 0; d2 < cu; ++d2)
                  acc.add(log_mul(w[d * cu + d2], cur[(o * cu + d2) * stride + in]));
                nxt[(o * cu + d) * stride + in] = acc.value();
              }
          cur.swap(nxt);
          outer *= cu;
          stride /= cu;
        }
        if (x2 == 0) {
          out = cur;
        } else {
          for (std::size_t i = 0; i < dummy; ++i) out[i] = log_add(out[i], cur[i]);
        }
      }
      std::copy(out.begin(), out.end(), t.b[k - 1].begin() + x * dummy);
    }
  }
  return t;
}

namespace {

// Sum over all copies of the per-copy weights a: repeatedly folds the least
// significant tensor mode away.  scratch starts as a b-slice of size dummy.
double fold_copies(std::vector<double>& scratch, std::size_t dummy, int r, int cu,
                   const LogWeight* a) {
  std::size_t size = dummy;
  for (int j = 0; j < r; ++j) {
    size /= cu;
    for (std::size_t q = 0; q < size; ++q) {
      LseAcc acc;
      for (int d = 0; d < cu; ++d) acc.add(log_mul(a[d], scratch[q * cu + d]));
      scratch[q] = acc.value();
    }
  }
  return scratch[0];
}

}  // namespace

LogWeight ps_log_power_sum(const PsTables& t, const PairChain& chain, const AlphaState& node) {
  const int cu = chain.card_u;
  std::vector<double> scratch(t.dummy);
  if (node.k == 0) {
    if (t.r == 1) {
      // Mirrors the whole-tree total fold exactly.
      LseAcc outer;
      for (int x = 0; x < chain.card_x; ++x) {
        LseAcc inner;
        for (int u = 0; u < cu; ++u) inner.add(log_mul(chain.w1(x, u), t.b[0][x * cu + u]));
        outer.add(inner.value());
      }
      return outer.value();
    }
    LseAcc outer;
    std::vector<double> w1(cu);
    for (int x = 0; x < chain.card_x; ++x) {
      for (int u = 0; u < cu; ++u) w1[u] = chain.w1(x, u);
      std::copy(t.b[0].begin() + x * t.dummy, t.b[0].begin() + (x + 1) * t.dummy, scratch.begin());
      outer.add(fold_copies(scratch, t.dummy, t.r, cu, w1.data()));
    }
    return outer.value();
  }
  const std::vector<double>& b = t.b[node.k - 1];
  std::copy(b.begin() + node.last_x * t.dummy, b.begin() + (node.last_x + 1) * t.dummy,
            scratch.begin());
  return fold_copies(scratch, t.dummy, t.r, cu, node.alpha.data());
}

// ---- power sums on multiset counts ------------------------------------------

namespace {

void enumerate_counts(int slots, int total, std::vector<int>& cur,
                      std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == slots - 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int c = 0; c <= total; ++c) {
    cur.push_back(c);
    enumerate_counts(slots, total - c, cur, out);
    cur.pop_back();
  }
}

void enumerate_flows(const std::vector<int>& lambda, int cu, int u, std::vector<int>& flat,
                     const std::vector<double>& lf, const std::map<std::vector<int>, int>& index,
                     std::vector<CountPsFlow>& out, std::size_t limit) {
  if (u == static_cast<int>(lambda.size())) {
    CountPsFlow f;
    std::vector<int> dst(cu, 0);
    f.log_coef = 0.0;
    for (int a = 0; a < static_cast<int>(lambda.size()); ++a) {
      f.log_coef += lf[lambda[a]];
      for (int b = 0; b < cu; ++b) {
        int c = flat[a * cu + b];
        dst[b] += c;
        f.log_coef -= lf[c];
        if (c > 0) f.powers.push_back({a, b, c});
      }
    }
    f.dst = index.at(dst);
    if (out.size() >= limit) throw ResourceError("count power-sum flow table too large");
    out.push_back(std::move(f));
    return;
  }
  // compositions of lambda[u] into cu destination counts
  std::vector<int> comp(cu, 0);
  int rem = lambda[u];
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == cu - 1) {
      comp[pos] = left;
      for (int b = 0; b < cu; ++b) flat[u * cu + b] = comp[b];
      enumerate_flows(lambda, cu, u + 1, flat, lf, index, out, limit);
      return;
    }
    for (int c = 0; c <= left; ++c) {
      comp[pos] = c;
      rec(pos + 1, left - c);
    }
  };
  rec(0, rem);
}

}  // namespace

CountPsTables count_ps_prepare(const PairChain& chain, int r, const ResourceBudget& budget) {
  if (r < 1) throw std::invalid_argument("count_ps_prepare: r must be >= 1");
  CountPsTables t;
  t.r = r;
  t.n = chain.n;
  t.card_x = chain.card_x;
  t.card_u = chain.card_u;
  const int cu = chain.card_u;

  std::vector<int> cur;
  enumerate_counts(cu, r, cur, t.lambdas);
  const std::size_t L = t.lambdas.size();
  std::size_t cells = static_cast<std::size_t>(chain.n) * chain.card_x * L;
  if (cells > budget.max_table_cells) throw ResourceError("count power-sum table too large");

  std::vector<double> lf(r + 1, 0.0);
  for (int i = 2; i <= r; ++i) lf[i] = lf[i - 1] + std::log(static_cast<double>(i));

  std::map<std::vector<int>, int> index;
  for (std::size_t i = 0; i < L; ++i) index[t.lambdas[i]] = static_cast<int>(i);

  t.log_multinom.resize(L);
  for (std::size_t i = 0; i < L; ++i) {
    double v = lf[r];
    for (int c : t.lambdas[i]) v -= lf[c];
    t.log_multinom[i] = v;
  }

  t.flows.resize(L);
  std::vector<int> flat(static_cast<std::size_t>(cu) * cu, 0);
  for (std::size_t i = 0; i < L; ++i)
    enumerate_flows(t.lambdas[i], cu, 0, flat, lf, index, t.flows[i], 1u << 22);

  const std::size_t row = static_cast<std::size_t>(chain.card_x) * L;
  t.b.resize(chain.n);
  t.b[chain.n - 1].assign(row, kLogOne);
  for (int k = chain.n - 1; k >= 1; --k) {
    t.b[k - 1].assign(row, kLogZero);
    const std::vector<double>& prev = t.b[k];
    for (int x = 0; x < chain.card_x; ++x)
      for (std::size_t i = 0; i < L; ++i) {
        LseAcc acc;
        for (int x2 = 0; x2 < chain.card_x; ++x2)
          for (const CountPsFlow& f : t.flows[i]) {
            double term = f.log_coef + prev[x2 * L + f.dst];
            for (const auto& p : f.powers) {
              double w = chain.step(k + 1, x, p[0], x2, p[1]);
              if (is_log_zero(w)) {
                term = kLogZero;
                break;
              }
              term += p[2] * w;
            }
            acc.add(term);
          }
        t.b[k - 1][x * L + i] = acc.value();
      }
  }
  return t;
}

namespace {

double count_alpha_term(const std::vector<int>& lambda, const LogWeight* a) {
  double s = 0.0;
  for (std::size_t u = 0; u < lambda.size(); ++u) {
    if (lambda[u] == 0) continue;
    if (is_log_zero(a[u])) return kLogZero;
    s += lambda[u] * a[u];
  }
  return s;
}

}  // namespace

LogWeight count_ps_log_power_sum(const CountPsTables& t, const PairChain& chain,
                                 const AlphaState& node) {
  const std::size_t L = t.lambdas.size();
  if (node.k == 0) {
    LseAcc outer;
    std::vector<double> w1(chain.card_u);
    for (int x = 0; x < chain.card_x; ++x) {
      for (int u = 0; u < chain.card_u; ++u) w1[u] = chain.w1(x, u);
      LseAcc inner;
      for (std::size_t i = 0; i < L; ++i) {
        double a = count_alpha_term(t.lambdas[i], w1.data());
        if (is_log_zero(a)) continue;
        inner.add(t.log_multinom[i] + a + t.b[0][x * L + i]);
      }
      outer.add(inner.value());
    }
    return outer.value();
  }
  const std::vector<double>& b = t.b[node.k - 1];
  LseAcc acc;
  for (std::size_t i = 0; i < L; ++i) {
    double a = count_alpha_term(t.lambdas[i], node.alpha.data());
    if (is_log_zero(a)) continue;
    acc.add(t.log_multinom[i] + a + b[node.last_x * L + i]);
  }
  return acc.value();
}

// ---- sum-max-sum block relaxation --------------------------------------------

namespace {

// Max over symbol assignments for positions s+1..e of the u-summed block
// weight from state (x, u) at position s, closing with vend at position e.
// Result indexed x*card_u + u.  Requires s >= 1.
std::vector<double> sms_block(const PairChain& chain, const std::vector<double>& vend, int s,
                              int e) {
  const int cx = chain.card_x, cu = chain.card_u;
  const int len = e - s;
  if (len == 0) return vend;
  double combos = std::pow(static_cast<double>(cx), len);
  if (combos > static_cast<double>(1 << 22))
    throw ResourceError("block enumeration too large; lower m");
  std::vector<double> out(static_cast<std::size_t>(cx) * cu, kLogZero);
  std::vector<int> a(len, 0);
  std::vector<double> fwd(cu), nxt(cu);
  for (int x = 0; x < cx; ++x)
    for (int u = 0; u < cu; ++u) {
      double best = kLogZero;
      std::fill(a.begin(), a.end(), 0);
      while (true) {
        for (int un = 0; un < cu; ++un) fwd[un] = chain.step(s + 1, x, u, a[0], un);
        for (int t = s + 2; t <= e; ++t) {
          for (int un = 0; un < cu; ++un) {
            LseAcc acc;
            for (int um = 0; um < cu; ++um)
              acc.add(log_mul(fwd[um], chain.step(t, a[t - s - 2], um, a[t - s - 1], un)));
            nxt[un] = acc.value();
          }
          fwd.swap(nxt);
        }
        LseAcc close;
        for (int un = 0; un < cu; ++un) close.add(log_mul(fwd[un], vend[a[len - 1] * cu + un]));
        best = std::max(best, close.value());
        int pos = len - 1;
        while (pos >= 0 && ++a[pos] == cx) a[pos--] = 0;
        if (pos < 0) break;
      }
      out[x * cu + u] = best;
    }
  return out;
}

// Same enumeration anchored at the first position (uses the initial weights).
double sms_root_value(const PairChain& chain, const std::vector<double>& vend, int e) {
  const int cx = chain.card_x, cu = chain.card_u;
  double combos = std::pow(static_cast<double>(cx), e);
  if (combos > static_cast<double>(1 << 22))
    throw ResourceError("block enumeration too large; lower m");
  std::vector<int> a(e, 0);
  std::vector<double> fwd(cu), nxt(cu);
  double best = kLogZero;
  while (true) {
    for (int u = 0; u < cu; ++u) fwd[u] = chain.w1(a[0], u);
    for (int t = 2; t <= e; ++t) {
      for (int un = 0; un < cu; ++un) {
        LseAcc acc;
        for (int um = 0; um < cu; ++um)
          acc.add(log_mul(fwd[um], chain.step(t, a[t - 2], um, a[t - 1], un)));
        nxt[un] = acc.value();
      }
      fwd.swap(nxt);
    }
    LseAcc close;
    for (int u = 0; u < cu; ++u) close.add(log_mul(fwd[u], vend[a[e - 1] * cu + u]));
    best = std::max(best, close.value());
    int pos = e - 1;
    while (pos >= 0 && ++a[pos] == cx) a[pos--] = 0;
    if (pos < 0) break;
  }
  return best;
}

}  // namespace

SmsTables sms_prepare(const PairChain& chain, int m, const ResourceBudget& budget) {
  if (m < 1) throw std::invalid_argument("sms_prepare: m must be >= 1");
  SmsTables t;
  t.m = m;
  t.n = chain.n;
  t.card_x = chain.card_x;
  t.card_u = chain.card_u;
  const int boundaries = (chain.n - 1) / m;  // deepest boundary stays >= 1
  std::size_t cells = static_cast<std::size_t>(boundaries + 1) * chain.pair();
  if (cells > budget.max_table_cells) throw ResourceError("block relaxation table too large");
  t.v.resize(boundaries + 1);
  t.v[0].assign(chain.pair(), kLogOne);
  for (int j = 1; j <= boundaries; ++j)
    t.v[j] = sms_block(chain, t.v[j - 1], chain.n - j * m, chain.n - (j - 1) * m);
  return t;
}

LogWeight sms_upper(const SmsTables& t, const PairChain& chain, const AlphaState& node,
                    std::vector<std::optional<std::vector<double>>>& partial_memo) {
  const int n = chain.n, m = t.m, cu = chain.card_u;
  if (node.k == 0) {
    int b = n - m * ((n - 1) / m);
    return sms_root_value(chain, t.v[(n - b) / m], b);
  }
  const int k = node.k;
  if (!partial_memo[k]) {
    int j = (n - k) / m;
    int b = n - j * m;  // nearest boundary at or after k, less than m away
    partial_memo[k] = (b == k) ? t.v[j] : sms_block(chain, t.v[j], k, b);
  }
  const std::vector<double>& p = *partial_memo[k];
  LseAcc acc;
  for (int u = 0; u < cu; ++u) acc.add(log_mul(node.alpha[u], p[node.last_x * cu + u]));
  return acc.value();
}

// ---- greedy completion under the order-m factorization ------------------------

MViterbiTables mviterbi_prepare(const PairChain& chain, const SuffixMass& suffix, int m,
                                const ResourceBudget& budget) {
  if (m < 0) throw std::invalid_argument("mviterbi_prepare: m must be >= 0");
  MViterbiTables t;
  t.m = m;
  t.big_m = std::max(m, 1);
  t.n = chain.n;
  t.card_x = chain.card_x;
  t.card_u = chain.card_u;
  const int n = chain.n, cx = chain.card_x, cu = chain.card_u;

  std::vector<long> pw = powers(cx, std::min(m + 1, n),
                                static_cast<long>(budget.max_table_cells));
  auto pwof = [&](int e) { return pw[std::min<int>(e, static_cast<int>(pw.size()) - 1)]; };
  std::size_t cond_cells = 0;
  for (int tt = 1; tt <= n; ++tt) cond_cells += static_cast<std::size_t>(pwof(std::min(m, tt - 1))) * cx;
  std::size_t beta_cells =
      n > t.big_m ? static_cast<std::size_t>(n - t.big_m) * pwof(t.big_m) * cu : 0;
  if (cond_cells + beta_cells > budget.max_table_cells)
    throw ResourceError("window tables too large; lower m");

  // Forward distribution over (trailing window, u); window length min(t, m+1).
  auto wlen = [&](int tt) { return std::min(tt, m + 1); };
  std::vector<double> cur(static_cast<std::size_t>(cx) * cu);
  for (int x = 0; x < cx; ++x)
    for (int u = 0; u < cu; ++u) cur[x * cu + u] = chain.w1(x, u);

  t.cond.resize(n);
  std::vector<double> n_prev;  // window marginals at the previous position
  for (int tt = 1; tt <= n; ++tt) {
    const long wsz = pwof(wlen(tt));
    // window marginals under the full chain: forward mass times the suffix
    // mass, so the conditionals stay exact on sub-stochastic chains
    std::vector<double> n_here(wsz);
    for (long w = 0; w < wsz; ++w) {
      const int xl = static_cast<int>(w % cx);
      LseAcc acc;
      for (int u = 0; u < cu; ++u) acc.add(log_mul(cur[w * cu + u], suffix.at(tt, xl, u)));
      n_here[w] = acc.value();
    }
    const int L = std::min(m, tt - 1);
    t.cond[tt - 1].assign(static_cast<std::size_t>(pwof(L)) * cx, kLogZero);
    for (long h = 0; h < pwof(L); ++h) {
      double d;
      if (tt == 1) {
        LseAcc acc;
        for (long w = 0; w < wsz; ++w) acc.add(n_here[w]);
        d = acc.value();
      } else if (L == wlen(tt - 1)) {
        d = n_prev[h];
      } else {
        LseAcc acc;
        for (int x0 = 0; x0 < cx; ++x0) acc.add(n_prev[x0 * pwof(L) + h]);
        d = acc.value();
      }
      for (int x = 0; x < cx; ++x)
        t.cond[tt - 1][h * cx + x] =
            is_log_zero(d) ? kLogZero : n_here[h * cx + x] - d;
    }
    n_prev = std::move(n_here);
    if (tt == n) break;
    // advance the forward distribution
    const bool grow = wlen(tt + 1) == wlen(tt) + 1;
    const long next_sz = pwof(wlen(tt + 1));
    std::vector<LseAcc> acc(static_cast<std::size_t>(next_sz) * cu);
    for (long w = 0; w < wsz; ++w) {
      const int xl = static_cast<int>(w % cx);
      for (int u = 0; u < cu; ++u) {
        const double a = cur[w * cu + u];
        if (is_log_zero(a)) continue;
        for (int x2 = 0; x2 < cx; ++x2) {
          const long wn = (grow ? w : w % pwof(wlen(tt) - 1)) * cx + x2;
          for (int u2 = 0; u2 < cu; ++u2)
            acc[wn * cu + u2].add(log_mul(a, chain.step(tt + 1, xl, u, x2, u2)));
        }
      }
    }
    cur.assign(static_cast<std::size_t>(next_sz) * cu, kLogZero);
    for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = acc[i].value();
  }

  // Backward choice tables over the conditioning windows.
  t.delta.resize(n);
  t.gamma.resize(n);
  std::vector<double> dnext;  // delta at position tt+1
  for (int tt = n; tt >= 1; --tt) {
    const int L = std::min(m, tt - 1);
    const int Lnext = std::min(m, tt);
    t.delta[tt - 1].assign(pwof(L), kLogZero);
    t.gamma[tt - 1].assign(pwof(L), 0);
    for (long h = 0; h < pwof(L); ++h) {
      double best = kLogZero;
      int bx = 0;
      for (int x = 0; x < cx; ++x) {
        double v = t.cond[tt - 1][h * cx + x];
        if (tt < n) {
          long full = h * cx + x;
          v = log_mul(v, dnext[L + 1 > Lnext ? full % pwof(Lnext) : full]);
        }
        if (x == 0 || v > best + kArgmaxTieTol) {
          best = v;
          bx = x;
        }
      }
      t.delta[tt - 1][h] = best;
      t.gamma[tt - 1][h] = bx;
    }
    dnext = t.delta[tt - 1];
  }

  // True-weight continuation tables along the canonical completion, indexed by
  // the length-big_m window ending just before the completion starts.
  const int M = t.big_m;
  if (n > M) {
    t.cont_beta.resize(n - M);
    std::vector<double> beta_next(static_cast<std::size_t>(pwof(M)) * cu, kLogOne);
    for (int tt = n; tt >= M + 1; --tt) {
      auto& here = t.cont_beta[tt - M - 1];
      here.assign(static_cast<std::size_t>(pwof(M)) * cu, kLogZero);
      for (long w = 0; w < pwof(M); ++w) {
        const long hg = w % pwof(std::min(m, tt - 1));
        const int xh = t.gamma[tt - 1][hg];
        const long wn = (w % pwof(M - 1)) * cx + xh;
        const int xl = static_cast<int>(w % cx);
        for (int u = 0; u < cu; ++u) {
          LseAcc acc;
          for (int u2 = 0; u2 < cu; ++u2)
            acc.add(log_mul(chain.step(tt, xl, u, xh, u2), beta_next[wn * cu + u2]));
          here[w * cu + u] = acc.value();
        }
      }
      beta_next = here;
    }
  }

  // Decode from the empty prefix.
  t.root_path.resize(n);
  long h = 0;
  for (int tt = 1; tt <= n; ++tt) {
    const int x = t.gamma[tt - 1][h];
    t.root_path[tt - 1] = x;
    h = (h * cx + x) % pwof(std::min(m, tt));
  }
  t.root_mass = path_mass(chain, t.root_path);
  return t;
}

std::vector<int> mviterbi_completion(const MViterbiTables& t, int k, long window_code,
                                     int window_len) {
  if (k == 0) return t.root_path;
  const int cx = t.card_x;
  std::vector<long> pw(t.big_m + 1, 1);
  for (int i = 1; i <= t.big_m; ++i) pw[i] = pw[i - 1] * cx;
  int wl = std::min({k, t.big_m, window_len});
  if (wl < std::min(k, t.m)) throw std::invalid_argument("window too short for completion");
  long h = window_code % pw[wl];
  std::vector<int> out;
  for (int tt = k + 1; tt <= t.n; ++tt) {
    const int L = std::min(t.m, tt - 1);
    const int x = t.gamma[tt - 1][h % pw[std::min(L, wl)]];
    out.push_back(x);
    h = h * cx + x;
    wl = std::min(wl + 1, t.big_m);
    h %= pw[wl];
  }
  return out;
}

LogWeight mviterbi_lower(const MViterbiTables& t, const PairChain& chain, const AlphaState& node,
                         long window_code, int window_len) {
  if (node.k == 0) return t.root_mass;
  const int n = t.n, cx = t.card_x, cu = t.card_u, M = t.big_m;
  std::vector<long> pw(M + 1, 1);
  for (int i = 1; i <= M; ++i) pw[i] = pw[i - 1] * cx;
  const int k = node.k;
  int wl = std::min(k, M);
  if (window_len < wl) throw std::invalid_argument("window too short for bound");
  long w = window_code % pw[wl];
  std::vector<double> a(node.alpha.begin(), node.alpha.end());
  std::vector<double> nx(cu);
  int xl = node.last_x;
  for (int tt = k + 1; tt <= n; ++tt) {
    if (wl == M) {
      const auto& cb = t.cont_beta[tt - M - 1];
      LseAcc acc;
      for (int u = 0; u < cu; ++u) acc.add(log_mul(a[u], cb[w * cu + u]));
      return acc.value();
    }
    const int L = std::min(t.m, tt - 1);
    const int xh = t.gamma[tt - 1][w % pw[std::min(L, wl)]];
    for (int u2 = 0; u2 < cu; ++u2) {
      LseAcc acc;
      for (int u = 0; u < cu; ++u) acc.add(log_mul(a[u], chain.step(tt, xl, u, xh, u2)));
      nx[u2] = acc.value();
    }
    a.swap(nx);
    w = w * cx + xh;
    wl = std::min(wl + 1, M);
    w %= pw[wl];
    xl = xh;
  }
  LseAcc acc;
  for (int u = 0; u < cu; ++u) acc.add(a[u]);
  return acc.value();
}

LogWeight mviterbi_q_value(const MViterbiTables& t, const std::vector<int>& path) {
  if (static_cast<int>(path.size()) != t.n)
    throw std::invalid_argument("mviterbi_q_value: path length mismatch");
  const int cx = t.card_x;
  std::vector<long> pw(t.m + 1, 1);
  for (int i = 1; i <= t.m; ++i) pw[i] = pw[i - 1] * cx;
  double q = 0.0;
  long h = 0;
  for (int tt = 1; tt <= t.n; ++tt) {
    q += t.cond[tt - 1][h * cx + path[tt - 1]];
    if (std::isinf(q)) return kLogZero;
    h = (h * cx + path[tt - 1]) % pw[std::min(t.m, tt)];
  }
  return q;
}

// ---- composite evaluator -------------------------------------------------------

CompositeBounds::CompositeBounds(const PairChain& chain, const SuffixMass& suffix,
                                 const BoundConfig& config, const ResourceBudget& budget)
    : chain_(chain), suffix_(suffix), config_(config) {
  const std::size_t ns = config_.specs.size();
  ps_.resize(ns);
  count_ps_.resize(ns);
  sms_.resize(ns);
  mv_.resize(ns);
  sms_memo_.resize(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    const BoundSpec& s = config_.specs[i];
    switch (s.kind) {
      case BoundKind::Simple:
        break;
      case BoundKind::PowerSum:
        ps_[i] = std::make_unique<PsTables>(ps_prepare(chain, suffix, s.order, budget));
        break;
      case BoundKind::PowerSumCompact:
        count_ps_[i] = std::make_unique<CountPsTables>(count_ps_prepare(chain, s.order, budget));
        break;
      case BoundKind::Samuelson:
        if (!samuelson_s2_)
          samuelson_s2_ = std::make_unique<PsTables>(ps_prepare(chain, suffix, 2, budget));
        break;
      case BoundKind::SumMaxSum:
        sms_[i] = std::make_unique<SmsTables>(sms_prepare(chain, s.order, budget));
        sms_memo_[i].assign(chain.n + 1, std::nullopt);
        break;
      case BoundKind::MViterbi:
        mv_[i] = std::make_unique<MViterbiTables>(mviterbi_prepare(chain, suffix, s.order, budget));
        break;
      case BoundKind::JointMax:
        if (!joint_) {
          joint_ = std::make_unique<JointMaxTable>(joint_max_table(chain));
          root_joint_ = joint_viterbi(chain);
        }
        break;
    }
  }
  for (std::size_t i = 0; i < ns; ++i)
    if (config_.specs[i].kind == BoundKind::MViterbi)
      window_symbols_ = std::max(window_symbols_, std::max(config_.specs[i].order, 1));
}

LogWeight CompositeBounds::joint_lower(const AlphaState& node, int* best_x, int* best_u) const {
  const int k = node.k, cu = chain_.card_u;
  if (k == 0) {
    if (best_x) *best_x = root_joint_.x.empty() ? 0 : root_joint_.x[0];
    if (best_u) *best_u = root_joint_.u.empty() ? 0 : root_joint_.u[0];
    return root_joint_.weight;
  }
  if (k == chain_.n) return node.prefix_mass;
  double best = kLogZero;
  bool any = false;
  for (int x2 = 0; x2 < chain_.card_x; ++x2)
    for (int u2 = 0; u2 < cu; ++u2) {
      LseAcc acc;
      for (int u = 0; u < cu; ++u)
        acc.add(log_mul(node.alpha[u], chain_.step(k + 1, node.last_x, u, x2, u2)));
      const double v = log_mul(acc.value(), joint_->at(k + 1, x2, u2));
      if (!any || v > best) {
        best = v;
        any = true;
        if (best_x) *best_x = x2;
        if (best_u) *best_u = u2;
      }
    }
  return best;
}

NodeBounds CompositeBounds::evaluate(const AlphaState& node, long window_code, int window_len) {
  NodeBounds out;
  const int n = chain_.n, k = node.k;
  const double spread = (n - k) * std::log(static_cast<double>(chain_.card_x));
  auto offer_upper = [&out](int i, double v) {
    if (out.upper_source < 0 || v < out.upper) {
      out.upper = v;
      out.upper_source = i;
    }
  };
  auto offer_lower = [&out](int i, double v, bool has_path) {
    if (out.lower_source < 0 || v > out.lower) {
      out.lower = v;
      out.lower_source = i;
      out.lower_has_path = has_path;
    }
  };
  for (std::size_t i = 0; i < config_.specs.size(); ++i) {
    const BoundSpec& s = config_.specs[i];
    const int idx = static_cast<int>(i);
    switch (s.kind) {
      case BoundKind::Simple:
        offer_upper(idx, node.prefix_mass);
        offer_lower(idx, is_log_zero(node.prefix_mass) ? kLogZero : node.prefix_mass - spread,
                    false);
        break;
      case BoundKind::PowerSum: {
        const double ps = ps_log_power_sum(*ps_[i], chain_, node);
        offer_upper(idx, ps / s.order);
        offer_lower(idx, is_log_zero(ps) ? kLogZero : (ps - spread) / s.order, false);
        break;
      }
      case BoundKind::PowerSumCompact: {
        const double ps = count_ps_log_power_sum(*count_ps_[i], chain_, node);
        offer_upper(idx, ps / s.order);
        offer_lower(idx, is_log_zero(ps) ? kLogZero : (ps - spread) / s.order, false);
        break;
      }
      case BoundKind::Samuelson: {
        const double s1 = node.prefix_mass;
        if (k == n || is_log_zero(s1)) {
          offer_upper(idx, s1);
          offer_lower(idx, s1, false);
          break;
        }
        const double s2 = ps_log_power_sum(*samuelson_s2_, chain_, node);
        const double log_n = spread;
        const double log_n1 = log_n + std::log1p(-std::exp(-log_n));
        double a = log_n + s2 - 2.0 * s1;
        if (a < 0.0) a = 0.0;
        const double half = 0.5 * (log_n1 + log_expm1(a));
        const double soft = half > 30.0 ? half : std::log1p(std::exp(half));
        offer_upper(idx, s1 - log_n + soft);
        offer_lower(idx, s2 - s1, false);
        break;
      }
      case BoundKind::SumMaxSum:
        offer_upper(idx, sms_upper(*sms_[i], chain_, node, sms_memo_[i]));
        break;
      case BoundKind::MViterbi:
        offer_lower(idx, mviterbi_lower(*mv_[i], chain_, node, window_code, window_len), true);
        break;
      case BoundKind::JointMax:
        offer_lower(idx, joint_lower(node, nullptr, nullptr), true);
        break;
    }
  }
  return out;
}

std::vector<int> CompositeBounds::materialize_lower_path(const AlphaState& node, long window_code,
                                                         int window_len, int spec_index) {
  const BoundSpec& s = config_.specs[spec_index];
  if (s.kind == BoundKind::MViterbi)
    return mviterbi_completion(*mv_[spec_index], node.k, window_code, window_len);
  if (s.kind == BoundKind::JointMax) {
    if (node.k == 0) return root_joint_.x;
    if (node.k == chain_.n) return {};
    int x2 = 0, u2 = 0;
    joint_lower(node, &x2, &u2);
    std::vector<int> out;
    out.push_back(x2);
    int x = x2, u = u2;
    for (int t = node.k + 1; t < chain_.n; ++t) {
      const std::int32_t packed = joint_->arg[t][x * chain_.card_u + u];
      x = packed / chain_.card_u;
      u = packed % chain_.card_u;
      out.push_back(x);
    }
    return out;
  }
  return {};
}

const MViterbiTables* CompositeBounds::mviterbi_tables(int m) const {
  for (std::size_t i = 0; i < config_.specs.size(); ++i)
    if (config_.specs[i].kind == BoundKind::MViterbi && config_.specs[i].order == m)
      return mv_[i].get();
  return nullptr;
}

const PsTables* CompositeBounds::ps_tables(int r) const {
  for (std::size_t i = 0; i < config_.specs.size(); ++i)
    if (config_.specs[i].kind == BoundKind::PowerSum && config_.specs[i].order == r)
      return ps_[i].get();
  return nullptr;
}

const CountPsTables* CompositeBounds::count_ps_tables(int r) const {
  for (std::size_t i = 0; i < config_.specs.size(); ++i)
    if (config_.specs[i].kind == BoundKind::PowerSumCompact && config_.specs[i].order == r)
      return count_ps_[i].get();
  return nullptr;
}

}  // namespace maxmarg
