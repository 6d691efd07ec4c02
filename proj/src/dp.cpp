#include "maxmarg/dp.hpp"

#include <stdexcept>

namespace maxmarg {

SuffixMass suffix_mass(const PairChain& chain) {
  SuffixMass s;
  s.n = chain.n;
  s.card_x = chain.card_x;
  s.card_u = chain.card_u;
  s.m.resize(chain.n + 1);
  s.m[chain.n].assign(chain.pair(), kLogOne);
  // The x'-outer / u'-inner fold order is a contract: the power-sum tables at
  // r = 1 must reproduce these values bit-for-bit.
  for (int t = chain.n - 1; t >= 1; --t) {
    s.m[t].assign(chain.pair(), kLogZero);
    for (int x = 0; x < chain.card_x; ++x)
      for (int u = 0; u < chain.card_u; ++u) {
        LseAcc outer;
        for (int xn = 0; xn < chain.card_x; ++xn) {
          LseAcc inner;
          for (int un = 0; un < chain.card_u; ++un)
            inner.add(log_mul(chain.step(t + 1, x, u, xn, un), s.m[t + 1][xn * chain.card_u + un]));
          outer.add(inner.value());
        }
        s.m[t][x * chain.card_u + u] = outer.value();
      }
  }
  return s;
}

JointMaxTable joint_max_table(const PairChain& chain) {
  JointMaxTable j;
  j.n = chain.n;
  j.card_x = chain.card_x;
  j.card_u = chain.card_u;
  j.delta.resize(chain.n + 1);
  j.arg.resize(chain.n);
  j.delta[chain.n].assign(chain.pair(), kLogOne);
  for (int t = chain.n - 1; t >= 1; --t) {
    j.delta[t].assign(chain.pair(), kLogZero);
    j.arg[t].assign(chain.pair(), 0);
    for (int x = 0; x < chain.card_x; ++x)
      for (int u = 0; u < chain.card_u; ++u) {
        LogWeight best = kLogZero;
        std::int32_t best_arg = 0;
        bool first = true;
        for (int xn = 0; xn < chain.card_x; ++xn)
          for (int un = 0; un < chain.card_u; ++un) {
            LogWeight v =
                log_mul(chain.step(t + 1, x, u, xn, un), j.delta[t + 1][xn * chain.card_u + un]);
            if (first || v > best + kArgmaxTieTol) {
              best = v;
              best_arg = static_cast<std::int32_t>(xn * chain.card_u + un);
              first = false;
            }
          }
        j.delta[t][x * chain.card_u + u] = best;
        j.arg[t][x * chain.card_u + u] = best_arg;
      }
  }
  return j;
}

std::pair<SuffixMass, JointMaxTable> suffix_tables(const PairChain& chain) {
  return {suffix_mass(chain), joint_max_table(chain)};
}

AlphaState root_state(const PairChain& chain, const SuffixMass& suffix) {
  AlphaState st;
  st.k = 0;
  st.last_x = -1;
  LseAcc outer;
  for (int x = 0; x < chain.card_x; ++x) {
    LseAcc inner;
    for (int u = 0; u < chain.card_u; ++u)
      inner.add(log_mul(chain.w1(x, u), suffix.at(1, x, u)));
    outer.add(inner.value());
  }
  st.prefix_mass = outer.value();
  return st;
}

LogWeight extend_into(std::span<const LogWeight> alpha, int k, int last_x, int next_x,
                      const PairChain& chain, const SuffixMass& suffix,
                      std::span<LogWeight> out_alpha) {
  const int cu = chain.card_u;
  if (k == 0) {
    for (int u = 0; u < cu; ++u) out_alpha[u] = chain.w1(next_x, u);
  } else {
    const std::vector<LogWeight>& w = chain.step_weight[k - 1];  // move into position k + 1
    for (int un = 0; un < cu; ++un) {
      LseAcc acc;
      for (int u = 0; u < cu; ++u)
        acc.add(log_mul(alpha[u],
                        w[((static_cast<std::size_t>(last_x) * cu + u) * chain.card_x + next_x) * cu + un]));
      out_alpha[un] = acc.value();
    }
  }
  LseAcc mass;
  for (int u = 0; u < cu; ++u) mass.add(log_mul(out_alpha[u], suffix.at(k + 1, next_x, u)));
  return mass.value();
}

AlphaState extend(const AlphaState& state, int next_x, const PairChain& chain,
                  const SuffixMass& suffix) {
  if (state.k >= chain.n) throw std::invalid_argument("extend: prefix is already complete");
  if (next_x < 0 || next_x >= chain.card_x)
    throw std::invalid_argument("extend: next_x out of range");
  AlphaState child;
  child.k = state.k + 1;
  child.last_x = next_x;
  child.alpha.resize(chain.card_u);
  child.prefix_mass =
      extend_into(state.alpha, state.k, state.last_x, next_x, chain, suffix, child.alpha);
  return child;
}

LogWeight path_mass(const PairChain& chain, std::span<const int> x) {
  if (static_cast<int>(x.size()) != chain.n)
    throw std::invalid_argument("path_mass: path length does not match chain length");
  // Backward pass over u given the fixed x path.
  std::vector<LogWeight> beta(chain.card_u, kLogOne);
  std::vector<LogWeight> prev(chain.card_u);
  for (int t = chain.n; t >= 2; --t) {
    for (int up = 0; up < chain.card_u; ++up) {
      LseAcc acc;
      for (int u = 0; u < chain.card_u; ++u)
        acc.add(log_mul(chain.step(t, x[t - 2], up, x[t - 1], u), beta[u]));
      prev[up] = acc.value();
    }
    beta.swap(prev);
  }
  LseAcc acc;
  for (int u = 0; u < chain.card_u; ++u) acc.add(log_mul(chain.w1(x[0], u), beta[u]));
  return acc.value();
}

LogWeight total_mass(const PairChain& chain) {
  std::vector<LogWeight> fwd(chain.initial_weight);
  std::vector<LogWeight> nxt(chain.pair());
  for (int t = 2; t <= chain.n; ++t) {
    for (int x = 0; x < chain.card_x; ++x)
      for (int u = 0; u < chain.card_u; ++u) {
        LseAcc acc;
        for (int xp = 0; xp < chain.card_x; ++xp) {
          LseAcc inner;
          for (int up = 0; up < chain.card_u; ++up)
            inner.add(log_mul(fwd[xp * chain.card_u + up], chain.step(t, xp, up, x, u)));
          acc.add(inner.value());
        }
        nxt[x * chain.card_u + u] = acc.value();
      }
    fwd.swap(nxt);
  }
  LseAcc total;
  for (int x = 0; x < chain.card_x; ++x) {
    LseAcc inner;
    for (int u = 0; u < chain.card_u; ++u) inner.add(fwd[x * chain.card_u + u]);
    total.add(inner.value());
  }
  return total.value();
}

JointPath joint_viterbi(const PairChain& chain) {
  JointMaxTable table = joint_max_table(chain);
  JointPath p;
  p.x.resize(chain.n);
  p.u.resize(chain.n);
  // Forward selection against the backward table keeps ties lexicographic in
  // the interleaved (x_t, u_t) order.
  LogWeight best = kLogZero;
  int best_x = 0, best_u = 0;
  bool first = true;
  for (int x = 0; x < chain.card_x; ++x)
    for (int u = 0; u < chain.card_u; ++u) {
      LogWeight v = log_mul(chain.w1(x, u), table.at(1, x, u));
      if (first || v > best + kArgmaxTieTol) {
        best = v;
        best_x = x;
        best_u = u;
        first = false;
      }
    }
  p.x[0] = best_x;
  p.u[0] = best_u;
  p.weight = chain.w1(best_x, best_u);
  for (int t = 2; t <= chain.n; ++t) {
    std::int32_t next = table.arg[t - 1][p.x[t - 2] * chain.card_u + p.u[t - 2]];
    int xn = next / chain.card_u;
    int un = next % chain.card_u;
    p.weight = log_mul(p.weight, chain.step(t, p.x[t - 2], p.u[t - 2], xn, un));
    p.x[t - 1] = xn;
    p.u[t - 1] = un;
  }
  return p;
}

PmapResult pmap_path(const PairChain& chain) {
  SuffixMass suffix = suffix_mass(chain);
  std::vector<LogWeight> fwd(chain.initial_weight);
  std::vector<LogWeight> nxt(chain.pair());
  PmapResult r;
  r.path.resize(chain.n);
  r.log_marginals.assign(chain.n, std::vector<double>(chain.card_x, kLogZero));

  for (int t = 1; t <= chain.n; ++t) {
    if (t > 1) {
      for (int x = 0; x < chain.card_x; ++x)
        for (int u = 0; u < chain.card_u; ++u) {
          LseAcc acc;
          for (int xp = 0; xp < chain.card_x; ++xp) {
            LseAcc inner;
            for (int up = 0; up < chain.card_u; ++up)
              inner.add(log_mul(fwd[xp * chain.card_u + up], chain.step(t, xp, up, x, u)));
            acc.add(inner.value());
          }
          nxt[x * chain.card_u + u] = acc.value();
        }
      fwd.swap(nxt);
    }
    LseAcc pos_total;
    for (int x = 0; x < chain.card_x; ++x) {
      LseAcc acc;
      for (int u = 0; u < chain.card_u; ++u)
        acc.add(log_mul(fwd[x * chain.card_u + u], suffix.at(t, x, u)));
      r.log_marginals[t - 1][x] = acc.value();
      pos_total.add(acc.value());
    }
    LogWeight norm = pos_total.value();
    int best_x = 0;
    LogWeight best = kLogZero;
    bool first = true;
    for (int x = 0; x < chain.card_x; ++x) {
      LogWeight v = r.log_marginals[t - 1][x];
      if (!is_log_zero(norm)) r.log_marginals[t - 1][x] = log_div(v, norm);
      if (first || v > best + kArgmaxTieTol) {
        best = v;
        best_x = x;
        first = false;
      }
    }
    r.path[t - 1] = best_x;
  }
  return r;
}

}  // namespace maxmarg
