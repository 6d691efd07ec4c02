#include "maxmarg/fixtures.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "maxmarg/logdomain.hpp"

namespace maxmarg {
namespace {

// Most-significant-first code of a symbol sequence.
int prefix_code(const std::vector<int>& prefix, int card_x) {
  int c = 0;
  for (int s : prefix) c = c * card_x + s;
  return c;
}

std::string path_key(const std::vector<int>& path) {
  std::string s;
  for (int v : path) s += static_cast<char>('0' + v);
  return s;
}

}  // namespace

PairChain chain_from_path_table(
    int n, int card_x, const std::vector<std::pair<std::vector<int>, double>>& table) {
  if (n < 1 || card_x < 1) throw std::invalid_argument("chain_from_path_table: bad shape");
  int card_u = 1;
  for (int t = 1; t < n; ++t) {
    card_u *= card_x;
    if (card_u > 4096) throw std::invalid_argument("chain_from_path_table: history code too large");
  }

  // Mass of every prefix, including the empty one (total mass).
  std::map<std::vector<int>, double> prefix_mass;
  for (const auto& [path, prob] : table) {
    if (static_cast<int>(path.size()) != n) throw std::invalid_argument("path length mismatch");
    if (prob < 0.0) throw std::invalid_argument("negative path probability");
    for (int t = 0; t <= n; ++t)
      prefix_mass[std::vector<int>(path.begin(), path.begin() + t)] += prob;
  }
  double total = prefix_mass[{}];
  if (total <= 0.0) throw std::invalid_argument("empty path table");

  PairChain chain;
  chain.n = n;
  chain.card_x = card_x;
  chain.card_u = card_u;
  chain.log_norm = kLogOne;
  chain.initial_weight.assign(static_cast<std::size_t>(card_x) * card_u, kLogZero);
  chain.step_weight.assign(n - 1, std::vector<LogWeight>(
      static_cast<std::size_t>(card_x) * card_u * card_x * card_u, kLogZero));

  for (const auto& [prefix, mass] : prefix_mass) {
    if (mass <= 0.0) continue;
    int t = static_cast<int>(prefix.size());
    if (t == 1) {
      // u at the first position codes the empty history: always 0.
      chain.initial_weight[static_cast<std::size_t>(prefix[0]) * card_u] =
          std::log(mass / total);
    } else if (t >= 2) {
      // Transition taken at step t: source history prefix[0..t-2], symbol
      // prefix[t-2]; destination appends prefix[t-1].
      std::vector<int> head(prefix.begin(), prefix.end() - 1);
      double head_mass = prefix_mass.at(head);
      int u_src = prefix_code(std::vector<int>(head.begin(), head.end() - 1), card_x);
      int u_dst = prefix_code(head, card_x);
      int x_src = head.back();
      int x_dst = prefix.back();
      std::size_t idx = ((static_cast<std::size_t>(x_src) * card_u + u_src) * card_x + x_dst) *
                        card_u + u_dst;
      chain.step_weight[t - 2][idx] = std::log(mass / head_mass);
    }
  }
  return chain;
}

FixtureChain single_zero_process(int n) {
  if (n < 2) throw std::invalid_argument("single_zero_process: n must be >= 2");
  PairChain chain;
  chain.n = n;
  chain.card_x = 2;
  chain.card_u = n;  // u = 0: no zero seen yet (or the zero landed at the end)
  chain.log_norm = kLogOne;
  chain.initial_weight.assign(static_cast<std::size_t>(2) * n, kLogZero);
  chain.initial_weight[0 * n + 1] = std::log(1.0 / n);            // zero at position 1
  chain.initial_weight[1 * n + 0] = std::log((n - 1.0) / n);      // still waiting

  chain.step_weight.assign(n - 1, std::vector<LogWeight>(
      static_cast<std::size_t>(2) * n * 2 * n, kLogZero));
  auto idx = [&](int xp, int up, int x, int u) {
    return ((static_cast<std::size_t>(xp) * n + up) * 2 + x) * n + u;
  };
  for (int t = 2; t <= n; ++t) {
    auto& step = chain.step_weight[t - 2];
    // Waiting state: the zero lands now with probability 1/(n-t+1).
    int u_here = (t == n) ? 0 : t;
    step[idx(1, 0, 0, u_here)] = std::log(1.0 / (n - t + 1));
    if (t < n) step[idx(1, 0, 1, 0)] = std::log((n - t) / (n - t + 1.0));
    // After the zero the path is forced to ones and u remembers the position.
    for (int j = 1; j < n; ++j) {
      step[idx(0, j, 1, j)] = kLogOne;
      step[idx(1, j, 1, j)] = kLogOne;
    }
  }

  FixtureChain fx;
  fx.name = "d1";
  fx.chain = std::move(chain);
  fx.expected_optimum = -std::log(static_cast<double>(n));
  for (int pos = 1; pos <= n; ++pos) {
    std::vector<int> path(n, 1);
    path[pos - 1] = 0;
    fx.expected_optima.push_back(std::move(path));
  }
  fx.expected_log["total"] = kLogOne;
  fx.expected_log["ux_mass"] = fx.expected_optimum;
  if (n >= 3) fx.expected_log["mviterbi1_mass"] = kLogZero;  // freezes the all-ones path
  if (n == 4) fx.expected_log["mviterbi2_mass"] = std::log(0.25);
  return fx;
}

FixtureChain switching_chain(double p, int n) {
  if (!(p > 0.0 && p < 1.0) || n < 1) throw std::invalid_argument("switching_chain: bad params");
  PairChain chain;
  chain.n = n;
  chain.card_x = 2;
  chain.card_u = 2;
  chain.log_norm = kLogOne;
  chain.initial_weight.assign(4, kLogZero);
  chain.initial_weight[0 * 2 + 0] = std::log(1.0 - p);
  chain.initial_weight[1 * 2 + 1] = std::log(p);

  std::vector<LogWeight> step(16, kLogZero);
  auto idx = [](int xp, int up, int x, int u) {
    return ((static_cast<std::size_t>(xp) * 2 + up) * 2 + x) * 2 + u;
  };
  for (int xp = 0; xp < 2; ++xp) {
    step[idx(xp, 1, 1, 1)] = std::log(p);        // keep running
    step[idx(xp, 1, 0, 0)] = std::log(1.0 - p);  // switch off once
    step[idx(xp, 0, 1, 0)] = kLogOne;            // after the switch: ones forever
  }
  chain.step_weight.assign(n - 1, step);

  FixtureChain fx;
  fx.name = "d2";
  fx.chain = std::move(chain);
  double log_ones = n * std::log(p);
  double log_zero1 = std::log1p(-p);
  fx.expected_optimum = std::max(log_ones, log_zero1);
  std::vector<int> ones(n, 1);
  std::vector<int> zero1(n, 1);
  zero1[0] = 0;
  if (n >= 2 && log_zero1 >= fx.expected_optimum - 1e-12) fx.expected_optima.push_back(zero1);
  if (log_ones >= fx.expected_optimum - 1e-12) fx.expected_optima.push_back(ones);
  fx.expected_log["total"] = kLogOne;
  fx.expected_log["ux_mass"] = fx.expected_optimum;
  // For p comfortably above the golden-ratio threshold the first-order
  // approximation freezes the all-ones path.
  if (p >= 0.65) fx.expected_log["mviterbi1_mass"] = log_ones;
  return fx;
}

FixtureChain odds_process(double eps) {
  if (eps < 0.0) throw std::invalid_argument("odds_process: eps must be >= 0");
  double z = 6.0 + eps;
  std::vector<std::pair<std::vector<int>, double>> table = {
      {{1, 1, 1}, (1.0 + eps) / z}, {{1, 0, 0}, 1.0 / z}, {{1, 0, 1}, 1.0 / z},
      {{0, 0, 1}, 1.0 / z},         {{0, 1, 1}, 1.0 / z}, {{0, 1, 0}, 1.0 / z},
  };

  FixtureChain fx;
  fx.name = "d3";
  fx.chain = chain_from_path_table(3, 2, table);
  fx.expected_optimum = std::log((1.0 + eps) / z);
  if (eps > 0.0) {
    fx.expected_optima = {{1, 1, 1}};
  } else {
    fx.expected_optima = {{0, 0, 1}, {0, 1, 0}, {0, 1, 1}, {1, 0, 0}, {1, 0, 1}, {1, 1, 1}};
  }
  fx.expected_log["total"] = kLogOne;
  fx.expected_log["ux_mass"] = fx.expected_optimum;
  if (eps > 0.0) fx.expected_log["mviterbi0_mass"] = fx.expected_optimum;
  if (eps > 0.0 && eps < 1.0)
    fx.expected_log["mviterbi1_mass"] = std::log(1.0 / z);  // freezes 011, mass 1/(6+eps)

  // First-order factorization values q(x) for all eight binary paths.
  double e = eps;
  fx.expected_log["q:111"] = std::log((1 + e) * (2 + e) / (z * (3 + e)));
  fx.expected_log["q:110"] = std::log((1 + e) / (z * (3 + e)));
  fx.expected_log["q:101"] = std::log(4.0 / (3.0 * z));
  fx.expected_log["q:100"] = std::log(2.0 / (3.0 * z));
  fx.expected_log["q:011"] = std::log(2.0 * (2 + e) / (z * (3 + e)));
  fx.expected_log["q:010"] = std::log(2.0 / (z * (3 + e)));
  fx.expected_log["q:001"] = std::log(2.0 / (3.0 * z));
  fx.expected_log["q:000"] = std::log(1.0 / (3.0 * z));
  return fx;
}

FixtureChain demo_chain() {
  std::vector<std::pair<std::vector<int>, double>> table = {
      {{0, 0, 0}, 0.2887}, {{0, 0, 1}, 0.0232}, {{0, 1, 0}, 0.2128}, {{0, 1, 1}, 0.2328},
      {{1, 0, 0}, 0.0316}, {{1, 0, 1}, 0.0222}, {{1, 1, 0}, 0.1461}, {{1, 1, 1}, 0.0426},
  };
  FixtureChain fx;
  fx.name = "demo";
  fx.chain = chain_from_path_table(3, 2, table);
  fx.expected_optimum = std::log(0.2887);
  fx.expected_optima = {{0, 0, 0}};
  fx.expected_log["total"] = kLogOne;
  fx.expected_log["ux_mass"] = fx.expected_optimum;
  for (const auto& [path, prob] : table)
    fx.expected_log["mass:" + path_key(path)] = std::log(prob);
  fx.expected_log["prefix:0"] = std::log(0.7575);
  fx.expected_log["prefix:1"] = std::log(0.2425);
  fx.expected_log["prefix:00"] = std::log(0.3119);
  fx.expected_log["prefix:01"] = std::log(0.4456);
  fx.expected_log["prefix:10"] = std::log(0.0538);
  fx.expected_log["prefix:11"] = std::log(0.1887);
  return fx;
}

FixtureChain fixture_by_name(const std::string& spec) {
  std::string name = spec;
  std::map<std::string, std::string> params;
  if (auto colon = spec.find(':'); colon != std::string::npos) {
    name = spec.substr(0, colon);
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("fixture parameter must look like key=value: " + item);
      params[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  auto get = [&](const std::string& key) -> std::string {
    auto it = params.find(key);
    if (it == params.end())
      throw std::invalid_argument("fixture " + name + " needs parameter " + key);
    return it->second;
  };
  if (name == "d1") return single_zero_process(std::stoi(get("n")));
  if (name == "d2") return switching_chain(std::stod(get("p")), std::stoi(get("n")));
  if (name == "d3") return odds_process(std::stod(get("eps")));
  if (name == "demo") return demo_chain();
  throw std::invalid_argument("unknown fixture: " + name);
}

}  // namespace maxmarg
