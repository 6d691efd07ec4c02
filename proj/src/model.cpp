#include "maxmarg/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace maxmarg {

double Rng::next_normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  // Box-Muller on two fresh uniforms.
  double u1 = next_unit();
  while (u1 <= 0.0) u1 = next_unit();
  double u2 = next_unit();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(a);
  have_cached_normal_ = true;
  return r * std::cos(a);
}

double Rng::next_gamma(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("next_gamma: alpha must be positive");
  // Marsaglia-Tsang squeeze method; the alpha < 1 case is boosted from
  // alpha + 1 with a uniform power correction.
  if (alpha < 1.0) {
    double g = next_gamma(alpha + 1.0);
    double u = next_unit();
    while (u <= 0.0) u = next_unit();
    return g * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = next_normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = next_unit();
    if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<double> Rng::next_dirichlet(double alpha, int k) {
  std::vector<double> row(k);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    row[i] = next_gamma(alpha);
    total += row[i];
  }
  for (int i = 0; i < k; ++i) row[i] /= total;
  return row;
}

TripletModel sample_tmm(int card_x, int card_u, int card_y, double alpha, Rng& rng) {
  if (card_x < 1 || card_u < 1 || card_y < 1)
    throw std::invalid_argument("sample_tmm: cardinalities must be positive");
  TripletModel m;
  m.card_x = card_x;
  m.card_u = card_u;
  m.card_y = card_y;
  const int j = m.joint();
  m.initial = rng.next_dirichlet(alpha, j);
  m.transition.resize(static_cast<std::size_t>(j) * j);
  for (int s = 0; s < j; ++s) {
    std::vector<double> row = rng.next_dirichlet(alpha, j);
    std::copy(row.begin(), row.end(), m.transition.begin() + static_cast<std::size_t>(s) * j);
  }
  return m;
}

namespace {

int sample_categorical(std::span<const double> probs, double unit) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (unit < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

Trajectory simulate(const TripletModel& model, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("simulate: n must be positive");
  Trajectory tr;
  tr.x.resize(n);
  tr.u.resize(n);
  tr.y.resize(n);
  const int j = model.joint();
  int state = sample_categorical(model.initial, rng.next_unit());
  for (int t = 0; t < n; ++t) {
    if (t > 0) {
      std::span<const double> row(model.transition.data() + static_cast<std::size_t>(state) * j, j);
      state = sample_categorical(row, rng.next_unit());
    }
    tr.y[t] = state % model.card_y;
    tr.u[t] = (state / model.card_y) % model.card_u;
    tr.x[t] = state / (model.card_y * model.card_u);
  }
  return tr;
}

PairChain condition_on_observations(const TripletModel& model, std::span<const int> y) {
  const int n = static_cast<int>(y.size());
  if (n < 1) throw std::invalid_argument("condition_on_observations: empty observation sequence");
  for (int t = 0; t < n; ++t)
    if (y[t] < 0 || y[t] >= model.card_y)
      throw std::invalid_argument("condition_on_observations: observation symbol out of range");

  PairChain c;
  c.n = n;
  c.card_x = model.card_x;
  c.card_u = model.card_u;
  c.initial_weight.resize(c.pair());
  for (int x = 0; x < c.card_x; ++x)
    for (int u = 0; u < c.card_u; ++u)
      c.initial_weight[x * c.card_u + u] = std::log(model.init_at(x, u, y[0]));

  c.step_weight.resize(n - 1);
  for (int t = 2; t <= n; ++t) {
    auto& w = c.step_weight[t - 2];
    w.resize(static_cast<std::size_t>(c.pair()) * c.pair());
    for (int xp = 0; xp < c.card_x; ++xp)
      for (int up = 0; up < c.card_u; ++up)
        for (int x = 0; x < c.card_x; ++x)
          for (int u = 0; u < c.card_u; ++u)
            w[c.step_index(xp, up, x, u)] =
                std::log(model.trans_at(xp, up, y[t - 2], x, u, y[t - 1]));
  }

  // Full forward pass over (x, u) fixes the normalizing constant.
  std::vector<LogWeight> fwd(c.initial_weight);
  std::vector<LogWeight> nxt(c.pair());
  for (int t = 2; t <= n; ++t) {
    for (int x = 0; x < c.card_x; ++x)
      for (int u = 0; u < c.card_u; ++u) {
        LseAcc acc;
        for (int xp = 0; xp < c.card_x; ++xp) {
          LseAcc inner;
          for (int up = 0; up < c.card_u; ++up)
            inner.add(log_mul(fwd[xp * c.card_u + up], c.step(t, xp, up, x, u)));
          acc.add(inner.value());
        }
        nxt[x * c.card_u + u] = acc.value();
      }
    fwd.swap(nxt);
  }
  LseAcc total;
  for (int x = 0; x < c.card_x; ++x) {
    LseAcc inner;
    for (int u = 0; u < c.card_u; ++u) inner.add(fwd[x * c.card_u + u]);
    total.add(inner.value());
  }
  c.log_norm = total.value();
  return c;
}

namespace {

bool weight_ok(double w) { return !std::isnan(w) && w < std::numeric_limits<double>::infinity(); }

LogWeight forward_total(const PairChain& c) {
  std::vector<LogWeight> fwd(c.initial_weight);
  std::vector<LogWeight> nxt(c.pair());
  for (int t = 2; t <= c.n; ++t) {
    for (int x = 0; x < c.card_x; ++x)
      for (int u = 0; u < c.card_u; ++u) {
        LseAcc acc;
        for (int xp = 0; xp < c.card_x; ++xp) {
          LseAcc inner;
          for (int up = 0; up < c.card_u; ++up)
            inner.add(log_mul(fwd[xp * c.card_u + up], c.step(t, xp, up, x, u)));
          acc.add(inner.value());
        }
        nxt[x * c.card_u + u] = acc.value();
      }
    fwd.swap(nxt);
  }
  LseAcc total;
  for (int x = 0; x < c.card_x; ++x) {
    LseAcc inner;
    for (int u = 0; u < c.card_u; ++u) inner.add(fwd[x * c.card_u + u]);
    total.add(inner.value());
  }
  return total.value();
}

}  // namespace

ChainDiagnostics validate(const PairChain& chain) {
  ChainDiagnostics d;
  auto fail = [&](const std::string& msg) {
    d.ok = false;
    d.issues.push_back(msg);
  };
  if (chain.n < 1) fail("n must be at least 1");
  if (chain.card_x < 1 || chain.card_u < 1) fail("cardinalities must be positive");
  if (!d.ok) return d;
  if (static_cast<int>(chain.initial_weight.size()) != chain.pair())
    fail("initial_weight has wrong size");
  if (static_cast<int>(chain.step_weight.size()) != chain.n - 1)
    fail("step_weight has wrong number of tensors");
  if (!d.ok) return d;
  const std::size_t step_size = static_cast<std::size_t>(chain.pair()) * chain.pair();
  for (int t = 2; t <= chain.n; ++t)
    if (chain.step_weight[t - 2].size() != step_size)
      fail("step_weight tensor for t=" + std::to_string(t) + " has wrong size");
  if (!d.ok) return d;
  for (std::size_t i = 0; i < chain.initial_weight.size(); ++i)
    if (!weight_ok(chain.initial_weight[i]))
      fail("initial_weight[" + std::to_string(i) + "] is not a valid log weight");
  for (int t = 2; t <= chain.n; ++t) {
    const auto& w = chain.step_weight[t - 2];
    for (std::size_t i = 0; i < w.size(); ++i)
      if (!weight_ok(w[i]))
        fail("step_weight[t=" + std::to_string(t) + "][" + std::to_string(i) +
             "] is not a valid log weight");
  }
  if (std::isnan(chain.log_norm)) fail("log_norm is NaN");
  if (!d.ok) return d;

  LogWeight total = forward_total(chain);
  if (is_log_zero(total)) {
    d.warnings.push_back("total mass is zero (log_norm = -inf)");
    if (!is_log_zero(chain.log_norm)) fail("log_norm finite but total mass is zero");
  } else if (!log_close(total, chain.log_norm, 1e-9)) {
    std::ostringstream os;
    os << "log_norm " << chain.log_norm << " does not match total mass " << total;
    fail(os.str());
  }
  return d;
}

ChainDiagnostics validate(const TripletModel& model) {
  ChainDiagnostics d;
  auto fail = [&](const std::string& msg) {
    d.ok = false;
    d.issues.push_back(msg);
  };
  if (model.card_x < 1 || model.card_u < 1 || model.card_y < 1) {
    fail("cardinalities must be positive");
    return d;
  }
  const int j = model.joint();
  if (static_cast<int>(model.initial.size()) != j) fail("initial has wrong size");
  if (model.transition.size() != static_cast<std::size_t>(j) * j) fail("transition has wrong size");
  if (!d.ok) return d;
  auto check_row = [&](std::span<const double> row, const std::string& name) {
    double sum = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (std::isnan(row[i]) || row[i] < 0.0) {
        fail(name + "[" + std::to_string(i) + "] is not a probability");
        return;
      }
      sum += row[i];
    }
    if (std::abs(sum - 1.0) > 1e-12) fail(name + " does not sum to 1");
  };
  check_row(model.initial, "initial");
  for (int s = 0; s < j; ++s)
    check_row(std::span<const double>(model.transition.data() + static_cast<std::size_t>(s) * j, j),
              "transition row " + std::to_string(s));
  return d;
}

namespace {

using nlohmann::json;

json weight_to_json(LogWeight w) {
  if (is_log_zero(w)) return nullptr;
  return w;
}

LogWeight weight_from_json(const json& v) {
  if (v.is_null()) return kLogZero;
  return v.get<double>();
}

}  // namespace

std::string tmm_to_json(const TripletModel& model) {
  json j;
  j["card_x"] = model.card_x;
  j["card_u"] = model.card_u;
  j["card_y"] = model.card_y;
  j["initial"] = model.initial;
  j["transition"] = model.transition;
  return j.dump(2);
}

TripletModel tmm_from_json(const std::string& text) {
  json j = json::parse(text);
  TripletModel m;
  m.card_x = j.at("card_x").get<int>();
  m.card_u = j.at("card_u").get<int>();
  m.card_y = j.at("card_y").get<int>();
  m.initial = j.at("initial").get<std::vector<double>>();
  m.transition = j.at("transition").get<std::vector<double>>();
  ChainDiagnostics d = validate(m);
  if (!d.ok) throw std::runtime_error("tmm_from_json: " + d.issues.front());
  return m;
}

std::string chain_to_json(const PairChain& chain) {
  json j;
  j["n"] = chain.n;
  j["card_x"] = chain.card_x;
  j["card_u"] = chain.card_u;
  json init = json::array();
  for (LogWeight w : chain.initial_weight) init.push_back(weight_to_json(w));
  j["initial_weight"] = std::move(init);
  json steps = json::array();
  for (const auto& tensor : chain.step_weight) {
    json tj = json::array();
    for (LogWeight w : tensor) tj.push_back(weight_to_json(w));
    steps.push_back(std::move(tj));
  }
  j["step_weight"] = std::move(steps);
  j["log_norm"] = weight_to_json(chain.log_norm);
  return j.dump(2);
}

PairChain chain_from_json(const std::string& text) {
  json j = json::parse(text);
  PairChain c;
  c.n = j.at("n").get<int>();
  c.card_x = j.at("card_x").get<int>();
  c.card_u = j.at("card_u").get<int>();
  for (const auto& v : j.at("initial_weight")) c.initial_weight.push_back(weight_from_json(v));
  for (const auto& tj : j.at("step_weight")) {
    std::vector<LogWeight> tensor;
    tensor.reserve(tj.size());
    for (const auto& v : tj) tensor.push_back(weight_from_json(v));
    c.step_weight.push_back(std::move(tensor));
  }
  c.log_norm = weight_from_json(j.at("log_norm"));
  ChainDiagnostics d = validate(c);
  if (!d.ok) throw std::runtime_error("chain_from_json: " + d.issues.front());
  return c;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace

void save_tmm_json(const TripletModel& model, const std::string& path) {
  write_file(path, tmm_to_json(model) + "\n");
}

TripletModel load_tmm_json(const std::string& path) { return tmm_from_json(read_file(path)); }

void save_chain_json(const PairChain& chain, const std::string& path) {
  write_file(path, chain_to_json(chain) + "\n");
}

PairChain load_chain_json(const std::string& path) { return chain_from_json(read_file(path)); }

void save_observations(std::span<const int> y, const std::string& path) {
  std::ostringstream os;
  for (int v : y) os << v << "\n";
  write_file(path, os.str());
}

std::vector<int> load_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<int> y;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    y.push_back(std::stoi(line));
  }
  return y;
}

}  // namespace maxmarg
