#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "maxmarg/logdomain.hpp"

namespace maxmarg {

// Deterministic 64-bit seeded generator.  Gamma and Dirichlet draws are
// implemented locally so results do not depend on the standard library's
// distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double next_normal();
  double next_gamma(double alpha);
  std::vector<double> next_dirichlet(double alpha, int k);

 private:
  std::mt19937_64 gen_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// Homogeneous Markov model over triples (x, u, y).  Probabilities are stored
// on the linear scale; tensors are row-major with x slowest, then u, then y.
struct TripletModel {
  int card_x = 0;
  int card_u = 0;
  int card_y = 0;
  std::vector<double> initial;     // joint() entries
  std::vector<double> transition;  // joint() * joint() entries, source-major

  int joint() const { return card_x * card_u * card_y; }
  int pack(int x, int u, int y) const { return (x * card_u + u) * card_y + y; }
  double init_at(int x, int u, int y) const { return initial[pack(x, u, y)]; }
  double trans_at(int xs, int us, int ys, int xd, int ud, int yd) const {
    return transition[static_cast<std::size_t>(pack(xs, us, ys)) * joint() + pack(xd, ud, yd)];
  }
};

// Non-homogeneous bivariate chain over (x, u) with unnormalized log-scale
// factors.  step_weight[t - 2] holds the weight tensor for the move into
// position t (t = 2..n), indexed source-major: ((x_prev*card_u + u_prev)*card_x
// + x)*card_u + u.  log_norm carries the normalizing constant of the factor
// system (log p(y) for conditioned chains, 0 for directly built ones).
struct PairChain {
  int n = 0;
  int card_x = 0;
  int card_u = 0;
  std::vector<LogWeight> initial_weight;               // card_x * card_u
  std::vector<std::vector<LogWeight>> step_weight;     // n - 1 tensors
  LogWeight log_norm = kLogOne;

  int pair() const { return card_x * card_u; }
  LogWeight w1(int x, int u) const { return initial_weight[x * card_u + u]; }
  // t in 2..n.
  LogWeight step(int t, int x_prev, int u_prev, int x, int u) const {
    return step_weight[t - 2][((x_prev * card_u + u_prev) * card_x + x) * card_u + u];
  }
  std::size_t step_index(int x_prev, int u_prev, int x, int u) const {
    return ((static_cast<std::size_t>(x_prev) * card_u + u_prev) * card_x + x) * card_u + u;
  }
};

struct ChainDiagnostics {
  bool ok = true;
  std::vector<std::string> issues;    // structural or numeric failures
  std::vector<std::string> warnings;  // e.g. zero total mass
};

TripletModel sample_tmm(int card_x, int card_u, int card_y, double alpha, Rng& rng);

struct Trajectory {
  std::vector<int> x, u, y;
};
Trajectory simulate(const TripletModel& model, int n, Rng& rng);

// Fixes the observation sequence and returns the unnormalized factor chain
// over (x, u); log_norm is set to the total mass of the observations.
PairChain condition_on_observations(const TripletModel& model, std::span<const int> y);

ChainDiagnostics validate(const PairChain& chain);
ChainDiagnostics validate(const TripletModel& model);

// JSON serialization.  Chains store log weights (JSON null encodes -inf);
// models store linear probabilities.  Round-trips are bit-exact.
void save_tmm_json(const TripletModel& model, const std::string& path);
TripletModel load_tmm_json(const std::string& path);
void save_chain_json(const PairChain& chain, const std::string& path);
PairChain load_chain_json(const std::string& path);
std::string tmm_to_json(const TripletModel& model);
TripletModel tmm_from_json(const std::string& text);
std::string chain_to_json(const PairChain& chain);
PairChain chain_from_json(const std::string& text);

// Observation files hold one 0-based symbol per line.
void save_observations(std::span<const int> y, const std::string& path);
std::vector<int> load_observations(const std::string& path);

}  // namespace maxmarg
