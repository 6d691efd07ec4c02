#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>

namespace maxmarg {

// Natural-log scale weight of a non-negative quantity.  The zero element is
// -infinity; a LogWeight is never NaN and never +infinity.
using LogWeight = double;

inline constexpr LogWeight kLogZero = -std::numeric_limits<double>::infinity();
inline constexpr LogWeight kLogOne = 0.0;

// Tolerance used for near-tie argmax selection inside DP kernels.  Exact
// mathematical ties land within a few ulp of each other after log-sum-exp;
// preferring the smaller index within this margin keeps tie-breaking
// deterministic and lexicographic.
inline constexpr double kArgmaxTieTol = 1e-12;

inline bool is_log_zero(LogWeight a) { return a == kLogZero; }

inline LogWeight log_mul(LogWeight a, LogWeight b) {
  assert(!std::isnan(a) && !std::isnan(b));
  if (is_log_zero(a) || is_log_zero(b)) return kLogZero;
  return a + b;
}

inline LogWeight log_div(LogWeight a, LogWeight b) {
  assert(!std::isnan(a) && !std::isnan(b));
  if (is_log_zero(b)) throw std::domain_error("log_div: division by zero weight");
  if (is_log_zero(a)) return kLogZero;
  return a - b;
}

// a^r for integer r >= 0; zero^0 is one.
inline LogWeight log_pow(LogWeight a, long long r) {
  assert(!std::isnan(a));
  if (r < 0) throw std::domain_error("log_pow: negative exponent");
  if (r == 0) return kLogOne;
  if (is_log_zero(a)) return kLogZero;
  return static_cast<double>(r) * a;
}

// Streaming log-sum-exp accumulator.  All summations over log weights in this
// library go through this fold so that identical iteration orders produce
// bit-identical results.
struct LseAcc {
  double max_ = kLogZero;
  double sum_ = 0.0;

  void add(double a) {
    assert(!std::isnan(a));
    if (a == kLogZero) return;
    if (a <= max_) {
      sum_ += std::exp(a - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - a) + 1.0;
      max_ = a;
    }
  }

  LogWeight value() const {
    if (sum_ <= 0.0) return kLogZero;
    return max_ + std::log(sum_);
  }
};

inline LogWeight log_add(LogWeight a, LogWeight b) {
  LseAcc acc;
  acc.add(a);
  acc.add(b);
  return acc.value();
}

inline LogWeight log_sum_exp(std::span<const LogWeight> terms) {
  LseAcc acc;
  for (double t : terms) acc.add(t);
  return acc.value();
}

inline bool log_close(LogWeight a, LogWeight b, double tol = 1e-9) {
  if (is_log_zero(a) && is_log_zero(b)) return true;
  return std::abs(a - b) <= tol;
}

// log(exp(x) - 1) for x > 0, stable across magnitudes.
inline double log_expm1(double x) {
  assert(x >= 0.0);
  if (x > 36.0) return x;
  double e = std::expm1(x);
  if (e <= 0.0) return kLogZero;
  return std::log(e);
}

}  // namespace maxmarg
