// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>

namespace lmrm {

using Rng = std::mt19937_64;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(sum_i exp(xs[i])); -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return kNegInf;
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// log(exp(a) + exp(b))
inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  return a + std::log1p(std::exp(b - a));
}

// Draws an index with probability proportional to exp(log_weights[k]).
inline std::size_t sample_log_categorical(std::span<const double> log_weights,
                                          Rng& rng) {
  if (log_weights.empty())
    throw std::invalid_argument("sample_log_categorical: no categories");
  const double lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse))
    throw std::domain_error("sample_log_categorical: non-finite normalizer");
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    u -= std::exp(log_weights[k] - lse);
    if (u < 0.0) return k;
  }
  // Rounding left a sliver of mass; give it to the last category with weight.
  for (std::size_t k = log_weights.size(); k-- > 0;)
    if (log_weights[k] > kNegInf) return k;
  return log_weights.size() - 1;
}

}  // namespace lmrm
