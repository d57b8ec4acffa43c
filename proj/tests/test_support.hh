// Apache License, Version 2.0, refer to LICENSE.txt
//
// Small helpers shared by the unit tests: random parameter draws and naive
// reference formulas that avoid the library's log-space code paths.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lmrm/levy.hh"
#include "lmrm/numeric.hh"

namespace lmrm_test {

using lmrm::AuxVars;
using lmrm::ClusterCounts;
using lmrm::LmrmParams;
using lmrm::Rng;

inline LmrmParams random_params(Rng& rng, int d, int R) {
  std::uniform_real_distribution<double> w(0.2, 2.5), a(0.3, 3.0);
  std::vector<double> weights(static_cast<std::size_t>(d * R));
  for (auto& x : weights) x = w(rng);
  return LmrmParams(d, R, a(rng), std::move(weights));
}

inline AuxVars random_aux(Rng& rng, int d) {
  std::uniform_real_distribution<double> u(0.1, 3.0);
  AuxVars aux{std::vector<double>(static_cast<std::size_t>(d))};
  for (auto& x : aux.u) x = u(rng);
  return aux;
}

inline ClusterCounts random_counts(Rng& rng, int d, int max_total) {
  std::uniform_int_distribution<int> total(1, max_total);
  std::uniform_int_distribution<int> group(0, d - 1);
  ClusterCounts q{std::vector<int>(static_cast<std::size_t>(d), 0)};
  const int t = total(rng);
  for (int k = 0; k < t; ++k) q.q[group(rng)] += 1;
  return q;
}

// K clusters whose counts together give every group at least one member.
inline std::vector<ClusterCounts> random_partition(Rng& rng, int d, int K, int max_total) {
  std::vector<ClusterCounts> out;
  for (int k = 0; k < K; ++k) out.push_back(random_counts(rng, d, max_total));
  for (int i = 0; i < d; ++i) {
    int n = 0;
    for (const auto& c : out) n += c.q[i];
    if (n == 0) out[0].q[i] += 1;
  }
  return out;
}

inline std::vector<int> sizes_of(const std::vector<ClusterCounts>& counts, int d) {
  std::vector<int> n(static_cast<std::size_t>(d), 0);
  for (const auto& c : counts)
    for (int i = 0; i < d; ++i) n[i] += c.q[i];
  return n;
}

inline double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale < 1e-8 ? std::abs(a - b) : std::abs(a - b) / scale;
}

inline double naive_h(const LmrmParams& p, const AuxVars& u, int r) {
  double h = 0.0;
  for (int i = 0; i < p.d; ++i) h += p.weights[i * p.R + r] * u.u[i];
  return h;
}

// alpha Gamma(t) sum_r prod_i w^q / (1 + h_r)^t, literally.
inline double naive_tau(const LmrmParams& p, const AuxVars& u, const ClusterCounts& q) {
  int t = 0;
  for (int x : q.q) t += x;
  double sum = 0.0;
  for (int r = 0; r < p.R; ++r) {
    double prod = 1.0;
    for (int i = 0; i < p.d; ++i) prod *= std::pow(p.weights[i * p.R + r], q.q[i]);
    sum += prod / std::pow(1.0 + naive_h(p, u, r), t);
  }
  return p.alpha * std::tgamma(static_cast<double>(t)) * sum;
}

inline double naive_psi(const LmrmParams& p, const AuxVars& u) {
  double s = 0.0;
  for (int r = 0; r < p.R; ++r) s += std::log(1.0 + naive_h(p, u, r));
  return p.alpha * s;
}

inline ClusterCounts plus_one(ClusterCounts q, int i) {
  q.q[i] += 1;
  return q;
}

}  // namespace lmrm_test
