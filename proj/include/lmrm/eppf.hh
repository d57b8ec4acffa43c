// Apache License, Version 2.0, refer to LICENSE.txt
//
// Numerical evaluation of the exchangeable partition probability function of
// a normalized LMRM with Gamma directions,
//
//   Pi(q) = int_{(0,inf)^d} prod_i u_i^{n_i-1} / Gamma(n_i) e^{-psi(u)}
//           prod_k tau_{q_k}(u) du,
//
// plus the independent references used to check it: the Ewens formula for a
// single Dirichlet process and a truncated stick-breaking simulation of the
// underlying Gamma CRMs.

#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "lmrm/levy.hh"
#include "lmrm/numeric.hh"

namespace lmrm {

struct PartitionSpec {
  std::vector<ClusterCounts> counts;
  std::vector<int> n;

  int K() const { return static_cast<int>(counts.size()); }
  int d() const { return static_cast<int>(n.size()); }

  // Group sizes derived from the counts.
  static PartitionSpec from_counts(std::vector<ClusterCounts> counts);
  void validate() const;
};

// Integration runs on a trapezoid grid in z, where log u = mode + width * sinh(z)
// per axis. The box extends until the log integrand has fallen by `tail_drop`
// and the step is halved until two successive estimates agree to `rel_tol`.
struct QuadratureSettings {
  double initial_step = 0.5;
  int max_halvings = 4;
  double rel_tol = 1e-10;
  double tail_drop = 46.0;
  int max_box_growth = 8;
};

struct QuadratureResult {
  double log_value;
  double log_previous;  // estimate at twice the final step
  double step;
  long evaluations;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double last, double previous)
      : std::runtime_error(what), last_log_estimate(last), previous_log_estimate(previous) {}
  double last_log_estimate;
  double previous_log_estimate;
};

// log Pi(spec). Groups with n_i = 0 carry no auxiliary variable. At most three
// groups may be non-empty. Throws QuadratureError if refinement does not
// converge.
QuadratureResult log_eppf_quadrature(const LmrmParams& params, const PartitionSpec& spec,
                                     const QuadratureSettings& quad = {});
double log_eppf(const LmrmParams& params, const PartitionSpec& spec,
                const QuadratureSettings& quad = {});

// log[alpha^K prod_k Gamma(t_k) / (alpha)_n] for a single group.
double ewens_log_eppf(double alpha, const PartitionSpec& spec);

// A partition of labelled observations reduced to what the EPPF depends on:
// the multiset of per-cluster count vectors, kept sorted.
using CountStructure = std::vector<std::vector<int>>;

CountStructure canonical(std::vector<std::vector<int>> counts);
PartitionSpec to_spec(const CountStructure& structure);

// Number of set partitions of the labelled observations (n_i of them in group
// i) that reduce to each count structure, found by enumeration.
std::map<CountStructure, long> enumerate_count_structures(std::span<const int> n);

struct McEstimate {
  double probability;
  double std_error;
  long hits;
};

// Frequencies of induced count structures when each Gamma CRM is simulated as
// T_r ~ Gamma(alpha, 1) times stick-breaking weights truncated at `truncation`
// atoms (the leftover mass, at most (alpha / (1 + alpha))^truncation in
// expectation, goes to the last atom). Sticks are generated lazily, so the
// cost does not grow with the truncation level.
std::map<CountStructure, McEstimate> mc_partition_probs(const LmrmParams& params,
                                                        std::span<const int> n, long truncation,
                                                        long draws, Rng& rng);

// For every group i, |1 - (sum_k Pi(q_k + delta_i) + Pi(new singleton in i)) / Pi(spec)|.
std::vector<double> eppf_consistency_check(const LmrmParams& params, const PartitionSpec& spec,
                                           const QuadratureSettings& quad = {});

}  // namespace lmrm
