// Apache License, Version 2.0, refer to LICENSE.txt
//
// Closed-form Levy functionals of a linear mixed random measure
//
//   mu_i = sum_r w_{i,r} mu_r,   i = 1..d,
//
// whose R independent directions mu_r are Gamma processes with intensity
// alpha s^-1 e^-s ds. With h_r = sum_i w_{i,r} u_i and t = sum_i q_i:
//
//   psi(u)   = alpha sum_r log(1 + h_r)
//   tau_q(u) = alpha Gamma(t) sum_r prod_i w_{i,r}^{q_i} / (1 + h_r)^t
//
// Everything involving tau is evaluated in log space. Group and CRM indices
// are zero-based.

#pragma once

#include <span>
#include <vector>

namespace lmrm {

struct LmrmParams {
  int d = 1;
  int R = 1;
  double alpha = 1.0;
  // d x R, row-major: weights[i * R + r] = w_{i,r}.
  std::vector<double> weights;

  LmrmParams() = default;
  LmrmParams(int d, int R, double alpha, std::vector<double> weights);

  // All mixing weights equal to one.
  static LmrmParams ones(int d, int R, double alpha);

  double w(int i, int r) const { return weights[static_cast<std::size_t>(i * R + r)]; }
  double& w(int i, int r) { return weights[static_cast<std::size_t>(i * R + r)]; }

  // Throws std::invalid_argument unless d, R >= 1, alpha > 0 and every
  // weight is finite and strictly positive.
  void validate() const;
};

struct AuxVars {
  std::vector<double> u;
};

struct ClusterCounts {
  std::vector<int> q;

  int total() const;
};

// Caches h_r, log(1 + h_r) and log w_{i,r} for one (params, u) pair so that
// repeated tau evaluations cost O(d R). The auxiliary vector may contain
// zeros here: a zero u_i stands for a group that has no observations.
class LevyEvaluator {
 public:
  LevyEvaluator(const LmrmParams& params, std::span<const double> u);

  int d() const { return d_; }
  int R() const { return R_; }
  double alpha() const { return alpha_; }
  std::span<const double> h() const { return h_; }

  double psi() const;
  double log_tau(std::span<const int> q) const;
  double log_tau_ratio(std::span<const int> q, int i) const;
  double log_tau_new(int i) const;

  // alpha * sum_r w_{i,r} / (h_r + 1), i.e. d psi / d u_i.
  double dpsi_du(int i) const;

 private:
  // a_r = sum_i q_i log w_{i,r} - t log(1 + h_r), written into `out`.
  void log_terms(std::span<const int> q, int t, std::span<double> out) const;

  int d_;
  int R_;
  double alpha_;
  std::vector<double> h_;
  std::vector<double> log1p_h_;
  std::vector<double> log_w_;
  std::vector<double> w_;
};

std::vector<double> h_vector(const LmrmParams& params, const AuxVars& u);
double psi(const LmrmParams& params, const AuxVars& u);
double log_tau(const LmrmParams& params, const AuxVars& u, const ClusterCounts& q);
// log(tau_{q + delta_i} / tau_q), computed without forming either tau.
double log_tau_ratio(const LmrmParams& params, const AuxVars& u,
                     const ClusterCounts& q, int i);
// log tau_{delta_i}: the weight of opening a new cluster from group i.
double log_tau_new(const LmrmParams& params, const AuxVars& u, int i);

// Unnormalized log density of u given the partition:
//   sum_i (n_i - 1) log u_i - psi(u) + sum_k log tau_{q_k}(u).
// When counts is non-empty, sum_k q_{i,k} must equal n_i.
double log_joint_aux(const LmrmParams& params, const AuxVars& u,
                     std::span<const ClusterCounts> counts,
                     std::span<const int> n);

std::vector<double> grad_log_joint_u(const LmrmParams& params, const AuxVars& u,
                                     std::span<const ClusterCounts> counts,
                                     std::span<const int> n);

// Gradient of -psi + sum_k log tau_{q_k} with respect to W, row-major d x R.
std::vector<double> grad_log_joint_w(const LmrmParams& params, const AuxVars& u,
                                     std::span<const ClusterCounts> counts);

// -psi + sum_k log tau_{q_k}: the part of the joint that depends on W.
double log_weight_likelihood(const LmrmParams& params, const AuxVars& u,
                             std::span<const ClusterCounts> counts);

}  // namespace lmrm
