// Apache License, Version 2.0, refer to LICENSE.txt

#include "lmrm/levy.hh"

#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "lmrm/numeric.hh"

namespace lmrm {

namespace {

// Scratch space for per-CRM terms; heap only for unusually large R.
class Scratch {
 public:
  explicit Scratch(int n) : n_(static_cast<std::size_t>(n)) {
    if (n_ > stack_.size()) heap_.resize(n_);
  }
  std::span<double> span() {
    return n_ > stack_.size() ? std::span<double>(heap_) : std::span<double>(stack_.data(), n_);
  }

 private:
  std::size_t n_;
  std::array<double, 32> stack_{};
  std::vector<double> heap_;
};

void check_group(int i, int d) {
  if (i < 0 || i >= d)
    throw std::out_of_range("group index " + std::to_string(i) + " outside [0, " +
                            std::to_string(d) + ")");
}

void check_counts(std::span<const int> q, int d) {
  if (static_cast<int>(q.size()) != d)
    throw std::invalid_argument("cluster count vector has length " + std::to_string(q.size()) +
                                ", expected " + std::to_string(d));
  for (int c : q)
    if (c < 0) throw std::invalid_argument("negative cluster count");
}

}  // namespace

LmrmParams::LmrmParams(int d_, int R_, double alpha_, std::vector<double> weights_)
    : d(d_), R(R_), alpha(alpha_), weights(std::move(weights_)) {
  validate();
}

LmrmParams LmrmParams::ones(int d, int R, double alpha) {
  if (d < 1 || R < 1) throw std::invalid_argument("LmrmParams: d and R must be >= 1");
  return LmrmParams(d, R, alpha, std::vector<double>(d * R, 1.0));
}

void LmrmParams::validate() const {
  if (d < 1) throw std::invalid_argument("LmrmParams: d must be >= 1");
  if (R < 1) throw std::invalid_argument("LmrmParams: R must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("LmrmParams: alpha must be positive and finite");
  if (static_cast<int>(weights.size()) != d * R)
    throw std::invalid_argument("LmrmParams: weight matrix must be d x R");
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("LmrmParams: weights must be strictly positive and finite");
}

int ClusterCounts::total() const { return std::accumulate(q.begin(), q.end(), 0); }

LevyEvaluator::LevyEvaluator(const LmrmParams& params, std::span<const double> u)
    : d_(params.d), R_(params.R), alpha_(params.alpha) {
  if (static_cast<int>(u.size()) != d_)
    throw std::invalid_argument("auxiliary vector has length " + std::to_string(u.size()) +
                                ", expected d = " + std::to_string(d_));
  for (double ui : u)
    if (!(ui >= 0.0) || !std::isfinite(ui))
      throw std::invalid_argument("auxiliary variables must be finite and non-negative");
  h_.assign(R_, 0.0);
  log1p_h_.resize(h_.size());
  w_ = params.weights;
  log_w_.resize(w_.size());
  for (std::size_t k = 0; k < w_.size(); ++k) log_w_[k] = std::log(w_[k]);
  for (int r = 0; r < R_; ++r) {
    double h = 0.0;
    for (int i = 0; i < d_; ++i) h += params.w(i, r) * u[i];
    h_[r] = h;
    log1p_h_[r] = std::log1p(h);
  }
}

double LevyEvaluator::psi() const {
  double s = 0.0;
  for (double l : log1p_h_) s += l;
  return alpha_ * s;
}

double LevyEvaluator::dpsi_du(int i) const {
  check_group(i, d_);
  double s = 0.0;
  for (int r = 0; r < R_; ++r)
    s += w_[i * R_ + r] / (1.0 + h_[r]);
  return alpha_ * s;
}

void LevyEvaluator::log_terms(std::span<const int> q, int t, std::span<double> out) const {
  for (int r = 0; r < R_; ++r) {
    double a = -t * log1p_h_[r];
    for (int i = 0; i < d_; ++i) {
      const int qi = q[i];
      if (qi != 0) a += qi * log_w_[i * R_ + r];
    }
    out[r] = a;
  }
}

double LevyEvaluator::log_tau(std::span<const int> q) const {
  check_counts(q, d_);
  const int t = std::accumulate(q.begin(), q.end(), 0);
  if (t < 1) throw std::invalid_argument("log_tau: cluster must hold at least one observation");
  Scratch a(R_);
  log_terms(q, t, a.span());
  return std::log(alpha_) + std::lgamma(static_cast<double>(t)) + log_sum_exp(a.span());
}

double LevyEvaluator::log_tau_ratio(std::span<const int> q, int i) const {
  check_counts(q, d_);
  check_group(i, d_);
  const int t = std::accumulate(q.begin(), q.end(), 0);
  if (t < 1) throw std::invalid_argument("log_tau_ratio: cluster must hold at least one observation");
  Scratch a(R_), b(R_);
  auto as = a.span();
  auto bs = b.span();
  log_terms(q, t, as);
  for (int r = 0; r < R_; ++r) bs[r] = as[r] + log_w_[i * R_ + r] - log1p_h_[r];
  return std::log(static_cast<double>(t)) + log_sum_exp(bs) - log_sum_exp(as);
}

double LevyEvaluator::log_tau_new(int i) const {
  check_group(i, d_);
  Scratch b(R_);
  auto bs = b.span();
  for (int r = 0; r < R_; ++r) bs[r] = log_w_[i * R_ + r] - log1p_h_[r];
  return std::log(alpha_) + log_sum_exp(bs);
}

namespace {

void check_aux(const LmrmParams& params, const AuxVars& u) {
  params.validate();
  if (static_cast<int>(u.u.size()) != params.d)
    throw std::invalid_argument("auxiliary vector length does not match d");
  for (double ui : u.u)
    if (!(ui > 0.0) || !std::isfinite(ui))
      throw std::invalid_argument("auxiliary variables must be strictly positive");
}

void check_sizes(const LmrmParams& params, std::span<const ClusterCounts> counts,
                 std::span<const int> n) {
  if (static_cast<int>(n.size()) != params.d)
    throw std::invalid_argument("group size vector length does not match d");
  if (counts.empty()) return;
  std::vector<int> sums(params.d, 0);
  for (const auto& c : counts) {
    check_counts(c.q, params.d);
    if (c.total() < 1) throw std::invalid_argument("empty cluster in count list");
    for (int i = 0; i < params.d; ++i) sums[i] += c.q[i];
  }
  for (int i = 0; i < params.d; ++i)
    if (sums[i] != n[i])
      throw std::invalid_argument("cluster counts of group " + std::to_string(i) + " sum to " +
                                  std::to_string(sums[i]) +
                                  " but the group holds " + std::to_string(n[i]));
}

}  // namespace

std::vector<double> h_vector(const LmrmParams& params, const AuxVars& u) {
  check_aux(params, u);
  const LevyEvaluator ev(params, u.u);
  return {ev.h().begin(), ev.h().end()};
}

double psi(const LmrmParams& params, const AuxVars& u) {
  check_aux(params, u);
  return LevyEvaluator(params, u.u).psi();
}

double log_tau(const LmrmParams& params, const AuxVars& u, const ClusterCounts& q) {
  check_aux(params, u);
  return LevyEvaluator(params, u.u).log_tau(q.q);
}

double log_tau_ratio(const LmrmParams& params, const AuxVars& u, const ClusterCounts& q,
                     int i) {
  check_aux(params, u);
  return LevyEvaluator(params, u.u).log_tau_ratio(q.q, i);
}

double log_tau_new(const LmrmParams& params, const AuxVars& u, int i) {
  check_aux(params, u);
  return LevyEvaluator(params, u.u).log_tau_new(i);
}

double log_joint_aux(const LmrmParams& params, const AuxVars& u,
                     std::span<const ClusterCounts> counts, std::span<const int> n) {
  check_aux(params, u);
  check_sizes(params, counts, n);
  const LevyEvaluator ev(params, u.u);
  double lp = -ev.psi();
  for (int i = 0; i < params.d; ++i)
    lp += (n[i] - 1) * std::log(u.u[i]);
  for (const auto& c : counts) lp += ev.log_tau(c.q);
  return lp;
}

std::vector<double> grad_log_joint_u(const LmrmParams& params, const AuxVars& u,
                                     std::span<const ClusterCounts> counts,
                                     std::span<const int> n) {
  check_aux(params, u);
  check_sizes(params, counts, n);
  const LevyEvaluator ev(params, u.u);
  std::vector<double> g(params.d);
  for (int i = 0; i < params.d; ++i) {
    double gi = (n[i] - 1) / u.u[i] - ev.dpsi_du(i);
    for (const auto& c : counts) gi -= std::exp(ev.log_tau_ratio(c.q, i));
    g[i] = gi;
  }
  return g;
}

std::vector<double> grad_log_joint_w(const LmrmParams& params, const AuxVars& u,
                                     std::span<const ClusterCounts> counts) {
  check_aux(params, u);
  for (const auto& c : counts) {
    check_counts(c.q, params.d);
    if (c.total() < 1) throw std::invalid_argument("empty cluster in count list");
  }
  const LevyEvaluator ev(params, u.u);
  const int d = params.d, R = params.R;
  const auto h = ev.h();
  std::vector<double> g(d * R);
  for (int i = 0; i < d; ++i)
    for (int r = 0; r < R; ++r)
      g[i * R + r] =
          -params.alpha * u.u[i] / (h[r] + 1.0);

  // d log tau_q / d w_{i,r} = pi_r (q_i / w_{i,r} - t u_i / (h_r + 1)), with
  // pi_r the share of CRM r in the sum defining tau_q.
  std::vector<double> a(R);
  for (const auto& c : counts) {
    const int t = c.total();
    for (int r = 0; r < R; ++r) {
      double ar = -t * std::log1p(h[r]);
      for (int i = 0; i < d; ++i) ar += c.q[i] * std::log(params.w(i, r));
      a[r] = ar;
    }
    const double lse = log_sum_exp(a);
    for (int r = 0; r < R; ++r) {
      const double share = std::exp(a[r] - lse);
      for (int i = 0; i < d; ++i)
        g[i * R + r] +=
            share * (c.q[i] / params.w(i, r) -
                     t * u.u[i] / (h[r] + 1.0));
    }
  }
  return g;
}

double log_weight_likelihood(const LmrmParams& params, const AuxVars& u,
                             std::span<const ClusterCounts> counts) {
  check_aux(params, u);
  const LevyEvaluator ev(params, u.u);
  double lp = -ev.psi();
  for (const auto& c : counts) lp += ev.log_tau(c.q);
  return lp;
}

}  // namespace lmrm
