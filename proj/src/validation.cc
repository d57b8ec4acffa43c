// Apache License, Version 2.0, refer to LICENSE.txt

#include "lmrm/validation.hh"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "lmrm/eppf.hh"
#include "lmrm/levy.hh"
#include "lmrm/numeric.hh"

namespace lmrm {

namespace {

struct Instance {
  LmrmParams params;
  AuxVars u;
};

Instance random_instance(Rng& rng, int d, int R) {
  std::uniform_real_distribution<double> w(0.2, 2.5), u(0.1, 3.0), a(0.3, 3.0);
  std::vector<double> weights(static_cast<std::size_t>(d * R));
  for (auto& x : weights) x = w(rng);
  AuxVars aux{std::vector<double>(static_cast<std::size_t>(d))};
  for (auto& x : aux.u) x = u(rng);
  return {LmrmParams(d, R, a(rng), std::move(weights)), std::move(aux)};
}

ClusterCounts random_counts(Rng& rng, int d, int max_total) {
  std::uniform_int_distribution<int> total(1, max_total);
  std::uniform_int_distribution<int> group(0, d - 1);
  ClusterCounts q{std::vector<int>(static_cast<std::size_t>(d), 0)};
  const int t = total(rng);
  for (int k = 0; k < t; ++k) q.q[group(rng)] += 1;
  return q;
}

double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale < 1e-8 ? std::abs(a - b) : std::abs(a - b) / scale;
}

// tau_q evaluated literally, without logarithms.
double direct_tau(const Instance& in, const ClusterCounts& q) {
  const auto& p = in.params;
  const int t = q.total();
  double sum = 0.0;
  for (int r = 0; r < p.R; ++r) {
    double h = 0.0, prod = 1.0;
    for (int i = 0; i < p.d; ++i) {
      h += p.w(i, r) * in.u.u[i];
      prod *= std::pow(p.w(i, r), q.q[i]);
    }
    sum += prod / std::pow(1.0 + h, t);
  }
  return p.alpha * std::tgamma(static_cast<double>(t)) * sum;
}

// The LMRM Levy measure lives on the rays s -> (w_{1,r} s, ..., w_{d,r} s),
// so each functional is a sum over r of one-dimensional integrals in s.
double quad_psi(const Instance& in) {
  boost::math::quadrature::exp_sinh<double> integrator;
  double total = 0.0;
  for (int r = 0; r < in.params.R; ++r) {
    double h = 0.0;
    for (int i = 0; i < in.params.d; ++i) h += in.params.w(i, r) * in.u.u[i];
    total += integrator.integrate(
        [&](double s) { return s > 0.0 ? -std::expm1(-s * h) * in.params.alpha * std::exp(-s) / s
                                       : in.params.alpha * h; });
  }
  return total;
}

double quad_tau(const Instance& in, const ClusterCounts& q) {
  boost::math::quadrature::exp_sinh<double> integrator;
  double total = 0.0;
  for (int r = 0; r < in.params.R; ++r) {
    double h = 0.0;
    for (int i = 0; i < in.params.d; ++i) h += in.params.w(i, r) * in.u.u[i];
    double log_coef = std::log(in.params.alpha);
    for (int i = 0; i < in.params.d; ++i) log_coef += q.q[i] * std::log(in.params.w(i, r));
    const int t = q.total();
    total += integrator.integrate([&](double s) {
      const double log_s_power = t == 1 ? 0.0 : (t - 1) * std::log(s);
      return std::exp(log_coef + log_s_power - s * (1.0 + h));
    });
  }
  return total;
}

CheckResult check(const std::string& suite, const std::string& name, double error, double tol,
                  const std::string& detail = "") {
  return {suite, name, error, tol, std::isfinite(error) && error <= tol, detail};
}

std::vector<CheckResult> levy_suite() {
  std::vector<CheckResult> out;
  Rng rng(20240101);
  double psi_err = 0.0, tau_err = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 1 + trial % 2, R = 1 + trial % 3;
    const Instance in = random_instance(rng, d, R);
    psi_err = std::max(psi_err, std::abs(psi(in.params, in.u) - quad_psi(in)));
    const ClusterCounts q = random_counts(rng, d, 5);
    tau_err = std::max(tau_err, std::abs(log_tau(in.params, in.u, q) - std::log(quad_tau(in, q))));
  }
  out.push_back(check("levy", "psi_vs_quadrature", psi_err, 1e-8, "40 instances, d<=2, R<=3"));
  out.push_back(check("levy", "log_tau_vs_quadrature", tau_err, 1e-8, "40 instances, t<=5"));

  double ratio_err = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const int d = 1 + trial % 3, R = 1 + trial % 4;
    const Instance in = random_instance(rng, d, R);
    const ClusterCounts q = random_counts(rng, d, 49);
    const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(d));
    ClusterCounts q1 = q;
    q1.q[i] += 1;
    const double direct = direct_tau(in, q1) / direct_tau(in, q);
    ratio_err = std::max(ratio_err, rel_err(std::exp(log_tau_ratio(in.params, in.u, q, i)), direct));
  }
  out.push_back(check("levy", "ratio_vs_direct", ratio_err, 1e-10, "500 instances, t<=50"));

  {
    Instance in = random_instance(rng, 2, 3);
    ClusterCounts q{{6000, 4000}};
    const double lr = log_tau_ratio(in.params, in.u, q, 0);
    const double lt = log_tau(in.params, in.u, q);
    const double direct = direct_tau(in, q);
    const bool ok = std::isfinite(lr) && std::isfinite(lt) && !(direct > 0.0 && std::isfinite(direct));
    out.push_back(check("levy", "large_t_finite", ok ? 0.0 : 1.0, 0.0,
                        "t=10000: log-space finite, direct form under/overflows"));
  }

  double alpha_err = 0.0, perm_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Instance in = random_instance(rng, 2, 3);
    const ClusterCounts q = random_counts(rng, 2, 20);
    Instance scaled = in;
    scaled.params.alpha *= 3.7;
    alpha_err = std::max(alpha_err, std::abs(log_tau_ratio(in.params, in.u, q, 1) -
                                             log_tau_ratio(scaled.params, scaled.u, q, 1)));
    alpha_err = std::max(alpha_err, std::abs(log_tau(scaled.params, scaled.u, q) -
                                             log_tau(in.params, in.u, q) - std::log(3.7)));
    alpha_err = std::max(alpha_err, rel_err(psi(scaled.params, scaled.u), 3.7 * psi(in.params, in.u)));
    Instance perm = in;
    for (int i = 0; i < 2; ++i) {
      perm.params.w(i, 0) = in.params.w(i, 2);
      perm.params.w(i, 1) = in.params.w(i, 0);
      perm.params.w(i, 2) = in.params.w(i, 1);
    }
    perm_err = std::max(perm_err, std::abs(log_tau(perm.params, perm.u, q) - log_tau(in.params, in.u, q)));
  }
  out.push_back(check("levy", "alpha_scaling", alpha_err, 1e-12));
  out.push_back(check("levy", "column_permutation", perm_err, 1e-12));
  return out;
}

std::vector<ClusterCounts> random_partition(Rng& rng, int d, int K, int max_total) {
  std::vector<ClusterCounts> counts;
  for (int k = 0; k < K; ++k) counts.push_back(random_counts(rng, d, max_total));
  return counts;
}

std::vector<int> sizes_of(const std::vector<ClusterCounts>& counts, int d) {
  std::vector<int> n(static_cast<std::size_t>(d), 0);
  for (const auto& c : counts)
    for (int i = 0; i < d; ++i) n[i] += c.q[i];
  return n;
}

std::vector<CheckResult> gradient_suite() {
  Rng rng(777);
  constexpr double h = 1e-6;
  double err_u = 0.0, err_w = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 3, R = 1 + trial % 4;
    const Instance in = random_instance(rng, d, R);
    const auto counts = random_partition(rng, d, 1 + trial % 4, 12);
    const auto n = sizes_of(counts, d);
    const auto gu = grad_log_joint_u(in.params, in.u, counts, n);
    for (int i = 0; i < d; ++i) {
      AuxVars up = in.u, dn = in.u;
      up.u[i] *= std::exp(h);
      dn.u[i] *= std::exp(-h);
      const double fd = (log_joint_aux(in.params, up, counts, n) - log_joint_aux(in.params, dn, counts, n)) / (2 * h);
      err_u = std::max(err_u, rel_err(in.u.u[i] * gu[i], fd));
    }
    const auto gw = grad_log_joint_w(in.params, in.u, counts);
    for (int i = 0; i < d; ++i)
      for (int r = 0; r < R; ++r) {
        LmrmParams up = in.params, dn = in.params;
        up.w(i, r) *= std::exp(h);
        dn.w(i, r) *= std::exp(-h);
        const double fd = (log_weight_likelihood(up, in.u, counts) - log_weight_likelihood(dn, in.u, counts)) / (2 * h);
        err_w = std::max(err_w, rel_err(in.params.w(i, r) * gw[i * R + r], fd));
      }
  }
  return {check("gradients", "grad_u_vs_finite_difference", err_u, 1e-5, "100 instances"),
          check("gradients", "grad_w_vs_finite_difference", err_w, 1e-5, "100 instances")};
}

std::vector<CheckResult> eppf_suite() {
  std::vector<CheckResult> out;
  double ewens_err = 0.0;
  int compared = 0;
  for (double alpha : {0.5, 1.0, 2.0}) {
    const LmrmParams p = LmrmParams::ones(1, 1, alpha);
    for (int n = 1; n <= 6; ++n) {
      const std::vector<int> sizes{n};
      for (const auto& [structure, mult] : enumerate_count_structures(sizes)) {
        const PartitionSpec spec = to_spec(structure);
        ewens_err = std::max(ewens_err, std::abs(log_eppf(p, spec) - ewens_log_eppf(alpha, spec)));
        ++compared;
      }
    }
  }
  out.push_back(check("eppf", "ewens_equivalence", ewens_err, 1e-6,
                      std::to_string(compared) + " partitions, alpha in {0.5,1,2}, n<=6"));

  Rng rng(4242);
  const Instance in = random_instance(rng, 2, 2);
  LmrmParams p = in.params;
  p.alpha = 1.0;
  double total = 0.0;
  const std::vector<int> n{2, 1};
  for (const auto& [structure, mult] : enumerate_count_structures(n))
    total += static_cast<double>(mult) * std::exp(log_eppf(p, to_spec(structure)));
  out.push_back(check("eppf", "probabilities_sum_to_one", std::abs(total - 1.0), 1e-8, "d=2, R=2, n=(2,1)"));

  {
    const LmrmParams dp = LmrmParams::ones(1, 1, 1.3);
    const auto spec = PartitionSpec::from_counts({ClusterCounts{{2}}, ClusterCounts{{1}}});
    const auto res = eppf_consistency_check(dp, spec);
    out.push_back(check("eppf", "consistency_dp", *std::max_element(res.begin(), res.end()), 1e-10));
  }
  {
    const Instance in3 = random_instance(rng, 2, 3);
    const auto spec = PartitionSpec::from_counts({ClusterCounts{{1, 1}}, ClusterCounts{{1, 0}}});
    const auto res = eppf_consistency_check(in3.params, spec);
    out.push_back(check("eppf", "consistency_d2_r3", *std::max_element(res.begin(), res.end()), 1e-6));
  }
  return out;
}

std::vector<CheckResult> oracle_suite() {
  std::vector<CheckResult> out;
  {
    Rng rng(99);
    const LmrmParams p = LmrmParams::ones(1, 1, 1.0);
    const std::vector<int> n{2};
    const auto mc = mc_partition_probs(p, n, 10000, 200000, rng);
    const CountStructure together{{2}};
    const auto& est = mc.at(together);
    out.push_back(check("oracle", "dp_pair_same_cluster", std::abs(est.probability - 0.5) / est.std_error, 3.0,
                        "z-score against 1/(1+alpha)"));
  }
  {
    Rng rng(2718);
    const LmrmParams p(2, 2, 1.0, {1.7, 0.4, 0.3, 1.2});
    const std::vector<int> n{2, 1};
    const auto mc = mc_partition_probs(p, n, 10000, 200000, rng);
    double worst = 0.0;
    for (const auto& [structure, mult] : enumerate_count_structures(n)) {
      const double exact = static_cast<double>(mult) * std::exp(log_eppf(p, to_spec(structure)));
      const auto it = mc.find(structure);
      const double phat = it == mc.end() ? 0.0 : it->second.probability;
      const double se = it == mc.end() ? 0.0 : it->second.std_error;
      worst = std::max(worst, se > 0.0 ? std::abs(phat - exact) / se : INFINITY);
    }
    out.push_back(check("oracle", "quadrature_vs_simulation", worst, 3.0,
                        "max z-score, d=2, R=2, n=(2,1), N=1e4, M=2e5"));
  }
  return out;
}

}  // namespace

std::vector<std::string> validation_suites() { return {"levy", "eppf", "gradients", "oracle"}; }

bool is_validation_suite(const std::string& name) {
  const auto s = validation_suites();
  return std::find(s.begin(), s.end(), name) != s.end();
}

std::vector<CheckResult> run_validation_suite(const std::string& name) {
  if (name == "levy") return levy_suite();
  if (name == "eppf") return eppf_suite();
  if (name == "gradients") return gradient_suite();
  if (name == "oracle") return oracle_suite();
  throw std::invalid_argument("unknown validation suite '" + name + "'");
}

std::string format_check_report(const std::vector<CheckResult>& checks) {
  std::string out = "suite,check,error,tolerance,result,detail\n";
  char buf[64];
  for (const auto& c : checks) {
    out += c.suite + "," + c.name + ",";
    std::snprintf(buf, sizeof buf, "%.6g,%.6g,", c.error, c.tolerance);
    out += buf;
    out += (c.passed ? "PASS" : "FAIL");
    out += ",\"" + c.detail + "\"\n";
  }
  return out;
}

}  // namespace lmrm
