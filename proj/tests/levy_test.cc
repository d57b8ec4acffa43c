// Apache License, Version 2.0, refer to LICENSE.txt

#define BOOST_TEST_MODULE test levy
#define BOOST_TEST_DYN_LINK

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/test/unit_test.hpp>

#include <cmath>
#include <numeric>

#include "lmrm/levy.hh"
#include "test_support.hh"

namespace tt = boost::test_tools;
using namespace lmrm;
using lmrm_test::naive_h;
using lmrm_test::naive_psi;
using lmrm_test::naive_tau;
using lmrm_test::plus_one;
using lmrm_test::rel_err;

namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

// log tau_q with every intermediate held in 50-digit floating point, so that
// Gamma(t) and (1 + h)^t are formed directly even for t in the hundreds.
double extended_log_tau(const LmrmParams& p, const AuxVars& u, const ClusterCounts& q) {
  int t = 0;
  for (int x : q.q) t += x;
  Big fact = 1;
  for (int k = 2; k < t; ++k) fact *= k;
  Big sum = 0;
  for (int r = 0; r < p.R; ++r) {
    Big h = 0, prod = 1;
    for (int i = 0; i < p.d; ++i) {
      h += Big(p.w(i, r)) * Big(u.u[i]);
      prod *= boost::multiprecision::pow(Big(p.w(i, r)), q.q[i]);
    }
    sum += prod / boost::multiprecision::pow(1 + h, t);
  }
  return static_cast<double>(boost::multiprecision::log(Big(p.alpha) * fact * sum));
}

// The Levy measure sits on rays s -> (w_{1,r} s, ..., w_{d,r} s), so each
// functional is a sum over r of integrals against alpha s^-1 e^-s ds.
double quadrature_psi(const LmrmParams& p, const AuxVars& u) {
  boost::math::quadrature::exp_sinh<double> integrator;
  double total = 0.0;
  for (int r = 0; r < p.R; ++r) {
    const double h = naive_h(p, u, r);
    total += integrator.integrate([&](double s) {
      return s > 0.0 ? -std::expm1(-s * h) * p.alpha * std::exp(-s) / s : p.alpha * h;
    });
  }
  return total;
}

double quadrature_tau(const LmrmParams& p, const AuxVars& u, const ClusterCounts& q) {
  boost::math::quadrature::exp_sinh<double> integrator;
  double total = 0.0;
  for (int r = 0; r < p.R; ++r) {
    const double h = naive_h(p, u, r);
    double log_coef = std::log(p.alpha);
    for (int i = 0; i < p.d; ++i) log_coef += q.q[i] * std::log(p.w(i, r));
    const int t = std::accumulate(q.q.begin(), q.q.end(), 0);
    // Log form keeps the far tail at 0 instead of inf * 0.
    total += integrator.integrate([&](double s) {
      const double log_power = t == 1 ? 0.0 : (t - 1) * std::log(s);
      return std::exp(log_coef + log_power - s * (1.0 + h));
    });
  }
  return total;
}

double log_joint_by_parts(const LmrmParams& p, const AuxVars& u,
                          const std::vector<ClusterCounts>& counts, const std::vector<int>& n) {
  double v = -naive_psi(p, u);
  for (int i = 0; i < p.d; ++i) v += (n[i] - 1) * std::log(u.u[i]);
  for (const auto& q : counts) v += std::log(naive_tau(p, u, q));
  return v;
}

}  // namespace

BOOST_AUTO_TEST_CASE(test_h_vector)
{
  const auto h1 = h_vector(LmrmParams::ones(1, 1, 1.0), AuxVars{{1.0}});
  BOOST_TEST(h1.size() == 1u);
  BOOST_TEST(h1[0] == 1.0);

  const LmrmParams p(2, 2, 1.0, {1.0, 0.5, 0.5, 1.0});
  const auto h2 = h_vector(p, AuxVars{{1.0, 2.0}});
  BOOST_TEST(h2[0] == 2.0, tt::tolerance(1e-15));
  BOOST_TEST(h2[1] == 2.5, tt::tolerance(1e-15));

  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = lmrm_test::random_params(rng, 2, 3);
    const auto u = lmrm_test::random_aux(rng, 2);
    const auto h = h_vector(q, u);
    for (int r = 0; r < 3; ++r) BOOST_TEST(h[r] == naive_h(q, u, r), tt::tolerance(1e-14));
  }
}

BOOST_AUTO_TEST_CASE(test_dimension_errors)
{
  const auto p = LmrmParams::ones(2, 2, 1.0);
  BOOST_CHECK_THROW(h_vector(p, AuxVars{{1.0}}), std::invalid_argument);
  BOOST_CHECK_THROW(log_tau(p, AuxVars{{1.0, 1.0}}, ClusterCounts{{1}}), std::invalid_argument);
  BOOST_CHECK_THROW(log_tau(p, AuxVars{{1.0, 1.0}}, ClusterCounts{{0, 0}}), std::invalid_argument);
  BOOST_CHECK_THROW(log_tau_new(p, AuxVars{{1.0, 1.0}}, 2), std::out_of_range);
  BOOST_CHECK_THROW(LmrmParams(1, 2, 1.0, {1.0, 0.0}).validate(), std::invalid_argument);
  BOOST_CHECK_THROW(LmrmParams(1, 1, -1.0, {1.0}).validate(), std::invalid_argument);
}

BOOST_AUTO_TEST_CASE(test_psi_values)
{
  const auto p = LmrmParams::ones(1, 1, 1.0);
  BOOST_TEST(psi(p, AuxVars{{1.0}}) == std::log(2.0), tt::tolerance(1e-14));
  BOOST_TEST(quadrature_psi(p, AuxVars{{1.0}}) == std::log(2.0), tt::tolerance(1e-10));
  BOOST_TEST(psi(LmrmParams::ones(2, 3, 1.0), AuxVars{{1e-300, 1e-300}}) < 1e-290);

  Rng rng(11);
  const auto q = lmrm_test::random_params(rng, 2, 3);
  const auto u = lmrm_test::random_aux(rng, 2);
  LmrmParams doubled = q;
  doubled.alpha *= 2.0;
  BOOST_TEST(psi(doubled, u) == 2.0 * psi(q, u), tt::tolerance(1e-14));
}

BOOST_AUTO_TEST_CASE(test_log_tau_values)
{
  const auto p = LmrmParams::ones(1, 1, 1.0);
  const AuxVars u{{1.0}};
  BOOST_TEST(log_tau(p, u, ClusterCounts{{1}}) == std::log(0.5), tt::tolerance(1e-14));
  BOOST_TEST(log_tau(p, u, ClusterCounts{{2}}) == std::log(0.25), tt::tolerance(1e-14));
  BOOST_TEST(quadrature_tau(p, u, ClusterCounts{{1}}) == 0.5, tt::tolerance(1e-10));
  BOOST_TEST(quadrature_tau(p, u, ClusterCounts{{2}}) == 0.25, tt::tolerance(1e-10));
}

BOOST_AUTO_TEST_CASE(test_quadrature_agreement)
{
  Rng rng(13);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + trial % 2, R = 1 + trial % 3;
    const auto p = lmrm_test::random_params(rng, d, R);
    const auto u = lmrm_test::random_aux(rng, d);
    BOOST_TEST(std::abs(psi(p, u) - quadrature_psi(p, u)) < 1e-8);
    const auto q = lmrm_test::random_counts(rng, d, 5);
    BOOST_TEST(std::abs(log_tau(p, u, q) - std::log(quadrature_tau(p, u, q))) < 1e-8);
  }
}

BOOST_AUTO_TEST_CASE(test_log_tau_large_t_extended_precision)
{
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = lmrm_test::random_params(rng, 2, 3);
    // Scale u so that the h_r sit near one.
    AuxVars u{{0.5 / (p.w(0, 0) + p.w(0, 1) + p.w(0, 2)) * 3.0 / 2.0,
               0.5 / (p.w(1, 0) + p.w(1, 1) + p.w(1, 2)) * 3.0 / 2.0}};
    const ClusterCounts q{{250, 250}};
    const double value = log_tau(p, u, q);
    BOOST_TEST(std::isfinite(value));
    BOOST_TEST(value == extended_log_tau(p, u, q), tt::tolerance(1e-12));
  }
}

BOOST_AUTO_TEST_CASE(test_log_tau_ratio)
{
  const auto p = LmrmParams::ones(1, 1, 1.0);
  BOOST_TEST(log_tau_ratio(p, AuxVars{{1.0}}, ClusterCounts{{1}}, 0) == std::log(0.5),
             tt::tolerance(1e-14));

  Rng rng(19);
  // A single CRM collapses the ratio to t w_i / (h + 1).
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 3;
    const auto p1 = lmrm_test::random_params(rng, d, 1);
    const auto u = lmrm_test::random_aux(rng, d);
    const auto q = lmrm_test::random_counts(rng, d, 30);
    const int i = trial % d;
    const double expected = std::log(q.total() * p1.w(i, 0) / (naive_h(p1, u, 0) + 1.0));
    BOOST_TEST(log_tau_ratio(p1, u, q, i) == expected, tt::tolerance(1e-12));
  }

  // Against the direct formula for moderate t.
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + trial % 3, R = 1 + trial % 4;
    const auto pr = lmrm_test::random_params(rng, d, R);
    const auto u = lmrm_test::random_aux(rng, d);
    const auto q = lmrm_test::random_counts(rng, d, 49);
    const int i = trial % d;
    const double direct = std::log(naive_tau(pr, u, plus_one(q, i)) / naive_tau(pr, u, q));
    BOOST_TEST(rel_err(log_tau_ratio(pr, u, q, i), direct) < 1e-10);
    BOOST_TEST(log_tau_ratio(pr, u, q, i) ==
                   log_tau(pr, u, plus_one(q, i)) - log_tau(pr, u, q),
               tt::tolerance(1e-10));
  }

  // t = 800 against extended precision.
  for (int trial = 0; trial < 5; ++trial) {
    const auto pr = lmrm_test::random_params(rng, 2, 3);
    const auto u = lmrm_test::random_aux(rng, 2);
    const ClusterCounts q{{500, 300}};
    const double expected = extended_log_tau(pr, u, plus_one(q, 1)) - extended_log_tau(pr, u, q);
    BOOST_TEST(rel_err(log_tau_ratio(pr, u, q, 1), expected) < 1e-8);
  }

  // Finite where the direct form has long since underflowed.
  const auto big = lmrm_test::random_params(rng, 2, 3);
  const auto ub = lmrm_test::random_aux(rng, 2);
  const ClusterCounts huge{{6000, 4000}};
  const double direct = naive_tau(big, ub, huge);
  BOOST_TEST((direct == 0.0 || !std::isfinite(direct)));
  BOOST_TEST(std::isfinite(log_tau_ratio(big, ub, huge, 0)));
  BOOST_TEST(std::isfinite(log_tau(big, ub, huge)));
}

BOOST_AUTO_TEST_CASE(test_log_tau_new)
{
  const AuxVars one{{1.0}};
  BOOST_TEST(log_tau_new(LmrmParams::ones(1, 1, 1.0), one, 0) == std::log(0.5), tt::tolerance(1e-14));
  BOOST_TEST(log_tau_new(LmrmParams::ones(1, 1, 0.005), one, 0) == std::log(0.0025),
             tt::tolerance(1e-14));
  Rng rng(23);
  const auto p = lmrm_test::random_params(rng, 2, 2);
  const auto u = lmrm_test::random_aux(rng, 2);
  for (int i = 0; i < 2; ++i) {
    ClusterCounts delta{{0, 0}};
    delta.q[i] = 1;
    BOOST_TEST(log_tau_new(p, u, i) == log_tau(p, u, delta), tt::tolerance(1e-12));
  }
}

BOOST_AUTO_TEST_CASE(test_log_joint_aux)
{
  Rng rng(29);
  const auto p = lmrm_test::random_params(rng, 2, 3);
  const auto u = lmrm_test::random_aux(rng, 2);
  const std::vector<int> ones{1, 1};
  BOOST_TEST(log_joint_aux(p, u, {}, ones) == -psi(p, u), tt::tolerance(1e-14));

  const std::vector<ClusterCounts> c1{ClusterCounts{{1}}};
  const std::vector<int> n1{1};
  BOOST_TEST(log_joint_aux(LmrmParams::ones(1, 1, 1.0), AuxVars{{1.0}}, c1, n1) ==
                 -2.0 * std::log(2.0),
             tt::tolerance(1e-14));

  for (int trial = 0; trial < 20; ++trial) {
    const auto counts = lmrm_test::random_partition(rng, 2, 1 + trial % 4, 8);
    const auto n = lmrm_test::sizes_of(counts, 2);
    BOOST_TEST(log_joint_aux(p, u, counts, n) == log_joint_by_parts(p, u, counts, n),
               tt::tolerance(1e-12));
  }

  const std::vector<int> wrong{5, 5};
  BOOST_CHECK_THROW(log_joint_aux(p, u, lmrm_test::random_partition(rng, 2, 2, 3), wrong),
                    std::invalid_argument);
}

BOOST_AUTO_TEST_CASE(test_gradient_closed_forms)
{
  Rng rng(31);
  const auto p = lmrm_test::random_params(rng, 2, 3);
  const auto u = lmrm_test::random_aux(rng, 2);
  const std::vector<int> ones{1, 1};
  const auto gu = grad_log_joint_u(p, u, {}, ones);
  const auto gw = grad_log_joint_w(p, u, {});
  for (int i = 0; i < 2; ++i) {
    double expected = 0.0;
    for (int r = 0; r < 3; ++r) {
      expected -= p.alpha * p.w(i, r) / (naive_h(p, u, r) + 1.0);
      BOOST_TEST(gw[i * 3 + r] == -p.alpha * u.u[i] / (naive_h(p, u, r) + 1.0), tt::tolerance(1e-13));
    }
    BOOST_TEST(gu[i] == expected, tt::tolerance(1e-13));
  }

  const std::vector<ClusterCounts> c1{ClusterCounts{{1}}};
  const std::vector<int> n1{1};
  BOOST_TEST(grad_log_joint_u(LmrmParams::ones(1, 1, 1.0), AuxVars{{1.0}}, c1, n1)[0] == -1.0,
             tt::tolerance(1e-14));

  // One CRM: the r' sum in the weight gradient is a single term.
  const auto p1 = lmrm_test::random_params(rng, 2, 1);
  const auto counts = lmrm_test::random_partition(rng, 2, 3, 6);
  const auto g1 = grad_log_joint_w(p1, u, counts);
  const double h = naive_h(p1, u, 0);
  for (int i = 0; i < 2; ++i) {
    double expected = -p1.alpha * u.u[i] / (h + 1.0);
    for (const auto& q : counts) expected += q.q[i] / p1.w(i, 0) - q.total() * u.u[i] / (h + 1.0);
    BOOST_TEST(g1[i] == expected, tt::tolerance(1e-12));
  }
}

BOOST_AUTO_TEST_CASE(test_gradients_finite_differences)
{
  Rng rng(37);
  const double step = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 3, R = 1 + trial % 4;
    auto p = lmrm_test::random_params(rng, d, R);
    auto u = lmrm_test::random_aux(rng, d);
    const auto counts = lmrm_test::random_partition(rng, d, 1 + trial % 4, 10);
    const auto n = lmrm_test::sizes_of(counts, d);

    // Finite differences on the log scale: d f(e^x) / dx = u f'(u).
    const auto gu = grad_log_joint_u(p, u, counts, n);
    for (int i = 0; i < d; ++i) {
      AuxVars up = u, dn = u;
      up.u[i] = u.u[i] * std::exp(step);
      dn.u[i] = u.u[i] * std::exp(-step);
      const double fd = (log_joint_aux(p, up, counts, n) - log_joint_aux(p, dn, counts, n)) / (2 * step);
      BOOST_TEST(rel_err(gu[i] * u.u[i], fd) < 1e-5);
    }
    const auto gw = grad_log_joint_w(p, u, counts);
    for (int i = 0; i < d; ++i)
      for (int r = 0; r < R; ++r) {
        LmrmParams up = p, dn = p;
        up.w(i, r) = p.w(i, r) * std::exp(step);
        dn.w(i, r) = p.w(i, r) * std::exp(-step);
        const double fd =
            (log_weight_likelihood(up, u, counts) - log_weight_likelihood(dn, u, counts)) / (2 * step);
        BOOST_TEST(rel_err(gw[i * R + r] * p.w(i, r), fd) < 1e-5);
      }
  }
}

BOOST_AUTO_TEST_CASE(test_invariances)
{
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = lmrm_test::random_params(rng, 2, 3);
    const auto u = lmrm_test::random_aux(rng, 2);
    const auto q = lmrm_test::random_counts(rng, 2, 12);

    // Column permutation (r -> r+1 mod R).
    LmrmParams perm = p;
    for (int i = 0; i < 2; ++i)
      for (int r = 0; r < 3; ++r) perm.w(i, (r + 1) % 3) = p.w(i, r);
    BOOST_TEST(log_tau(perm, u, q) == log_tau(p, u, q), tt::tolerance(1e-13));
    BOOST_TEST(psi(perm, u) == psi(p, u), tt::tolerance(1e-13));

    // alpha scales psi and tau, and cancels in the ratio.
    LmrmParams scaled = p;
    scaled.alpha = 3.0 * p.alpha;
    BOOST_TEST(log_tau(scaled, u, q) == log_tau(p, u, q) + std::log(3.0), tt::tolerance(1e-13));
    BOOST_TEST(psi(scaled, u) == 3.0 * psi(p, u), tt::tolerance(1e-13));
    BOOST_TEST(log_tau_ratio(scaled, u, q, 0) == log_tau_ratio(p, u, q, 0), tt::tolerance(1e-13));

    // psi is nondecreasing in every u_i and every w_{i,r}.
    AuxVars bigger = u;
    bigger.u[trial % 2] *= 1.5;
    BOOST_TEST(psi(p, bigger) >= psi(p, u));
    LmrmParams heavier = p;
    heavier.w(trial % 2, trial % 3) *= 1.5;
    BOOST_TEST(psi(heavier, u) >= psi(p, u));
  }
}
