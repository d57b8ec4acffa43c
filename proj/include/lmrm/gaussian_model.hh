// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include "lmrm/numeric.hh"

namespace lmrm {

// Fixed-variance Normal likelihood N(x; theta, sigma^2) with a Normal base
// measure H = N(base_mean, base_sd^2) on the cluster location theta.
struct GaussianModel {
  double sigma = 1.0;
  double base_mean = 0.0;
  double base_sd = 1.0;

  void validate() const;
};

struct SufficientStats {
  int count = 0;
  double sum = 0.0;
};

double log_likelihood(const GaussianModel& model, double x, double theta);

// log of the prior predictive density: x ~ N(base_mean, sigma^2 + base_sd^2).
double log_marginal(const GaussianModel& model, double x);

struct NormalDist {
  double mean;
  double sd;
};

// Conjugate posterior of theta given `stats.count` observations summing to
// `stats.sum`. Requires count >= 1.
NormalDist posterior(const GaussianModel& model, const SufficientStats& stats);

double posterior_draw(const GaussianModel& model, const SufficientStats& stats, Rng& rng);

}  // namespace lmrm
