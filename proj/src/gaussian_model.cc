// Apache License, Version 2.0, refer to LICENSE.txt

#include "lmrm/gaussian_model.hh"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lmrm {

namespace {

double normal_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace

void GaussianModel::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("GaussianModel: sigma must be positive");
  if (!(base_sd >= 0.0) || !std::isfinite(base_sd))
    throw std::invalid_argument("GaussianModel: base_sd must be non-negative");
  if (!std::isfinite(base_mean)) throw std::invalid_argument("GaussianModel: base_mean must be finite");
}

double log_likelihood(const GaussianModel& model, double x, double theta) {
  return normal_log_pdf(x, theta, model.sigma);
}

double log_marginal(const GaussianModel& model, double x) {
  return normal_log_pdf(x, model.base_mean,
                        std::sqrt(model.sigma * model.sigma + model.base_sd * model.base_sd));
}

NormalDist posterior(const GaussianModel& model, const SufficientStats& stats) {
  if (stats.count < 1)
    throw std::invalid_argument("posterior: cluster has no observations");
  const double lik_prec = stats.count / (model.sigma * model.sigma);
  const double lik_term = stats.sum / (model.sigma * model.sigma);
  if (model.base_sd == 0.0) return {model.base_mean, 0.0};
  const double prior_prec = 1.0 / (model.base_sd * model.base_sd);
  const double prec = prior_prec + lik_prec;
  return {(model.base_mean * prior_prec + lik_term) / prec, 1.0 / std::sqrt(prec)};
}

double posterior_draw(const GaussianModel& model, const SufficientStats& stats, Rng& rng) {
  const NormalDist post = posterior(model, stats);
  if (post.sd == 0.0) return post.mean;
  return post.mean + post.sd * std::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace lmrm
