// Apache License, Version 2.0, refer to LICENSE.txt

#include "lmrm/gibbs.hh"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lmrm {

namespace {

// Log-scale coordinates beyond this are treated as outside the support so
// that exp() stays finite.
constexpr double kMaxLogScale = 600.0;

}  // namespace

std::string to_string(ProposalKind kind) {
  return kind == ProposalKind::kGradient ? "gradient-informed" : "random-walk";
}

std::string to_string(WeightPrior prior) {
  return prior == WeightPrior::kHalfNormal ? "half-normal" : "exponential";
}

std::string to_string(InitStrategy init) {
  switch (init) {
    case InitStrategy::kSingleCluster: return "single";
    case InitStrategy::kPerGroup: return "per-group";
    case InitStrategy::kRandom: return "random";
  }
  return "single";
}

ProposalKind parse_proposal_kind(const std::string& s) {
  if (s == "random-walk") return ProposalKind::kRandomWalk;
  if (s == "gradient-informed") return ProposalKind::kGradient;
  throw std::invalid_argument("unknown proposal kind '" + s +
                              "' (expected random-walk or gradient-informed)");
}

WeightPrior parse_weight_prior(const std::string& s) {
  if (s == "exponential") return WeightPrior::kExponential;
  if (s == "half-normal") return WeightPrior::kHalfNormal;
  throw std::invalid_argument("unknown weight prior '" + s + "' (expected exponential or half-normal)");
}

InitStrategy parse_init_strategy(const std::string& s) {
  if (s == "single") return InitStrategy::kSingleCluster;
  if (s == "per-group") return InitStrategy::kPerGroup;
  if (s == "random") return InitStrategy::kRandom;
  throw std::invalid_argument("unknown init strategy '" + s + "' (expected single, per-group or random)");
}

void SamplerConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("sampler: iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations)
    throw std::invalid_argument("sampler: burn_in must lie in [0, iterations)");
  if (thin < 1) throw std::invalid_argument("sampler: thin must be >= 1");
  if (!(u_step >= 0.0) || !(w_step >= 0.0))
    throw std::invalid_argument("sampler: proposal scales must be non-negative");
  if (mh_repeats < 0) throw std::invalid_argument("sampler: mh_repeats must be >= 0");
  if (init == InitStrategy::kRandom && init_clusters < 1)
    throw std::invalid_argument("sampler: init_clusters must be >= 1");
}

std::vector<double> assignment_log_weights(const PartitionState& state, const LevyEvaluator& levy,
                                           const GaussianModel& model, int i, double x) {
  const int K = state.num_clusters();
  std::vector<double> lw(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k < K; ++k) {
    const Cluster& c = state.cluster(k);
    lw[k] = log_likelihood(model, x, c.theta) + levy.log_tau_ratio(c.counts.q, i);
  }
  lw[K] = log_marginal(model, x) + levy.log_tau_new(i);
  return lw;
}

void sweep_assignments(PartitionState& state, const LmrmParams& params, const AuxVars& u,
                       const GaussianModel& model, Rng& rng) {
  const LevyEvaluator levy(params, u.u);
  const auto sizes = state.group_sizes();
  for (int i = 0; i < state.d(); ++i) {
    for (int j = 0; j < sizes[i]; ++j) {
      const Detached det = state.detach(i, j);
      const auto lw = assignment_log_weights(state, levy, model, i, det.x);
      const auto choice = static_cast<int>(sample_log_categorical(lw, rng));
      if (choice < state.num_clusters()) {
        state.attach(i, j, ExistingCluster{choice});
      } else {
        const double theta = posterior_draw(model, SufficientStats{1, det.x}, rng);
        state.attach(i, j, NewCluster{theta});
      }
    }
  }
}

void sweep_atoms(PartitionState& state, const GaussianModel& model, Rng& rng) {
  for (int k = 0; k < state.num_clusters(); ++k)
    state.set_theta(k, posterior_draw(model, state.cluster(k).stats, rng));
}

double mh_log_scale_step(const std::function<double(double)>& log_target,
                         const std::function<double(double)>& grad, double x, double step,
                         ProposalKind kind, Rng& rng, bool& accepted) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double z = normal(rng);
  const double log_u = std::log(unif(rng));

  const double lp_x = log_target(x);
  double proposal;
  double log_q_ratio = 0.0;  // log q(x | x') - log q(x' | x)
  if (kind == ProposalKind::kGradient && step > 0.0) {
    const double half_var = 0.5 * step * step;
    const double g_x = grad(x);
    proposal = x + half_var * g_x + step * z;
    if (std::abs(proposal) <= kMaxLogScale) {
      const double g_p = grad(proposal);
      const double fwd = proposal - x - half_var * g_x;
      const double rev = x - proposal - half_var * g_p;
      log_q_ratio = (fwd * fwd - rev * rev) / (2.0 * step * step);
    }
  } else {
    proposal = x + step * z;
  }
  if (!std::isfinite(proposal) || std::abs(proposal) > kMaxLogScale) {
    accepted = false;
    return x;
  }
  const double log_ratio = log_target(proposal) - lp_x + log_q_ratio;
  accepted = log_u < log_ratio;
  return accepted ? proposal : x;
}

MhStats update_u(const LmrmParams& params, AuxVars& u, const PartitionState& state,
                 const SamplerConfig& config, Rng& rng) {
  MhStats stats;
  const auto counts = state.counts();
  const auto n = state.group_sizes();
  std::vector<double> work = u.u;

  // Log density of (log u_1, ..., log u_d), Jacobian included.
  auto log_target = [&](int i, double xi) {
    work[i] = std::exp(xi);
    const LevyEvaluator ev(params, work);
    double lp = -ev.psi();
    for (int l = 0; l < params.d; ++l) lp += n[l] * std::log(work[l]);
    for (const auto& c : counts) lp += ev.log_tau(c.q);
    return lp;
  };
  auto grad = [&](int i, double xi) {
    work[i] = std::exp(xi);
    const LevyEvaluator ev(params, work);
    double g = n[i] - work[i] * ev.dpsi_du(i);
    for (const auto& c : counts) g -= work[i] * std::exp(ev.log_tau_ratio(c.q, i));
    return g;
  };

  for (int rep = 0; rep < config.mh_repeats; ++rep) {
    for (int i = 0; i < params.d; ++i) {
      bool accepted = false;
      const double x0 = std::log(u.u[i]);
      const double x1 = mh_log_scale_step([&](double xi) { return log_target(i, xi); },
                                          [&](double xi) { return grad(i, xi); }, x0,
                                          config.u_step, config.u_update, rng, accepted);
      u.u[i] = std::exp(x1);
      work[i] = u.u[i];
      ++stats.proposed;
      if (accepted) ++stats.accepted;
    }
  }
  return stats;
}

double log_weight_prior(WeightPrior prior, double w) {
  if (!(w > 0.0)) return kNegInf;
  return prior == WeightPrior::kHalfNormal ? -0.5 * w * w : -w;
}

namespace {

double d_log_weight_prior(WeightPrior prior, double w) {
  return prior == WeightPrior::kHalfNormal ? -w : -1.0;
}

}  // namespace

MhStats update_w(LmrmParams& params, const PartitionState& state, const AuxVars& u,
                 const SamplerConfig& config, Rng& rng) {
  MhStats stats;
  const auto counts = state.counts();
  LmrmParams work = params;

  auto log_target = [&](int i, int r, double y) {
    const double w = std::exp(y);
    work.w(i, r) = w;
    const LevyEvaluator ev(work, u.u);
    double lp = -ev.psi() + log_weight_prior(config.w_prior, w) + y;
    for (const auto& c : counts) lp += ev.log_tau(c.q);
    return lp;
  };
  auto grad = [&](int i, int r, double y) {
    const double w = std::exp(y);
    work.w(i, r) = w;
    const auto g = grad_log_joint_w(work, u, counts);
    return w * (g[i * work.R + r] + d_log_weight_prior(config.w_prior, w)) + 1.0;
  };

  for (int rep = 0; rep < config.mh_repeats; ++rep) {
    for (int i = 0; i < params.d; ++i) {
      for (int r = 0; r < params.R; ++r) {
        bool accepted = false;
        const double y0 = std::log(params.w(i, r));
        const double y1 = mh_log_scale_step([&](double y) { return log_target(i, r, y); },
                                            [&](double y) { return grad(i, r, y); }, y0,
                                            config.w_step, config.w_update, rng, accepted);
        params.w(i, r) = std::exp(y1);
        work.w(i, r) = params.w(i, r);
        ++stats.proposed;
        if (accepted) ++stats.accepted;
      }
    }
  }
  return stats;
}

std::vector<ClusterRow> cluster_table(const PartitionState& state) {
  const auto n = state.group_sizes();
  std::vector<ClusterRow> rows;
  for (const Cluster& c : state.clusters()) {
    ClusterRow row{c.theta, c.counts.q, {}};
    for (int i = 0; i < state.d(); ++i)
      row.percents.push_back(n[i] > 0 ? 100.0 * c.counts.q[i] / n[i] : 0.0);
    rows.push_back(std::move(row));
  }
  return rows;
}

RunResult run(const GroupedDataset& data, const GaussianModel& model, const LmrmParams& params0,
              const SamplerConfig& config) {
  config.validate();
  model.validate();
  params0.validate();
  if (data.d() != params0.d)
    throw std::invalid_argument("run: dataset has " + std::to_string(data.d()) +
                                " groups but the model expects d = " + std::to_string(params0.d));
  for (int i = 0; i < data.d(); ++i)
    if (data.groups[i].empty())
      throw std::invalid_argument("run: group " + std::to_string(i) + " has no observations");

  Rng rng(config.seed);
  PartitionState state =
      PartitionState::initial(data, config.init, config.init_clusters, model, rng);
  LmrmParams params = params0;
  AuxVars u{std::vector<double>(static_cast<std::size_t>(params.d), 1.0)};

  RunResult result;
  ChainSummary& summary = result.summary;
  summary.d = params.d;
  summary.R = params.R;
  summary.mean_weights.assign(params.weights.size(), 0.0);
  summary.mean_normalized_weights.assign(params.weights.size(), 0.0);
  summary.mean_min_normalized_weight.assign(u.u.size(), 0.0);
  summary.mean_log_u.assign(u.u.size(), 0.0);
  double sum_k = 0.0;

  for (int it = 0; it < config.iterations; ++it) {
    sweep_assignments(state, params, u, model, rng);
    sweep_atoms(state, model, rng);
    if (config.update_aux) summary.u_moves += update_u(params, u, state, config, rng);
    if (config.update_weights) summary.w_moves += update_w(params, state, u, config, rng);

    if (it < config.burn_in) continue;
    const int K = state.num_clusters();
    result.k_trace.push_back(K);
    sum_k += K;
    for (int i = 0; i < params.d; ++i) {
      double row = 0.0;
      double smallest = params.w(i, 0);
      for (int r = 0; r < params.R; ++r) {
        row += params.w(i, r);
        smallest = std::min(smallest, params.w(i, r));
      }
      for (int r = 0; r < params.R; ++r) {
        summary.mean_weights[i * params.R + r] += params.w(i, r);
        summary.mean_normalized_weights[i * params.R + r] += params.w(i, r) / row;
      }
      summary.mean_min_normalized_weight[i] += smallest / row;
      summary.mean_log_u[i] += std::log(u.u[i]);
    }
    ++summary.samples;
    if ((it - config.burn_in) % config.thin == 0) {
      ChainSample s{it, K, params.weights, u.u, {}};
      for (const Cluster& c : state.clusters()) s.clusters.push_back({c.theta, c.counts.q});
      result.samples.push_back(std::move(s));
    }
  }

  const double m = static_cast<double>(summary.samples);
  summary.mean_K = sum_k / m;
  for (auto& v : summary.mean_weights) v /= m;
  for (auto& v : summary.mean_normalized_weights) v /= m;
  for (auto& v : summary.mean_min_normalized_weight) v /= m;
  for (auto& v : summary.mean_log_u) v /= m;
  result.cluster_table = cluster_table(state);
  result.final_params = params;
  result.final_u = u;
  return result;
}

}  // namespace lmrm
