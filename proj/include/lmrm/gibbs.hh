// Apache License, Version 2.0, refer to LICENSE.txt
//
// Posterior sampler for the Gaussian mixture with a normalized LMRM prior.
// One iteration:
//   1. resample every assignment c_{i,j} given the others (existing cluster
//      k with weight f(x | theta_k) tau_{q_k + delta_i} / tau_{q_k}, a new
//      cluster with weight int f(x | theta) H(dtheta) tau_{delta_i}),
//   2. redraw each atom theta_k from its conjugate posterior,
//   3. Metropolis-Hastings on log u_i and on log w_{i,r}.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lmrm/gaussian_model.hh"
#include "lmrm/levy.hh"
#include "lmrm/numeric.hh"
#include "lmrm/partition.hh"

namespace lmrm {

enum class ProposalKind { kRandomWalk, kGradient };
enum class WeightPrior { kExponential, kHalfNormal };

std::string to_string(ProposalKind kind);
std::string to_string(WeightPrior prior);
std::string to_string(InitStrategy init);
ProposalKind parse_proposal_kind(const std::string& s);
WeightPrior parse_weight_prior(const std::string& s);
InitStrategy parse_init_strategy(const std::string& s);

struct SamplerConfig {
  int iterations = 10000;
  int burn_in = 2000;
  std::uint64_t seed = 1;
  double u_step = 1.0;  // proposal scale on log u
  double w_step = 0.5;  // proposal scale on log w
  ProposalKind u_update = ProposalKind::kRandomWalk;
  ProposalKind w_update = ProposalKind::kRandomWalk;
  int thin = 1;
  WeightPrior w_prior = WeightPrior::kExponential;
  InitStrategy init = InitStrategy::kSingleCluster;
  int init_clusters = 10;  // only for InitStrategy::kRandom
  int mh_repeats = 1;      // MH passes over u and W per iteration
  bool update_aux = true;
  bool update_weights = true;

  void validate() const;
};

struct ClusterSnapshot {
  double theta;
  std::vector<int> q;
};

struct ChainSample {
  int iteration;
  int K;
  std::vector<double> weights;  // d x R row-major
  std::vector<double> u;
  std::vector<ClusterSnapshot> clusters;
};

struct MhStats {
  long proposed = 0;
  long accepted = 0;

  double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
  MhStats& operator+=(const MhStats& o) {
    proposed += o.proposed;
    accepted += o.accepted;
    return *this;
  }
};

// Post-burn-in averages over every retained iteration (not only thinned ones).
struct ChainSummary {
  int d = 0;
  int R = 0;
  long samples = 0;
  double mean_K = 0.0;
  std::vector<double> mean_weights;             // d x R
  std::vector<double> mean_normalized_weights;  // rows of W scaled to sum to one
  // Per group, the average over samples of the smallest normalized weight.
  // Unlike the column means this does not care which CRM is the suppressed one.
  std::vector<double> mean_min_normalized_weight;
  std::vector<double> mean_log_u;
  MhStats u_moves;
  MhStats w_moves;
};

// One row of the cluster table: location and per-group membership.
struct ClusterRow {
  double mean;
  std::vector<int> counts;
  std::vector<double> percents;
};

struct RunResult {
  std::vector<ChainSample> samples;  // thinned, post burn-in
  std::vector<int> k_trace;          // K at every post-burn-in iteration
  ChainSummary summary;
  std::vector<ClusterRow> cluster_table;  // from the final state
  LmrmParams final_params;
  AuxVars final_u;
};

// Unnormalized log probabilities of every move for observation (i, x), which
// must currently be detached: entries 0..K-1 are the existing clusters, entry
// K is a new cluster.
std::vector<double> assignment_log_weights(const PartitionState& state, const LevyEvaluator& levy,
                                           const GaussianModel& model, int i, double x);

void sweep_assignments(PartitionState& state, const LmrmParams& params, const AuxVars& u,
                       const GaussianModel& model, Rng& rng);

void sweep_atoms(PartitionState& state, const GaussianModel& model, Rng& rng);

// One Metropolis-Hastings move for a scalar on the log scale. `log_target`
// is the log density in the log-scale coordinate (Jacobian included) and
// `grad` its derivative, used only by the gradient-informed proposal.
// Returns the new coordinate and sets `accepted`.
double mh_log_scale_step(const std::function<double(double)>& log_target,
                         const std::function<double(double)>& grad, double x, double step,
                         ProposalKind kind, Rng& rng, bool& accepted);

MhStats update_u(const LmrmParams& params, AuxVars& u, const PartitionState& state,
                 const SamplerConfig& config, Rng& rng);

// Log prior of a single mixing weight.
double log_weight_prior(WeightPrior prior, double w);

MhStats update_w(LmrmParams& params, const PartitionState& state, const AuxVars& u,
                 const SamplerConfig& config, Rng& rng);

std::vector<ClusterRow> cluster_table(const PartitionState& state);

// Runs one chain. Deterministic given config.seed.
RunResult run(const GroupedDataset& data, const GaussianModel& model, const LmrmParams& params0,
              const SamplerConfig& config);

}  // namespace lmrm
