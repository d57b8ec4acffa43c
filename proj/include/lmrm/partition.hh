// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lmrm/gaussian_model.hh"
#include "lmrm/levy.hh"
#include "lmrm/numeric.hh"

namespace lmrm {

// d groups of scalar observations.
struct GroupedDataset {
  std::vector<std::vector<double>> groups;
  // Optional display keys, one per group.
  std::vector<std::string> keys;

  int d() const { return static_cast<int>(groups.size()); }
  std::vector<int> sizes() const;
  int total() const;
};

struct Cluster {
  ClusterCounts counts;  // q_{., k}
  SufficientStats stats;
  double theta = 0.0;

  int total() const { return stats.count; }
};

struct ExistingCluster {
  int slot;
};
struct NewCluster {
  double theta;
};
using AttachTarget = std::variant<ExistingCluster, NewCluster>;

struct Detached {
  int group;
  int index;
  double x;
  int former_slot;       // slot the observation left (before compaction)
  bool cluster_removed;  // true when the observation was a singleton
};

enum class InitStrategy { kSingleCluster, kPerGroup, kRandom };

// Cluster assignments for a grouped dataset together with per-cluster counts
// q_{i,k}, sufficient statistics and atoms. Clusters occupy the contiguous
// slots 0..K-1; an emptied cluster is removed at once and the last slot is
// moved into its place.
class PartitionState {
 public:
  // Every observation in one cluster.
  static PartitionState single_cluster(const GroupedDataset& data, double theta);
  // One cluster per non-empty group.
  static PartitionState per_group(const GroupedDataset& data, const GaussianModel& model, Rng& rng);
  // Observations assigned uniformly at random to `k0` clusters; empty ones dropped.
  static PartitionState random(const GroupedDataset& data, int k0, const GaussianModel& model,
                               Rng& rng);
  static PartitionState initial(const GroupedDataset& data, InitStrategy strategy, int k0,
                                const GaussianModel& model, Rng& rng);

  int d() const { return static_cast<int>(values_.size()); }
  int num_clusters() const { return static_cast<int>(clusters_.size()); }
  std::span<const Cluster> clusters() const { return clusters_; }
  const Cluster& cluster(int slot) const;
  std::vector<ClusterCounts> counts() const;
  std::vector<int> group_sizes() const;

  double value(int i, int j) const { return values_[i][j]; }
  // Slot of observation (i, j), or -1 while it is detached.
  int slot_of(int i, int j) const;

  Detached detach(int i, int j);
  // Returns the slot the observation joined.
  int attach(int i, int j, const AttachTarget& target);

  void set_theta(int slot, double theta);

  // Mutable cluster access that bypasses every invariant. Intended for
  // diagnostics and fault-injection tests only.
  Cluster& unchecked_cluster(int slot) { return clusters_[slot]; }

 private:
  PartitionState() = default;
  void init_storage(const GroupedDataset& data);
  int new_cluster(double theta);
  void check_observation(int i, int j) const;

  std::vector<std::vector<double>> values_;
  std::vector<std::vector<int>> label_;  // cluster id, -1 when detached
  std::vector<int> id_to_slot_;
  std::vector<int> slot_to_id_;
  std::vector<int> free_ids_;
  std::vector<Cluster> clusters_;
};

struct Mismatch {
  int slot;            // -1 for dataset-level problems
  std::string field;   // "q", "t", "m", "S", "n", "value"
  double expected;
  double actual;
};

struct RecountReport {
  std::vector<Mismatch> mismatches;
  bool ok() const { return mismatches.empty(); }
};

// Recomputes every count and sum from the assignments and compares with the
// cached statistics.
RecountReport recount(const PartitionState& state, const GroupedDataset& data);

}  // namespace lmrm
