// Apache License, Version 2.0, refer to LICENSE.txt

#include "lmrm/partition.hh"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lmrm {

std::vector<int> GroupedDataset::sizes() const {
  std::vector<int> n;
  n.reserve(groups.size());
  for (const auto& g : groups) n.push_back(static_cast<int>(g.size()));
  return n;
}

int GroupedDataset::total() const {
  int s = 0;
  for (const auto& g : groups) s += static_cast<int>(g.size());
  return s;
}

void PartitionState::init_storage(const GroupedDataset& data) {
  if (data.d() < 1) throw std::invalid_argument("PartitionState: dataset has no groups");
  values_ = data.groups;
  label_.clear();
  for (const auto& g : values_) label_.emplace_back(g.size(), -1);
}

PartitionState PartitionState::single_cluster(const GroupedDataset& data, double theta) {
  PartitionState s;
  s.init_storage(data);
  if (data.total() == 0) return s;
  const int slot = s.new_cluster(theta);
  for (int i = 0; i < s.d(); ++i)
    for (int j = 0; j < static_cast<int>(s.values_[i].size()); ++j)
      s.attach(i, j, ExistingCluster{slot});
  return s;
}

PartitionState PartitionState::per_group(const GroupedDataset& data, const GaussianModel& model,
                                         Rng& rng) {
  PartitionState s;
  s.init_storage(data);
  for (int i = 0; i < s.d(); ++i) {
    if (s.values_[i].empty()) continue;
    const int slot = s.new_cluster(0.0);
    for (int j = 0; j < static_cast<int>(s.values_[i].size()); ++j)
      s.attach(i, j, ExistingCluster{slot});
    s.set_theta(slot, posterior_draw(model, s.clusters_[slot].stats, rng));
  }
  return s;
}

PartitionState PartitionState::random(const GroupedDataset& data, int k0,
                                      const GaussianModel& model, Rng& rng) {
  if (k0 < 1) throw std::invalid_argument("PartitionState::random: k0 must be >= 1");
  PartitionState s;
  s.init_storage(data);
  std::vector<std::vector<int>> pick(s.values_.size());
  std::uniform_int_distribution<int> label(0, k0 - 1);
  for (std::size_t i = 0; i < s.values_.size(); ++i)
    for (std::size_t j = 0; j < s.values_[i].size(); ++j) pick[i].push_back(label(rng));
  std::vector<int> slot_of_label(static_cast<std::size_t>(k0), -1);
  for (int i = 0; i < s.d(); ++i)
    for (int j = 0; j < static_cast<int>(s.values_[i].size()); ++j) {
      int& slot = slot_of_label[pick[i][j]];
      if (slot < 0) slot = s.new_cluster(0.0);
      s.attach(i, j, ExistingCluster{slot});
    }
  for (int k = 0; k < s.num_clusters(); ++k)
    s.set_theta(k, posterior_draw(model, s.clusters_[k].stats, rng));
  return s;
}

PartitionState PartitionState::initial(const GroupedDataset& data, InitStrategy strategy, int k0,
                                       const GaussianModel& model, Rng& rng) {
  switch (strategy) {
    case InitStrategy::kSingleCluster: {
      PartitionState s = single_cluster(data, model.base_mean);
      if (s.num_clusters() == 1) s.set_theta(0, posterior_draw(model, s.clusters_[0].stats, rng));
      return s;
    }
    case InitStrategy::kPerGroup:
      return per_group(data, model, rng);
    case InitStrategy::kRandom:
      return random(data, k0, model, rng);
  }
  throw std::invalid_argument("unknown init strategy");
}

const Cluster& PartitionState::cluster(int slot) const {
  if (slot < 0 || slot >= num_clusters())
    throw std::out_of_range("cluster slot " + std::to_string(slot) + " out of range");
  return clusters_[slot];
}

std::vector<ClusterCounts> PartitionState::counts() const {
  std::vector<ClusterCounts> out;
  out.reserve(clusters_.size());
  for (const auto& c : clusters_) out.push_back(c.counts);
  return out;
}

std::vector<int> PartitionState::group_sizes() const {
  std::vector<int> n;
  for (const auto& g : values_) n.push_back(static_cast<int>(g.size()));
  return n;
}

void PartitionState::check_observation(int i, int j) const {
  if (i < 0 || i >= d() || j < 0 || j >= static_cast<int>(values_[i].size()))
    throw std::out_of_range("observation (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") does not exist");
}

int PartitionState::slot_of(int i, int j) const {
  check_observation(i, j);
  const int id = label_[i][j];
  return id < 0 ? -1 : id_to_slot_[id];
}

int PartitionState::new_cluster(double theta) {
  int id;
  if (!free_ids_.empty()) {
    id = free_ids_.back();
    free_ids_.pop_back();
  } else {
    id = static_cast<int>(id_to_slot_.size());
    id_to_slot_.push_back(-1);
  }
  const int slot = num_clusters();
  Cluster c;
  c.counts.q.assign(values_.size(), 0);
  c.theta = theta;
  clusters_.push_back(std::move(c));
  slot_to_id_.push_back(id);
  id_to_slot_[id] = slot;
  return slot;
}

Detached PartitionState::detach(int i, int j) {
  check_observation(i, j);
  const int id = label_[i][j];
  if (id < 0)
    throw std::logic_error("observation (" + std::to_string(i) + ", " + std::to_string(j) +
                           ") is already detached");
  const int slot = id_to_slot_[id];
  const double x = values_[i][j];
  Cluster& c = clusters_[slot];
  c.counts.q[i] -= 1;
  c.stats.count -= 1;
  c.stats.sum -= x;
  label_[i][j] = -1;

  Detached out{i, j, x, slot, false};
  if (c.stats.count == 0) {
    const int last = num_clusters() - 1;
    if (slot != last) {
      clusters_[slot] = std::move(clusters_[last]);
      slot_to_id_[slot] = slot_to_id_[last];
      id_to_slot_[slot_to_id_[slot]] = slot;
    }
    clusters_.pop_back();
    slot_to_id_.pop_back();
    id_to_slot_[id] = -1;
    free_ids_.push_back(id);
    out.cluster_removed = true;
  }
  return out;
}

int PartitionState::attach(int i, int j, const AttachTarget& target) {
  check_observation(i, j);
  if (label_[i][j] >= 0)
    throw std::logic_error("observation (" + std::to_string(i) + ", " + std::to_string(j) +
                           ") is already attached");
  int slot;
  if (const auto* existing = std::get_if<ExistingCluster>(&target)) {
    slot = existing->slot;
    if (slot < 0 || slot >= num_clusters())
      throw std::out_of_range("attach: cluster slot " + std::to_string(slot) + " out of range");
  } else {
    slot = new_cluster(std::get<NewCluster>(target).theta);
  }
  Cluster& c = clusters_[slot];
  c.counts.q[i] += 1;
  c.stats.count += 1;
  c.stats.sum += values_[i][j];
  label_[i][j] = slot_to_id_[slot];
  return slot;
}

void PartitionState::set_theta(int slot, double theta) {
  if (slot < 0 || slot >= num_clusters())
    throw std::out_of_range("set_theta: cluster slot out of range");
  clusters_[slot].theta = theta;
}

RecountReport recount(const PartitionState& state, const GroupedDataset& data) {
  RecountReport report;
  const int d = state.d();
  if (data.d() != d) {
    report.mismatches.push_back({-1, "d", static_cast<double>(data.d()), static_cast<double>(d)});
    return report;
  }
  const int K = state.num_clusters();
  std::vector<std::vector<int>> q(static_cast<std::size_t>(K), std::vector<int>(d, 0));
  std::vector<double> sums(static_cast<std::size_t>(K), 0.0);
  std::vector<double> abs_sums(static_cast<std::size_t>(K), 0.0);
  const auto sizes = state.group_sizes();
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(data.groups[i].size()) != sizes[i]) {
      report.mismatches.push_back({-1, "n", static_cast<double>(data.groups[i].size()),
                                   static_cast<double>(sizes[i])});
      continue;
    }
    for (int j = 0; j < sizes[i]; ++j) {
      const double x = data.groups[i][j];
      if (state.value(i, j) != x) report.mismatches.push_back({-1, "value", x, state.value(i, j)});
      const int k = state.slot_of(i, j);
      if (k < 0) continue;
      q[k][i] += 1;
      sums[k] += x;
      abs_sums[k] += std::abs(x);
    }
  }
  for (int k = 0; k < K; ++k) {
    const Cluster& c = state.cluster(k);
    const int t = std::accumulate(q[k].begin(), q[k].end(), 0);
    for (int i = 0; i < d; ++i)
      if (i >= static_cast<int>(c.counts.q.size()) || c.counts.q[i] != q[k][i])
        report.mismatches.push_back(
            {k, "q", static_cast<double>(q[k][i]),
             i < static_cast<int>(c.counts.q.size()) ? static_cast<double>(c.counts.q[i]) : -1.0});
    if (c.counts.total() != t)
      report.mismatches.push_back({k, "t", static_cast<double>(t), static_cast<double>(c.counts.total())});
    if (c.stats.count != t)
      report.mismatches.push_back({k, "m", static_cast<double>(t), static_cast<double>(c.stats.count)});
    if (t == 0) report.mismatches.push_back({k, "t", 1.0, 0.0});
    if (std::abs(c.stats.sum - sums[k]) > 1e-9 * (1.0 + abs_sums[k]))
      report.mismatches.push_back({k, "S", sums[k], c.stats.sum});
  }
  return report;
}

}  // namespace lmrm
