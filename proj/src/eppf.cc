// Apache License, Version 2.0, refer to LICENSE.txt

#include "lmrm/eppf.hh"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace lmrm {

PartitionSpec PartitionSpec::from_counts(std::vector<ClusterCounts> counts) {
  if (counts.empty()) throw std::invalid_argument("PartitionSpec: no clusters");
  PartitionSpec spec;
  const std::size_t d = counts.front().q.size();
  spec.n.assign(d, 0);
  for (const auto& c : counts) {
    if (c.q.size() != d) throw std::invalid_argument("PartitionSpec: ragged count vectors");
    for (std::size_t i = 0; i < d; ++i) spec.n[i] += c.q[i];
  }
  spec.counts = std::move(counts);
  spec.validate();
  return spec;
}

void PartitionSpec::validate() const {
  if (n.empty()) throw std::invalid_argument("PartitionSpec: no groups");
  if (counts.empty()) throw std::invalid_argument("PartitionSpec: K must be >= 1");
  std::vector<int> sums(n.size(), 0);
  for (const auto& c : counts) {
    if (c.q.size() != n.size()) throw std::invalid_argument("PartitionSpec: count vector length != d");
    int t = 0;
    for (std::size_t i = 0; i < n.size(); ++i) {
      if (c.q[i] < 0) throw std::invalid_argument("PartitionSpec: negative count");
      sums[i] += c.q[i];
      t += c.q[i];
    }
    if (t < 1) throw std::invalid_argument("PartitionSpec: empty cluster");
  }
  for (std::size_t i = 0; i < n.size(); ++i)
    if (sums[i] != n[i])
      throw std::invalid_argument("PartitionSpec: counts of group " + std::to_string(i) +
                                  " do not sum to n_i");
}

namespace {

// Log integrand in x = log u over the non-empty groups, Jacobian included.
class EppfIntegrand {
 public:
  EppfIntegrand(const LmrmParams& params, const PartitionSpec& spec)
      : params_(params), spec_(spec), u_(static_cast<std::size_t>(params.d), 0.0) {
    for (int i = 0; i < spec.d(); ++i)
      if (spec.n[i] > 0) {
        active_.push_back(i);
        constant_ -= std::lgamma(static_cast<double>(spec.n[i]));
      }
  }

  int dims() const { return static_cast<int>(active_.size()); }

  double operator()(std::span<const double> x) {
    ++evaluations;
    double lp = constant_;
    for (int a = 0; a < dims(); ++a) {
      const int i = active_[a];
      u_[i] = std::exp(x[a]);
      lp += spec_.n[i] * x[a];
    }
    const LevyEvaluator ev(params_, u_);
    lp -= ev.psi();
    for (const auto& c : spec_.counts) lp += ev.log_tau(c.q);
    return lp;
  }

  std::vector<double> gradient(std::span<const double> x) {
    for (int a = 0; a < dims(); ++a) u_[active_[a]] = std::exp(x[a]);
    const LevyEvaluator ev(params_, u_);
    std::vector<double> g(static_cast<std::size_t>(dims()));
    for (int a = 0; a < dims(); ++a) {
      const int i = active_[a];
      double gi = spec_.n[i] - u_[i] * ev.dpsi_du(i);
      for (const auto& c : spec_.counts) gi -= u_[i] * std::exp(ev.log_tau_ratio(c.q, i));
      g[a] = gi;
    }
    return g;
  }

  long evaluations = 0;

 private:
  const LmrmParams& params_;
  const PartitionSpec& spec_;
  std::vector<double> u_;
  std::vector<int> active_;
  double constant_ = 0.0;
};

std::vector<double> find_mode(EppfIntegrand& f) {
  std::vector<double> x(static_cast<std::size_t>(f.dims()), 0.0);
  double fx = f(x);
  for (int iter = 0; iter < 500; ++iter) {
    const auto g = f.gradient(x);
    double gmax = 0.0;
    for (double gi : g) gmax = std::max(gmax, std::abs(gi));
    if (gmax < 1e-7) break;
    double step = 1.0 / std::max(1.0, gmax);
    bool moved = false;
    for (int bt = 0; bt < 40; ++bt) {
      std::vector<double> y = x;
      for (std::size_t a = 0; a < y.size(); ++a) y[a] += step * g[a];
      const double fy = f(y);
      if (fy > fx) {
        x = std::move(y);
        fx = fy;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return x;
}

// Integrand in z where x_a = mode_a + scale_a sinh(z_a). The tails in x are
// only exponential (the integrand is algebraic in u), and the sinh map turns
// them double exponential so that a modest trapezoid grid covers them.
class MappedIntegrand {
 public:
  MappedIntegrand(EppfIntegrand& f, std::vector<double> mode, std::vector<double> scale)
      : f_(f), mode_(std::move(mode)), scale_(std::move(scale)), x_(mode_.size()) {}

  int dims() const { return f_.dims(); }

  double operator()(std::span<const double> z) {
    double log_jac = 0.0;
    for (std::size_t a = 0; a < x_.size(); ++a) {
      x_[a] = mode_[a] + scale_[a] * std::sinh(z[a]);
      const double az = std::abs(z[a]);
      log_jac += std::log(scale_[a]) + az + std::log1p(std::exp(-2.0 * az)) - std::log(2.0);
    }
    for (double xa : x_)
      if (!std::isfinite(xa) || std::abs(xa) > 700.0) return kNegInf;
    return f_(x_) + log_jac;
  }

 private:
  EppfIntegrand& f_;
  std::vector<double> mode_;
  std::vector<double> scale_;
  std::vector<double> x_;
};

// Per-axis width of the peak, 1 / sqrt(-d2 f / dx2), from differenced gradients.
std::vector<double> peak_widths(EppfIntegrand& f, const std::vector<double>& mode) {
  const double e = 1e-4;
  std::vector<double> scale(mode.size(), 1.0);
  for (std::size_t a = 0; a < mode.size(); ++a) {
    std::vector<double> up = mode, dn = mode;
    up[a] += e;
    dn[a] -= e;
    const double curv = (f.gradient(up)[a] - f.gradient(dn)[a]) / (2.0 * e);
    if (curv < 0.0 && std::isfinite(curv)) scale[a] = std::clamp(1.0 / std::sqrt(-curv), 0.05, 5.0);
  }
  return scale;
}

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

// Streaming log-sum-exp accumulator.
struct LogAccumulator {
  double max = kNegInf;
  double sum = 0.0;

  void add(double v, double weight = 1.0) {
    if (v == kNegInf) return;
    if (v > max) {
      sum = sum * std::exp(max - v) + weight;
      max = v;
    } else {
      sum += weight * std::exp(v - max);
    }
  }
  double value() const { return max == kNegInf ? kNegInf : max + std::log(sum); }
};

struct GridResult {
  double log_sum;
  std::vector<double> face_lo;  // max log integrand on each lower face
  std::vector<double> face_hi;
};

GridResult trapezoid(MappedIntegrand& f, const Box& box, double step) {
  const int m = f.dims();
  std::vector<long> nodes(static_cast<std::size_t>(m));
  std::vector<double> h(static_cast<std::size_t>(m));
  for (int a = 0; a < m; ++a) {
    nodes[a] = std::max(2L, static_cast<long>(std::ceil((box.hi[a] - box.lo[a]) / step)) + 1);
    h[a] = (box.hi[a] - box.lo[a]) / static_cast<double>(nodes[a] - 1);
  }
  GridResult out{0.0, std::vector<double>(static_cast<std::size_t>(m), kNegInf),
                 std::vector<double>(static_cast<std::size_t>(m), kNegInf)};
  LogAccumulator acc;
  std::vector<long> idx(static_cast<std::size_t>(m), 0);
  std::vector<double> x(static_cast<std::size_t>(m));
  while (true) {
    double weight = 1.0;
    for (int a = 0; a < m; ++a) {
      x[a] = box.lo[a] + h[a] * static_cast<double>(idx[a]);
      if (idx[a] == 0 || idx[a] == nodes[a] - 1) weight *= 0.5;
    }
    const double v = f(x);
    acc.add(v, weight);
    for (int a = 0; a < m; ++a) {
      if (idx[a] == 0) out.face_lo[a] = std::max(out.face_lo[a], v);
      if (idx[a] == nodes[a] - 1) out.face_hi[a] = std::max(out.face_hi[a], v);
    }
    int a = 0;
    while (a < m && ++idx[a] == nodes[a]) idx[a++] = 0;
    if (a == m) break;
  }
  double log_cell = 0.0;
  for (int a = 0; a < m; ++a) log_cell += std::log(h[a]);
  out.log_sum = acc.value() + log_cell;
  return out;
}

}  // namespace

QuadratureResult log_eppf_quadrature(const LmrmParams& params, const PartitionSpec& spec,
                                     const QuadratureSettings& quad) {
  params.validate();
  spec.validate();
  if (spec.d() != params.d)
    throw std::invalid_argument("log_eppf: partition has " + std::to_string(spec.d()) +
                                " groups but params have d = " + std::to_string(params.d));
  EppfIntegrand f(params, spec);
  const int m = f.dims();
  if (m > 3) throw std::invalid_argument("log_eppf: at most three non-empty groups are supported");

  const auto mode = find_mode(f);
  MappedIntegrand g(f, mode, peak_widths(f, mode));
  const std::vector<double> origin(static_cast<std::size_t>(m), 0.0);
  const double peak = g(origin);

  // Walk outwards along each axis until the integrand is negligible.
  const double walk = 0.25;
  Box box{origin, origin};
  for (int a = 0; a < m; ++a) {
    for (int dir : {-1, 1}) {
      std::vector<double> z = origin;
      for (int s = 1; s <= 200; ++s) {
        z[a] = dir * walk * s;
        if (g(z) < peak - quad.tail_drop) break;
      }
      (dir < 0 ? box.lo : box.hi)[a] = z[a];
    }
  }

  double step = quad.initial_step;
  double previous = kNegInf;
  for (int level = 0; level <= quad.max_halvings; ++level) {
    GridResult grid = trapezoid(g, box, step);
    // Grow the box wherever a face still carries non-negligible mass.
    for (int growth = 0; growth < quad.max_box_growth; ++growth) {
      const double grid_peak = std::max(peak, grid.log_sum);
      bool grew = false;
      for (int a = 0; a < m; ++a) {
        const double width = box.hi[a] - box.lo[a];
        if (grid.face_lo[a] > grid_peak - quad.tail_drop + 6.0) {
          box.lo[a] -= 0.5 * width;
          grew = true;
        }
        if (grid.face_hi[a] > grid_peak - quad.tail_drop + 6.0) {
          box.hi[a] += 0.5 * width;
          grew = true;
        }
      }
      if (!grew) break;
      grid = trapezoid(g, box, step);
      previous = kNegInf;
    }
    if (previous != kNegInf && std::abs(std::expm1(grid.log_sum - previous)) < quad.rel_tol)
      return {grid.log_sum, previous, step, f.evaluations};
    previous = grid.log_sum;
    if (level < quad.max_halvings) step *= 0.5;
  }
  // One more halving to report the last two estimates.
  const GridResult last = trapezoid(g, box, step * 0.5);
  if (std::abs(std::expm1(last.log_sum - previous)) < quad.rel_tol)
    return {last.log_sum, previous, step * 0.5, f.evaluations};
  throw QuadratureError("log_eppf: quadrature did not converge (last " +
                            std::to_string(last.log_sum) + ", previous " +
                            std::to_string(previous) + ")",
                        last.log_sum, previous);
}

double log_eppf(const LmrmParams& params, const PartitionSpec& spec,
                const QuadratureSettings& quad) {
  return log_eppf_quadrature(params, spec, quad).log_value;
}

double ewens_log_eppf(double alpha, const PartitionSpec& spec) {
  spec.validate();
  if (spec.d() != 1) throw std::invalid_argument("ewens_log_eppf: requires a single group");
  if (!(alpha > 0.0)) throw std::invalid_argument("ewens_log_eppf: alpha must be positive");
  const int n = spec.n[0];
  double lp = spec.K() * std::log(alpha) + std::lgamma(alpha) - std::lgamma(alpha + n);
  for (const auto& c : spec.counts) lp += std::lgamma(static_cast<double>(c.q[0]));
  return lp;
}

CountStructure canonical(std::vector<std::vector<int>> counts) {
  std::sort(counts.begin(), counts.end());
  return counts;
}

PartitionSpec to_spec(const CountStructure& structure) {
  std::vector<ClusterCounts> counts;
  for (const auto& q : structure) counts.push_back(ClusterCounts{q});
  return PartitionSpec::from_counts(std::move(counts));
}

std::map<CountStructure, long> enumerate_count_structures(std::span<const int> n) {
  std::vector<int> group_of;
  for (std::size_t i = 0; i < n.size(); ++i)
    for (int j = 0; j < n[i]; ++j) group_of.push_back(static_cast<int>(i));
  const std::size_t total = group_of.size();
  if (total == 0) throw std::invalid_argument("enumerate_count_structures: no observations");
  if (total > 12) throw std::invalid_argument("enumerate_count_structures: too many observations");

  std::map<CountStructure, long> out;
  // Restricted growth strings: label[0] = 0, label[k] <= 1 + max(label[0..k-1]).
  std::vector<int> label(total, 0);
  while (true) {
    const int K = 1 + *std::max_element(label.begin(), label.end());
    std::vector<std::vector<int>> counts(static_cast<std::size_t>(K), std::vector<int>(n.size(), 0));
    for (std::size_t k = 0; k < total; ++k) counts[label[k]][group_of[k]] += 1;
    out[canonical(std::move(counts))] += 1;

    std::size_t pos = total;
    while (pos-- > 1) {
      const int prefix_max = *std::max_element(label.begin(), label.begin() + static_cast<long>(pos));
      if (label[pos] <= prefix_max) {
        ++label[pos];
        std::fill(label.begin() + static_cast<long>(pos) + 1, label.end(), 0);
        break;
      }
    }
    if (pos == 0) break;
  }
  return out;
}

std::map<CountStructure, McEstimate> mc_partition_probs(const LmrmParams& params,
                                                        std::span<const int> n, long truncation,
                                                        long draws, Rng& rng) {
  params.validate();
  if (static_cast<int>(n.size()) != params.d)
    throw std::invalid_argument("mc_partition_probs: group sizes do not match d");
  if (truncation < 1 || draws < 1)
    throw std::invalid_argument("mc_partition_probs: truncation and draws must be positive");
  const int d = params.d, R = params.R;

  std::gamma_distribution<double> total_mass(params.alpha, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> sticks(static_cast<std::size_t>(R));
  std::vector<double> mass(static_cast<std::size_t>(R));
  std::vector<double> group_probs(static_cast<std::size_t>(R));
  std::map<CountStructure, long> hits;
  std::vector<std::pair<int, long>> atoms;        // distinct atoms this draw
  std::vector<std::vector<int>> cluster_counts;  // parallel to atoms

  for (long m = 0; m < draws; ++m) {
    for (int r = 0; r < R; ++r) {
      mass[r] = total_mass(rng);
      sticks[r].clear();
    }
    atoms.clear();
    cluster_counts.clear();
    for (int i = 0; i < d; ++i) {
      double norm = 0.0;
      for (int r = 0; r < R; ++r) norm += params.w(i, r) * mass[r];
      for (int j = 0; j < n[i]; ++j) {
        // Pick the CRM, then an atom of its stick-breaking representation.
        double v = unif(rng) * norm;
        int r = 0;
        for (; r < R - 1; ++r) {
          v -= params.w(i, r) * mass[r];
          if (v < 0.0) break;
        }
        double target = unif(rng);
        double remaining = 1.0;
        long atom = 0;
        for (;; ++atom) {
          if (atom == truncation - 1) break;
          if (atom == static_cast<long>(sticks[r].size()))
            sticks[r].push_back(1.0 - std::pow(unif(rng), 1.0 / params.alpha));  // Beta(1, alpha)
          const double piece = sticks[r][atom] * remaining;
          if (target < piece) break;
          target -= piece;
          remaining -= piece;
        }
        const std::pair<int, long> key{r, atom};
        auto it = std::find(atoms.begin(), atoms.end(), key);
        if (it == atoms.end()) {
          atoms.push_back(key);
          cluster_counts.emplace_back(static_cast<std::size_t>(d), 0);
          cluster_counts.back()[i] = 1;
        } else {
          cluster_counts[static_cast<std::size_t>(it - atoms.begin())][i] += 1;
        }
      }
    }
    hits[canonical(cluster_counts)] += 1;
  }

  std::map<CountStructure, McEstimate> out;
  for (const auto& [structure, count] : hits) {
    const double p = static_cast<double>(count) / static_cast<double>(draws);
    out[structure] = {p, std::sqrt(p * (1.0 - p) / static_cast<double>(draws)), count};
  }
  return out;
}

std::vector<double> eppf_consistency_check(const LmrmParams& params, const PartitionSpec& spec,
                                           const QuadratureSettings& quad) {
  spec.validate();
  const double base = log_eppf(params, spec, quad);
  std::vector<double> residuals;
  for (int i = 0; i < spec.d(); ++i) {
    double total = 0.0;
    for (int k = 0; k < spec.K(); ++k) {
      PartitionSpec next = spec;
      next.counts[k].q[i] += 1;
      next.n[i] += 1;
      total += std::exp(log_eppf(params, next, quad) - base);
    }
    PartitionSpec fresh = spec;
    ClusterCounts singleton{std::vector<int>(static_cast<std::size_t>(spec.d()), 0)};
    singleton.q[i] = 1;
    fresh.counts.push_back(singleton);
    fresh.n[i] += 1;
    total += std::exp(log_eppf(params, fresh, quad) - base);
    residuals.push_back(std::abs(1.0 - total));
  }
  return residuals;
}

}  // namespace lmrm
