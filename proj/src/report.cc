// Apache License, Version 2.0, refer to LICENSE.txt

#include "lmrm/report.hh"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace lmrm {

using nlohmann::json;

namespace {

std::string real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string weight_name(const char* prefix, int i, int r) {
  return std::string(prefix) + "_" + std::to_string(i + 1) + "_" + std::to_string(r + 1);
}

}  // namespace

std::vector<RunResult> fit_chains(const RunConfig& config, const GroupedDataset& data, int chains) {
  if (chains < 1) throw ConfigError("chains must be >= 1");
  config.validate();
  const LmrmParams params0 = LmrmParams::ones(data.d(), config.R, config.alpha);
  std::vector<RunResult> results(static_cast<std::size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  auto work = [&](int c) {
    try {
      SamplerConfig sc = config.sampler;
      sc.seed = config.sampler.seed + static_cast<std::uint64_t>(c);
      results[c] = run(data, config.model, params0, sc);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (chains == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int c = 0; c < chains; ++c) threads.emplace_back(work, c);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

ChainSummary pool_summaries(std::span<const RunResult> results) {
  if (results.empty()) throw std::invalid_argument("pool_summaries: no chains");
  ChainSummary pooled;
  pooled.d = results[0].summary.d;
  pooled.R = results[0].summary.R;
  pooled.mean_weights.assign(results[0].summary.mean_weights.size(), 0.0);
  pooled.mean_normalized_weights.assign(pooled.mean_weights.size(), 0.0);
  pooled.mean_log_u.assign(results[0].summary.mean_log_u.size(), 0.0);
  pooled.mean_min_normalized_weight.assign(pooled.mean_log_u.size(), 0.0);
  for (const auto& r : results) {
    const auto& s = r.summary;
    const double m = static_cast<double>(s.samples);
    pooled.samples += s.samples;
    pooled.mean_K += m * s.mean_K;
    for (std::size_t k = 0; k < pooled.mean_weights.size(); ++k) {
      pooled.mean_weights[k] += m * s.mean_weights[k];
      pooled.mean_normalized_weights[k] += m * s.mean_normalized_weights[k];
    }
    for (std::size_t k = 0; k < pooled.mean_log_u.size(); ++k) {
      pooled.mean_log_u[k] += m * s.mean_log_u[k];
      pooled.mean_min_normalized_weight[k] += m * s.mean_min_normalized_weight[k];
    }
    pooled.u_moves += s.u_moves;
    pooled.w_moves += s.w_moves;
  }
  const double total = static_cast<double>(pooled.samples);
  pooled.mean_K /= total;
  for (auto& v : pooled.mean_weights) v /= total;
  for (auto& v : pooled.mean_normalized_weights) v /= total;
  for (auto& v : pooled.mean_log_u) v /= total;
  for (auto& v : pooled.mean_min_normalized_weight) v /= total;
  return pooled;
}

std::string format_trace(const RunResult& result, int d, int R) {
  std::string out = "iter,K";
  for (int i = 0; i < d; ++i) out += ",u_" + std::to_string(i + 1);
  for (int i = 0; i < d; ++i)
    for (int r = 0; r < R; ++r) out += "," + weight_name("w", i, r);
  out += "\n";
  for (const auto& s : result.samples) {
    out += std::to_string(s.iteration) + "," + std::to_string(s.K);
    for (double u : s.u) out += "," + real(u);
    for (double w : s.weights) out += "," + real(w);
    out += "\n";
  }
  return out;
}

std::string format_summary(const ChainSummary& s) {
  std::string out = "quantity,value\n";
  out += "samples," + std::to_string(s.samples) + "\n";
  out += "mean_K," + real(s.mean_K) + "\n";
  for (int i = 0; i < s.d; ++i)
    for (int r = 0; r < s.R; ++r) out += weight_name("w", i, r) + "," + real(s.mean_weights[i * s.R + r]) + "\n";
  for (int i = 0; i < s.d; ++i)
    for (int r = 0; r < s.R; ++r)
      out += weight_name("wnorm", i, r) + "," + real(s.mean_normalized_weights[i * s.R + r]) + "\n";
  for (int i = 0; i < s.d; ++i)
    out += "min_wnorm_" + std::to_string(i + 1) + "," + real(s.mean_min_normalized_weight[i]) + "\n";
  for (int i = 0; i < s.d; ++i)
    out += "mean_log_u_" + std::to_string(i + 1) + "," + real(s.mean_log_u[i]) + "\n";
  out += "u_acceptance," + real(s.u_moves.rate()) + "\n";
  out += "w_acceptance," + real(s.w_moves.rate()) + "\n";
  return out;
}

std::string format_cluster_table(std::span<const ClusterRow> rows, int d) {
  std::string out = "cluster,mean";
  for (int i = 0; i < d; ++i)
    out += ",count_g" + std::to_string(i + 1) + ",pct_g" + std::to_string(i + 1);
  out += "\n";
  int k = 1;
  for (const auto& row : rows) {
    out += std::to_string(k++) + "," + fixed(row.mean, 4);
    for (int i = 0; i < d; ++i) out += "," + std::to_string(row.counts[i]) + "," + fixed(row.percents[i], 2);
    out += "\n";
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string format_manifest(const RunConfig& config, const GroupedDataset& data, int chains) {
  const std::string config_json = run_config_to_json(config);
  char hash[32], data_hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(config_json)));
  std::snprintf(data_hash, sizeof data_hash, "%016llx",
                static_cast<unsigned long long>(fnv1a64(format_csv(data))));
  json seeds = json::array();
  for (int c = 0; c < chains; ++c) seeds.push_back(config.sampler.seed + static_cast<std::uint64_t>(c));
  json j{{"tool", "lmrm"},
         {"version", kVersion},
         {"compiler", __VERSION__},
         {"config_hash", hash},
         {"data_hash", data_hash},
         {"chains", chains},
         {"seeds", seeds},
         {"config", json::parse(config_json)}};
  return j.dump(2) + "\n";
}

std::vector<std::filesystem::path> write_fit_outputs(const std::filesystem::path& dir,
                                                     const RunConfig& config,
                                                     const GroupedDataset& data,
                                                     std::span<const RunResult> results) {
  std::vector<std::filesystem::path> written;
  const int chains = static_cast<int>(results.size());
  const int d = data.d();
  auto put = [&](const std::string& name, const std::string& text) {
    write_text_file(dir / name, text);
    written.push_back(dir / name);
  };
  for (int c = 0; c < chains; ++c) {
    const std::string suffix = chains == 1 ? "" : "_chain" + std::to_string(c + 1);
    put("trace" + suffix + ".csv", format_trace(results[c], d, config.R));
    if (chains > 1) put("summary" + suffix + ".csv", format_summary(results[c].summary));
    put("clusters" + suffix + ".csv", format_cluster_table(results[c].cluster_table, d));
  }
  put("summary.csv", format_summary(pool_summaries(results)));
  put("manifest.json", format_manifest(config, data, chains));
  return written;
}

TraceTable parse_trace(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty trace file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string f;
    while (std::getline(hs, f, ',')) header.push_back(f);
  }
  if (header.size() < 2 || header[0] != "iter" || header[1] != "K")
    throw DataError(source + ": trace header must start with iter,K");
  TraceTable t;
  std::size_t col = 2;
  while (col < header.size() && header[col].rfind("u_", 0) == 0) ++col, ++t.d;
  const std::size_t n_w = header.size() - col;
  if (t.d < 1 || n_w == 0 || n_w % static_cast<std::size_t>(t.d) != 0)
    throw DataError(source + ": trace header does not describe a d x R weight matrix");
  t.R = static_cast<int>(n_w) / t.d;

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) {
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      if (f.empty() || *end != '\0')
        throw DataError(source + ": row " + std::to_string(line_no) + ": cannot parse '" + f + "'");
      vals.push_back(v);
    }
    if (vals.size() != header.size())
      throw DataError(source + ": row " + std::to_string(line_no) + " has " + std::to_string(vals.size()) +
                      " fields, expected " + std::to_string(header.size()));
    t.iterations.push_back(static_cast<int>(vals[0]));
    t.K.push_back(static_cast<int>(vals[1]));
    t.u.emplace_back(vals.begin() + 2, vals.begin() + 2 + t.d);
    t.weights.emplace_back(vals.begin() + 2 + t.d, vals.end());
  }
  return t;
}

double effective_sample_size(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) return static_cast<double>(n);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (xs[t] - mean) * (xs[t + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (c0 <= 0.0) return static_cast<double>(n);
  // Sum consecutive pairs of autocorrelations while the pair sums stay positive.
  double tau = -1.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / static_cast<double>(n));
  return static_cast<double>(n) / tau;
}

TraceReport summarize_trace(const TraceTable& t) {
  if (t.K.empty()) throw DataError("trace contains no samples");
  TraceReport rep;
  rep.samples = static_cast<long>(t.K.size());
  const std::size_t dr = static_cast<std::size_t>(t.d * t.R);
  rep.mean_weights.assign(dr, 0.0);
  rep.mean_normalized_weights.assign(dr, 0.0);
  rep.mean_min_normalized_weight.assign(static_cast<std::size_t>(t.d), 0.0);
  std::vector<double> ks;
  double sum_k = 0.0;
  for (std::size_t s = 0; s < t.K.size(); ++s) {
    sum_k += t.K[s];
    ks.push_back(t.K[s]);
    for (int i = 0; i < t.d; ++i) {
      double row = 0.0, smallest = t.weights[s][i * t.R];
      for (int r = 0; r < t.R; ++r) {
        row += t.weights[s][i * t.R + r];
        smallest = std::min(smallest, t.weights[s][i * t.R + r]);
      }
      for (int r = 0; r < t.R; ++r) {
        rep.mean_weights[i * t.R + r] += t.weights[s][i * t.R + r];
        rep.mean_normalized_weights[i * t.R + r] += t.weights[s][i * t.R + r] / row;
      }
      rep.mean_min_normalized_weight[i] += smallest / row;
    }
  }
  const double m = static_cast<double>(rep.samples);
  rep.mean_K = sum_k / m;
  for (auto& v : rep.mean_weights) v /= m;
  for (auto& v : rep.mean_normalized_weights) v /= m;
  for (auto& v : rep.mean_min_normalized_weight) v /= m;
  rep.ess_K = effective_sample_size(ks);
  return rep;
}

std::string format_trace_report(const TraceReport& rep, int d, int R) {
  std::ostringstream out;
  out << "samples: " << rep.samples << "\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "mean K: %.4f (ESS %.1f)\n", rep.mean_K, rep.ess_K);
  out << buf << "\n";
  auto row = [&](const char* label, const std::vector<double>& w) {
    out << label;
    for (int i = 0; i < d; ++i)
      for (int r = 0; r < R; ++r) {
        std::snprintf(buf, sizeof buf, " %9.4f", w[i * R + r]);
        out << buf;
      }
    std::snprintf(buf, sizeof buf, " %9.4f\n", rep.mean_K);
    out << buf;
  };
  out << "          ";
  for (int i = 0; i < d; ++i)
    for (int r = 0; r < R; ++r) {
      std::snprintf(buf, sizeof buf, " %9s", weight_name("w", i, r).c_str());
      out << buf;
    }
  std::snprintf(buf, sizeof buf, " %9s\n", "K");
  out << buf;
  row("raw       ", rep.mean_weights);
  row("row-norm  ", rep.mean_normalized_weights);
  out << "\nsmallest row-normalized weight, averaged over samples:";
  for (int i = 0; i < d; ++i) {
    std::snprintf(buf, sizeof buf, " group %d %.4f", i + 1, rep.mean_min_normalized_weight[i]);
    out << buf;
  }
  out << "\n";
  return out.str();
}

}  // namespace lmrm
