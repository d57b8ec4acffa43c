// Apache License, Version 2.0, refer to LICENSE.txt
//
// Fitting front-end shared by the command line tool and the tests: runs
// chains, writes traces / summaries / cluster tables / manifests, and reads
// traces back for reporting.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lmrm/data.hh"
#include "lmrm/gibbs.hh"

namespace lmrm {

inline constexpr const char* kVersion = "0.1.0";

// Runs `chains` independent chains, chain c seeded with seed + c, in parallel.
std::vector<RunResult> fit_chains(const RunConfig& config, const GroupedDataset& data, int chains);

// Summary pooled across chains, weighted by retained sample count.
ChainSummary pool_summaries(std::span<const RunResult> results);

std::string format_trace(const RunResult& result, int d, int R);
std::string format_summary(const ChainSummary& summary);
std::string format_cluster_table(std::span<const ClusterRow> rows, int d);

std::uint64_t fnv1a64(const std::string& text);
std::string format_manifest(const RunConfig& config, const GroupedDataset& data, int chains);

// Writes trace/summary/cluster files (suffixed _chain<c> when chains > 1), a
// pooled summary.csv and manifest.json into `dir`. Returns the files written.
std::vector<std::filesystem::path> write_fit_outputs(const std::filesystem::path& dir,
                                                     const RunConfig& config,
                                                     const GroupedDataset& data,
                                                     std::span<const RunResult> results);

struct TraceTable {
  int d = 0;
  int R = 0;
  std::vector<int> iterations;
  std::vector<int> K;
  std::vector<std::vector<double>> u;        // per row
  std::vector<std::vector<double>> weights;  // per row, d x R row-major
};

TraceTable parse_trace(const std::string& text, const std::string& source = "<memory>");

struct TraceReport {
  long samples;
  double mean_K;
  double ess_K;
  std::vector<double> mean_weights;
  std::vector<double> mean_normalized_weights;
  std::vector<double> mean_min_normalized_weight;  // per group
};

// Throws DataError on an empty trace.
TraceReport summarize_trace(const TraceTable& trace);
std::string format_trace_report(const TraceReport& report, int d, int R);

// Effective sample size by Geyer's initial positive sequence estimator.
double effective_sample_size(std::span<const double> xs);

}  // namespace lmrm
