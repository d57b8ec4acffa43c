// Apache License, Version 2.0, refer to LICENSE.txt
//
// lmrm: simulate grouped data, fit the LMRM Gaussian mixture, run the
// self-check suites and summarize traces.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 validation
// failure, 3 I/O error.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lmrm/data.hh"
#include "lmrm/report.hh"
#include "lmrm/validation.hh"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kValidationFailed = 2;
constexpr int kIo = 3;

int simulate(const std::string& config_path, const std::string& out_dir) {
  const lmrm::RunConfig config = lmrm::load_run_config(config_path);
  if (!config.synthetic) throw lmrm::ConfigError("config has no 'synthetic' section");
  const lmrm::SyntheticData synth = lmrm::generate(*config.synthetic);
  const std::filesystem::path dir(out_dir);
  lmrm::write_csv(synth.data, dir / "data.csv");
  lmrm::write_labels_json(synth, dir / "labels.json");
  std::cout << "wrote " << synth.data.total() << " observations in " << synth.data.d()
            << " groups to " << (dir / "data.csv").string() << "\n";
  return kOk;
}

int fit(const std::string& config_path, const std::string& data_path, const std::string& out_dir,
        int chains) {
  lmrm::RunConfig config = lmrm::load_run_config(config_path);
  lmrm::GroupedDataset data;
  if (!data_path.empty()) {
    config.data_path = data_path;
    data = lmrm::load_csv(data_path);
  } else if (config.data_path) {
    data = lmrm::load_csv(*config.data_path);
  } else if (config.synthetic) {
    data = lmrm::generate(*config.synthetic).data;
  } else {
    throw lmrm::ConfigError("no data: pass --data or set 'data' or 'synthetic' in the config");
  }
  const std::filesystem::path dir = out_dir.empty() ? config.output_dir : std::filesystem::path(out_dir);
  const auto results = lmrm::fit_chains(config, data, chains);
  lmrm::write_fit_outputs(dir, config, data, results);

  const lmrm::ChainSummary pooled = lmrm::pool_summaries(results);
  std::cout << "chains: " << chains << ", retained iterations: " << pooled.samples
            << ", mean K: " << pooled.mean_K << "\n";
  std::cout << lmrm::format_cluster_table(results.front().cluster_table, data.d());
  return kOk;
}

int validate(const std::string& suite, const std::string& out_dir) {
  if (!lmrm::is_validation_suite(suite)) {
    std::cerr << "unknown suite '" << suite << "'; expected one of:";
    for (const auto& s : lmrm::validation_suites()) std::cerr << " " << s;
    std::cerr << "\n";
    return kUsage;
  }
  const auto checks = lmrm::run_validation_suite(suite);
  const std::string report = lmrm::format_check_report(checks);
  std::cout << report;
  if (!out_dir.empty())
    lmrm::write_text_file(std::filesystem::path(out_dir) / ("validate_" + suite + ".csv"), report);
  for (const auto& c : checks)
    if (!c.passed) return kValidationFailed;
  return kOk;
}

int report(const std::string& trace_path) {
  const lmrm::TraceTable trace = lmrm::parse_trace(lmrm::read_text_file(trace_path), trace_path);
  if (trace.K.empty()) {
    std::cerr << "error: no samples in " << trace_path << "\n";
    return kUsage;
  }
  const lmrm::TraceReport rep = lmrm::summarize_trace(trace);
  std::cout << lmrm::format_trace_report(rep, trace.d, trace.R);
  return kOk;
}

int convert(const std::string& in_path, const std::string& out_path) {
  lmrm::write_text_file(out_path, lmrm::convert_clinical_csv(lmrm::read_text_file(in_path), in_path));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grouped-data clustering with normalized linear mixed random measures"};
  app.require_subcommand(1, 1);

  std::string config_path, out_dir, data_path, suite, trace_path, in_path;
  int chains = 1;

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic grouped dataset");
  sim->add_option("--config", config_path, "Run configuration (JSON)")->required();
  sim->add_option("--out", out_dir, "Output directory")->required();

  auto* fit_cmd = app.add_subcommand("fit", "Run the Gibbs sampler");
  fit_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();
  fit_cmd->add_option("--data", data_path, "Grouped data CSV (group,value)");
  fit_cmd->add_option("--out", out_dir, "Output directory (default: config output_dir)");
  fit_cmd->add_option("--chains", chains, "Independent chains, seeded seed+c")->check(CLI::PositiveNumber);

  auto* val = app.add_subcommand("validate", "Run a self-check suite");
  val->add_option("--suite", suite, "levy | eppf | gradients | oracle")->required();
  val->add_option("--out", out_dir, "Directory for the CSV report");

  auto* rep = app.add_subcommand("report", "Summarize a trace file");
  rep->add_option("--trace", trace_path, "Trace CSV written by fit")->required();

  auto* conv = app.add_subcommand("convert", "Convert the clinical drug table to group,value CSV");
  conv->add_option("--in", in_path, "Input CSV with Treatment and After_exp_BP columns")->required();
  conv->add_option("--out", out_dir, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (sim->parsed()) return simulate(config_path, out_dir);
    if (fit_cmd->parsed()) return fit(config_path, data_path, out_dir, chains);
    if (val->parsed()) return validate(suite, out_dir);
    if (rep->parsed()) return report(trace_path);
    if (conv->parsed()) return convert(in_path, out_dir);
  } catch (const lmrm::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const lmrm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const lmrm::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
