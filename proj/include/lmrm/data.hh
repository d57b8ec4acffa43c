// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lmrm/gaussian_model.hh"
#include "lmrm/gibbs.hh"
#include "lmrm/partition.hh"

namespace lmrm {

// Raised for malformed input files; the message names row and column.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a file cannot be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for invalid run configurations.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MixtureComponent {
  double mean;
  double sd;
  double weight;
};

// One underlying measure: a finite Gaussian mixture.
struct SyntheticCrm {
  std::vector<MixtureComponent> components;
};

struct SyntheticSpec {
  std::vector<SyntheticCrm> crms;
  std::vector<std::vector<double>> weights;  // d x R sampling proportions
  std::vector<int> group_sizes;
  std::uint64_t seed = 1;

  void validate() const;
  // Three two-component measures centred at {-10,-5}, {0,5}, {10,15}, two
  // groups of 300 with proportions (0.3, 0.01, 0.69) and (0.3, 0.69, 0.01).
  static SyntheticSpec two_group_benchmark(std::uint64_t seed);
};

struct ObservationLabel {
  int crm;
  int component;
};

struct SyntheticData {
  GroupedDataset data;
  std::vector<std::vector<ObservationLabel>> labels;
};

SyntheticData generate(const SyntheticSpec& spec);

// CSV with header `group,value`. Keys that are all positive integers map to
// index key-1 and must cover 1..d; any other keys are indexed in order of
// first appearance.
GroupedDataset load_csv(const std::filesystem::path& path);
GroupedDataset parse_csv(const std::string& text, const std::string& source = "<memory>");
void write_csv(const GroupedDataset& data, const std::filesystem::path& path);
std::string format_csv(const GroupedDataset& data);

// Converts the clinical drug-trial table (columns include Treatment and
// After_exp_BP) to `group,value`: Treatment 1 becomes group 1, Treatment 0
// group 2.
std::string convert_clinical_csv(const std::string& text, const std::string& source = "<memory>");

void write_labels_json(const SyntheticData& synth, const std::filesystem::path& path);

struct RunConfig {
  GaussianModel model;
  double alpha = 0.005;
  int R = 3;
  SamplerConfig sampler;
  std::optional<std::filesystem::path> data_path;
  std::optional<SyntheticSpec> synthetic;
  std::filesystem::path output_dir = "out";

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
// Canonical JSON form, also used for the manifest hash.
std::string run_config_to_json(const RunConfig& config);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace lmrm
