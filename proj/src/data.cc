// Apache License, Version 2.0, refer to LICENSE.txt

#include "lmrm/data.hh"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace lmrm {

using nlohmann::json;

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;
};

Table read_table(const std::string& text, const std::string& source) {
  Table t;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    if (t.header.empty()) {
      t.header = split_row(line);
      continue;
    }
    t.rows.push_back(split_row(line));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) throw DataError(source + ": missing header row");
  return t;
}

int find_column(const Table& t, const std::string& name, const std::string& source) {
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (lower(t.header[c]) == lower(name)) return static_cast<int>(c);
  throw DataError(source + ": missing column '" + name + "'");
}

double parse_real(const std::string& cell, const std::string& source, int line, const std::string& column) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (cell.empty() || end != begin + cell.size() || errno == ERANGE || !std::isfinite(v))
    throw DataError(source + ": row " + std::to_string(line) + ", column '" + column +
                    "': cannot parse '" + cell + "' as a real number");
  return v;
}

bool parse_positive_int(const std::string& s, int& out) {
  if (s.empty() || s.size() > 9) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  out = std::stoi(s);
  return out >= 1;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void SyntheticSpec::validate() const {
  if (crms.empty()) throw ConfigError("synthetic: at least one measure is required");
  for (std::size_t r = 0; r < crms.size(); ++r) {
    if (crms[r].components.empty())
      throw ConfigError("synthetic: measure " + std::to_string(r + 1) + " has no components");
    double total = 0.0;
    for (const auto& c : crms[r].components) {
      if (!(c.sd >= 0.0) || !(c.weight >= 0.0) || !std::isfinite(c.mean))
        throw ConfigError("synthetic: invalid component in measure " + std::to_string(r + 1));
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ConfigError("synthetic: component weights of measure " + std::to_string(r + 1) +
                        " must sum to 1");
  }
  if (weights.empty() || weights.size() != group_sizes.size())
    throw ConfigError("synthetic: need one weight row per group");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].size() != crms.size())
      throw ConfigError("synthetic: weight row " + std::to_string(i + 1) + " must have one entry per measure");
    double total = 0.0;
    for (double w : weights[i]) {
      if (!(w >= 0.0)) throw ConfigError("synthetic: weights must be non-negative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ConfigError("synthetic: weight row " + std::to_string(i + 1) + " must sum to 1");
    if (group_sizes[i] < 0) throw ConfigError("synthetic: group sizes must be non-negative");
  }
}

SyntheticSpec SyntheticSpec::two_group_benchmark(std::uint64_t seed) {
  SyntheticSpec s;
  for (auto [a, b] : {std::pair{-10.0, -5.0}, {0.0, 5.0}, {10.0, 15.0}})
    s.crms.push_back({{{a, 1.0, 0.5}, {b, 1.0, 0.5}}});
  s.weights = {{0.3, 0.01, 0.69}, {0.3, 0.69, 0.01}};
  s.group_sizes = {300, 300};
  s.seed = seed;
  return s;
}

SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto pick = [&](auto&& weight_of, std::size_t count) {
    double v = unif(rng);
    for (std::size_t k = 0; k + 1 < count; ++k) {
      v -= weight_of(k);
      if (v < 0.0) return k;
    }
    // Skip trailing zero-weight entries left by rounding.
    std::size_t k = count - 1;
    while (k > 0 && weight_of(k) == 0.0) --k;
    return k;
  };

  SyntheticData out;
  for (std::size_t i = 0; i < spec.group_sizes.size(); ++i) {
    std::vector<double> xs;
    std::vector<ObservationLabel> labels;
    for (int j = 0; j < spec.group_sizes[i]; ++j) {
      const std::size_t r = pick([&](std::size_t k) { return spec.weights[i][k]; }, spec.crms.size());
      const auto& comps = spec.crms[r].components;
      const std::size_t c = pick([&](std::size_t k) { return comps[k].weight; }, comps.size());
      xs.push_back(comps[c].mean + comps[c].sd * normal(rng));
      labels.push_back({static_cast<int>(r), static_cast<int>(c)});
    }
    out.data.groups.push_back(std::move(xs));
    out.data.keys.push_back(std::to_string(i + 1));
    out.labels.push_back(std::move(labels));
  }
  return out;
}

GroupedDataset parse_csv(const std::string& text, const std::string& source) {
  const Table t = read_table(text, source);
  const int gcol = find_column(t, "group", source);
  const int vcol = find_column(t, "value", source);

  std::vector<std::string> keys;
  std::vector<double> values;
  std::vector<int> lines;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const int line = t.line_numbers[r];
    if (static_cast<int>(row.size()) <= std::max(gcol, vcol))
      throw DataError(source + ": row " + std::to_string(line) + " has " +
                      std::to_string(row.size()) + " fields, expected at least " +
                      std::to_string(std::max(gcol, vcol) + 1));
    if (row[gcol].empty())
      throw DataError(source + ": row " + std::to_string(line) + ", column 'group': empty group key");
    keys.push_back(row[gcol]);
    values.push_back(parse_real(row[vcol], source, line, t.header[vcol]));
    lines.push_back(line);
  }
  if (keys.empty()) throw DataError(source + ": no data rows");

  bool numeric = true;
  int max_key = 0;
  for (const auto& k : keys) {
    int v;
    if (!parse_positive_int(k, v)) {
      numeric = false;
      break;
    }
    max_key = std::max(max_key, v);
  }

  GroupedDataset data;
  if (numeric) {
    data.groups.resize(static_cast<std::size_t>(max_key));
    for (int g = 1; g <= max_key; ++g) data.keys.push_back(std::to_string(g));
    for (std::size_t r = 0; r < keys.size(); ++r) data.groups[std::stoi(keys[r]) - 1].push_back(values[r]);
    for (int g = 0; g < max_key; ++g)
      if (data.groups[g].empty())
        throw DataError(source + ": group " + std::to_string(g + 1) +
                        " has no rows (integer group keys must cover 1.." + std::to_string(max_key) + ")");
  } else {
    std::map<std::string, int> index;
    for (std::size_t r = 0; r < keys.size(); ++r) {
      auto [it, inserted] = index.emplace(keys[r], static_cast<int>(data.groups.size()));
      if (inserted) {
        data.groups.emplace_back();
        data.keys.push_back(keys[r]);
      }
      data.groups[it->second].push_back(values[r]);
    }
  }
  return data;
}

GroupedDataset load_csv(const std::filesystem::path& path) {
  return parse_csv(read_text_file(path), path.string());
}

std::string format_csv(const GroupedDataset& data) {
  std::string out = "group,value\n";
  for (int i = 0; i < data.d(); ++i) {
    const std::string key =
        i < static_cast<int>(data.keys.size()) ? data.keys[i] : std::to_string(i + 1);
    for (double x : data.groups[i]) out += key + "," + format_real(x) + "\n";
  }
  return out;
}

void write_csv(const GroupedDataset& data, const std::filesystem::path& path) {
  write_text_file(path, format_csv(data));
}

std::string convert_clinical_csv(const std::string& text, const std::string& source) {
  const Table t = read_table(text, source);
  const int tcol = find_column(t, "Treatment", source);
  const int bcol = find_column(t, "After_exp_BP", source);
  std::string treated, placebo;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const int line = t.line_numbers[r];
    if (static_cast<int>(row.size()) <= std::max(tcol, bcol))
      throw DataError(source + ": row " + std::to_string(line) + " is missing fields");
    const double treatment = parse_real(row[tcol], source, line, t.header[tcol]);
    const double bp = parse_real(row[bcol], source, line, t.header[bcol]);
    if (treatment == 1.0)
      treated += "1," + format_real(bp) + "\n";
    else if (treatment == 0.0)
      placebo += "2," + format_real(bp) + "\n";
    else
      throw DataError(source + ": row " + std::to_string(line) + ", column '" + t.header[tcol] +
                      "': expected 0 or 1");
  }
  if (treated.empty() || placebo.empty())
    throw DataError(source + ": both treatment and placebo rows are required");
  return "group,value\n" + treated + placebo;
}

void write_labels_json(const SyntheticData& synth, const std::filesystem::path& path) {
  json groups = json::array();
  for (const auto& g : synth.labels) {
    json crm = json::array(), comp = json::array();
    for (const auto& l : g) {
      crm.push_back(l.crm + 1);
      comp.push_back(l.component + 1);
    }
    groups.push_back({{"crm", crm}, {"component", comp}});
  }
  write_text_file(path, json{{"groups", groups}}.dump(2) + "\n");
}

void RunConfig::validate() const {
  try {
    model.validate();
    sampler.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(model.base_sd > 0.0)) throw ConfigError("model: base_sd must be positive");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (R < 1) throw ConfigError("R must be >= 1");
  if (synthetic) synthetic->validate();
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

SyntheticSpec parse_synthetic(const json& j) {
  const std::uint64_t seed = get_or<std::uint64_t>(j, "seed", 1);
  if (j.contains("preset")) {
    if (j.at("preset").get<std::string>() != "two-group-benchmark")
      throw ConfigError("synthetic: unknown preset '" + j.at("preset").get<std::string>() + "'");
    SyntheticSpec s = SyntheticSpec::two_group_benchmark(seed);
    if (j.contains("group_sizes")) s.group_sizes = j.at("group_sizes").get<std::vector<int>>();
    if (j.contains("weights")) s.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    return s;
  }
  SyntheticSpec s;
  s.seed = seed;
  for (const auto& crm : j.at("crms")) {
    SyntheticCrm c;
    const auto& comps = crm.at("components");
    for (const auto& comp : comps)
      c.components.push_back({comp.at("mean").get<double>(), get_or<double>(comp, "sd", 1.0),
                              get_or<double>(comp, "weight", 1.0 / static_cast<double>(comps.size()))});
    s.crms.push_back(std::move(c));
  }
  s.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  s.group_sizes = j.at("group_sizes").get<std::vector<int>>();
  return s;
}

json synthetic_to_json(const SyntheticSpec& s) {
  json crms = json::array();
  for (const auto& c : s.crms) {
    json comps = json::array();
    for (const auto& m : c.components) comps.push_back({{"mean", m.mean}, {"sd", m.sd}, {"weight", m.weight}});
    crms.push_back({{"components", comps}});
  }
  return {{"seed", s.seed}, {"crms", crms}, {"weights", s.weights}, {"group_sizes", s.group_sizes}};
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  RunConfig c;
  try {
    const json j = json::parse(json_text);
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model.sigma = get_or<double>(m, "sigma", c.model.sigma);
      c.model.base_mean = get_or<double>(m, "base_mean", c.model.base_mean);
      c.model.base_sd = get_or<double>(m, "base_sd", c.model.base_sd);
    }
    c.alpha = get_or<double>(j, "alpha", c.alpha);
    c.R = get_or<int>(j, "R", c.R);
    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      auto& sc = c.sampler;
      sc.iterations = get_or<int>(s, "iterations", sc.iterations);
      sc.burn_in = get_or<int>(s, "burn_in", sc.burn_in);
      sc.seed = get_or<std::uint64_t>(s, "seed", sc.seed);
      sc.u_step = get_or<double>(s, "u_step", sc.u_step);
      sc.w_step = get_or<double>(s, "w_step", sc.w_step);
      sc.thin = get_or<int>(s, "thin", sc.thin);
      sc.mh_repeats = get_or<int>(s, "mh_repeats", sc.mh_repeats);
      sc.init_clusters = get_or<int>(s, "init_clusters", sc.init_clusters);
      sc.update_aux = get_or<bool>(s, "update_aux", sc.update_aux);
      sc.update_weights = get_or<bool>(s, "update_weights", sc.update_weights);
      if (s.contains("u_update")) sc.u_update = parse_proposal_kind(s.at("u_update").get<std::string>());
      if (s.contains("w_update")) sc.w_update = parse_proposal_kind(s.at("w_update").get<std::string>());
      if (s.contains("w_prior")) sc.w_prior = parse_weight_prior(s.at("w_prior").get<std::string>());
      if (s.contains("init")) sc.init = parse_init_strategy(s.at("init").get<std::string>());
    }
    if (j.contains("data")) c.data_path = j.at("data").get<std::string>();
    if (j.contains("synthetic")) c.synthetic = parse_synthetic(j.at("synthetic"));
    c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir.string());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text_file(path));
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["model"] = {{"sigma", c.model.sigma}, {"base_mean", c.model.base_mean}, {"base_sd", c.model.base_sd}};
  j["alpha"] = c.alpha;
  j["R"] = c.R;
  const auto& s = c.sampler;
  j["sampler"] = {{"iterations", s.iterations},
                  {"burn_in", s.burn_in},
                  {"seed", s.seed},
                  {"u_step", s.u_step},
                  {"w_step", s.w_step},
                  {"u_update", to_string(s.u_update)},
                  {"w_update", to_string(s.w_update)},
                  {"thin", s.thin},
                  {"w_prior", to_string(s.w_prior)},
                  {"init", to_string(s.init)},
                  {"init_clusters", s.init_clusters},
                  {"mh_repeats", s.mh_repeats},
                  {"update_aux", s.update_aux},
                  {"update_weights", s.update_weights}};
  if (c.data_path) j["data"] = c.data_path->string();
  if (c.synthetic) j["synthetic"] = synthetic_to_json(*c.synthetic);
  j["output_dir"] = c.output_dir.string();
  return j.dump(2);
}

}  // namespace lmrm
