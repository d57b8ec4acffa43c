// Apache License, Version 2.0, refer to LICENSE.txt

#define BOOST_TEST_MODULE test report
#define BOOST_TEST_DYN_LINK

#include <boost/test/unit_test.hpp>

#include <cmath>
#include <filesystem>

#include "json.hpp"
#include "lmrm/report.hh"

namespace tt = boost::test_tools;
using namespace lmrm;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.model = GaussianModel{1.0, 0.0, 2.6};
  c.alpha = 0.005;
  c.R = 2;
  c.sampler.iterations = 30;
  c.sampler.burn_in = 10;
  c.sampler.thin = 2;
  SyntheticSpec spec = SyntheticSpec::two_group_benchmark(3);
  spec.group_sizes = {25, 25};
  c.synthetic = spec;
  return c;
}

}  // namespace

BOOST_AUTO_TEST_CASE(test_fnv1a64)
{
  BOOST_TEST(fnv1a64("") == 0xcbf29ce484222325ULL);
  BOOST_TEST(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

BOOST_AUTO_TEST_CASE(test_effective_sample_size)
{
  Rng rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  const int n = 50000;
  std::vector<double> iid, ar;
  double x = 0.0;
  const double rho = 0.9;
  for (int k = 0; k < n; ++k) {
    iid.push_back(z(rng));
    x = rho * x + std::sqrt(1.0 - rho * rho) * z(rng);
    ar.push_back(x);
  }
  BOOST_TEST(effective_sample_size(iid) == static_cast<double>(n), tt::tolerance(0.1));
  BOOST_TEST(effective_sample_size(ar) == n * (1.0 - rho) / (1.0 + rho), tt::tolerance(0.2));
  const std::vector<double> constant(100, 2.0);
  BOOST_TEST(std::isfinite(effective_sample_size(constant)));
}

BOOST_AUTO_TEST_CASE(test_trace_round_trip_and_summary)
{
  const RunConfig c = small_config();
  const auto data = generate(*c.synthetic).data;
  const auto results = fit_chains(c, data, 1);
  const std::string text = format_trace(results[0], 2, 2);
  BOOST_TEST(text.rfind("iter,K,u_1,u_2,w_1_1,w_1_2,w_2_1,w_2_2\n", 0) == 0u);
  const TraceTable t = parse_trace(text);
  BOOST_TEST(t.d == 2);
  BOOST_TEST(t.R == 2);
  BOOST_REQUIRE(t.K.size() == results[0].samples.size());
  for (std::size_t s = 0; s < t.K.size(); ++s) {
    BOOST_TEST(t.iterations[s] == results[0].samples[s].iteration);
    BOOST_TEST(t.K[s] == results[0].samples[s].K);
    BOOST_TEST(t.weights[s] == results[0].samples[s].weights, tt::per_element());
    BOOST_TEST(t.u[s] == results[0].samples[s].u, tt::per_element());
  }
}

BOOST_AUTO_TEST_CASE(test_summarize_trace)
{
  const auto single = parse_trace("iter,K,u_1,w_1_1,w_1_2\n7,4,0.5,0.25,0.75\n");
  const auto rep = summarize_trace(single);
  BOOST_TEST(rep.samples == 1);
  BOOST_TEST(rep.mean_K == 4.0);
  BOOST_TEST(rep.mean_weights == std::vector<double>({0.25, 0.75}), tt::per_element());
  BOOST_TEST(rep.mean_normalized_weights[0] == 0.25, tt::tolerance(1e-15));
  BOOST_TEST(rep.mean_min_normalized_weight[0] == 0.25, tt::tolerance(1e-15));
  const std::string shown = format_trace_report(rep, 1, 2);
  BOOST_TEST(shown.find("mean K: 4.0000") != std::string::npos);

  const auto empty = parse_trace("iter,K,u_1,w_1_1\n");
  try {
    summarize_trace(empty);
    BOOST_FAIL("expected DataError");
  } catch (const DataError& e) {
    BOOST_TEST(std::string(e.what()).find("no samples") != std::string::npos);
  }
  BOOST_CHECK_THROW(parse_trace("a,b\n1,2\n"), DataError);
  BOOST_CHECK_THROW(parse_trace("iter,K,u_1,w_1_1\n1,2,x,1\n"), DataError);
  BOOST_CHECK_THROW(parse_trace(""), DataError);
}

BOOST_AUTO_TEST_CASE(test_cluster_table_format)
{
  const std::vector<ClusterRow> rows{{-5.123456, {3, 1}, {75.0, 25.0}}, {2.0, {1, 3}, {25.0, 75.0}}};
  const std::string text = format_cluster_table(rows, 2);
  BOOST_TEST(text == "cluster,mean,count_g1,pct_g1,count_g2,pct_g2\n"
                     "1,-5.1235,3,75.00,1,25.00\n"
                     "2,2.0000,1,25.00,3,75.00\n");
}

BOOST_AUTO_TEST_CASE(test_pool_summaries)
{
  RunResult a, b;
  a.summary.d = b.summary.d = 1;
  a.summary.R = b.summary.R = 1;
  a.summary.samples = 1;
  b.summary.samples = 3;
  a.summary.mean_K = 2.0;
  b.summary.mean_K = 6.0;
  a.summary.mean_weights = {1.0};
  b.summary.mean_weights = {3.0};
  a.summary.mean_normalized_weights = b.summary.mean_normalized_weights = {1.0};
  a.summary.mean_min_normalized_weight = b.summary.mean_min_normalized_weight = {1.0};
  a.summary.mean_log_u = {0.0};
  b.summary.mean_log_u = {4.0};
  const std::vector<RunResult> both{a, b};
  const auto pooled = pool_summaries(both);
  BOOST_TEST(pooled.samples == 4);
  BOOST_TEST(pooled.mean_K == 5.0);
  BOOST_TEST(pooled.mean_weights[0] == 2.5);
  BOOST_TEST(pooled.mean_log_u[0] == 3.0);
  BOOST_CHECK_THROW(pool_summaries(std::vector<RunResult>{}), std::invalid_argument);
}

BOOST_AUTO_TEST_CASE(test_fit_outputs_and_chains)
{
  const RunConfig c = small_config();
  const auto data = generate(*c.synthetic).data;
  const auto dir = std::filesystem::temp_directory_path() / "lmrm_report_test";
  std::filesystem::remove_all(dir);

  const auto results = fit_chains(c, data, 3);
  BOOST_REQUIRE(results.size() == 3u);
  // Chain c is the single-chain run with seed + c.
  RunConfig shifted = c;
  shifted.sampler.seed = c.sampler.seed + 2;
  const auto third = fit_chains(shifted, data, 1);
  BOOST_TEST(results[2].k_trace == third[0].k_trace, tt::per_element());

  const auto files = write_fit_outputs(dir, c, data, results);
  for (const char* name : {"trace_chain1.csv", "trace_chain3.csv", "summary_chain2.csv",
                           "clusters_chain1.csv", "summary.csv", "manifest.json"})
    BOOST_TEST(std::filesystem::exists(dir / name), name);

  const auto manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  BOOST_TEST(manifest.at("chains").get<int>() == 3);
  BOOST_TEST(manifest.at("seeds").size() == 3u);
  BOOST_TEST(manifest.at("version").get<std::string>() == kVersion);
  BOOST_TEST(manifest.contains("config_hash"));
  BOOST_TEST(manifest.contains("data_hash"));
  BOOST_TEST(format_manifest(c, data, 3) == format_manifest(c, data, 3));

  const std::string summary = read_text_file(dir / "summary.csv");
  BOOST_TEST(summary.find("min_wnorm_1,") != std::string::npos);
  BOOST_TEST(summary.find("samples,60") != std::string::npos);
  std::filesystem::remove_all(dir);
}
