#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "glassbox/gti.hpp"
#include "glassbox/harness.hpp"
#include "json.hpp"

using namespace glassbox;
namespace fs = std::filesystem;

namespace {

// Collapsed parameter ranges: every workload shares f, P, alpha, beta, and a
// single AMAT term, so the cost identity is exactly linear in the varying
// features and the constant knob columns get pruned.
harness::ExperimentConfig collapsed_config() {
  harness::ExperimentConfig c;
  c.seed = 7;
  c.workload_count = 12;
  c.trace_length = 5000;
  c.warmup = 200;
  c.ranges.f_min = 0.2;
  c.ranges.f_max = 0.2;
  c.ranges.penalties = {3.0};
  c.ranges.alpha_min = 0.3;
  c.ranges.alpha_max = 0.3;
  c.ranges.beta_min = 0.7;
  c.ranges.beta_max = 0.7;
  c.ranges.amat_terms_min = 1;
  c.ranges.amat_terms_max = 1;
  c.ranges.amat_min = 0.05;
  c.ranges.amat_max = 0.4;
  c.gti_settings.folds = 4;
  c.gti_settings.n_boot = 120;
  c.attribution_settings.epsilon = 0.05;
  c.attribution_settings.delta = 0.05;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* name) : path(fs::path("harness_test_tmp") / name) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path.parent_path()); }
};

}  // namespace

TEST_CASE("experiment config round-trips through a config file") {
  const std::string path = "harness_test_config.cfg";
  {
    std::ofstream out(path);
    out << "seed = 99\n";
    out << "workload_count = 17\n";
    out << "trace_length = 2500\n";
    out << "warmup = 50\n";
    out << "out_dir = somewhere\n";
    out << "[ranges]\n";
    out << "f_min = 0.12\n";
    out << "f_max = 0.3\n";
    out << "penalties = 4, 6\n";
    out << "alpha_min = 0.2\n";
    out << "alpha_max = 0.8\n";
    out << "beta_min = 0.25\n";
    out << "beta_max = 0.75\n";
    out << "amat_terms_min = 2\n";
    out << "amat_terms_max = 2\n";
    out << "amat_min = 0.03\n";
    out << "amat_max = 0.2\n";
    out << "[gti]\n";
    out << "transform = poly2\n";
    out << "folds = 3\n";
    out << "n_boot = 150\n";
    out << "level = 0.9\n";
    out << "[attribution]\n";
    out << "epsilon = 0.02\n";
    out << "delta = 0.1\n";
    out << "method = antithetic\n";
  }

  const harness::ExperimentConfig c = harness::load_experiment_config(path);
  CHECK(c.seed == 99);
  CHECK(c.workload_count == 17);
  CHECK(c.trace_length == 2500);
  CHECK(c.warmup == 50);
  CHECK(c.out_dir == "somewhere");
  CHECK(c.ranges.f_min == doctest::Approx(0.12));
  CHECK(c.ranges.f_max == doctest::Approx(0.3));
  REQUIRE(c.ranges.penalties.size() == 2);
  CHECK(c.ranges.penalties[0] == 4.0);
  CHECK(c.ranges.penalties[1] == 6.0);
  CHECK(c.ranges.alpha_min == doctest::Approx(0.2));
  CHECK(c.ranges.beta_max == doctest::Approx(0.75));
  CHECK(c.ranges.amat_terms_min == 2);
  CHECK(c.ranges.amat_terms_max == 2);
  CHECK(c.ranges.amat_min == doctest::Approx(0.03));
  CHECK(c.gti_settings.transform == gti::Transform::kPoly2);
  CHECK(c.gti_settings.folds == 3);
  CHECK(c.gti_settings.n_boot == 150);
  CHECK(c.gti_settings.level == doctest::Approx(0.9));
  CHECK(c.attribution_settings.epsilon == doctest::Approx(0.02));
  CHECK(c.attribution_settings.delta == doctest::Approx(0.1));
  CHECK(c.attribution_settings.method == "antithetic");

  // Environment override beats the file's out_dir.
  setenv("GLASSBOX_OUT", "env_dir", 1);
  const harness::ExperimentConfig e = harness::load_experiment_config(path);
  CHECK(e.out_dir == "env_dir");
  unsetenv("GLASSBOX_OUT");

  std::remove(path.c_str());

  // Empty path: pure defaults.
  const harness::ExperimentConfig d = harness::load_experiment_config("");
  CHECK(d.seed == 42);
  CHECK(d.workload_count == 200);
  CHECK(d.gti_settings.n_boot == 400);
}

TEST_CASE("protocol run produces a coherent report without touching disk") {
  const harness::ExperimentConfig cfg = collapsed_config();
  const harness::Report r = harness::run_protocol(cfg);

  CHECK(r.schema_version == 1);
  CHECK(r.seed == 7);
  CHECK(r.rng_algorithm.find("xoshiro") != std::string::npos);
  CHECK(r.workloads.size() == 12);

  // Constant knob columns are pruned, the rest explain CPI exactly.
  CHECK(r.gti.estimate.point >= 0.99);
  const auto& pruned = r.gti.pruned_features;
  CHECK(std::find(pruned.begin(), pruned.end(), "f") != pruned.end());
  CHECK(std::find(pruned.begin(), pruned.end(), "P") != pruned.end());
  for (const std::string& kept : r.gti.feature_names)
    CHECK(std::find(pruned.begin(), pruned.end(), kept) == pruned.end());
  CHECK(r.gti.estimate.ci_low <= r.gti.estimate.ci_high);
  CHECK(r.gti.asymptotic_se >= 0.0);

  // Attribution vectors line up and the certified run met its budget.
  const std::size_t k = r.attribution.event_names.size();
  REQUIRE(k >= 2);
  CHECK(r.attribution.psi.size() == k);
  CHECK(r.attribution.etd.size() == k);
  CHECK(r.attribution.etd_mc.size() == k);
  CHECK(r.attribution.permutations >= 1);
  CHECK(r.attribution.epsilon == doctest::Approx(0.05));
  CHECK(r.attribution.mc_max_abs_dev <= 0.05);
  for (double p : r.attribution.psi) CHECK(p >= 0.0);
  for (double e : r.attribution.etd) CHECK(e <= 1e-12);

  // Baseline and first-order blocks are populated and finite.
  CHECK(r.baseline.blackbox_r2 >= 0.0);
  CHECK(r.baseline.blackbox_r2 <= 1.0 + 1e-12);
  CHECK(r.baseline.gti_internal == doctest::Approx(r.gti.estimate.point));
  CHECK(r.baseline.naive_additive_tp.size() == k);
  CHECK(r.baseline.jensen.within);
  CHECK(std::isfinite(r.first_order.max_deviation));
  CHECK(std::isfinite(r.first_order.scale_estimate));
  CHECK(r.first_order.scale_estimate < 0.0);
}

TEST_CASE("protocol run writes parseable report and workload files") {
  TempDir tmp("protocol");
  harness::ExperimentConfig cfg = collapsed_config();
  cfg.out_dir = tmp.path.string();

  const harness::Report r = harness::run_protocol(cfg);
  const fs::path report_path = tmp.path / "report.json";
  const fs::path workloads_path = tmp.path / "workloads.csv";
  REQUIRE(fs::exists(report_path));
  REQUIRE(fs::exists(workloads_path));

  const nlohmann::json j = nlohmann::json::parse(slurp(report_path));
  CHECK(j.at("schema_version").get<int>() == 1);
  CHECK(j.at("provenance").at("seed").get<std::uint64_t>() == 7);
  CHECK(j.at("gti").at("point").get<double>() == doctest::Approx(r.gti.estimate.point));
  CHECK(j.at("gti").at("ci_low").get<double>() <= j.at("gti").at("ci_high").get<double>());
  CHECK(j.at("attribution").is_object());
  CHECK(j.at("baseline").is_object());
  CHECK(j.at("first_order").is_object());

  // The emitted CSV is loadable as a dataset against its own cpi column.
  const gti::Dataset d = gti::load_dataset_csv(workloads_path.string(), "cpi");
  CHECK(d.targets.size() == 12);
  CHECK(d.targets(0) == doctest::Approx(r.workloads[0].cpi).epsilon(1e-12));

  // Same config, same bytes.
  TempDir tmp2("protocol_b");
  harness::ExperimentConfig cfg2 = collapsed_config();
  cfg2.out_dir = tmp2.path.string();
  (void)harness::run_protocol(cfg2);
  CHECK(slurp(report_path) == slurp(tmp2.path / "report.json"));
  CHECK(slurp(workloads_path) == slurp(tmp2.path / "workloads.csv"));
}

TEST_CASE("ablation sweep reports misspecification, rank stress, and convexity") {
  harness::ExperimentConfig cfg = collapsed_config();
  const harness::AblationReport a = harness::run_ablations(cfg);

  CHECK(a.schema_version == 1);
  REQUIRE(a.misspecification.size() >= 2);
  CHECK(a.misspecification[0].transform == "identity");
  CHECK(a.misspecification[1].transform == "poly2");
  CHECK(a.misspecification[1].gti_in_sample >= a.misspecification[0].gti_in_sample - 1e-12);

  REQUIRE(!a.identifiability.empty());
  for (const auto& row : a.identifiability) {
    CHECK(row.identifiable == (row.computed_rank == row.k));
    CHECK(row.augmentation_rows == row.k - row.computed_rank);
    if (row.identifiable && row.noise > 0.0) {
      CHECK(row.bound_holds);
      CHECK(row.recovery_error <= row.noise_bound * (1.0 + 1e-9));
    }
    if (!row.identifiable) CHECK(row.augmentation_rows > 0);
  }
  const bool any_deficient =
      std::any_of(a.identifiability.begin(), a.identifiability.end(),
                  [](const auto& row) { return !row.identifiable; });
  CHECK(any_deficient);

  REQUIRE(!a.jensen.empty());
  CHECK(a.jensen_violations == 0);
  for (const auto& row : a.jensen) {
    CHECK(row.within);
    CHECK(row.gap >= row.lower - 1e-12);
    CHECK(row.gap <= row.upper + 1e-12);
  }

  TempDir tmp("ablate");
  cfg.out_dir = tmp.path.string();
  (void)harness::run_ablations(cfg);
  const nlohmann::json j = nlohmann::json::parse(slurp(tmp.path / "ablations.json"));
  CHECK(j.at("schema_version").get<int>() == 1);
  CHECK(j.at("misspecification").at("rows").is_array());
  CHECK(j.at("identifiability").at("rows").is_array());
  CHECK(j.at("jensen").at("rows").is_array());
}

TEST_CASE("reference table reproduction emits both averaging orders") {
  TempDir tmp("table1");
  const harness::Table1Report t = harness::reproduce_table1(tmp.path.string());

  REQUIRE(t.rows.size() == 6);
  CHECK(t.average_of_predictions == doctest::Approx(1.057401).epsilon(1e-5));
  CHECK(t.prediction_of_averages == doctest::Approx(1.056693).epsilon(1e-5));

  const std::string csv_text = slurp(tmp.path / "table1.csv");
  CHECK(csv_text.find("schema_version=1") != std::string::npos);
  CHECK(csv_text.find("gcc") != std::string::npos);
  CHECK(csv_text.find("average") != std::string::npos);
  CHECK(csv_text.find("average_of_predictions") != std::string::npos);
}

TEST_CASE("figure data files carry the analytic grids") {
  TempDir tmp("figs");
  harness::emit_figure_data(harness::FigureKind::kFig1, tmp.path.string());
  harness::emit_figure_data(harness::FigureKind::kFig2, tmp.path.string());

  std::ifstream fig1(tmp.path / "fig1.dat");
  REQUIRE(fig1.good());
  std::string line;
  std::string first_data;
  while (std::getline(fig1, line)) {
    if (line.empty() || line[0] == '#') continue;
    first_data = line;
    break;
  }
  CHECK(first_data == "0 1 1 1");

  std::ifstream fig2(tmp.path / "fig2.dat");
  REQUIRE(fig2.good());
  std::string depth3;
  while (std::getline(fig2, line)) {
    if (line.empty() || line[0] == '#') continue;
    depth3 = line;
    break;
  }
  // Depth 3 with resolve stage 3 gives penalty 1: cpi = 1 + 0.2*0.1*1.
  CHECK(depth3 == "3 1.02 nan nan");
}
