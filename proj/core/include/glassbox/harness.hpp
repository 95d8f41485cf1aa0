#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glassbox/attribution.hpp"
#include "glassbox/config.hpp"
#include "glassbox/gti.hpp"
#include "glassbox/trace_sim.hpp"

namespace glassbox::harness {

struct GtiSettings {
  gti::Transform transform = gti::Transform::kIdentity;
  int folds = 5;
  int n_boot = 400;
  double level = 0.95;
};

struct AttributionSettings {
  double epsilon = 0.05;
  double delta = 0.05;
  std::string method = "mc";  // mc | antithetic (for the certified estimate)
};

struct ExperimentConfig {
  std::uint64_t seed = 42;
  int workload_count = 200;
  long long trace_length = 100000;
  long long warmup = 1000;
  trace_sim::ParameterRanges ranges;
  GtiSettings gti_settings;
  AttributionSettings attribution_settings;
  std::string out_dir;  // empty: compute only, write nothing

  void validate() const;
};

ExperimentConfig config_from(const config::File& file);
// Reads the config file (empty path: all defaults).  The GLASSBOX_OUT
// environment variable, then the --out style override argument, take
// precedence over the file's out_dir.
ExperimentConfig load_experiment_config(const std::string& path);

struct GtiBlock {
  gti::GtiEstimate estimate;
  double level = 0.95;
  std::string transform;
  double asymptotic_se = 0.0;
  std::vector<std::string> feature_names;
  std::vector<std::string> pruned_features;  // dropped before fitting (degenerate columns)
};

struct AttributionBlock {
  double base = 1.0;
  std::vector<std::string> event_names;
  std::vector<double> psi;     // exact Shapley on the CPI game
  std::vector<double> etd;     // exact Shapley on the throughput game
  std::vector<double> etd_mc;  // certified Monte Carlo estimate, throughput game
  std::string mc_method;
  long long permutations = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double width = 0.0;       // marginal interval width used for the budget
  double mc_max_abs_dev = 0.0;  // max_i |etd_mc_i - etd_i|
};

struct BaselineBlock {
  double blackbox_r2 = 0.0;  // CPI regressed on the external knobs (f, P) only
  double gti_internal = 0.0;
  std::vector<double> naive_additive_tp;  // -mean(Z_i)/B^2 per event
  std::vector<double> etd;
  attribution::JensenGapResult jensen;
};

struct FirstOrderBlock {
  double max_deviation = 0.0;
  double scale_estimate = 0.0;
};

struct Report {
  int schema_version = 0;
  std::string version;
  std::string rng_algorithm;
  std::uint64_t seed = 0;
  std::vector<trace_sim::WorkloadSample> workloads;
  GtiBlock gti;
  AttributionBlock attribution;
  BaselineBlock baseline;
  FirstOrderBlock first_order;
};

// The five protocol steps: trace generation, CPI synthesis, GTI estimation,
// attribution, uncertainty.  Deterministic under (config, seed).  When
// out_dir is set, writes report.json and workloads.csv there.
Report run_protocol(const ExperimentConfig& config);

struct AblationReport {
  int schema_version = 0;
  std::uint64_t seed = 0;

  struct ModelRow {
    std::string transform;
    double gti_in_sample = 0.0;
    double gti_cv = 0.0;
  };
  std::vector<ModelRow> misspecification;  // raw internal features, no product column

  struct CounterRow {
    int k = 0;
    int target_rank = 0;
    int computed_rank = 0;
    double noise = 0.0;
    bool identifiable = false;
    double recovery_error = 0.0;  // |theta_hat - theta|
    double noise_bound = 0.0;     // |eps| / sigma_min (true noise norm)
    bool bound_holds = false;     // identifiable rows only
    int augmentation_rows = 0;
  };
  std::vector<CounterRow> identifiability;

  struct JensenRow {
    double base = 0.0;
    double gap = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool within = false;
  };
  std::vector<JensenRow> jensen;
  int jensen_violations = 0;
};

// Misspecification, identifiability stress, and throughput convexity.
// Writes ablations.json when out_dir is set.
AblationReport run_ablations(const ExperimentConfig& config);

struct Table1Report {
  int schema_version = 0;
  std::vector<trace_sim::Table1Row> rows;
  double average_of_predictions = 0.0;  // mean of the per-row predicted CPIs
  double prediction_of_averages = 0.0;  // formula applied to mean(f), mean(m), P
};

// Writes table1.csv when out_dir is set.
Table1Report reproduce_table1(const std::string& out_dir, std::uint64_t seed = 20240101,
                              long long n = 1000000);

enum class FigureKind { kFig1, kFig2 };

// fig1: CPI vs branch fraction for m in {0.05, 0.10, 0.20} at P=3, plus
// simulated points; fig2: CPI vs pipeline depth for resolve stages
// {3, 5, 7} at f=0.2, m=0.1.  Whitespace-separated columns with a comment
// header, written as fig1.dat / fig2.dat.
void emit_figure_data(FigureKind kind, const std::string& out_dir);

void write_report_json(const Report& report, const std::string& path);
void write_ablations_json(const AblationReport& report, const std::string& path);

// Single-analysis reports for the focused CLI subcommands.
void write_gti_json(const GtiBlock& block, std::uint64_t seed, const std::string& path);
void write_shapley_json(const attribution::ShapleyResult& result, const std::string& game,
                        double base, std::uint64_t seed, const std::string& path);

}  // namespace glassbox::harness
