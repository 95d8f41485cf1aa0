#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "glassbox/attribution.hpp"
#include "glassbox/counters.hpp"
#include "glassbox/csv.hpp"
#include "glassbox/gti.hpp"
#include "glassbox/harness.hpp"
#include "glassbox/markov.hpp"
#include "glassbox/rng.hpp"
#include "glassbox/version.hpp"

namespace {

using namespace glassbox;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_config) {
  if (with_config)
    cmd->add_option("config", opts.config_path, "experiment config file")
        ->check(CLI::ExistingFile);
  opts.seed_opt = cmd->add_option("--seed", opts.seed, "master seed override");
  opts.out_opt = cmd->add_option("--out", opts.out_dir, "output directory override");
}

harness::ExperimentConfig resolve_config(const CommonOpts& opts, const std::string& default_out) {
  harness::ExperimentConfig cfg = harness::load_experiment_config(opts.config_path);
  if (opts.seed_opt->count() > 0) cfg.seed = opts.seed;
  if (opts.out_opt->count() > 0) cfg.out_dir = opts.out_dir;
  if (cfg.out_dir.empty()) cfg.out_dir = default_out;
  return cfg;
}

std::string joined(const std::string& dir, const char* file) {
  return (std::filesystem::path(dir.empty() ? "." : dir) / file).string();
}

// --out wins, then the GLASSBOX_OUT environment override, then the fallback.
// An empty result means "do not write files".
std::string resolve_out(const CommonOpts& opts, const char* fallback) {
  if (opts.out_opt->count() > 0) return opts.out_dir;
  if (const char* env = std::getenv("GLASSBOX_OUT"); env != nullptr && *env != '\0') return env;
  return fallback;
}

int run_protocol_cmd(const CommonOpts& opts) {
  const harness::ExperimentConfig cfg = resolve_config(opts, "out");
  const harness::Report report = harness::run_protocol(cfg);
  std::printf("workloads          %zu\n", report.workloads.size());
  std::printf("gti                %.6f  (cv %.6f, %g%% ci [%.6f, %.6f])\n",
              report.gti.estimate.point, report.gti.estimate.cv_point, 100.0 * report.gti.level,
              report.gti.estimate.ci_low, report.gti.estimate.ci_high);
  std::printf("blackbox r2        %.6f\n", report.baseline.blackbox_r2);
  std::printf("jensen gap         %.3e  in [%.3e, %.3e] %s\n", report.baseline.jensen.gap,
              report.baseline.jensen.lower_bound, report.baseline.jensen.upper_bound,
              report.baseline.jensen.within ? "yes" : "no");
  std::printf("mc permutations    %lld  (eps %.3g, delta %.3g)\n",
              static_cast<long long>(report.attribution.permutations),
              report.attribution.epsilon, report.attribution.delta);
  std::printf("report             %s\n", joined(cfg.out_dir, "report.json").c_str());
  return 0;
}

int run_ablate_cmd(const CommonOpts& opts) {
  const harness::ExperimentConfig cfg = resolve_config(opts, "out");
  const harness::AblationReport report = harness::run_ablations(cfg);
  for (const auto& row : report.misspecification)
    std::printf("misspec %-9s gti %.6f  cv %.6f\n", row.transform.c_str(), row.gti_in_sample,
                row.gti_cv);
  int identifiable = 0;
  for (const auto& row : report.identifiability) identifiable += row.identifiable ? 1 : 0;
  std::printf("identifiability    %d/%zu identifiable\n", identifiable,
              report.identifiability.size());
  std::printf("jensen violations  %d/%zu\n", report.jensen_violations, report.jensen.size());
  std::printf("report             %s\n", joined(cfg.out_dir, "ablations.json").c_str());
  return 0;
}

int run_table1_cmd(const CommonOpts& opts, long long n) {
  const std::string out_dir = resolve_out(opts, "out");
  const std::uint64_t seed = opts.seed_opt->count() > 0 ? opts.seed : 20240101ull;
  const harness::Table1Report report = harness::reproduce_table1(out_dir, seed, n);
  std::printf("%-12s %-7s %-7s %-3s %-10s %-10s %s\n", "name", "f", "m", "P", "predicted",
              "simulated", "err%");
  for (const auto& row : report.rows)
    std::printf("%-12s %-7.3f %-7.3f %-3.0f %-10.6f %-10.6f %.3f\n", row.name.c_str(), row.f,
                row.m, row.P, row.predicted_cpi, row.simulated_cpi, row.error_pct);
  std::printf("average of row predictions   %.6f\n", report.average_of_predictions);
  std::printf("formula at averaged inputs   %.6f\n", report.prediction_of_averages);
  std::printf("table              %s\n", joined(out_dir, "table1.csv").c_str());
  return 0;
}

int run_figures_cmd(const CommonOpts& opts) {
  const std::string out_dir = resolve_out(opts, "out");
  harness::emit_figure_data(harness::FigureKind::kFig1, out_dir);
  harness::emit_figure_data(harness::FigureKind::kFig2, out_dir);
  std::printf("wrote %s and %s\n", joined(out_dir, "fig1.dat").c_str(),
              joined(out_dir, "fig2.dat").c_str());
  return 0;
}

int run_gti_cmd(const CommonOpts& opts, const std::string& dataset_path, const std::string& target,
                const std::string& transform, int folds, int n_boot, double level) {
  const gti::Dataset raw = gti::load_dataset_csv(dataset_path, target);
  const gti::Transform t = gti::transform_from_string(transform);
  const std::uint64_t seed = opts.seed_opt->count() > 0 ? opts.seed : 42ull;

  // Expand up front and drop exactly dependent columns instead of letting the
  // strict fitter reject the design: the span (and so the estimate) is
  // unchanged, and external CSVs routinely carry deterministic relations that
  // only surface after expansion.
  const Eigen::MatrixXd expanded = gti::expand_features(raw.features, t);
  const std::vector<std::string> names = gti::expanded_names(raw.column_names, t);
  std::vector<char> drop(names.size(), 0);
  std::vector<std::string> pruned;
  for (int j : gti::dependent_feature_columns(expanded)) {
    drop[j] = 1;
    pruned.push_back(names[j]);
  }
  gti::Dataset data;
  data.targets = raw.targets;
  Eigen::Index kept = 0;
  for (char d : drop) kept += d ? 0 : 1;
  data.features.resize(expanded.rows(), kept);
  Eigen::Index c = 0;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (drop[j]) continue;
    data.features.col(c++) = expanded.col(static_cast<Eigen::Index>(j));
    data.column_names.push_back(names[j]);
  }

  harness::GtiBlock block;
  block.level = level;
  block.transform = gti::to_string(t);
  block.feature_names = data.column_names;
  block.pruned_features = pruned;
  block.estimate =
      gti::estimate(data, gti::Transform::kIdentity, folds, n_boot, level, seed);
  block.asymptotic_se = gti::gti_asymptotic_se(data, gti::fit_ols(data));
  for (const std::string& name : pruned)
    std::printf("pruned             %s (linearly dependent)\n", name.c_str());

  std::printf("n                  %lld\n", static_cast<long long>(data.targets.size()));
  std::printf("gti                %.6f\n", block.estimate.point);
  std::printf("gti cv             %.6f\n", block.estimate.cv_point);
  std::printf("%g%% ci             [%.6f, %.6f]\n", 100.0 * level, block.estimate.ci_low,
              block.estimate.ci_high);
  std::printf("asymptotic se      %.6f\n", block.asymptotic_se);
  if (const std::string out_dir = resolve_out(opts, ""); !out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::string path = joined(out_dir, "gti.json");
    harness::write_gti_json(block, seed, path);
    std::printf("report             %s\n", path.c_str());
  }
  return 0;
}

int run_shapley_cmd(const CommonOpts& opts, const std::string& penalty_path, double base,
                    const std::string& game_name, const std::string& method, double epsilon,
                    double delta, long long permutations) {
  const attribution::PenaltyModel model = attribution::load_penalty_csv(penalty_path, base);
  const attribution::CoalitionGame game =
      game_name == "cpi" ? attribution::game_cpi(model) : attribution::game_throughput(model);
  const std::uint64_t seed = opts.seed_opt->count() > 0 ? opts.seed : 42ull;

  attribution::ShapleyResult result;
  if (method == "exact") {
    result = attribution::shapley_exact(game);
  } else {
    long long budget = permutations;
    bool certified = false;
    if (budget <= 0) {
      double width = 0.0;
      if (game_name == "cpi") {
        for (Eigen::Index j = 0; j < model.samples.cols(); ++j)
          width = std::max(width, model.samples.col(j).mean());
      } else {
        double max_sum = 0.0;
        for (Eigen::Index i = 0; i < model.samples.rows(); ++i)
          max_sum = std::max(max_sum, model.samples.row(i).sum());
        width = 1.0 / base - 1.0 / (base + max_sum);
      }
      budget = attribution::mc_budget(width, epsilon, delta);
      certified = true;
    }
    result = method == "antithetic" ? attribution::shapley_antithetic(game, (budget + 1) / 2, seed)
                                    : attribution::shapley_mc(game, budget, seed);
    if (certified) {
      result.epsilon = epsilon;
      result.delta = delta;
    }
  }

  for (Eigen::Index j = 0; j < model.samples.cols(); ++j)
    std::printf("phi[%lld]  %.8f\n", static_cast<long long>(j), result.values[j]);
  if (result.permutations_used > 0)
    std::printf("permutations  %lld\n", static_cast<long long>(result.permutations_used));
  if (const std::string out_dir = resolve_out(opts, ""); !out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::string path = joined(out_dir, "shapley.json");
    harness::write_shapley_json(result, game_name, base, seed, path);
    std::printf("report        %s\n", path.c_str());
  }
  return 0;
}

int run_markov_cmd(const CommonOpts& opts, double alpha, double beta,
                   const std::string& automaton_path) {
  const markov::MarkovBranchProcess proc{alpha, beta};
  const markov::PredictorAutomaton pred =
      automaton_path.empty() ? markov::two_bit_automaton() : markov::load_automaton(automaton_path);
  const bool two_bit = automaton_path.empty();

  const double general =
      markov::mispred_rate_general(proc, pred, markov::TimingConvention::kPredictCurrent);
  const double general_next =
      markov::mispred_rate_general(proc, pred, markov::TimingConvention::kPredictNext);

  std::printf("stationary taken   %.8f\n", proc.stationary_taken());
  std::printf("general (current)  %.8f\n", general);
  std::printf("general (next)     %.8f\n", general_next);
  if (two_bit) {
    const double closed = markov::mispred_rate_closed_form(alpha, beta);
    std::printf("closed form        %.8f\n", closed);
    std::printf("|closed - general| %.3e\n", std::abs(closed - general));
  }
  if (const std::string out_dir = resolve_out(opts, ""); !out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::string path = joined(out_dir, "markov.json");
    FILE* f = std::fopen(path.c_str(), "w");
    if (f == nullptr) throw std::runtime_error("cannot open for writing: " + path);
    std::fprintf(f, "{\n  \"schema_version\": %d,\n  \"alpha\": %s,\n  \"beta\": %s,\n",
                 kSchemaVersion, csv::format_real(alpha).c_str(), csv::format_real(beta).c_str());
    if (two_bit)
      std::fprintf(f, "  \"closed_form\": %s,\n",
                   csv::format_real(markov::mispred_rate_closed_form(alpha, beta)).c_str());
    std::fprintf(f, "  \"general_current\": %s,\n  \"general_next\": %s\n}\n",
                 csv::format_real(general).c_str(), csv::format_real(general_next).c_str());
    std::fclose(f);
    std::printf("report             %s\n", path.c_str());
  }
  return 0;
}

int run_counters_cmd(const CommonOpts& opts, const std::string& matrix_path,
                     const std::string& observed_path, double noise_scale, double delta) {
  counters::CounterSystem system;
  system.aggregation = counters::load_matrix_csv(matrix_path);
  system.observed = counters::load_vector_csv(observed_path);
  system.noise_scale = noise_scale;

  const counters::IdentifiabilityResult id = counters::identifiability(system.aggregation);
  const counters::RecoveryResult rec = counters::recover(system);
  const Eigen::MatrixXd aug = counters::minimal_augmentation(system.aggregation);

  std::printf("rank               %d (nullspace %d), identifiable: %s\n", id.rank,
              id.nullspace_dim, id.identifiable ? "yes" : "no");
  for (Eigen::Index j = 0; j < rec.theta_hat.size(); ++j)
    std::printf("theta[%lld]  %.8f\n", static_cast<long long>(j), rec.theta_hat(j));
  std::printf("residual           %.3e\n", rec.residual_norm);
  std::printf("sigma_min          %.6f\n", rec.sigma_min);
  std::printf("error bound        %.6e\n", rec.error_bound);
  if (noise_scale > 0.0 && id.identifiable)
    std::printf("subgaussian bound  %.6e (delta %.3g)\n",
                counters::subgaussian_bound(noise_scale, rec.sigma_min, delta), delta);
  if (aug.rows() > 0) {
    std::printf("augmentation rows  %lld\n", static_cast<long long>(aug.rows()));
    for (Eigen::Index i = 0; i < aug.rows(); ++i) {
      std::printf(" ");
      for (Eigen::Index j = 0; j < aug.cols(); ++j) std::printf(" %10.6f", aug(i, j));
      std::printf("\n");
    }
  }
  if (const std::string out_dir = resolve_out(opts, ""); !out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::string path = joined(out_dir, "counters.csv");
    std::vector<std::vector<std::string>> rows;
    for (Eigen::Index j = 0; j < rec.theta_hat.size(); ++j)
      rows.push_back({std::to_string(j), csv::format_real(rec.theta_hat(j))});
    csv::write_table(path, {"component", "estimate"}, rows,
                     "schema_version=" + std::to_string(kSchemaVersion));
    std::printf("estimates          %s\n", path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"glass-box performance model toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonOpts protocol_opts;
  CLI::App* protocol = app.add_subcommand("protocol", "run the full analysis protocol");
  add_common(protocol, protocol_opts, true);

  CommonOpts ablate_opts;
  CLI::App* ablate = app.add_subcommand("ablate", "run the ablation sweeps");
  add_common(ablate, ablate_opts, true);

  CommonOpts table1_opts;
  long long table1_n = 1000000;
  CLI::App* table1 = app.add_subcommand("table1", "reproduce the benchmark CPI table");
  add_common(table1, table1_opts, false);
  table1->add_option("-n,--instructions", table1_n, "simulated instructions per row")
      ->check(CLI::PositiveNumber);

  CommonOpts figures_opts;
  CLI::App* figures = app.add_subcommand("figures", "emit plot data files");
  add_common(figures, figures_opts, false);

  CommonOpts gti_opts;
  std::string gti_dataset, gti_target = "cpi", gti_transform = "identity";
  int gti_folds = 5, gti_boot = 400;
  double gti_level = 0.95;
  CLI::App* gti_cmd = app.add_subcommand("gti", "estimate transparency on a dataset CSV");
  gti_cmd->add_option("dataset", gti_dataset, "CSV with a header row")
      ->required()
      ->check(CLI::ExistingFile);
  gti_cmd->add_option("--target", gti_target, "target column name");
  gti_cmd->add_option("--transform", gti_transform, "identity | poly2 | poly3");
  gti_cmd->add_option("--folds", gti_folds)->check(CLI::Range(2, 1000000));
  gti_cmd->add_option("--boot", gti_boot)->check(CLI::Range(100, 1000000));
  gti_cmd->add_option("--level", gti_level)->check(CLI::Range(1e-6, 1.0 - 1e-6));
  add_common(gti_cmd, gti_opts, false);

  CommonOpts shapley_opts;
  std::string shapley_penalties, shapley_game = "cpi", shapley_method = "exact";
  double shapley_base = 1.0, shapley_eps = 0.05, shapley_delta = 0.05;
  long long shapley_perms = 0;
  CLI::App* shapley = app.add_subcommand("shapley", "attribute cost over events in a penalty CSV");
  shapley->add_option("penalties", shapley_penalties, "CSV, one column per event")
      ->required()
      ->check(CLI::ExistingFile);
  shapley->add_option("--base", shapley_base)->check(CLI::PositiveNumber);
  shapley->add_option("--game", shapley_game)->check(CLI::IsMember({"cpi", "throughput"}));
  shapley->add_option("--method", shapley_method)
      ->check(CLI::IsMember({"exact", "mc", "antithetic"}));
  shapley->add_option("--epsilon", shapley_eps)->check(CLI::PositiveNumber);
  shapley->add_option("--delta", shapley_delta)->check(CLI::Range(1e-9, 1.0 - 1e-9));
  shapley->add_option("--permutations", shapley_perms,
                      "explicit MC budget (otherwise derived from epsilon/delta)");
  add_common(shapley, shapley_opts, false);

  CommonOpts markov_opts;
  double markov_alpha = 0.2, markov_beta = 0.3;
  std::string markov_automaton;
  CLI::App* markov_cmd =
      app.add_subcommand("markov", "closed form vs general mispredict-rate solver");
  markov_cmd->add_option("--alpha", markov_alpha, "P(taken | last not taken)")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  markov_cmd->add_option("--beta", markov_beta, "P(not taken | last taken)")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  markov_cmd->add_option("--automaton", markov_automaton, "predictor automaton file")
      ->check(CLI::ExistingFile);
  add_common(markov_cmd, markov_opts, false);

  CommonOpts counters_opts;
  std::string counters_matrix, counters_observed;
  double counters_noise = 0.0, counters_delta = 0.05;
  CLI::App* counters_cmd =
      app.add_subcommand("counters", "recover event components from aggregated counters");
  counters_cmd->add_option("matrix", counters_matrix, "aggregation matrix CSV")
      ->required()
      ->check(CLI::ExistingFile);
  counters_cmd->add_option("observed", counters_observed, "observed counter vector CSV")
      ->required()
      ->check(CLI::ExistingFile);
  counters_cmd->add_option("--noise-scale", counters_noise)->check(CLI::NonNegativeNumber);
  counters_cmd->add_option("--delta", counters_delta)->check(CLI::Range(1e-9, 1.0 - 1e-9));
  add_common(counters_cmd, counters_opts, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(protocol)) return run_protocol_cmd(protocol_opts);
    if (app.got_subcommand(ablate)) return run_ablate_cmd(ablate_opts);
    if (app.got_subcommand(table1)) return run_table1_cmd(table1_opts, table1_n);
    if (app.got_subcommand(figures)) return run_figures_cmd(figures_opts);
    if (app.got_subcommand(gti_cmd))
      return run_gti_cmd(gti_opts, gti_dataset, gti_target, gti_transform, gti_folds, gti_boot,
                         gti_level);
    if (app.got_subcommand(shapley))
      return run_shapley_cmd(shapley_opts, shapley_penalties, shapley_base, shapley_game,
                             shapley_method, shapley_eps, shapley_delta, shapley_perms);
    if (app.got_subcommand(markov_cmd))
      return run_markov_cmd(markov_opts, markov_alpha, markov_beta, markov_automaton);
    if (app.got_subcommand(counters_cmd))
      return run_counters_cmd(counters_opts, counters_matrix, counters_observed, counters_noise,
                              counters_delta);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
