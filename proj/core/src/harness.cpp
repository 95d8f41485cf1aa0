#include "glassbox/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "json.hpp"

#include "glassbox/core_model.hpp"
#include "glassbox/counters.hpp"
#include "glassbox/csv.hpp"
#include "glassbox/rng.hpp"
#include "glassbox/version.hpp"

namespace glassbox::harness {

namespace {

using nlohmann::json;

// Stream indices for the harness's own draws.  Workload i consumes stream i
// of the master seed, so anything at or above 2^32 is collision-free.
constexpr std::uint64_t kGtiStream = 0x100000000ull;
constexpr std::uint64_t kAttributionStream = 0x100000001ull;
constexpr std::uint64_t kAblationCvStream = 0x100000002ull;
constexpr std::uint64_t kStressStream = 0x100000003ull;
constexpr std::uint64_t kJensenStream = 0x100000004ull;

template <typename F>
auto step(const char* name, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("step '") + name + "' failed: " + e.what());
  }
}

std::filesystem::path out_path(const std::string& out_dir, const char* file) {
  return std::filesystem::path(out_dir.empty() ? "." : out_dir) / file;
}

void ensure_out_dir(const std::string& out_dir) {
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
}

struct FeatureTable {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> names;
};

FeatureTable feature_table(const std::vector<trace_sim::WorkloadSample>& workloads,
                           const trace_sim::ParameterRanges& ranges) {
  FeatureTable t;
  t.names = trace_sim::feature_names(ranges);
  const int n = static_cast<int>(workloads.size());
  const int k = static_cast<int>(t.names.size());
  t.X.resize(n, k);
  t.y.resize(n);
  for (int i = 0; i < n; ++i) {
    t.y(i) = workloads[i].cpi;
    for (int j = 0; j < k; ++j) t.X(i, j) = workloads[i].features[j];
  }
  return t;
}

// Keeps the columns in `keep`, drops those fit_ols would reject, and records
// the dropped names.  Collapsed parameter ranges produce constant columns;
// pruning them keeps the strict fitter usable on any config.
gti::Dataset pruned_dataset(const FeatureTable& t, const std::vector<int>& keep,
                            std::vector<std::string>* kept_names,
                            std::vector<std::string>* pruned_names) {
  Eigen::MatrixXd sub(t.X.rows(), static_cast<Eigen::Index>(keep.size()));
  for (Eigen::Index c = 0; c < sub.cols(); ++c) sub.col(c) = t.X.col(keep[c]);

  std::vector<char> drop(keep.size(), 0);
  for (int j : gti::dependent_feature_columns(sub)) {
    drop[j] = 1;
    if (pruned_names) pruned_names->push_back(t.names[keep[j]]);
  }

  gti::Dataset data;
  data.targets = t.y;
  Eigen::Index kept = 0;
  for (char d : drop) kept += d ? 0 : 1;
  data.features.resize(t.X.rows(), kept);
  Eigen::Index c = 0;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (drop[j]) continue;
    data.features.col(c++) = sub.col(static_cast<Eigen::Index>(j));
    data.column_names.push_back(t.names[keep[j]]);
  }
  if (kept_names) *kept_names = data.column_names;
  return data;
}

std::vector<int> all_indices(int k) {
  std::vector<int> idx(k);
  for (int j = 0; j < k; ++j) idx[j] = j;
  return idx;
}

attribution::PenaltyModel event_model(const std::vector<trace_sim::WorkloadSample>& workloads,
                                      int amat_terms, std::vector<std::string>* names) {
  attribution::PenaltyModel model;
  model.base = 1.0;
  const int n = static_cast<int>(workloads.size());
  model.samples.resize(n, 1 + amat_terms);
  for (int i = 0; i < n; ++i) {
    const auto& w = workloads[i];
    model.samples(i, 0) = w.branch_fraction * w.penalty * w.empirical_mispred_rate;
    for (int j = 0; j < amat_terms; ++j) model.samples(i, 1 + j) = w.amat_terms[j];
  }
  if (names) {
    names->clear();
    names->push_back("branch_cost");
    for (int j = 1; j <= amat_terms; ++j) names->push_back("amat_" + std::to_string(j));
  }
  return model;
}

const char* method_name(attribution::ShapleyResult::Method m) {
  switch (m) {
    case attribution::ShapleyResult::Method::kExact: return "exact";
    case attribution::ShapleyResult::Method::kMc: return "mc";
    case attribution::ShapleyResult::Method::kAntithetic: return "antithetic";
  }
  return "unknown";
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

json provenance_json(std::uint64_t seed) {
  return json{{"seed", seed}, {"rng", Rng::kAlgorithm}, {"version", kVersion}};
}

json gti_json(const GtiBlock& block) {
  return json{{"module", "gti"},
              {"operation", "estimate"},
              {"point", block.estimate.point},
              {"cv_point", block.estimate.cv_point},
              {"ci_low", block.estimate.ci_low},
              {"ci_high", block.estimate.ci_high},
              {"level", block.level},
              {"n_boot", block.estimate.n_boot},
              {"folds", block.estimate.folds},
              {"transform", block.transform},
              {"asymptotic_se", block.asymptotic_se},
              {"features", block.feature_names},
              {"pruned_features", block.pruned_features}};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (workload_count < 2) throw std::invalid_argument("ExperimentConfig: workload_count must be >= 2");
  if (trace_length < 1) throw std::invalid_argument("ExperimentConfig: trace_length must be >= 1");
  if (warmup < 0) throw std::invalid_argument("ExperimentConfig: warmup must be >= 0");
  ranges.validate();
  if (gti_settings.folds < 2) throw std::invalid_argument("ExperimentConfig: gti folds must be >= 2");
  if (gti_settings.folds > workload_count)
    throw std::invalid_argument("ExperimentConfig: gti folds must not exceed workload_count");
  if (gti_settings.n_boot < 100) throw std::invalid_argument("ExperimentConfig: gti n_boot must be >= 100");
  if (!(gti_settings.level > 0.0 && gti_settings.level < 1.0))
    throw std::invalid_argument("ExperimentConfig: gti level must lie in (0,1)");
  if (!(attribution_settings.epsilon > 0.0))
    throw std::invalid_argument("ExperimentConfig: attribution epsilon must be > 0");
  if (!(attribution_settings.delta > 0.0 && attribution_settings.delta < 1.0))
    throw std::invalid_argument("ExperimentConfig: attribution delta must lie in (0,1)");
  if (attribution_settings.method != "mc" && attribution_settings.method != "antithetic")
    throw std::invalid_argument("ExperimentConfig: attribution method must be 'mc' or 'antithetic'");
}

ExperimentConfig config_from(const config::File& file) {
  ExperimentConfig c;
  c.seed = static_cast<std::uint64_t>(file.get_int("seed", static_cast<long long>(c.seed)));
  c.workload_count = static_cast<int>(file.get_int("workload_count", c.workload_count));
  c.trace_length = file.get_int("trace_length", c.trace_length);
  c.warmup = file.get_int("warmup", c.warmup);
  c.out_dir = file.get_string("out_dir", c.out_dir);

  auto& r = c.ranges;
  r.f_min = file.get_real("ranges.f_min", r.f_min);
  r.f_max = file.get_real("ranges.f_max", r.f_max);
  r.penalties = file.get_reals("ranges.penalties", r.penalties);
  r.alpha_min = file.get_real("ranges.alpha_min", r.alpha_min);
  r.alpha_max = file.get_real("ranges.alpha_max", r.alpha_max);
  r.beta_min = file.get_real("ranges.beta_min", r.beta_min);
  r.beta_max = file.get_real("ranges.beta_max", r.beta_max);
  r.amat_terms_min = static_cast<int>(file.get_int("ranges.amat_terms_min", r.amat_terms_min));
  r.amat_terms_max = static_cast<int>(file.get_int("ranges.amat_terms_max", r.amat_terms_max));
  r.amat_min = file.get_real("ranges.amat_min", r.amat_min);
  r.amat_max = file.get_real("ranges.amat_max", r.amat_max);

  auto& g = c.gti_settings;
  g.transform = gti::transform_from_string(file.get_string("gti.transform", gti::to_string(g.transform)));
  g.folds = static_cast<int>(file.get_int("gti.folds", g.folds));
  g.n_boot = static_cast<int>(file.get_int("gti.n_boot", g.n_boot));
  g.level = file.get_real("gti.level", g.level);

  auto& a = c.attribution_settings;
  a.epsilon = file.get_real("attribution.epsilon", a.epsilon);
  a.delta = file.get_real("attribution.delta", a.delta);
  a.method = file.get_string("attribution.method", a.method);
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  ExperimentConfig c = path.empty() ? ExperimentConfig{} : config_from(config::File::load(path));
  if (const char* env = std::getenv("GLASSBOX_OUT"); env != nullptr && *env != '\0') c.out_dir = env;
  return c;
}

Report run_protocol(const ExperimentConfig& config) {
  config.validate();

  Report report;
  report.schema_version = kSchemaVersion;
  report.version = kVersion;
  report.rng_algorithm = Rng::kAlgorithm;
  report.seed = config.seed;

  report.workloads = step("trace generation / CPI synthesis", [&] {
    return trace_sim::sample_workloads(config.workload_count, config.seed, config.ranges,
                                       config.trace_length, config.warmup);
  });
  const FeatureTable table = feature_table(report.workloads, config.ranges);
  const int k = static_cast<int>(table.names.size());

  const std::uint64_t gti_seed = Rng(config.seed).stream(kGtiStream).next_u64();
  report.gti = step("GTI estimation", [&] {
    GtiBlock block;
    block.level = config.gti_settings.level;
    block.transform = gti::to_string(config.gti_settings.transform);
    gti::Dataset data =
        pruned_dataset(table, all_indices(k), &block.feature_names, &block.pruned_features);
    if (data.features.cols() == 0) return block;  // nothing left: intercept-only, GTI 0
    block.estimate = gti::estimate(data, config.gti_settings.transform, config.gti_settings.folds,
                                   config.gti_settings.n_boot, config.gti_settings.level, gti_seed);
    block.asymptotic_se =
        gti::gti_asymptotic_se(data, gti::fit_ols(data, config.gti_settings.transform));
    return block;
  });

  std::vector<std::string> event_names;
  const attribution::PenaltyModel model =
      event_model(report.workloads, config.ranges.amat_terms_max, &event_names);

  const std::uint64_t mc_seed = Rng(config.seed).stream(kAttributionStream).next_u64();
  report.attribution = step("attribution", [&] {
    AttributionBlock block;
    block.base = model.base;
    block.event_names = event_names;
    block.psi = attribution::shapley_exact(attribution::game_cpi(model)).values;

    const attribution::CoalitionGame tp_game = attribution::game_throughput(model);
    block.etd = attribution::shapley_exact(tp_game).values;

    double max_sum = 0.0;
    for (Eigen::Index i = 0; i < model.samples.rows(); ++i)
      max_sum = std::max(max_sum, model.samples.row(i).sum());
    block.width = 1.0 / model.base - 1.0 / (model.base + max_sum);
    block.epsilon = config.attribution_settings.epsilon;
    block.delta = config.attribution_settings.delta;
    if (block.width > 0.0) {
      const long long budget =
          attribution::mc_budget(block.width, block.epsilon, block.delta);
      attribution::ShapleyResult mc;
      if (config.attribution_settings.method == "antithetic")
        mc = attribution::shapley_antithetic(tp_game, (budget + 1) / 2, mc_seed);
      else
        mc = attribution::shapley_mc(tp_game, budget, mc_seed);
      block.mc_method = config.attribution_settings.method;
      block.etd_mc = mc.values;
      block.permutations = mc.permutations_used;
      for (std::size_t i = 0; i < block.etd.size(); ++i)
        block.mc_max_abs_dev = std::max(block.mc_max_abs_dev, std::abs(block.etd_mc[i] - block.etd[i]));
    } else {
      // All penalties identically zero: the game is constant and the exact
      // values are already final.
      block.mc_method = "exact";
      block.etd_mc = block.etd;
    }
    return block;
  });

  report.baseline = step("baselines", [&] {
    BaselineBlock block;
    block.gti_internal = report.gti.estimate.point;
    block.etd = report.attribution.etd;

    std::vector<int> whitelist;
    for (int j = 0; j < k; ++j)
      if (table.names[j] == "f" || table.names[j] == "P") whitelist.push_back(j);
    gti::Dataset external = pruned_dataset(table, whitelist, nullptr, nullptr);
    block.blackbox_r2 =
        external.features.cols() == 0
            ? 0.0
            : gti::gti_in_sample(external, gti::fit_ols(external, gti::Transform::kIdentity));

    for (Eigen::Index j = 0; j < model.samples.cols(); ++j)
      block.naive_additive_tp.push_back(-model.samples.col(j).mean() /
                                        (model.base * model.base));
    block.jensen = attribution::jensen_gap_check(model);
    return block;
  });

  report.first_order = step("first-order comparison", [&] {
    const attribution::FirstOrderResult r = attribution::first_order_check(model);
    return FirstOrderBlock{r.max_deviation, r.scale_estimate};
  });

  if (!config.out_dir.empty()) {
    ensure_out_dir(config.out_dir);
    trace_sim::write_workloads_csv(report.workloads, config.ranges,
                                   out_path(config.out_dir, "workloads.csv").string());
    write_report_json(report, out_path(config.out_dir, "report.json").string());
  }
  return report;
}

AblationReport run_ablations(const ExperimentConfig& config) {
  config.validate();

  AblationReport report;
  report.schema_version = kSchemaVersion;
  report.seed = config.seed;

  const auto workloads = step("trace generation / CPI synthesis", [&] {
    return trace_sim::sample_workloads(config.workload_count, config.seed, config.ranges,
                                       config.trace_length, config.warmup);
  });
  const FeatureTable table = feature_table(workloads, config.ranges);

  step("misspecification sweep", [&] {
    // Raw observables only: the assembled branch-cost column is withheld, so
    // the linear fit is misspecified and the polynomial fits recover part of
    // the product term.  Degree 3 would duplicate the penalty column's cube
    // (3-point support), so the sweep stops at degree 2.
    std::vector<int> raw;
    for (int j = 0; j < static_cast<int>(table.names.size()); ++j)
      if (table.names[j] != "branch_cost") raw.push_back(j);
    gti::Dataset data = pruned_dataset(table, raw, nullptr, nullptr);
    if (data.features.cols() == 0)
      throw std::runtime_error("all raw feature columns degenerate");

    const std::uint64_t cv_seed = Rng(config.seed).stream(kAblationCvStream).next_u64();
    for (gti::Transform t : {gti::Transform::kIdentity, gti::Transform::kPoly2}) {
      AblationReport::ModelRow row;
      row.transform = gti::to_string(t);
      row.gti_in_sample = gti::gti_in_sample(data, gti::fit_ols(data, t));
      row.gti_cv = gti::gti_cv(data, t, config.gti_settings.folds, cv_seed);
      report.misspecification.push_back(row);
    }
    return 0;
  });

  step("identifiability stress", [&] {
    Rng rng = Rng(config.seed).stream(kStressStream);
    const int k = 4;
    const int d = 6;
    for (int target_rank : {4, 3, 2, 1}) {
      for (double noise : {0.0, 0.01, 0.1}) {
        Eigen::MatrixXd left(d, target_rank);
        Eigen::MatrixXd right(target_rank, k);
        for (Eigen::Index i = 0; i < left.rows(); ++i)
          for (Eigen::Index j = 0; j < left.cols(); ++j) left(i, j) = rng.normal();
        for (Eigen::Index i = 0; i < right.rows(); ++i)
          for (Eigen::Index j = 0; j < right.cols(); ++j) right(i, j) = rng.normal();
        const Eigen::MatrixXd A = left * right;

        Eigen::VectorXd theta(k);
        for (int j = 0; j < k; ++j) theta(j) = rng.uniform(0.5, 1.5);
        Eigen::VectorXd eps = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) eps(i) = noise * rng.normal();

        counters::CounterSystem system{A, A * theta + eps, noise};
        const counters::IdentifiabilityResult id = counters::identifiability(A);
        const counters::RecoveryResult rec = counters::recover(system);

        AblationReport::CounterRow row;
        row.k = k;
        row.target_rank = target_rank;
        row.computed_rank = id.rank;
        row.noise = noise;
        row.identifiable = rec.identifiable;
        row.recovery_error = (rec.theta_hat - theta).norm();
        row.noise_bound = rec.identifiable ? eps.norm() / rec.sigma_min
                                           : std::numeric_limits<double>::infinity();
        row.bound_holds =
            rec.identifiable && row.recovery_error <= row.noise_bound + 1e-9 * (1.0 + theta.norm());
        row.augmentation_rows = static_cast<int>(counters::minimal_augmentation(A).rows());
        report.identifiability.push_back(row);
      }
    }
    return 0;
  });

  step("throughput convexity", [&] {
    // Penalty families with an always-on floor of at least 0.3 B.  The floor
    // keeps the curvature of 1/(B+z) bounded over the support, which is what
    // the two-sided gap bound needs; see jensen_gap_check.
    Rng master = Rng(config.seed).stream(kJensenStream);
    const int model_count = 100;
    const int sample_count = 256;
    for (int t = 0; t < model_count; ++t) {
      Rng rng = master.stream(static_cast<std::uint64_t>(t));
      const int events = 2 + static_cast<int>(rng.bounded(3));
      const double base = rng.uniform(0.8, 1.6);
      const double floor = rng.uniform(0.3, 0.8) * base;

      Eigen::MatrixXd samples(sample_count, events);
      samples.col(0).setConstant(floor);
      for (int j = 1; j < events; ++j) {
        if (rng.bernoulli(0.5)) {
          const double hi = rng.uniform(0.2, 1.0);
          for (int i = 0; i < sample_count; ++i) samples(i, j) = rng.uniform(0.0, hi);
        } else {
          const double p = rng.uniform(0.2, 0.9);
          const double c = rng.uniform(0.2, 1.0);
          for (int i = 0; i < sample_count; ++i) samples(i, j) = rng.bernoulli(p) ? c : 0.0;
        }
      }

      const attribution::JensenGapResult res =
          attribution::jensen_gap_check(attribution::PenaltyModel{base, samples});
      report.jensen.push_back({base, res.gap, res.lower_bound, res.upper_bound, res.within});
      if (!res.within) ++report.jensen_violations;
    }
    return 0;
  });

  if (!config.out_dir.empty()) {
    ensure_out_dir(config.out_dir);
    write_ablations_json(report, out_path(config.out_dir, "ablations.json").string());
  }
  return report;
}

Table1Report reproduce_table1(const std::string& out_dir, std::uint64_t seed, long long n) {
  Table1Report report;
  report.schema_version = kSchemaVersion;
  report.rows = trace_sim::table1_reproduction(seed, n);

  double mean_f = 0.0, mean_m = 0.0, mean_p = 0.0, mean_pred = 0.0, mean_sim = 0.0;
  for (const auto& row : report.rows) {
    mean_f += row.f;
    mean_m += row.m;
    mean_p += row.P;
    mean_pred += row.predicted_cpi;
    mean_sim += row.simulated_cpi;
  }
  const double count = static_cast<double>(report.rows.size());
  mean_f /= count;
  mean_m /= count;
  mean_p /= count;
  mean_pred /= count;
  mean_sim /= count;
  report.average_of_predictions = mean_pred;
  report.prediction_of_averages = core_model::cpi_branch(mean_f, mean_m, mean_p);

  if (!out_dir.empty()) {
    ensure_out_dir(out_dir);
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : report.rows)
      rows.push_back({row.name, csv::format_real(row.f), csv::format_real(row.m),
                      csv::format_real(row.P), csv::format_real(row.predicted_cpi),
                      csv::format_real(row.simulated_cpi), csv::format_real(row.error_pct)});
    rows.push_back({"average", csv::format_real(mean_f), csv::format_real(mean_m),
                    csv::format_real(mean_p), csv::format_real(mean_pred),
                    csv::format_real(mean_sim),
                    csv::format_real(std::abs(mean_pred - mean_sim) / mean_sim * 100.0)});
    csv::write_table(out_path(out_dir, "table1.csv").string(),
                     {"name", "f", "m", "P", "predicted_cpi", "simulated_cpi", "error_pct"}, rows,
                     "schema_version=" + std::to_string(kSchemaVersion) +
                         " average_of_predictions=" + csv::format_real(mean_pred) +
                         " prediction_of_averages=" +
                         csv::format_real(report.prediction_of_averages));
  }
  return report;
}

void emit_figure_data(FigureKind kind, const std::string& out_dir) {
  ensure_out_dir(out_dir);
  if (kind == FigureKind::kFig1) {
    const std::string path = out_path(out_dir, "fig1.dat").string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    const double penalty = 3.0;
    const std::vector<double> rates = {0.05, 0.10, 0.20};
    out << "# schema_version=" << kSchemaVersion << "\n";
    out << "# cpi vs branch fraction, P=" << csv::format_real(penalty) << "\n";
    out << "# f";
    for (double m : rates) out << " cpi_m" << csv::format_real(m);
    out << "\n";
    for (int i = 0; i <= 50; ++i) {
      const double f = i / 100.0;
      out << csv::format_real(f);
      for (double m : rates) out << " " << csv::format_real(core_model::cpi_branch(f, m, penalty));
      out << "\n";
    }

    // Second block: simulated points with i.i.d. mispredict injection.
    out << "\n\n";
    out << "# simulated points, n=1000000 per point\n";
    out << "# f";
    for (double m : rates) out << " sim_m" << csv::format_real(m);
    out << "\n";
    const long long n = 1000000;
    Rng master(20240101);
    std::uint64_t which = 0;
    for (double f : {0.1, 0.2, 0.3, 0.4}) {
      out << csv::format_real(f);
      for (double m : rates) {
        Rng rng = master.stream(which++);
        long long hits = 0;
        for (long long i = 0; i < n; ++i) hits += rng.bernoulli(m) ? 1 : 0;
        const double m_emp = static_cast<double>(hits) / static_cast<double>(n);
        out << " " << csv::format_real(1.0 + f * penalty * m_emp);
      }
      out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
    return;
  }

  const std::string path = out_path(out_dir, "fig2.dat").string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const double f = 0.2;
  const double m = 0.1;
  const std::vector<int> resolve_stages = {3, 5, 7};
  out << "# schema_version=" << kSchemaVersion << "\n";
  out << "# cpi vs pipeline depth, f=" << csv::format_real(f) << ", m=" << csv::format_real(m)
      << ", P = depth - resolve + 1\n";
  out << "# depth";
  for (int s : resolve_stages) out << " cpi_k" << s;
  out << "\n";
  for (int depth = 3; depth <= 20; ++depth) {
    out << depth;
    for (int s : resolve_stages) {
      if (depth < s) {
        out << " nan";
        continue;
      }
      const int penalty = core_model::mispredict_penalty({depth, s});
      out << " " << csv::format_real(core_model::cpi_branch(f, m, static_cast<double>(penalty)));
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_report_json(const Report& report, const std::string& path) {
  json j;
  j["schema_version"] = report.schema_version;
  j["provenance"] = provenance_json(report.seed);
  j["provenance"]["rng"] = report.rng_algorithm;
  j["provenance"]["version"] = report.version;

  json records = json::array();
  for (const auto& w : report.workloads)
    records.push_back({{"name", w.name},
                       {"cpi", w.cpi},
                       {"tp", 1.0 / w.cpi},
                       {"m_emp", w.empirical_mispred_rate}});
  j["workloads"] = {{"module", "trace_sim"},
                    {"operation", "sample_workloads"},
                    {"count", report.workloads.size()},
                    {"records", records}};

  j["gti"] = gti_json(report.gti);

  j["attribution"] = {{"module", "attribution"},
                      {"operation", "shapley_exact + shapley_mc"},
                      {"base", report.attribution.base},
                      {"events", report.attribution.event_names},
                      {"psi", report.attribution.psi},
                      {"etd", report.attribution.etd},
                      {"mc",
                       {{"method", report.attribution.mc_method},
                        {"values", report.attribution.etd_mc},
                        {"permutations", report.attribution.permutations},
                        {"epsilon", report.attribution.epsilon},
                        {"delta", report.attribution.delta},
                        {"width", report.attribution.width},
                        {"max_abs_dev_vs_exact", report.attribution.mc_max_abs_dev}}}};

  j["baseline"] = {{"module", "gti + attribution"},
                   {"operation", "gti_in_sample + jensen_gap_check"},
                   {"blackbox_r2", report.baseline.blackbox_r2},
                   {"blackbox_features", json::array({"f", "P"})},
                   {"gti_internal", report.baseline.gti_internal},
                   {"naive_additive_tp", report.baseline.naive_additive_tp},
                   {"etd", report.baseline.etd},
                   {"jensen",
                    {{"gap", report.baseline.jensen.gap},
                     {"lower_bound", report.baseline.jensen.lower_bound},
                     {"upper_bound", report.baseline.jensen.upper_bound},
                     {"within", report.baseline.jensen.within}}}};

  j["first_order"] = {{"module", "attribution"},
                      {"operation", "first_order_check"},
                      {"max_deviation", report.first_order.max_deviation},
                      {"scale_estimate", report.first_order.scale_estimate}};

  write_json_file(j, path);
}

void write_ablations_json(const AblationReport& report, const std::string& path) {
  json j;
  j["schema_version"] = report.schema_version;
  j["provenance"] = provenance_json(report.seed);

  json mis = json::array();
  for (const auto& row : report.misspecification)
    mis.push_back({{"transform", row.transform},
                   {"gti_in_sample", row.gti_in_sample},
                   {"gti_cv", row.gti_cv}});
  j["misspecification"] = {{"module", "gti"}, {"operation", "fit_ols + gti_cv"}, {"rows", mis}};

  json stress = json::array();
  for (const auto& row : report.identifiability) {
    json r = {{"k", row.k},
              {"target_rank", row.target_rank},
              {"computed_rank", row.computed_rank},
              {"noise", row.noise},
              {"identifiable", row.identifiable},
              {"recovery_error", row.recovery_error},
              {"augmentation_rows", row.augmentation_rows}};
    if (row.identifiable) {
      r["noise_bound"] = row.noise_bound;
      r["bound_holds"] = row.bound_holds;
    } else {
      r["noise_bound"] = nullptr;
      r["bound_holds"] = nullptr;
    }
    stress.push_back(r);
  }
  j["identifiability"] = {{"module", "counters"},
                          {"operation", "identifiability + recover"},
                          {"rows", stress}};

  json jensen = json::array();
  for (const auto& row : report.jensen)
    jensen.push_back({{"base", row.base},
                      {"gap", row.gap},
                      {"lower_bound", row.lower},
                      {"upper_bound", row.upper},
                      {"within", row.within}});
  j["jensen"] = {{"module", "attribution"},
                 {"operation", "jensen_gap_check"},
                 {"violations", report.jensen_violations},
                 {"rows", jensen}};

  write_json_file(j, path);
}

void write_gti_json(const GtiBlock& block, std::uint64_t seed, const std::string& path) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["provenance"] = provenance_json(seed);
  j["gti"] = gti_json(block);
  write_json_file(j, path);
}

void write_shapley_json(const attribution::ShapleyResult& result, const std::string& game,
                        double base, std::uint64_t seed, const std::string& path) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["provenance"] = provenance_json(seed);
  j["shapley"] = {{"module", "attribution"},
                  {"operation", std::string("shapley_") + method_name(result.method)},
                  {"game", game},
                  {"base", base},
                  {"values", result.values},
                  {"permutations", result.permutations_used},
                  {"epsilon", result.epsilon},
                  {"delta", result.delta}};
  write_json_file(j, path);
}

}  // namespace glassbox::harness
