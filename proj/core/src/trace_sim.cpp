#include "glassbox/trace_sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "glassbox/core_model.hpp"
#include "glassbox/csv.hpp"
#include "glassbox/rng.hpp"
#include "glassbox/version.hpp"

namespace glassbox::trace_sim {

TraceResult generate_trace(const TraceConfig& config) { return generate_trace(config, nullptr); }

TraceResult generate_trace(const TraceConfig& config, std::vector<TraceRecord>* records) {
  if (config.length < 1) throw std::invalid_argument("generate_trace: length must be >= 1");
  if (config.warmup < 0) throw std::invalid_argument("generate_trace: warmup must be >= 0");
  config.predictor.validate();

  Rng rng(config.seed);
  int outcome = rng.bernoulli(config.process.stationary_taken()) ? 1 : 0;
  int state = config.predictor.initial_state;

  for (long long t = 0; t < config.warmup; ++t) {
    state = config.predictor.update[state][outcome];
    outcome = rng.bernoulli(config.process.next_taken_prob(outcome)) ? 1 : 0;
  }

  TraceResult result;
  result.length = config.length;
  if (records) {
    records->clear();
    records->reserve(static_cast<std::size_t>(config.length));
  }
  for (long long t = 0; t < config.length; ++t) {
    const int prediction = config.predictor.predict[state];
    result.outcomes_taken_count += outcome;
    result.mispredict_count += prediction != outcome;
    if (records)
      records->push_back({static_cast<std::uint8_t>(outcome), static_cast<std::uint8_t>(prediction)});
    state = config.predictor.update[state][outcome];
    outcome = rng.bernoulli(config.process.next_taken_prob(outcome)) ? 1 : 0;
  }
  result.empirical_taken_rate =
      static_cast<double>(result.outcomes_taken_count) / static_cast<double>(config.length);
  result.empirical_mispred_rate =
      static_cast<double>(result.mispredict_count) / static_cast<double>(config.length);
  return result;
}

void write_trace_text(const std::vector<TraceRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trace: cannot write " + path);
  out << "# schema_version=" << kSchemaVersion << "\n";
  out << "# outcome prediction\n";
  for (const auto& r : records)
    out << (r.outcome ? 'T' : 'N') << ' ' << (r.prediction ? 'T' : 'N') << '\n';
  if (!out) throw std::runtime_error("trace: write failed for " + path);
}

std::vector<TraceRecord> read_trace_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trace: cannot open " + path);
  std::vector<TraceRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string o, p;
    if (!(ls >> o)) continue;
    if (!(ls >> p)) throw std::runtime_error("trace: missing prediction at line " + std::to_string(lineno));
    auto decode = [lineno](const std::string& tok) -> std::uint8_t {
      if (tok == "T" || tok == "1") return 1;
      if (tok == "N" || tok == "0") return 0;
      throw std::runtime_error("trace: bad token at line " + std::to_string(lineno));
    };
    records.push_back({decode(o), decode(p)});
  }
  return records;
}

void ParameterRanges::validate() const {
  if (!(f_min >= 0.0 && f_min <= f_max && f_max <= 1.0))
    throw std::invalid_argument("ParameterRanges: need 0 <= f_min <= f_max <= 1");
  if (penalties.empty()) throw std::invalid_argument("ParameterRanges: empty penalty set");
  for (double p : penalties)
    if (!(p >= 0.0)) throw std::invalid_argument("ParameterRanges: penalties must be >= 0");
  if (!(alpha_min > 0.0 && alpha_min <= alpha_max && alpha_max < 1.0))
    throw std::invalid_argument("ParameterRanges: need 0 < alpha_min <= alpha_max < 1");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
    throw std::invalid_argument("ParameterRanges: need 0 < beta_min <= beta_max < 1");
  if (amat_terms_min < 0 || amat_terms_min > amat_terms_max)
    throw std::invalid_argument("ParameterRanges: need 0 <= amat_terms_min <= amat_terms_max");
  if (!(amat_min >= 0.0 && amat_min <= amat_max))
    throw std::invalid_argument("ParameterRanges: need 0 <= amat_min <= amat_max");
}

std::vector<std::string> feature_names(const ParameterRanges& ranges) {
  std::vector<std::string> names = {"f", "P", "m_emp", "branch_cost"};
  for (int j = 1; j <= ranges.amat_terms_max; ++j) names.push_back("amat_" + std::to_string(j));
  return names;
}

std::vector<WorkloadSample> sample_workloads(int count, std::uint64_t seed,
                                             const ParameterRanges& ranges,
                                             long long trace_length, long long warmup) {
  if (count < 1) throw std::invalid_argument("sample_workloads: count must be >= 1");
  ranges.validate();
  const Rng master(seed);
  std::vector<WorkloadSample> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng = master.stream(static_cast<std::uint64_t>(i));
    WorkloadSample w;
    {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "w%04d", i);
      w.name = buf;
    }
    w.branch_fraction = rng.uniform(ranges.f_min, ranges.f_max);
    w.penalty = ranges.penalties[rng.bounded(ranges.penalties.size())];
    w.alpha = rng.uniform(ranges.alpha_min, ranges.alpha_max);
    w.beta = rng.uniform(ranges.beta_min, ranges.beta_max);

    const int terms =
        ranges.amat_terms_min +
        static_cast<int>(rng.bounded(
            static_cast<std::uint64_t>(ranges.amat_terms_max - ranges.amat_terms_min + 1)));
    w.amat_terms.assign(static_cast<std::size_t>(ranges.amat_terms_max), 0.0);
    for (int j = 0; j < terms; ++j)
      w.amat_terms[static_cast<std::size_t>(j)] = rng.uniform(ranges.amat_min, ranges.amat_max);

    TraceConfig trace;
    trace.length = trace_length;
    trace.warmup = warmup;
    trace.process = markov::MarkovBranchProcess(w.alpha, w.beta);
    trace.seed = rng.next_u64();
    const TraceResult tr = generate_trace(trace);
    w.empirical_mispred_rate = tr.empirical_mispred_rate;

    double amat_total = 0.0;
    for (double a : w.amat_terms) amat_total += a;
    const double branch_cost = w.branch_fraction * w.penalty * w.empirical_mispred_rate;
    w.cpi = 1.0 + branch_cost + amat_total;

    w.features = {w.branch_fraction, w.penalty, w.empirical_mispred_rate, branch_cost};
    w.features.insert(w.features.end(), w.amat_terms.begin(), w.amat_terms.end());
    samples.push_back(std::move(w));
  }
  return samples;
}

void write_workloads_csv(const std::vector<WorkloadSample>& samples, const ParameterRanges& ranges,
                         const std::string& path) {
  std::vector<std::string> header = {"name", "f", "P", "alpha", "beta", "m_emp"};
  for (int j = 1; j <= ranges.amat_terms_max; ++j) header.push_back("amat_" + std::to_string(j));
  header.push_back("branch_cost");
  header.push_back("cpi");
  header.push_back("tp");

  std::vector<std::vector<std::string>> rows;
  rows.reserve(samples.size());
  for (const auto& w : samples) {
    std::vector<std::string> row = {w.name,
                                    csv::format_real(w.branch_fraction),
                                    csv::format_real(w.penalty),
                                    csv::format_real(w.alpha),
                                    csv::format_real(w.beta),
                                    csv::format_real(w.empirical_mispred_rate)};
    for (double a : w.amat_terms) row.push_back(csv::format_real(a));
    row.push_back(csv::format_real(w.branch_fraction * w.penalty * w.empirical_mispred_rate));
    row.push_back(csv::format_real(w.cpi));
    row.push_back(csv::format_real(1.0 / w.cpi));
    rows.push_back(std::move(row));
  }
  csv::write_table(path, header, rows,
                   "schema_version=" + std::to_string(kSchemaVersion));
}

std::vector<Table1Row> table1_reproduction(std::uint64_t seed, long long n) {
  if (n < 1) throw std::invalid_argument("table1_reproduction: n must be >= 1");
  static const struct {
    const char* name;
    double f, m, P;
  } kRows[] = {
      {"gcc", 0.168, 0.082, 3.0},  {"mcf", 0.223, 0.145, 3.0},
      {"perlbench", 0.195, 0.068, 3.0}, {"xalancbmk", 0.211, 0.093, 3.0},
      {"gobmk", 0.184, 0.076, 3.0},     {"sjeng", 0.176, 0.124, 3.0},
  };
  const Rng master(seed);
  std::vector<Table1Row> rows;
  int index = 0;
  for (const auto& r : kRows) {
    Rng rng = master.stream(static_cast<std::uint64_t>(index++));
    long long mispredicts = 0;
    for (long long t = 0; t < n; ++t) mispredicts += rng.bernoulli(r.m) ? 1 : 0;
    const double m_hat = static_cast<double>(mispredicts) / static_cast<double>(n);
    Table1Row row;
    row.name = r.name;
    row.f = r.f;
    row.m = r.m;
    row.P = r.P;
    row.predicted_cpi = core_model::cpi_branch(r.f, r.m, r.P);
    row.simulated_cpi = 1.0 + r.f * r.P * m_hat;
    row.error_pct = 100.0 * std::abs(row.predicted_cpi - row.simulated_cpi) / row.simulated_cpi;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace glassbox::trace_sim
