#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glassbox/markov.hpp"

namespace glassbox::trace_sim {

struct TraceConfig {
  long long length = 100000;  // counted instructions, >= 1
  markov::MarkovBranchProcess process{0.5, 0.5};
  markov::PredictorAutomaton predictor = markov::two_bit_automaton();
  std::uint64_t seed = 0;
  // Outcomes fed to the predictor before counting starts.  The outcome chain
  // itself starts from its stationary marginal, so warm-up only settles the
  // predictor state.
  long long warmup = 1000;
};

struct TraceResult {
  long long length = 0;  // counted window
  long long outcomes_taken_count = 0;
  long long mispredict_count = 0;
  double empirical_taken_rate = 0.0;
  double empirical_mispred_rate = 0.0;
};

struct TraceRecord {
  std::uint8_t outcome;     // 0/1
  std::uint8_t prediction;  // 0/1
};

// Simulates the predictor along one sampled outcome stream.  A prediction is
// scored against the outcome it precedes, then the state absorbs that
// outcome.  Identical (seed, config) gives bit-identical results.  When
// `records` is non-null it receives one entry per counted instruction.
TraceResult generate_trace(const TraceConfig& config);
TraceResult generate_trace(const TraceConfig& config, std::vector<TraceRecord>* records);

// Line-oriented trace file: one "<outcome> <prediction>" pair per line,
// N/T letters, '#' comment header.
void write_trace_text(const std::vector<TraceRecord>& records, const std::string& path);
std::vector<TraceRecord> read_trace_text(const std::string& path);

struct ParameterRanges {
  double f_min = 0.1;
  double f_max = 0.35;
  std::vector<double> penalties = {2.0, 3.0, 5.0};
  double alpha_min = 0.05;
  double alpha_max = 0.95;
  double beta_min = 0.05;
  double beta_max = 0.95;
  int amat_terms_min = 1;
  int amat_terms_max = 3;
  double amat_min = 0.02;
  double amat_max = 0.4;

  void validate() const;
};

struct WorkloadSample {
  std::string name;
  double branch_fraction = 0.0;  // f
  double penalty = 0.0;          // P
  double alpha = 0.0;
  double beta = 0.0;
  double empirical_mispred_rate = 0.0;
  std::vector<double> amat_terms;  // length amat_terms_max, unused slots 0
  double cpi = 0.0;
  std::vector<double> features;  // aligned with feature_names(ranges)
};

// Internal feature columns recorded per workload: f, P, m_emp, the branch
// cost f*P*m_emp, and one column per AMAT slot.
std::vector<std::string> feature_names(const ParameterRanges& ranges);

// Draws `count` workloads, simulates each trace, and synthesizes
//   cpi = 1 + f * P * m_emp + sum_j amat_j.
// Workload i consumes RNG stream i of `seed`, so results are independent of
// evaluation order.
std::vector<WorkloadSample> sample_workloads(int count, std::uint64_t seed,
                                             const ParameterRanges& ranges,
                                             long long trace_length = 100000,
                                             long long warmup = 1000);

void write_workloads_csv(const std::vector<WorkloadSample>& samples, const ParameterRanges& ranges,
                         const std::string& path);

struct Table1Row {
  std::string name;
  double f = 0.0;
  double m = 0.0;
  double P = 0.0;
  double predicted_cpi = 0.0;
  double simulated_cpi = 0.0;
  double error_pct = 0.0;
};

// The six reference benchmarks (gcc, mcf, perlbench, xalancbmk, gobmk,
// sjeng) with published (f, m, P).  Predicted CPI comes from the formula;
// simulated CPI injects i.i.d. mispredicts at rate m over n instructions.
std::vector<Table1Row> table1_reproduction(std::uint64_t seed = 20240101,
                                           long long n = 1000000);

}  // namespace glassbox::trace_sim
