#pragma once

#include <string>
#include <vector>

namespace glassbox::core_model {

struct EventSpec {
  std::string name;
  double probability = 0.0;  // in [0,1]
  double penalty = 0.0;      // cycles, >= 0
};

struct CostModel {
  double base_cost = 1.0;  // B > 0
  std::vector<EventSpec> events;

  void validate() const;  // throws std::invalid_argument on violation
};

struct CacheLevel {
  double hit_time = 0.0;  // t_i >= 0
  double hit_rate = 0.0;  // h_i in [0,1]
};

struct PipelineGeometry {
  int depth = 1;          // n >= 1
  int resolve_stage = 1;  // k in [1, n]

  void validate() const;
};

// B + sum of p_i * C_i.  Always >= B.
double expected_cost(const CostModel& model);

// 1 + f * m * P.  Bounded by [1, 1 + f*P].
double cpi_branch(double f, double m, double P);

// Stages after branch resolution at stage k of an n-stage pipeline: n - k + 1.
int mispredict_penalty(const PipelineGeometry& geom);

// Multi-level form: sum_i t_i h_i prod_{j<i}(1-h_j) + t_mem prod_j(1-h_j).
// Every level's hit time is weighted by the probability of reaching and
// hitting that level.
double amat(const std::vector<CacheLevel>& levels, double memory_time);

// Single-level form: t_hit + (1 - h) * t_penalty.  The hit time is paid
// unconditionally here, so this is NOT the L=1 case of amat(); the two
// conventions differ by h*t_hit vs t_hit and both are kept verbatim.
double amat_simple(double t_hit, double h, double t_penalty);

// 1 / (s + (1-s)/N).
double amdahl_speedup(double serial_fraction, long long processors);

// Round-trip through the key-value config format:
//   base_cost = 1.0
//   [event.0]
//   name = branch
//   probability = 0.02
//   penalty = 3
void save_cost_model(const CostModel& model, const std::string& path);
CostModel load_cost_model(const std::string& path);

}  // namespace glassbox::core_model
