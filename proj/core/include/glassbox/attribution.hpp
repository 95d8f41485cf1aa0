#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace glassbox::attribution {

// Transferable-utility game over k players.  Subsets are bitmasks (bit i set
// means player i is in the coalition), which caps num_players at 63.  The
// value function must be pure and reentrant: estimators evaluate it from
// arbitrary subsets, possibly concurrently.
struct CoalitionGame {
  int num_players = 0;
  std::function<double(std::uint64_t mask)> value;
  std::string description;

  void validate() const;
  std::uint64_t full_mask() const { return (num_players == 64) ? ~0ull : (1ull << num_players) - 1; }
};

struct ShapleyResult {
  enum class Method { kExact, kMc, kAntithetic };

  std::vector<double> values;  // phi, length k
  Method method = Method::kExact;
  long long permutations_used = 0;
  // Certificate parameters when the caller derived the budget from
  // mc_budget(); zero otherwise.
  double epsilon = 0.0;
  double delta = 0.0;
};

// Full enumeration over all 2^k coalitions, k <= 20.  Efficiency
// (sum phi = v(full) - v(empty)) holds to accumulation precision.
ShapleyResult shapley_exact(const CoalitionGame& game);

// Permutations needed so each |phi_hat_i - phi_i| <= epsilon with
// probability >= 1 - delta, for marginals confined to an interval of the
// given width: ceil(width^2 / (2 epsilon^2) * ln(2 / delta)).
long long mc_budget(double width, double epsilon, double delta);

// Mean marginal contribution over uniformly random permutations.  Each
// run's estimates telescope, so efficiency holds exactly per run.
ShapleyResult shapley_mc(const CoalitionGame& game, long long permutations, std::uint64_t seed);

// Variance-reduced estimator: each draw contributes the average of the
// marginals along a random permutation and along its reversal
// (2 * pairs game sweeps total, comparable to shapley_mc at M = 2 * pairs).
ShapleyResult shapley_antithetic(const CoalitionGame& game, long long pairs, std::uint64_t seed);

// Base cost plus an empirical penalty sample matrix (rows = draws, columns =
// events Z_1..Z_k, all nonnegative).  Fixing the samples up front makes both
// games below deterministic functions of the coalition, so Monte Carlo
// Shapley error is isolated from expectation-estimation error.
struct PenaltyModel {
  double base = 1.0;
  Eigen::MatrixXd samples;

  void validate() const;
};

// CSV with one column per event; `base` is supplied by the caller.
PenaltyModel load_penalty_csv(const std::string& path, double base);

// w(S) = B + sum of the sample means of the events in S (additive).
CoalitionGame game_cpi(const PenaltyModel& model);

// v(S) = sample mean of 1 / (B + sum of Z_i over i in S), common random
// numbers across subsets; v(empty) = 1/B exactly.
CoalitionGame game_throughput(const PenaltyModel& model);

struct JensenGapResult {
  double gap = 0.0;          // E[1/(B+Z)] - 1/(B+E[Z]) on the sample, >= 0
  double lower_bound = 0.0;  // Var(Z)/2 / (B+max Z)^3
  double upper_bound = 0.0;  // Var(Z)/2 / B^3
  bool within = false;       // bounds checked with 1e-12 slack
};

// Evaluated on empirical moments, so the two-sided bound is exact for the
// sample distribution and approximate for the population it came from.
JensenGapResult jensen_gap_check(const PenaltyModel& model);

struct FirstOrderResult {
  double max_deviation = 0.0;   // max_i |ETD_i + psi_i / B^2|
  double scale_estimate = 0.0;  // least-squares slope of ETD on psi, near -1/B^2
};

// Exact Shapley on both games (k <= 20); quantifies how far the throughput
// attribution is from -1/B^2 times the CPI attribution.
FirstOrderResult first_order_check(const PenaltyModel& model);

// True iff player i's marginal contribution weakly dominates player j's in
// every coalition containing neither (k <= 20).  When it does, the exact
// Shapley values are checked to satisfy phi_i >= phi_j as well.
bool dominance_check(const CoalitionGame& game, int i, int j);

}  // namespace glassbox::attribution
