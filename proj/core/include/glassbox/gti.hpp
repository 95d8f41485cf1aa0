#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace glassbox::gti {

struct Dataset {
  Eigen::VectorXd targets;    // Y, length n
  Eigen::MatrixXd features;   // X, n x k
  std::vector<std::string> column_names;  // k names; generated when empty

  void validate() const;  // n >= 2, consistent shapes, finite entries
};

// Identity keeps the raw columns; the polynomial transforms append every
// monomial of total degree up to 2 or 3 over the feature columns.
enum class Transform { kIdentity, kPoly2, kPoly3 };

Transform transform_from_string(const std::string& name);
const char* to_string(Transform t);

// Expanded design (no intercept column): degree-1 columns in input order,
// then degree-2 monomials x_i x_j (i <= j), then degree-3 (i <= j <= l).
Eigen::MatrixXd expand_features(const Eigen::MatrixXd& X, Transform t);
std::vector<std::string> expanded_names(const std::vector<std::string>& names, Transform t);

struct FittedModel {
  Eigen::VectorXd coefficients;  // intercept first, then expanded columns
  Transform transform = Transform::kIdentity;
};

// Indices of feature columns linearly dependent on the intercept and the
// columns before them, under the same tolerance rule fit_ols applies.
// Dropping these columns leaves a design fit_ols accepts.
std::vector<int> dependent_feature_columns(const Eigen::MatrixXd& X);

// Least squares with intercept.  A column is declared dependent when its
// residual after projection onto the preceding columns is below 1e-10 of its
// own norm; a rank-deficient design throws with the dependent column names.
FittedModel fit_ols(const Dataset& data, Transform t = Transform::kIdentity);

Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& X);

// 1 - Var(residual) / Var(target), population variances.  In [0,1] for
// OLS fits evaluated on their own training data.
double gti_in_sample(const Dataset& data, const FittedModel& model);

// Pooled variant: one residual variance over all held-out predictions
// across the folds (each point held out exactly once).  May go negative for
// a model that is worse than predicting the mean.
double gti_cv(const Dataset& data, Transform t, int folds, std::uint64_t seed);

// Pairs-bootstrap percentile interval.  Degenerate resamples (zero target
// variance or a collapsed design) are redrawn, up to 100 tries each.
std::pair<double, double> gti_bootstrap_ci(const Dataset& data, Transform t, int n_boot,
                                           double level, std::uint64_t seed);

// Measured transparency when independent noise with variance var_noise is
// added to the target: 1 - (Var(R) + var_noise) / (Var(Y) + var_noise).
double gti_noise_attenuation(double gti_true, double var_y, double var_noise);

struct GainResult {
  double gain = 0.0;                 // R^2(S + {Z}) - R^2(S), >= 0
  double partial_correlation = 0.0;  // corr(Y, Z residualized on S); gain equals its square
  bool degenerate = false;           // candidate lies in the span of the base
};

// Both the candidate and the base columns are z-scored internally.  The
// correlation reported is between the (standardized) target and the part of
// Z orthogonal to the base design; its square equals the R^2 gain.
GainResult gti_gain(const Dataset& data, const std::vector<int>& base_features, int candidate);

// Plug-in delta-method standard error from the influence function of
// 1 - m_r/m_y under the empirical distribution.
double gti_asymptotic_se(const Dataset& data, const FittedModel& model);

struct OpacityResult {
  bool reject = false;
  double quantile = 0.0;  // alpha-quantile of bootstrap GTI minus tau
};

// Tests H0: GTI >= tau at size 1 - level (level is the confidence level,
// e.g. 0.95 for a 5% test): reject when the (1-level)-quantile of the
// bootstrap GTI distribution falls below tau.
OpacityResult opacity_test(const Dataset& data, Transform t, double tau, int n_boot, double level,
                           std::uint64_t seed);

// Greedy det(X^T X) maximization with Fedorov exchange passes; selects
// `budget` distinct candidate rows.  Rows are used exactly as given (include
// a constant column for intercept designs).
std::vector<int> d_optimal_select(const Eigen::MatrixXd& candidates, int budget);

struct GtiEstimate {
  double point = 0.0;
  double cv_point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_boot = 0;
  int folds = 0;
};

GtiEstimate estimate(const Dataset& data, Transform t, int folds, int n_boot, double level,
                     std::uint64_t seed);

// Header row names the columns; `target_column` becomes Y and every other
// numeric column a feature.  Columns that do not parse as numbers (e.g.
// workload names) are skipped.
Dataset load_dataset_csv(const std::string& path, const std::string& target_column);

}  // namespace glassbox::gti
