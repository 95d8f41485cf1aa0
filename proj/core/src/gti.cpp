#include "glassbox/gti.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "glassbox/csv.hpp"
#include "glassbox/rng.hpp"

namespace glassbox::gti {
namespace {

constexpr double kDependenceTol = 1e-10;

double mean(const Eigen::VectorXd& v) { return v.mean(); }

double var_pop(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size());
}

// Orthonormal basis via modified Gram-Schmidt with reorthogonalization;
// returns the indices of columns whose residual fell below tolerance.
std::vector<int> dependent_columns(const Eigen::MatrixXd& design,
                                   std::vector<Eigen::VectorXd>* basis_out = nullptr) {
  std::vector<Eigen::VectorXd> basis;
  std::vector<int> dependent;
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    Eigen::VectorXd v = design.col(j);
    const double orig = v.norm();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) v -= q.dot(v) * q;
    if (orig == 0.0 || v.norm() < kDependenceTol * orig) {
      dependent.push_back(static_cast<int>(j));
    } else {
      basis.push_back(v / v.norm());
    }
  }
  if (basis_out) *basis_out = std::move(basis);
  return dependent;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd design(X.rows(), X.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(X.cols()) = X;
  return design;
}

FittedModel fit_design(const Eigen::MatrixXd& expanded, const Eigen::VectorXd& y,
                       const std::vector<std::string>& expanded_col_names, Transform t) {
  const Eigen::MatrixXd design = with_intercept(expanded);
  const std::vector<int> dependent = dependent_columns(design);
  if (!dependent.empty()) {
    std::string names;
    for (int j : dependent) {
      if (!names.empty()) names += ", ";
      if (j == 0)
        names += "(intercept)";
      else if (static_cast<std::size_t>(j - 1) < expanded_col_names.size())
        names += expanded_col_names[static_cast<std::size_t>(j - 1)];
      else
        names += "col" + std::to_string(j);
    }
    throw std::runtime_error("fit_ols: rank-deficient design; dependent columns: " + names);
  }
  FittedModel model;
  model.transform = t;
  model.coefficients = design.householderQr().solve(y);
  return model;
}

struct Standardized {
  Eigen::VectorXd y;
  Eigen::MatrixXd base;   // z-scored base columns
  Eigen::VectorXd z;      // z-scored candidate
};

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 0) throw std::logic_error("quantile of empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double h = p * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Bootstrap GTI replicates, sorted ascending.  Replicate i draws from RNG
// stream i of the master seed; degenerate resamples are redrawn from the
// same stream so other replicates stay untouched.
std::vector<double> bootstrap_distribution(const Dataset& data, Transform t, int n_boot,
                                           std::uint64_t seed) {
  data.validate();
  const auto n = data.targets.size();
  const Rng master(seed);
  std::vector<double> boots;
  boots.reserve(static_cast<std::size_t>(n_boot));
  for (int b = 0; b < n_boot; ++b) {
    Rng rng = master.stream(static_cast<std::uint64_t>(b));
    bool done = false;
    for (int attempt = 0; attempt < 100 && !done; ++attempt) {
      Dataset resample;
      resample.targets.resize(n);
      resample.features.resize(n, data.features.cols());
      resample.column_names = data.column_names;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto idx = static_cast<Eigen::Index>(rng.bounded(static_cast<std::uint64_t>(n)));
        resample.targets(i) = data.targets(idx);
        resample.features.row(i) = data.features.row(idx);
      }
      if (var_pop(resample.targets) == 0.0) continue;
      try {
        const FittedModel model = fit_ols(resample, t);
        boots.push_back(gti_in_sample(resample, model));
        done = true;
      } catch (const std::runtime_error&) {
        // collapsed design in this resample; redraw
      }
    }
    if (!done)
      throw std::runtime_error("gti bootstrap: persistent degenerate resamples at replicate " +
                               std::to_string(b));
  }
  std::sort(boots.begin(), boots.end());
  return boots;
}

}  // namespace

void Dataset::validate() const {
  if (targets.size() < 2) throw std::invalid_argument("Dataset: need at least two rows");
  if (features.rows() != targets.size())
    throw std::invalid_argument("Dataset: feature rows must match target length");
  if (features.cols() < 1) throw std::invalid_argument("Dataset: need at least one feature");
  if (!targets.allFinite() || !features.allFinite())
    throw std::invalid_argument("Dataset: non-finite entries");
  if (!column_names.empty() &&
      column_names.size() != static_cast<std::size_t>(features.cols()))
    throw std::invalid_argument("Dataset: column_names length mismatch");
}

Transform transform_from_string(const std::string& name) {
  if (name == "identity" || name == "linear") return Transform::kIdentity;
  if (name == "poly2") return Transform::kPoly2;
  if (name == "poly3") return Transform::kPoly3;
  throw std::invalid_argument("unknown transform '" + name + "' (identity|poly2|poly3)");
}

const char* to_string(Transform t) {
  switch (t) {
    case Transform::kIdentity: return "identity";
    case Transform::kPoly2: return "poly2";
    case Transform::kPoly3: return "poly3";
  }
  return "identity";
}

Eigen::MatrixXd expand_features(const Eigen::MatrixXd& X, Transform t) {
  const Eigen::Index k = X.cols();
  const int degree = t == Transform::kIdentity ? 1 : (t == Transform::kPoly2 ? 2 : 3);
  std::vector<Eigen::VectorXd> cols;
  for (Eigen::Index i = 0; i < k; ++i) cols.push_back(X.col(i));
  if (degree >= 2)
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = i; j < k; ++j)
        cols.push_back(X.col(i).cwiseProduct(X.col(j)));
  if (degree >= 3)
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = i; j < k; ++j)
        for (Eigen::Index l = j; l < k; ++l)
          cols.push_back(X.col(i).cwiseProduct(X.col(j)).cwiseProduct(X.col(l)));
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = cols[c];
  return out;
}

std::vector<std::string> expanded_names(const std::vector<std::string>& names, Transform t) {
  const std::size_t k = names.size();
  const int degree = t == Transform::kIdentity ? 1 : (t == Transform::kPoly2 ? 2 : 3);
  std::vector<std::string> out(names);
  if (degree >= 2)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i; j < k; ++j) out.push_back(names[i] + "*" + names[j]);
  if (degree >= 3)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i; j < k; ++j)
        for (std::size_t l = j; l < k; ++l)
          out.push_back(names[i] + "*" + names[j] + "*" + names[l]);
  return out;
}

std::vector<int> dependent_feature_columns(const Eigen::MatrixXd& X) {
  std::vector<int> out;
  for (int j : dependent_columns(with_intercept(X)))
    if (j > 0) out.push_back(j - 1);
  return out;
}

FittedModel fit_ols(const Dataset& data, Transform t) {
  data.validate();
  std::vector<std::string> names = data.column_names;
  if (names.empty())
    for (Eigen::Index j = 0; j < data.features.cols(); ++j)
      names.push_back("x" + std::to_string(j + 1));
  return fit_design(expand_features(data.features, t), data.targets, expanded_names(names, t), t);
}

Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd design = with_intercept(expand_features(X, model.transform));
  if (design.cols() != model.coefficients.size())
    throw std::invalid_argument("predict: feature count does not match the fitted model");
  return design * model.coefficients;
}

double gti_in_sample(const Dataset& data, const FittedModel& model) {
  data.validate();
  const double vy = var_pop(data.targets);
  if (vy == 0.0) throw std::runtime_error("gti: degenerate target (zero variance)");
  const Eigen::VectorXd r = data.targets - predict(model, data.features);
  return 1.0 - var_pop(r) / vy;
}

double gti_cv(const Dataset& data, Transform t, int folds, std::uint64_t seed) {
  data.validate();
  const auto n = data.targets.size();
  if (folds < 2 || folds > n)
    throw std::invalid_argument("gti_cv: folds must lie in [2, n]");
  const double vy = var_pop(data.targets);
  if (vy == 0.0) throw std::runtime_error("gti: degenerate target (zero variance)");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.bounded(i))]);

  Eigen::VectorXd pooled(n);
  std::size_t cursor = 0;
  for (int fold = 0; fold < folds; ++fold) {
    const std::size_t size = static_cast<std::size_t>(n / folds) +
                             (fold < static_cast<int>(n % folds) ? 1u : 0u);
    const std::size_t begin = cursor;
    cursor += size;

    Dataset train;
    train.targets.resize(n - static_cast<Eigen::Index>(size));
    train.features.resize(n - static_cast<Eigen::Index>(size), data.features.cols());
    train.column_names = data.column_names;
    Eigen::Index ti = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i >= begin && i < cursor) continue;
      train.targets(ti) = data.targets(order[i]);
      train.features.row(ti) = data.features.row(order[i]);
      ++ti;
    }
    const FittedModel model = fit_ols(train, t);
    for (std::size_t i = begin; i < cursor; ++i) {
      const Eigen::Index row = order[i];
      pooled(row) =
          data.targets(row) - predict(model, data.features.row(row))(0);
    }
  }
  return 1.0 - var_pop(pooled) / vy;
}

std::pair<double, double> gti_bootstrap_ci(const Dataset& data, Transform t, int n_boot,
                                           double level, std::uint64_t seed) {
  if (n_boot < 100) throw std::invalid_argument("gti_bootstrap_ci: n_boot must be >= 100");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("gti_bootstrap_ci: level must lie in (0,1)");
  const std::vector<double> boots = bootstrap_distribution(data, t, n_boot, seed);
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(boots, tail), quantile_sorted(boots, 1.0 - tail)};
}

double gti_noise_attenuation(double gti_true, double var_y, double var_noise) {
  if (!(gti_true >= 0.0 && gti_true <= 1.0))
    throw std::invalid_argument("gti_noise_attenuation: gti_true must lie in [0,1]");
  if (!(var_y > 0.0)) throw std::invalid_argument("gti_noise_attenuation: var_y must be > 0");
  if (!(var_noise >= 0.0))
    throw std::invalid_argument("gti_noise_attenuation: var_noise must be >= 0");
  const double var_r = (1.0 - gti_true) * var_y;
  return 1.0 - (var_r + var_noise) / (var_y + var_noise);
}

GainResult gti_gain(const Dataset& data, const std::vector<int>& base_features, int candidate) {
  data.validate();
  const Eigen::Index k = data.features.cols();
  if (candidate < 0 || candidate >= k)
    throw std::invalid_argument("gti_gain: candidate index out of range");
  for (int j : base_features) {
    if (j < 0 || j >= k) throw std::invalid_argument("gti_gain: base index out of range");
    if (j == candidate)
      throw std::invalid_argument("gti_gain: candidate must not be part of the base");
  }

  auto zscore = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const double sd = std::sqrt(var_pop(v));
    if (sd == 0.0) return Eigen::VectorXd::Zero(v.size());
    return (v.array() - v.mean()) / sd;
  };

  Standardized s;
  s.y = zscore(data.targets);
  s.z = zscore(data.features.col(candidate));
  s.base.resize(data.features.rows(), static_cast<Eigen::Index>(base_features.size()));
  for (std::size_t j = 0; j < base_features.size(); ++j)
    s.base.col(static_cast<Eigen::Index>(j)) = zscore(data.features.col(base_features[j]));

  if (var_pop(data.targets) == 0.0)
    throw std::runtime_error("gti: degenerate target (zero variance)");

  // Orthonormal basis of [intercept, base]; full rank of the base required.
  std::vector<Eigen::VectorXd> basis;
  const std::vector<int> dep = dependent_columns(with_intercept(s.base), &basis);
  if (!dep.empty())
    throw std::runtime_error("gti_gain: base design is rank-deficient");

  Eigen::VectorXd z_perp = s.z;
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) z_perp -= q.dot(z_perp) * q;

  GainResult result;
  const double zn = s.z.norm();
  if (zn == 0.0 || z_perp.norm() < kDependenceTol * zn) {
    result.degenerate = true;
    return result;
  }

  result.partial_correlation = s.y.dot(z_perp) / (s.y.norm() * z_perp.norm());

  Dataset base_only;
  base_only.targets = s.y;
  base_only.features = s.base;
  Dataset with_z;
  with_z.targets = s.y;
  with_z.features.resize(s.base.rows(), s.base.cols() + 1);
  with_z.features.leftCols(s.base.cols()) = s.base;
  with_z.features.col(s.base.cols()) = s.z;

  const double r2_base =
      s.base.cols() == 0 ? 0.0 : gti_in_sample(base_only, fit_ols(base_only));
  const double r2_full = gti_in_sample(with_z, fit_ols(with_z));
  result.gain = std::max(0.0, r2_full - r2_base);
  return result;
}

double gti_asymptotic_se(const Dataset& data, const FittedModel& model) {
  data.validate();
  const auto n = data.targets.size();
  if (n <= model.coefficients.size())
    throw std::invalid_argument("gti_asymptotic_se: need n > number of coefficients");
  const double m_y = var_pop(data.targets);
  if (m_y == 0.0) throw std::runtime_error("gti: degenerate target (zero variance)");
  const Eigen::VectorXd r = data.targets - predict(model, data.features);
  const double mu_r = mean(r);
  const double m_r = var_pop(r);
  const double mu_y = mean(data.targets);

  Eigen::VectorXd influence(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dr = (r(i) - mu_r) * (r(i) - mu_r) - m_r;
    const double dy = (data.targets(i) - mu_y) * (data.targets(i) - mu_y) - m_y;
    influence(i) = -dr / m_y + (m_r / (m_y * m_y)) * dy;
  }
  return std::sqrt(var_pop(influence) / static_cast<double>(n));
}

OpacityResult opacity_test(const Dataset& data, Transform t, double tau, int n_boot, double level,
                           std::uint64_t seed) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("opacity_test: tau must lie strictly in (0,1)");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("opacity_test: level must lie in (0,1)");
  if (n_boot < 100) throw std::invalid_argument("opacity_test: n_boot must be >= 100");
  const std::vector<double> boots = bootstrap_distribution(data, t, n_boot, seed);
  OpacityResult result;
  result.quantile = quantile_sorted(boots, 1.0 - level) - tau;
  result.reject = result.quantile < 0.0;
  return result;
}

std::vector<int> d_optimal_select(const Eigen::MatrixXd& candidates, int budget) {
  const Eigen::Index m = candidates.rows();
  const Eigen::Index k = candidates.cols();
  if (m < 1 || k < 1) throw std::invalid_argument("d_optimal_select: empty candidate set");
  if (!candidates.allFinite())
    throw std::invalid_argument("d_optimal_select: non-finite candidates");
  if (budget < k)
    throw std::invalid_argument("d_optimal_select: budget must be >= column count");
  if (budget > m)
    throw std::invalid_argument("d_optimal_select: budget exceeds candidate count");

  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(candidates);
    const double tol = static_cast<double>(std::max(m, k)) * svd.singularValues()(0) *
                       std::numeric_limits<double>::epsilon();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > tol) ++rank;
    if (rank < k)
      throw std::invalid_argument("d_optimal_select: candidates do not span the column space");
  }

  std::vector<int> selected;
  std::vector<bool> in_design(static_cast<std::size_t>(m), false);
  if (budget == m) {
    for (int i = 0; i < m; ++i) selected.push_back(i);
    return selected;
  }

  // Volume-greedy start: repeatedly take the row with the largest residual
  // against the span of the rows chosen so far.
  std::vector<Eigen::VectorXd> basis;
  for (Eigen::Index step = 0; step < k; ++step) {
    int best = -1;
    double best_norm = -1.0;
    for (int j = 0; j < m; ++j) {
      if (in_design[static_cast<std::size_t>(j)]) continue;
      Eigen::VectorXd v = candidates.row(j).transpose();
      for (const auto& q : basis) v -= q.dot(v) * q;
      const double nrm = v.norm();
      if (nrm > best_norm + 1e-15) {
        best_norm = nrm;
        best = j;
      }
    }
    if (best < 0 || best_norm <= 0.0)
      throw std::invalid_argument("d_optimal_select: candidates do not span the column space");
    selected.push_back(best);
    in_design[static_cast<std::size_t>(best)] = true;
    Eigen::VectorXd v = candidates.row(best).transpose();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) v -= q.dot(v) * q;
    basis.push_back(v / v.norm());
  }

  auto info_matrix = [&]() {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(k, k);
    for (int j : selected) {
      const Eigen::VectorXd x = candidates.row(j).transpose();
      M += x * x.transpose();
    }
    return M;
  };

  Eigen::MatrixXd M = info_matrix();
  Eigen::MatrixXd Minv = M.inverse();

  // Fill the remaining budget with the rows of largest prediction variance.
  while (static_cast<int>(selected.size()) < budget) {
    int best = -1;
    double best_d = -1.0;
    for (int j = 0; j < m; ++j) {
      if (in_design[static_cast<std::size_t>(j)]) continue;
      const Eigen::VectorXd x = candidates.row(j).transpose();
      const double d = x.dot(Minv * x);
      if (d > best_d + 1e-15) {
        best_d = d;
        best = j;
      }
    }
    selected.push_back(best);
    in_design[static_cast<std::size_t>(best)] = true;
    M = info_matrix();
    Minv = M.inverse();
  }

  // Fedorov exchange until no swap improves det(M).
  for (int pass = 0; pass < 200; ++pass) {
    double best_factor = 1.0 + 1e-12;
    int best_out = -1, best_in = -1;
    for (std::size_t si = 0; si < selected.size(); ++si) {
      const Eigen::VectorXd xi = candidates.row(selected[si]).transpose();
      const double di = xi.dot(Minv * xi);
      for (int j = 0; j < m; ++j) {
        if (in_design[static_cast<std::size_t>(j)]) continue;
        const Eigen::VectorXd xj = candidates.row(j).transpose();
        const double dj = xj.dot(Minv * xj);
        const double dij = xi.dot(Minv * xj);
        const double factor = (1.0 + dj) * (1.0 - di) + dij * dij;
        if (factor > best_factor) {
          best_factor = factor;
          best_out = static_cast<int>(si);
          best_in = j;
        }
      }
    }
    if (best_out < 0) break;
    in_design[static_cast<std::size_t>(selected[static_cast<std::size_t>(best_out)])] = false;
    selected[static_cast<std::size_t>(best_out)] = best_in;
    in_design[static_cast<std::size_t>(best_in)] = true;
    M = info_matrix();
    Minv = M.inverse();
  }

  std::sort(selected.begin(), selected.end());
  return selected;
}

GtiEstimate estimate(const Dataset& data, Transform t, int folds, int n_boot, double level,
                     std::uint64_t seed) {
  GtiEstimate e;
  const FittedModel model = fit_ols(data, t);
  e.point = gti_in_sample(data, model);
  e.cv_point = gti_cv(data, t, folds, seed);
  const auto ci = gti_bootstrap_ci(data, t, n_boot, level, seed + 1);
  e.ci_low = ci.first;
  e.ci_high = ci.second;
  e.n_boot = n_boot;
  e.folds = folds;
  return e;
}

Dataset load_dataset_csv(const std::string& path, const std::string& target_column) {
  const csv::Table table = csv::read_table(path);
  const int target = table.column(target_column);
  if (target < 0)
    throw std::runtime_error("dataset: no column named '" + target_column + "' in " + path);
  if (table.rows.empty()) throw std::runtime_error("dataset: no data rows in " + path);

  std::vector<int> feature_cols;
  std::vector<std::string> names;
  for (int j = 0; j < static_cast<int>(table.header.size()); ++j) {
    if (j == target) continue;
    try {
      csv::to_real(table.rows[0][static_cast<std::size_t>(j)]);
    } catch (const std::runtime_error&) {
      continue;  // non-numeric column (names, labels)
    }
    feature_cols.push_back(j);
    names.push_back(table.header[static_cast<std::size_t>(j)]);
  }
  if (feature_cols.empty())
    throw std::runtime_error("dataset: no numeric feature columns in " + path);

  Dataset data;
  data.targets = csv::numeric_column(table, target);
  data.features.resize(static_cast<Eigen::Index>(table.rows.size()),
                       static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t c = 0; c < feature_cols.size(); ++c)
    data.features.col(static_cast<Eigen::Index>(c)) = csv::numeric_column(table, feature_cols[c]);
  data.column_names = std::move(names);
  data.validate();
  return data;
}

}  // namespace glassbox::gti
