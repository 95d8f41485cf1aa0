#include "glassbox/counters.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "glassbox/csv.hpp"

namespace glassbox::counters {
namespace {

double rank_tolerance(const Eigen::MatrixXd& A, double sigma_max) {
  const double dim = static_cast<double>(std::max(A.rows(), A.cols()));
  return dim * sigma_max * std::numeric_limits<double>::epsilon();
}

bool all_numeric(const std::vector<std::string>& cells) {
  if (cells.empty()) return false;
  for (const std::string& c : cells) {
    try {
      csv::to_real(c);
    } catch (const std::exception&) {
      return false;
    }
  }
  return true;
}

// Matrix and vector files are plain numeric tables; a header row is allowed
// but not required.  A fully numeric first line is data, not a header, so it
// must not be swallowed.
csv::Table numeric_table(const std::string& path) {
  csv::Table table = csv::read_table(path);
  if (all_numeric(table.header)) {
    table.rows.insert(table.rows.begin(), table.header);
    for (std::size_t j = 0; j < table.header.size(); ++j) table.header[j] = "c" + std::to_string(j);
  }
  return table;
}

}  // namespace

IdentifiabilityResult identifiability(const Eigen::MatrixXd& A) {
  if (A.rows() < 1 || A.cols() < 1)
    throw std::invalid_argument("identifiability: empty matrix");
  if (!A.allFinite()) throw std::invalid_argument("identifiability: non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double tol = rank_tolerance(A, sigma.size() ? sigma(0) : 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > tol) ++rank;
  IdentifiabilityResult result;
  result.rank = rank;
  result.nullspace_dim = static_cast<int>(A.cols()) - rank;
  result.identifiable = result.nullspace_dim == 0;
  return result;
}

RecoveryResult recover(const CounterSystem& system) {
  const Eigen::MatrixXd& A = system.aggregation;
  if (A.rows() < 1 || A.cols() < 1) throw std::invalid_argument("recover: empty matrix");
  if (!A.allFinite() || !system.observed.allFinite())
    throw std::invalid_argument("recover: non-finite entries");
  if (system.observed.size() != A.rows())
    throw std::invalid_argument("recover: observed length must match row count");
  if (A.norm() == 0.0) throw std::invalid_argument("recover: all-zero aggregation matrix");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double tol = rank_tolerance(A, sigma(0));
  int rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > tol) ++rank;

  // Minimum-norm solution: invert only the nonzero singular values.
  Eigen::VectorXd inv_sigma = Eigen::VectorXd::Zero(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > tol) inv_sigma(i) = 1.0 / sigma(i);
  const Eigen::VectorXd theta =
      svd.matrixV() * inv_sigma.asDiagonal() * svd.matrixU().transpose() * system.observed;

  RecoveryResult result;
  result.theta_hat = theta;
  result.residual_norm = (system.observed - A * theta).norm();
  result.identifiable = rank == A.cols();
  result.sigma_min = sigma.size() >= A.cols() ? sigma(A.cols() - 1) : 0.0;
  result.error_bound = result.identifiable
                           ? result.residual_norm / result.sigma_min
                           : std::numeric_limits<double>::infinity();
  return result;
}

double subgaussian_bound(double sigma, double sigma_min, double delta) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("subgaussian_bound: sigma must be >= 0");
  if (!(sigma_min > 0.0)) throw std::invalid_argument("subgaussian_bound: sigma_min must be > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("subgaussian_bound: delta must lie in (0,1)");
  return sigma / sigma_min * std::sqrt(2.0 * std::log(1.0 / delta));
}

Eigen::MatrixXd minimal_augmentation(const Eigen::MatrixXd& A) {
  if (A.rows() < 1 || A.cols() < 1)
    throw std::invalid_argument("minimal_augmentation: empty matrix");
  if (!A.allFinite()) throw std::invalid_argument("minimal_augmentation: non-finite entries");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double tol = rank_tolerance(A, sigma.size() ? sigma(0) : 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > tol) ++rank;

  const Eigen::Index k = A.cols();
  const Eigen::Index missing = k - rank;
  Eigen::MatrixXd rows(missing, k);
  // Columns of V beyond the numerical rank span the nullspace of A.
  for (Eigen::Index i = 0; i < missing; ++i) rows.row(i) = svd.matrixV().col(rank + i).transpose();
  return rows;
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  return csv::numeric_matrix(numeric_table(path));
}

Eigen::VectorXd load_vector_csv(const std::string& path) {
  const csv::Table table = numeric_table(path);
  if (table.header.size() != 1)
    throw std::runtime_error("vector csv: expected exactly one column in " + path);
  return csv::numeric_column(table, 0);
}

}  // namespace glassbox::counters
