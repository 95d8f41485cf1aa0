#pragma once

#include <string>

#include <Eigen/Dense>

namespace glassbox::counters {

// Aggregated-counter system c = A theta (+ noise): A is d x k, c length d.
struct CounterSystem {
  Eigen::MatrixXd aggregation;
  Eigen::VectorXd observed;
  double noise_scale = 0.0;  // optional, >= 0
};

struct IdentifiabilityResult {
  bool identifiable = false;
  int rank = 0;
  int nullspace_dim = 0;
};

struct RecoveryResult {
  Eigen::VectorXd theta_hat;
  double residual_norm = 0.0;
  double sigma_min = 0.0;    // k-th largest singular value of A
  double error_bound = 0.0;  // residual_norm / sigma_min; +inf when not identifiable
  bool identifiable = false;
};

// Numerical rank via singular values: sigma_i counts as nonzero iff
// sigma_i > max(d, k) * sigma_max * machine epsilon.  Identifiable iff
// rank equals the column count.
IdentifiabilityResult identifiability(const Eigen::MatrixXd& A);

// Minimum-norm least-squares solution theta_hat = pinv(A) c.  When the
// system is identifiable, error_bound = |c - A theta_hat| / sigma_min(A)
// certifies |theta_hat - theta| for any truth theta with noise norm at most
// the residual; with larger noise the same bound holds with the true noise
// norm in the numerator.
RecoveryResult recover(const CounterSystem& system);

// sigma / sigma_min * sqrt(2 ln(1/delta)).
double subgaussian_bound(double sigma, double sigma_min, double delta);

// Rows that restore identifiability: an orthonormal basis of the nullspace
// of A (right singular vectors for the numerically zero singular values),
// exactly k - rank(A) of them, returned as rows.  Empty for full-rank A.
// Any nonsingular recombination of these rows works equally well.
Eigen::MatrixXd minimal_augmentation(const Eigen::MatrixXd& A);

// CSV loaders: header row plus numeric cells ('#' comments skipped).
Eigen::MatrixXd load_matrix_csv(const std::string& path);
Eigen::VectorXd load_vector_csv(const std::string& path);

}  // namespace glassbox::counters
