#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "glassbox/counters.hpp"
#include "glassbox/rng.hpp"

using namespace glassbox;

namespace {

// Row-reduction rank oracle, independent of the SVD path under test.
int rank_by_elimination(Eigen::MatrixXd m) {
  const double tol = 1e-9 * std::max(1.0, m.cwiseAbs().maxCoeff());
  int rank = 0;
  for (Eigen::Index col = 0; col < m.cols() && rank < m.rows(); ++col) {
    Eigen::Index pivot = -1;
    double best = tol;
    for (Eigen::Index r = rank; r < m.rows(); ++r)
      if (std::abs(m(r, col)) > best) {
        best = std::abs(m(r, col));
        pivot = r;
      }
    if (pivot < 0) continue;
    m.row(pivot).swap(m.row(rank));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (r == rank) continue;
      m.row(r) -= (m(r, col) / m(rank, col)) * m.row(rank);
    }
    ++rank;
  }
  return rank;
}

Eigen::MatrixXd random_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-2.0, 2.0);
  return m;
}

}  // namespace

TEST_CASE("identifiability agrees with an elimination rank oracle") {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + static_cast<int>(rng.bounded(5));
    const int k = 2 + static_cast<int>(rng.bounded(4));
    Eigen::MatrixXd A;
    if (trial % 2 == 0) {
      A = random_matrix(d, k, rng);
    } else {
      // Product of thin factors forces rank <= r.
      const int r = 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(std::min(d, k))));
      A = random_matrix(d, r, rng) * random_matrix(r, k, rng);
    }
    const counters::IdentifiabilityResult res = counters::identifiability(A);
    const int oracle = rank_by_elimination(A);
    CHECK(res.rank == oracle);
    CHECK(res.nullspace_dim == k - oracle);
    CHECK(res.identifiable == (oracle == k));
  }
}

TEST_CASE("noiseless recovery reproduces the planted parameters") {
  Rng rng(202);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + static_cast<int>(rng.bounded(4));
    const int d = k + static_cast<int>(rng.bounded(4));
    counters::CounterSystem sys;
    sys.aggregation = random_matrix(d, k, rng);
    if (counters::identifiability(sys.aggregation).rank < k) continue;
    Eigen::VectorXd theta(k);
    for (int j = 0; j < k; ++j) theta(j) = rng.uniform(-5.0, 5.0);
    sys.observed = sys.aggregation * theta;

    const counters::RecoveryResult res = counters::recover(sys);
    CHECK(res.identifiable);
    CHECK((res.theta_hat - theta).norm() < 1e-9 * (1.0 + theta.norm()));
    CHECK(res.residual_norm < 1e-9);
    CHECK(res.sigma_min > 0.0);
  }
}

TEST_CASE("minimum-norm solution is orthogonal to the nullspace") {
  // Rank-2 system over 3 unknowns: theta_hat must carry no nullspace part.
  Eigen::MatrixXd A(3, 3);
  A << 1.0, 0.0, 1.0,
       0.0, 1.0, 1.0,
       1.0, 1.0, 2.0;  // row3 = row1 + row2, column3 = column1 + column2
  counters::CounterSystem sys;
  sys.aggregation = A;
  sys.observed = Eigen::Vector3d(2.0, 3.0, 5.0);

  const counters::RecoveryResult res = counters::recover(sys);
  CHECK_FALSE(res.identifiable);
  CHECK(std::isinf(res.error_bound));

  const Eigen::MatrixXd null_rows = counters::minimal_augmentation(A);
  REQUIRE(null_rows.rows() == 1);
  CHECK(std::abs(null_rows.row(0).dot(res.theta_hat)) < 1e-10);

  // Residual is recomputed from the definition.
  const double resid = (sys.observed - A * res.theta_hat).norm();
  CHECK(res.residual_norm == doctest::Approx(resid).epsilon(1e-10));
  CHECK(res.residual_norm < 1e-10);  // consistent right-hand side

  // Among all solutions theta_hat + t * n, the returned one has minimum norm.
  const Eigen::VectorXd n = null_rows.row(0).transpose();
  CHECK(res.theta_hat.norm() <= (res.theta_hat + 0.5 * n).norm());
  CHECK(res.theta_hat.norm() <= (res.theta_hat - 0.5 * n).norm());
}

TEST_CASE("recovery error stays within the spectral noise bound") {
  Rng rng(303);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng.bounded(3));
    const int d = k + 1 + static_cast<int>(rng.bounded(3));
    counters::CounterSystem sys;
    sys.aggregation = random_matrix(d, k, rng);
    const counters::IdentifiabilityResult id = counters::identifiability(sys.aggregation);
    if (!id.identifiable) continue;

    Eigen::VectorXd theta(k);
    for (int j = 0; j < k; ++j) theta(j) = rng.uniform(-3.0, 3.0);
    Eigen::VectorXd noise(d);
    for (int i = 0; i < d; ++i) noise(i) = 0.05 * rng.normal();
    sys.observed = sys.aggregation * theta + noise;

    const counters::RecoveryResult res = counters::recover(sys);
    REQUIRE(res.identifiable);
    const double bound = noise.norm() / res.sigma_min;
    CHECK((res.theta_hat - theta).norm() <= bound * (1.0 + 1e-9));
    // The reported certificate uses the residual in place of the noise norm.
    CHECK(res.error_bound == doctest::Approx(res.residual_norm / res.sigma_min).epsilon(1e-12));
    CHECK(res.residual_norm <= noise.norm() * (1.0 + 1e-9));
  }
}

TEST_CASE("subgaussian tail bound evaluates its closed form") {
  // sigma = 1, sigma_min = 2, delta = e^-2: (1/2) sqrt(2 * 2) = 1.
  CHECK(counters::subgaussian_bound(1.0, 2.0, std::exp(-2.0)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(counters::subgaussian_bound(3.0, 1.5, 0.05) ==
        doctest::Approx(2.0 * std::sqrt(2.0 * std::log(20.0))).epsilon(1e-12));
  CHECK_THROWS_AS((void)counters::subgaussian_bound(-1.0, 1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS((void)counters::subgaussian_bound(1.0, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS((void)counters::subgaussian_bound(1.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)counters::subgaussian_bound(1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("augmentation rows complete rank-deficient systems") {
  Rng rng(404);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 3 + static_cast<int>(rng.bounded(3));
    const int r = 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(k - 1)));
    const int d = k + static_cast<int>(rng.bounded(3));
    const Eigen::MatrixXd A = random_matrix(d, r, rng) * random_matrix(r, k, rng);
    const int rank = counters::identifiability(A).rank;

    const Eigen::MatrixXd aug = counters::minimal_augmentation(A);
    CHECK(aug.rows() == k - rank);
    REQUIRE(aug.cols() == k);

    // Orthonormal rows, all annihilated by A.
    const Eigen::MatrixXd gram = aug * aug.transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((A * aug.transpose()).cwiseAbs().maxCoeff() < 1e-8 * A.cwiseAbs().maxCoeff());

    // Stacking them restores identifiability.
    Eigen::MatrixXd stacked(A.rows() + aug.rows(), k);
    stacked.topRows(A.rows()) = A;
    stacked.bottomRows(aug.rows()) = aug;
    CHECK(counters::identifiability(stacked).identifiable);
  }

  // Full-rank input needs no augmentation.
  const Eigen::MatrixXd full = random_matrix(5, 3, rng);
  if (counters::identifiability(full).identifiable)
    CHECK(counters::minimal_augmentation(full).rows() == 0);
}

TEST_CASE("counter CSV loaders parse matrices and single columns") {
  const std::string mpath = "counters_test_matrix.csv";
  {
    std::ofstream out(mpath);
    out << "# aggregation\n";
    out << "e1,e2,e3\n";
    out << "1,0,1\n";
    out << "0,2,0.5\n";
  }
  const Eigen::MatrixXd A = counters::load_matrix_csv(mpath);
  REQUIRE(A.rows() == 2);
  REQUIRE(A.cols() == 3);
  CHECK(A(1, 2) == doctest::Approx(0.5));
  std::remove(mpath.c_str());

  const std::string vpath = "counters_test_vector.csv";
  {
    std::ofstream out(vpath);
    out << "c\n";
    out << "1.5\n";
    out << "-2\n";
  }
  const Eigen::VectorXd c = counters::load_vector_csv(vpath);
  REQUIRE(c.size() == 2);
  CHECK(c(1) == doctest::Approx(-2.0));
  std::remove(vpath.c_str());

  const std::string wide = "counters_test_wide.csv";
  {
    std::ofstream out(wide);
    out << "a,b\n";
    out << "1,2\n";
  }
  CHECK_THROWS((void)counters::load_vector_csv(wide));
  std::remove(wide.c_str());
}

TEST_CASE("counter CSV loaders accept headerless numeric files") {
  const std::string mpath = "counters_test_matrix_nohdr.csv";
  {
    std::ofstream out(mpath);
    out << "# aggregation, no header row\n";
    out << "1,0,1\n";
    out << "0,1,1\n";
  }
  const Eigen::MatrixXd A = counters::load_matrix_csv(mpath);
  REQUIRE(A.rows() == 2);
  REQUIRE(A.cols() == 3);
  CHECK(A(0, 0) == doctest::Approx(1.0));
  CHECK(counters::identifiability(A).rank == 2);
  std::remove(mpath.c_str());

  const std::string vpath = "counters_test_vector_nohdr.csv";
  {
    std::ofstream out(vpath);
    out << "2.0\n";
    out << "3.0\n";
  }
  const Eigen::VectorXd c = counters::load_vector_csv(vpath);
  REQUIRE(c.size() == 2);
  CHECK(c(0) == doctest::Approx(2.0));
  std::remove(vpath.c_str());
}
