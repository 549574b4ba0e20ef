#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "linfermi/antisym_canonical.hpp"
#include "support.hpp"

using namespace linfermi;
using support::Gen;

namespace {

// Imaginary parts of the eigenvalues of a real antisymmetric matrix, sorted.
std::vector<double> spectrum_magnitudes(const Eigen::MatrixXd& A) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < A.rows(); ++i) out.push_back(std::abs(es.eigenvalues()[i].imag()));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Youla, SingleBlock) {
  Eigen::MatrixXd A(2, 2);
  A << 0, 1.7, -1.7, 0;
  const auto f = youla_factorize(A);
  EXPECT_LE((f.reconstruct() - A).norm(), 1e-14);
  EXPECT_NEAR(std::abs(f.alpha[0]), 1.7, 1e-14);
  EXPECT_NEAR(std::abs(f.U.determinant()), 1.0, 1e-14);
}

TEST(Youla, ZeroMatrix) {
  const auto f = youla_factorize(Eigen::MatrixXd::Zero(6, 6));
  EXPECT_EQ(f.alpha.norm(), 0.0);
  EXPECT_LE((f.U - Eigen::MatrixXd::Identity(6, 6)).norm(), 1e-15);
}

TEST(Youla, Preconditions) {
  EXPECT_THROW(youla_factorize(Eigen::MatrixXd::Zero(3, 3)), PreconditionError);
  Eigen::MatrixXd A(2, 2);
  A << 0, 1, 0.5, 0;
  EXPECT_THROW(youla_factorize(A), PreconditionError);
}

TEST(Youla, RandomReconstructionAndSpectrum) {
  Gen g(101);
  for (int draw = 0; draw < 40; ++draw) {
    const int n = g.integer(1, 6);
    const Eigen::MatrixXd A = g.antisymmetric(2 * n, 2.0);
    const auto f = youla_factorize(A);
    const double scale = std::max(1.0, A.norm());
    EXPECT_LE((f.U.transpose() * f.U - Eigen::MatrixXd::Identity(2 * n, 2 * n)).norm(), 1e-12);
    EXPECT_LE((f.reconstruct() - A).norm(), 1e-10 * scale);
    std::vector<double> ours;
    for (int l = 0; l < n; ++l) {
      ours.push_back(std::abs(f.alpha[l]));
      ours.push_back(std::abs(f.alpha[l]));
    }
    std::sort(ours.begin(), ours.end());
    const auto ref = spectrum_magnitudes(A);
    for (int i = 0; i < 2 * n; ++i) EXPECT_NEAR(ours[i], ref[i], 1e-9 * scale);
    for (int l = 0; l + 1 < n; ++l) EXPECT_GE(std::abs(f.alpha[l]) + 1e-12, std::abs(f.alpha[l + 1]));
  }
}

TEST(Youla, DegenerateSpectrumIsHandled) {
  Gen g(7);
  for (int draw = 0; draw < 10; ++draw) {
    const Eigen::MatrixXd Q = g.orthogonal(8);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(8, 8);
    const double a[] = {1.5, 1.5, 0.0, 0.0};
    for (int l = 0; l < 4; ++l) {
      L(2 * l, 2 * l + 1) = a[l];
      L(2 * l + 1, 2 * l) = -a[l];
    }
    const Eigen::MatrixXd A = Q * L * Q.transpose();
    const auto f = youla_factorize(A);
    EXPECT_LE((f.reconstruct() - A).norm(), 1e-10);
    EXPECT_LE((f.U.transpose() * f.U - Eigen::MatrixXd::Identity(8, 8)).norm(), 1e-12);
    // deterministic: the same input gives the same output
    const auto f2 = youla_factorize(A);
    EXPECT_EQ((f.U - f2.U).norm(), 0.0);
  }
}

TEST(Youla, FlipPairKeepsReconstruction) {
  Gen g(3);
  const Eigen::MatrixXd A = g.antisymmetric(6);
  auto f = youla_factorize(A);
  const double a0 = f.alpha[1];
  f.flip_pair(1);
  EXPECT_DOUBLE_EQ(f.alpha[1], -a0);
  EXPECT_LE((f.reconstruct() - A).norm(), 1e-10);
}

TEST(Givens, IdentityGivesEmptySchedule) {
  EXPECT_TRUE(fold_to_identity(Eigen::MatrixXd::Identity(6, 6)).empty());
}

TEST(Givens, SingleRotationAngle) {
  const double phi = 0.37;
  Eigen::MatrixXd U(2, 2);
  U << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  const auto s = fold_to_identity(U);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].plane, 2);
  EXPECT_NEAR(s[0].angle, phi, 1e-14);
}

TEST(Givens, RandomFoldReplaysToIdentity) {
  Gen g(41);
  for (int draw = 0; draw < 30; ++draw) {
    const int dim = 2 * g.integer(1, 5);
    const Eigen::MatrixXd U = g.orthogonal(dim);
    const auto s = fold_to_identity(U);
    EXPECT_LE(static_cast<int>(s.size()), dim * (dim - 1) / 2);
    const Eigen::MatrixXd folded = apply_givens(U, s, GivensDirection::forward);
    EXPECT_LE((folded - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff(), 1e-10);
    const Eigen::MatrixXd back = apply_givens(folded, s, GivensDirection::inverse);
    EXPECT_LE((back - U).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Givens, EachRotationZeroesItsTarget) {
  Gen g(43);
  const Eigen::MatrixXd U = g.orthogonal(8);
  const auto s = fold_to_identity(U);
  Eigen::MatrixXd M = U;
  for (const auto& r : s) {
    rotate_rows(M, r.plane, r.angle);
    EXPECT_LE(std::abs(M(r.plane - 1, r.column - 1)), 1e-12);
  }
}

TEST(Givens, RotationsPreserveColumnNorms) {
  Gen g(47);
  Eigen::MatrixXd M = Eigen::MatrixXd::Random(6, 4);
  const Eigen::VectorXd before = M.colwise().norm();
  for (int i = 0; i < 20; ++i) rotate_rows(M, g.integer(2, 6), g.uniform(-3, 3));
  EXPECT_LE((M.colwise().norm().transpose() - before).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Givens, ForwardThenInverseIsIdentity) {
  Gen g(53);
  GivensSchedule s;
  for (int i = 0; i < 12; ++i) s.push_back({g.integer(2, 6), 1, g.uniform(-3, 3)});
  const Eigen::MatrixXd M = Eigen::MatrixXd::Random(6, 6);
  EXPECT_LE((apply_givens(apply_givens(M, s, GivensDirection::forward), s, GivensDirection::inverse) - M).norm(), 1e-12);
  EXPECT_EQ((apply_givens(M, {}, GivensDirection::forward) - M).norm(), 0.0);
  GivensSchedule pair{{3, 1, 0.4}, {3, 1, -0.4}};
  EXPECT_LE((apply_givens(M, pair, GivensDirection::forward) - M).norm(), 1e-14);
}

TEST(Givens, Preconditions) {
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(4, 4);
  R(3, 3) = -1.0;
  EXPECT_THROW(fold_to_identity(R), std::exception);
  EXPECT_THROW(fold_to_identity(2.0 * Eigen::MatrixXd::Identity(4, 4)), std::exception);
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(4, 4);
  EXPECT_THROW(rotate_rows(M, 5, 0.1), PreconditionError);
  EXPECT_THROW(rotate_rows(M, 1, 0.1), PreconditionError);
}
