#pragma once

// Real canonical form of antisymmetric matrices, A = U Lambda U^T with Lambda
// made of 2x2 blocks [[0, a_l], [-a_l, 0]], and the Givens folding that reduces
// an orthonormal U to the identity with rotations on adjacent rows.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "linfermi/errors.hpp"

namespace linfermi {

struct CanonicalFactorization {
  Eigen::MatrixXd U;
  Eigen::VectorXd alpha;

  Eigen::MatrixXd lambda_matrix() const {
    const auto n = alpha.size();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (Eigen::Index l = 0; l < n; ++l) {
      L(2 * l, 2 * l + 1) = alpha[l];
      L(2 * l + 1, 2 * l) = -alpha[l];
    }
    return L;
  }

  Eigen::MatrixXd reconstruct() const { return U * lambda_matrix() * U.transpose(); }

  /// Swap the two columns of plane l and negate alpha_l; U Lambda U^T is unchanged.
  void flip_pair(Eigen::Index l) {
    U.col(2 * l).swap(U.col(2 * l + 1));
    alpha[l] = -alpha[l];
  }
};

namespace detail {

// Orthonormalize the columns of `candidates` in index order, keeping at most `want`.
template <typename Matrix>
Matrix gram_schmidt(const Matrix& candidates, Eigen::Index want, double drop_tol) {
  Matrix basis(candidates.rows(), want);
  Eigen::Index have = 0;
  for (Eigen::Index c = 0; c < candidates.cols() && have < want; ++c) {
    auto v = candidates.col(c).eval();
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index b = 0; b < have; ++b) v -= basis.col(b) * basis.col(b).dot(v);
    const double nrm = v.norm();
    if (nrm > drop_tol) basis.col(have++) = v / nrm;
  }
  if (have != want) throw IntegrityError("could not build an orthonormal basis for a degenerate subspace");
  return basis;
}

}  // namespace detail

/// Canonical factorization through the Hermitian eigenproblem of iA. Returned
/// alpha are nonnegative and sorted descending; within a degenerate eigenspace
/// the basis comes from Gram-Schmidt of projected unit vectors in index order.
inline CanonicalFactorization youla_factorize(const Eigen::MatrixXd& A) {
  using cplx = std::complex<double>;
  const Eigen::Index dim = A.rows();
  if (A.cols() != dim) throw PreconditionError("antisymmetric matrix must be square");
  if (dim % 2 != 0) throw PreconditionError("antisymmetric matrix must have even dimension");
  const double scale = A.norm();
  if ((A + A.transpose()).norm() > 1e-12 * scale)
    throw PreconditionError("matrix is not antisymmetric within tolerance");
  const Eigen::Index n = dim / 2;

  CanonicalFactorization out{Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(n)};
  if (scale == 0.0) return out;

  const Eigen::MatrixXcd iA = cplx(0.0, 1.0) * A.cast<cplx>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(iA);
  if (solver.info() != Eigen::Success) throw IntegrityError("Hermitian eigensolver failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();  // ascending
  const Eigen::MatrixXcd& vecs = solver.eigenvectors();
  const double zero_tol = 1e-12 * scale;
  const double cluster_tol = 1e-12 * scale;
  const double gs_tol = 0.1 / std::sqrt(static_cast<double>(dim));

  // The positive half of the spectrum: the top n eigenvalues.
  Eigen::Index col = 0;
  Eigen::Index l = 0;
  Eigen::Index top = dim - 1;
  while (l < n && ev[top] > zero_tol) {
    Eigen::Index lo = top;
    while (lo - 1 >= dim - n && ev[lo - 1] > zero_tol && ev[top] - ev[lo - 1] <= cluster_tol) --lo;
    const Eigen::Index mult = top - lo + 1;
    const Eigen::MatrixXcd span = vecs.middleCols(lo, mult);
    const Eigen::MatrixXcd projector = span * span.adjoint();
    const Eigen::MatrixXcd basis = detail::gram_schmidt(projector, mult, gs_tol);
    const double value = ev.segment(lo, mult).mean();
    for (Eigen::Index b = 0; b < mult; ++b) {
      Eigen::VectorXcd v = basis.col(b);
      Eigen::Index p = 0;
      for (Eigen::Index i = 1; i < dim; ++i)
        if (std::abs(v[i]) > std::abs(v[p]) + 1e-12) p = i;
      // phase so that v_p is positive imaginary: the odd column then peaks at p
      v *= cplx(0.0, 1.0) * std::conj(v[p]) / std::abs(v[p]);
      out.U.col(col) = std::sqrt(2.0) * v.imag();
      out.U.col(col + 1) = std::sqrt(2.0) * v.real();
      out.alpha[l] = value;
      col += 2;
      ++l;
    }
    top = lo - 1;
  }

  if (l < n) {
    // Real kernel: the 2(n - l) eigenvectors of smallest |eigenvalue|.
    const Eigen::Index kernel_dim = 2 * (n - l);
    std::vector<Eigen::Index> order(dim);
    for (Eigen::Index i = 0; i < dim; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(ev[a]) < std::abs(ev[b]); });
    Eigen::MatrixXcd span(dim, kernel_dim);
    for (Eigen::Index i = 0; i < kernel_dim; ++i) span.col(i) = vecs.col(order[i]);
    const Eigen::MatrixXd projector = (span * span.adjoint()).real();
    out.U.rightCols(kernel_dim) = detail::gram_schmidt(projector, kernel_dim, gs_tol);
  }
  return out;
}

struct GivensRotation {
  int plane;     // acts on rows (plane - 1, plane), 1-based as in the folding protocol
  int column;    // 1-based column whose entry the rotation cleared
  double angle;  // radians
};

using GivensSchedule = std::vector<GivensRotation>;

enum class GivensDirection { forward, inverse };

/// Rows (j-1, j) <- (c r_{j-1} + s r_j, c r_j - s r_{j-1}), 1-based.
inline void rotate_rows(Eigen::MatrixXd& M, int plane, double angle) {
  if (plane < 2 || plane > M.rows())
    throw PreconditionError("Givens plane index out of range");
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const Eigen::RowVectorXd upper = M.row(plane - 2);
  const Eigen::RowVectorXd lower = M.row(plane - 1);
  M.row(plane - 2) = c * upper + s * lower;
  M.row(plane - 1) = c * lower - s * upper;
}

inline Eigen::MatrixXd apply_givens(Eigen::MatrixXd M, const GivensSchedule& schedule,
                                    GivensDirection direction) {
  if (direction == GivensDirection::forward) {
    for (const auto& g : schedule) rotate_rows(M, g.plane, g.angle);
  } else {
    for (auto it = schedule.rbegin(); it != schedule.rend(); ++it) rotate_rows(M, it->plane, -it->angle);
  }
  return M;
}

/// Column by column, clear the entries below the diagonal from the bottom up.
/// Requires det(U) = +1 so that the folded matrix is exactly the identity.
inline GivensSchedule fold_to_identity(const Eigen::MatrixXd& U) {
  const Eigen::Index dim = U.rows();
  if (U.cols() != dim) throw PreconditionError("matrix to fold must be square");
  if ((U.transpose() * U - Eigen::MatrixXd::Identity(dim, dim)).norm() > 1e-10)
    throw PreconditionError("matrix to fold is not orthonormal");
  if (dim > 0 && U.determinant() < 0.0)
    throw PreconditionError("matrix to fold has determinant -1; proper rotations cannot reach the identity");

  GivensSchedule schedule;
  Eigen::MatrixXd work = U;
  for (int k = 1; k < dim; ++k) {
    for (int j = static_cast<int>(dim); j > k; --j) {
      const double below = work(j - 1, k - 1);
      const double above = work(j - 2, k - 1);
      if (std::abs(below) <= 1e-15 && above >= 0.0) continue;
      const double angle = std::atan2(below, above);
      rotate_rows(work, j, angle);
      schedule.push_back({j, k, angle});
    }
  }
  return schedule;
}

}  // namespace linfermi
