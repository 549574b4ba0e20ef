#pragma once

// Dense first-space operators (2^N x 2^N, occupation basis with mode 0 as the
// most significant bit) and the conversion between first-space operators and
// second-space coefficient vectors over ordered Majorana strings. These are
// the brute-force references used by the oracles; they are limited to small N.

#include <Eigen/Dense>

#include <cmath>
#include <complex>

#include "linfermi/errors.hpp"
#include "linfermi/fock.hpp"

namespace linfermi::dense {

using cplx = std::complex<double>;

inline constexpr int kMaxModes = 6;

inline void require_small(int n_modes) {
  if (n_modes < 1 || n_modes > kMaxModes)
    throw ResourceLimitError("dense first-space operators are limited to 1..6 modes");
}

inline Eigen::MatrixXcd annihilator(int mode, int n_modes) {
  require_small(n_modes);
  const Eigen::Index dim = Eigen::Index{1} << n_modes;
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(dim, dim);
  for (fock::Bits b = 0; b < static_cast<fock::Bits>(dim); ++b)
    if (auto r = fock::annihilate(b, mode, n_modes)) c(r->bits, b) = r->phase;
  return c;
}

/// sum_{jk} R_{jk} c_j^dag c_k.
inline Eigen::MatrixXcd quadratic_operator(const Eigen::MatrixXd& R) {
  const int n = static_cast<int>(R.rows());
  require_small(n);
  const Eigen::Index dim = Eigen::Index{1} << n;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  for (int j = 0; j < n; ++j) {
    const Eigen::MatrixXcd cj = annihilator(j, n);
    for (int k = 0; k < n; ++k)
      if (R(j, k) != 0.0) out += R(j, k) * cj.adjoint() * annihilator(k, n);
  }
  return out;
}

/// exp(X) for Hermitian X through its eigendecomposition.
inline Eigen::MatrixXcd hermitian_exp(const Eigen::MatrixXcd& X) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(X);
  if (es.info() != Eigen::Success) throw IntegrityError("Hermitian eigensolver failed");
  return es.eigenvectors() * es.eigenvalues().array().exp().matrix().cast<cplx>().asDiagonal() *
         es.eigenvectors().adjoint();
}

/// The ordered string g_1^{n_1} (i g_2)^{n_2} ... as a dense matrix.
inline Eigen::MatrixXcd string_operator(fock::Bits string_bits, int n_modes) {
  require_small(n_modes);
  const Eigen::Index dim = Eigen::Index{1} << n_modes;
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(dim, dim);
  for (fock::Bits b = 0; b < static_cast<fock::Bits>(dim); ++b) {
    const auto r = fock::apply_string(string_bits, b, n_modes);
    s(r.bits, b) = r.phase;
  }
  return s;
}

/// Second-space coefficients c_s = 2^{-N} Tr(s^dag X) for every ordered string s.
inline Eigen::VectorXcd to_string_basis(const Eigen::MatrixXcd& X, int n_modes) {
  require_small(n_modes);
  const Eigen::Index dim = Eigen::Index{1} << n_modes;
  if (X.rows() != dim || X.cols() != dim) throw PreconditionError("operator has the wrong dimension");
  const Eigen::Index dim2 = dim * dim;
  Eigen::VectorXcd out(dim2);
  for (fock::Bits s = 0; s < static_cast<fock::Bits>(dim2); ++s) {
    cplx tr = 0.0;
    for (fock::Bits b = 0; b < static_cast<fock::Bits>(dim); ++b) {
      const auto r = fock::apply_string(s, b, n_modes);
      tr += std::conj(r.phase) * X(r.bits, b);
    }
    out[s] = tr / static_cast<double>(dim);
  }
  return out;
}

/// Inverse of to_string_basis: X = sum_s c_s s.
inline Eigen::MatrixXcd from_string_basis(const Eigen::VectorXcd& c, int n_modes) {
  require_small(n_modes);
  const Eigen::Index dim = Eigen::Index{1} << n_modes;
  if (c.size() != dim * dim) throw PreconditionError("coefficient vector has the wrong dimension");
  Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(dim, dim);
  for (fock::Bits s = 0; s < static_cast<fock::Bits>(c.size()); ++s) {
    if (c[s] == cplx(0.0)) continue;
    for (fock::Bits b = 0; b < static_cast<fock::Bits>(dim); ++b) {
      const auto r = fock::apply_string(s, b, n_modes);
      X(r.bits, b) += c[s] * r.phase;
    }
  }
  return X;
}

}  // namespace linfermi::dense
