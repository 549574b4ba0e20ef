#pragma once

// Shared helpers for the test suites: random generators for the model inputs
// and dense first-space references assembled from Kronecker products, kept
// separate from the library's own operator code.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "linfermi/quadratic_model.hpp"

namespace support {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  bool coin() { return integer(0, 1) == 1; }

  MatrixXd symmetric(int n, double scale = 1.0) {
    MatrixXd m(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) m(j, k) = m(k, j) = uniform(-scale, scale);
    return m;
  }

  /// Symmetric with a nonzero nearest-neighbour chain, so the coupling graph is connected.
  MatrixXd irreducible_symmetric(int n, double scale = 1.0) {
    MatrixXd m = symmetric(n, scale);
    for (int j = 0; j + 1 < n; ++j) {
      const double mag = uniform(0.2 * scale, scale);
      m(j, j + 1) = m(j + 1, j) = coin() ? mag : -mag;
    }
    return m;
  }

  MatrixXd antisymmetric(int n, double scale = 1.0) {
    MatrixXd m = MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        m(j, k) = uniform(-scale, scale);
        m(k, j) = -m(j, k);
      }
    return m;
  }

  /// Haar-like orthogonal matrix from a QR factorization with sign fix.
  MatrixXd orthogonal(int n, bool special = true) {
    MatrixXd g(n, n);
    std::normal_distribution<double> normal;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) g(j, k) = normal(eng_);
    Eigen::HouseholderQR<MatrixXd> qr(g);
    MatrixXd q = qr.householderQ();
    const MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < n; ++k)
      if (r(k, k) < 0.0) q.col(k) *= -1.0;
    if (special && q.determinant() < 0.0) q.col(0) *= -1.0;
    return q;
  }

  VectorXcd complex_vector(Eigen::Index n) {
    VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(uniform(-1, 1), uniform(-1, 1));
    return v;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

// ---------------------------------------------------------------------------
// Dense first-space operators; site 0 is the leftmost Kronecker factor.

inline MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline MatrixXcd chain(int n, int site, const MatrixXcd& op, bool string) {
  MatrixXcd z(2, 2), id = MatrixXcd::Identity(2, 2);
  z << 1, 0, 0, -1;
  MatrixXcd out = MatrixXcd::Identity(1, 1);
  for (int s = 0; s < n; ++s) out = kron(out, s < site ? (string ? z : id) : s == site ? op : id);
  return out;
}

/// Annihilator c_j with a Jordan-Wigner string on the sites to its left.
inline MatrixXcd annihilator(int site, int n) {
  MatrixXcd lower(2, 2);
  lower << 0, 1, 0, 0;
  return chain(n, site, lower, true);
}

/// Majorana m (0-based): c + c^dag for even m, i (c^dag - c) for odd m.
inline MatrixXcd majorana(int m, int n) {
  const MatrixXcd c = annihilator(m / 2, n);
  if (m % 2 == 0) return c + c.adjoint();
  return cplx(0.0, 1.0) * (c.adjoint() - c);
}

/// Ordered string g_1^{n_1} (i g_2)^{n_2} ... for a 2N-bit pattern (slot 0 = most significant bit).
inline MatrixXcd string_op(std::uint64_t bits, int n) {
  const int slots = 2 * n;
  MatrixXcd out = MatrixXcd::Identity(Eigen::Index{1} << n, Eigen::Index{1} << n);
  for (int m = 0; m < slots; ++m)
    if ((bits >> (slots - 1 - m)) & 1) out = out * (m % 2 == 1 ? cplx(0.0, 1.0) : cplx(1.0)) * majorana(m, n);
  return out;
}

/// All ordered strings of an N-mode system, built once.
class StringBasis {
 public:
  explicit StringBasis(int n) : n_(n) {
    const std::uint64_t count = std::uint64_t{1} << (2 * n);
    for (std::uint64_t s = 0; s < count; ++s) ops_.push_back(string_op(s, n));
  }

  VectorXcd to_strings(const MatrixXcd& x) const {
    const double dim = static_cast<double>(Eigen::Index{1} << n_);
    VectorXcd c(static_cast<Eigen::Index>(ops_.size()));
    for (std::size_t s = 0; s < ops_.size(); ++s)
      c[static_cast<Eigen::Index>(s)] = ops_[s].cwiseProduct(x.conjugate()).sum();
    return c.conjugate() / dim;
  }

  MatrixXcd from_strings(const VectorXcd& c) const {
    MatrixXcd x = MatrixXcd::Zero(ops_[0].rows(), ops_[0].cols());
    for (std::size_t s = 0; s < ops_.size(); ++s)
      if (c[static_cast<Eigen::Index>(s)] != cplx(0.0)) x += c[static_cast<Eigen::Index>(s)] * ops_[s];
    return x;
  }

 private:
  int n_;
  std::vector<MatrixXcd> ops_;
};

inline MatrixXcd hamiltonian(const MatrixXd& h) {
  const int n = static_cast<int>(h.rows());
  const Eigen::Index dim = Eigen::Index{1} << n;
  MatrixXcd out = MatrixXcd::Zero(dim, dim);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (h(j, k) != 0.0) out += h(j, k) * annihilator(j, n).adjoint() * annihilator(k, n);
  return out;
}

inline MatrixXcd number_operator(int n) {
  MatrixXcd out = MatrixXcd::Zero(Eigen::Index{1} << n, Eigen::Index{1} << n);
  for (int j = 0; j < n; ++j) out += annihilator(j, n).adjoint() * annihilator(j, n);
  return out;
}

inline MatrixXcd expm_hermitian(const MatrixXcd& x) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(x);
  return es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() * es.eigenvectors().adjoint();
}

/// exp(-beta (H - mu M)) with beta*mu taken from the parameters.
inline MatrixXcd gibbs_operator(const MatrixXd& h, double beta, double beta_mu) {
  const int n = static_cast<int>(h.rows());
  return expm_hermitian(-beta * hamiltonian(h) + beta_mu * number_operator(n));
}

/// Jump operators L_n = sum_j v_j c_j + w_j c_j^dag from slot coefficients:
/// v = B_odd + B_even, w = B_odd - B_even (slots counted from 1).
inline std::vector<MatrixXcd> jump_operators(const MatrixXd& B) {
  const int n = static_cast<int>(B.cols() / 2);
  std::vector<MatrixXcd> out;
  for (Eigen::Index r = 0; r < B.rows(); ++r) {
    MatrixXcd l = MatrixXcd::Zero(Eigen::Index{1} << n, Eigen::Index{1} << n);
    for (int j = 0; j < n; ++j) {
      const double v = B(r, 2 * j) + B(r, 2 * j + 1);
      const double w = B(r, 2 * j) - B(r, 2 * j + 1);
      const MatrixXcd c = annihilator(j, n);
      l += v * c + w * c.adjoint();
    }
    out.push_back(l);
  }
  return out;
}

/// -i[H, rho] + sum_n 2 L rho L^dag - {L^dag L, rho}.
inline MatrixXcd lindblad(const MatrixXcd& H, const std::vector<MatrixXcd>& Ls, const MatrixXcd& rho) {
  const cplx i(0.0, 1.0);
  MatrixXcd out = -i * (H * rho - rho * H);
  for (const auto& L : Ls) {
    const MatrixXcd LdL = L.adjoint() * L;
    out += 2.0 * L * rho * L.adjoint() - LdL * rho - rho * LdL;
  }
  return out;
}

/// The Lindblad generator as a 4^N x 4^N matrix on string coefficients.
inline MatrixXcd lindblad_in_strings(const MatrixXd& h, const MatrixXd& B) {
  const int n = static_cast<int>(h.rows());
  const StringBasis basis(n);
  const Eigen::Index d2 = Eigen::Index{1} << (2 * n);
  const MatrixXcd H = hamiltonian(h);
  const auto Ls = jump_operators(B);
  MatrixXcd out(d2, d2);
  for (Eigen::Index s = 0; s < d2; ++s) {
    VectorXcd e = VectorXcd::Zero(d2);
    e[s] = 1.0;
    out.col(s) = basis.to_strings(lindblad(H, Ls, basis.from_strings(e)));
  }
  return out;
}

/// Lindblad generator applied to one string-coefficient vector.
inline VectorXcd lindblad_apply(const MatrixXd& h, const MatrixXd& B, const VectorXcd& c) {
  const StringBasis basis(static_cast<int>(h.rows()));
  return basis.to_strings(lindblad(hamiltonian(h), jump_operators(B), basis.from_strings(c)));
}

/// Kronecker product of per-pair vectors a|00) + b|11), scaled.
inline VectorXcd pair_product(const std::vector<std::pair<cplx, cplx>>& pairs, cplx scale = 1.0) {
  VectorXcd out = VectorXcd::Constant(1, scale);
  for (const auto& [a, b] : pairs) {
    VectorXcd p = VectorXcd::Zero(4);
    p[0] = a;
    p[3] = b;
    VectorXcd next(out.size() * 4);
    for (Eigen::Index i = 0; i < out.size(); ++i) next.segment(4 * i, 4) = out[i] * p;
    out = next;
  }
  return out;
}

inline double fidelity(const VectorXcd& a, const VectorXcd& b) {
  return std::norm(a.dot(b)) / (a.squaredNorm() * b.squaredNorm());
}

inline linfermi::BathSet random_baths(Gen& g, int n, int n_baths) {
  MatrixXd B(n_baths, 2 * n);
  for (int r = 0; r < n_baths; ++r)
    for (int c = 0; c < 2 * n; ++c) B(r, c) = g.uniform(-1, 1);
  return linfermi::BathSet(B);
}

}  // namespace support
