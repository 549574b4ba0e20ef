#pragma once

// Hamiltonian and bath data model for number-conserving quadratic fermion
// systems, single-body spectra, thermodynamic closed forms, and the argument
// matrices of exp(-beta (H - mu M)).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "linfermi/errors.hpp"

namespace linfermi {

/// Real symmetric single-body coefficients h_{jk} of H = sum h_{jk} c_j^dag c_k.
class CoefficientMatrix {
 public:
  CoefficientMatrix() = default;

  explicit CoefficientMatrix(Eigen::MatrixXd h) : h_(std::move(h)) {
    if (h_.rows() == 0 || h_.rows() != h_.cols())
      throw PreconditionError("coefficient matrix must be square and non-empty");
    if (!h_.allFinite()) throw PreconditionError("coefficient matrix has non-finite entries");
    for (Eigen::Index j = 0; j < h_.rows(); ++j)
      for (Eigen::Index k = j + 1; k < h_.cols(); ++k)
        if (h_(j, k) != h_(k, j))
          throw PreconditionError("coefficient matrix is not symmetric at (" + std::to_string(j) +
                                  "," + std::to_string(k) + ")");
  }

  int n_sites() const { return static_cast<int>(h_.rows()); }
  const Eigen::MatrixXd& matrix() const { return h_; }
  double operator()(int j, int k) const { return h_(j, k); }

  static CoefficientMatrix tridiagonal(int n, double hopping = 1.0, double onsite = 0.0) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
      h(j, j) = onsite;
      if (j + 1 < n) h(j, j + 1) = h(j + 1, j) = hopping;
    }
    return CoefficientMatrix(std::move(h));
  }

  /// h(j,k) = d_j delta_jk + (1 - delta_jk) omega
  static CoefficientMatrix diagonal_plus_uniform(const Eigen::VectorXd& diagonal, double omega) {
    const auto n = diagonal.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Constant(n, n, omega);
    h.diagonal() = diagonal;
    return CoefficientMatrix(std::move(h));
  }

 private:
  Eigen::MatrixXd h_;
};

/// Inverse temperature and chemical potential. `fixed_beta_mu`, when set,
/// replaces the product beta*mu so that beta = 0 at constant fugacity is expressible.
struct ThermoParams {
  double beta = 0.0;
  double mu = 0.0;
  std::optional<double> fixed_beta_mu;

  static ThermoParams with_fugacity(double beta, double beta_mu) {
    ThermoParams p{beta, beta != 0.0 ? beta_mu / beta : 0.0, beta_mu};
    return p;
  }

  double beta_mu() const { return fixed_beta_mu ? *fixed_beta_mu : beta * mu; }

  void validate() const {
    if (!std::isfinite(beta) || !std::isfinite(mu) || !std::isfinite(beta_mu()))
      throw PreconditionError("thermodynamic parameters must be finite");
    if (beta < 0.0) throw PreconditionError("beta must be nonnegative");
  }
};

/// Linear bath family L_n = sum_j v_j^(n) c_j + w_j^(n) c_j^dag, stored through the
/// Majorana-slot coefficients B(n, 2j) = (v+w)/2, B(n, 2j+1) = (v-w)/2 (0-based slots).
class BathSet {
 public:
  BathSet() = default;

  /// Rows are baths, columns are the 2N Majorana slots.
  explicit BathSet(Eigen::MatrixXd b) : b_(std::move(b)) {
    if (b_.cols() % 2 != 0) throw PreconditionError("bath matrix needs an even number of slots");
    if (!b_.allFinite()) throw PreconditionError("bath coefficients must be finite");
  }

  static BathSet from_vw(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w) {
    if (v.rows() != w.rows() || v.cols() != w.cols())
      throw PreconditionError("v and w must have identical shape");
    Eigen::MatrixXd b(v.rows(), 2 * v.cols());
    for (Eigen::Index n = 0; n < v.rows(); ++n)
      for (Eigen::Index j = 0; j < v.cols(); ++j) {
        b(n, 2 * j) = (v(n, j) + w(n, j)) / 2.0;
        b(n, 2 * j + 1) = (v(n, j) - w(n, j)) / 2.0;
      }
    return BathSet(std::move(b));
  }

  static BathSet none(int n_sites) { return BathSet(Eigen::MatrixXd::Zero(0, 2 * n_sites)); }

  int n_baths() const { return static_cast<int>(b_.rows()); }
  int n_sites() const { return static_cast<int>(b_.cols() / 2); }
  const Eigen::MatrixXd& coefficients() const { return b_; }
  bool empty() const { return b_.rows() == 0 || b_.isZero(0.0); }

  /// Eigenvalue of the fully occupied second-space state: -4 sum_n sum_j (B_odd^2 + B_even^2).
  double fully_occupied_eigenvalue() const { return -4.0 * b_.squaredNorm(); }

 private:
  Eigen::MatrixXd b_;
};

struct SingleBodySpectrum {
  Eigen::VectorXd energies;   // ascending
  Eigen::MatrixXd modes;      // column k is the k-th eigenvector
};

/// Eigenpairs of h, ascending, each eigenvector's first nonzero component positive.
inline SingleBodySpectrum single_body_spectrum(const CoefficientMatrix& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix());
  if (solver.info() != Eigen::Success) throw IntegrityError("symmetric eigensolver failed");
  SingleBodySpectrum out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index k = 0; k < out.modes.cols(); ++k) {
    for (Eigen::Index j = 0; j < out.modes.rows(); ++j) {
      const double c = out.modes(j, k);
      if (std::abs(c) > 1e-14) {
        if (c < 0.0) out.modes.col(k) *= -1.0;
        break;
      }
    }
  }
  return out;
}

/// 1-based map from a Majorana slot l to its mode, f(l) = (2l + 1 - (-1)^l) / 4.
constexpr int majorana_mode(int l) { return (2 * l + 1 - ((l % 2 == 0) ? 1 : -1)) / 4; }

struct ArgumentMatrices {
  Eigen::MatrixXd R;  // -beta h + beta mu I
  Eigen::MatrixXd A;  // antisymmetric 2N x 2N Majorana form
  double A0 = 0.0;    // (1/2) tr R
};

inline ArgumentMatrices argument_matrices(const CoefficientMatrix& h, const ThermoParams& p) {
  p.validate();
  const int n = h.n_sites();
  ArgumentMatrices out;
  out.R = -p.beta * h.matrix();
  out.R.diagonal().array() += p.beta_mu();
  out.A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int j = 1; j <= 2 * n; ++j)
    for (int k = 1; k <= 2 * n; ++k) {
      const int sign_diff = ((k % 2 == 0) ? 1 : -1) - ((j % 2 == 0) ? 1 : -1);
      if (sign_diff != 0)
        out.A(j - 1, k - 1) = sign_diff * out.R(majorana_mode(j) - 1, majorana_mode(k) - 1);
    }
  out.A0 = 0.5 * out.R.trace();
  return out;
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

struct PartitionFunction {
  double log_xi = 0.0;
  double xi = 1.0;  // may be +inf when log_xi exceeds the double range
};

inline PartitionFunction grand_partition_closed_form(const Eigen::VectorXd& energies,
                                                     const ThermoParams& p) {
  p.validate();
  PartitionFunction out{0.0, 0.0};
  for (Eigen::Index j = 0; j < energies.size(); ++j)
    out.log_xi += softplus(p.beta_mu() - p.beta * energies[j]);
  out.xi = std::exp(out.log_xi);
  return out;
}

inline double fermi_dirac(double energy, const ThermoParams& p) {
  const double z = p.beta * energy - p.beta_mu();
  if (z > 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (std::exp(z) + 1.0);
}

struct BlockPartition {
  std::vector<std::vector<int>> blocks;  // each sorted; blocks ordered by first site

  int n_blocks() const { return static_cast<int>(blocks.size()); }
  bool irreducible() const { return blocks.size() == 1; }
  std::vector<int> sizes() const {
    std::vector<int> d;
    for (const auto& b : blocks) d.push_back(static_cast<int>(b.size()));
    return d;
  }
  /// block index per site
  std::vector<int> labels(int n_sites) const {
    std::vector<int> lab(n_sites, -1);
    for (int b = 0; b < n_blocks(); ++b)
      for (int s : blocks[b]) lab[s] = b;
    return lab;
  }
};

/// Connected components of the graph with an edge (j,k) wherever h(j,k) != 0 exactly.
inline BlockPartition irreducibility_check(const CoefficientMatrix& h) {
  const int n = h.n_sites();
  std::vector<int> label(n, -1);
  BlockPartition out;
  for (int start = 0; start < n; ++start) {
    if (label[start] >= 0) continue;
    const int id = out.n_blocks();
    std::vector<int> block;
    std::queue<int> todo;
    todo.push(start);
    label[start] = id;
    while (!todo.empty()) {
      const int j = todo.front();
      todo.pop();
      block.push_back(j);
      for (int k = 0; k < n; ++k)
        if (k != j && label[k] < 0 && h(j, k) != 0.0) {
          label[k] = id;
          todo.push(k);
        }
    }
    std::sort(block.begin(), block.end());
    out.blocks.push_back(std::move(block));
  }
  return out;
}

}  // namespace linfermi
