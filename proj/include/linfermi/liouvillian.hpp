#pragma once

// Second-space Liouvillian of the Lindblad equation with a quadratic
// Hamiltonian and linear baths:
//   * the Majorana structure matrix (4N x 4N coefficients of g~_j g~_k),
//   * the sparse superoperator assembled from the creation/annihilation form,
//   * kernel extraction for the stationary state (dense SVD or sparse solve),
//   * the product-form stationary state built from the normal modes of the
//     structure matrix and applied to |1...1) as matrix-product operators.
//
// The creation/annihilation form reproduces the Lindblad generator on the
// parity-even sector of the second space (strings with an even number of
// Majoranas), which contains every physical density matrix. Kernel searches
// are restricted to that sector.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "linfermi/errors.hpp"
#include "linfermi/fock.hpp"
#include "linfermi/mps.hpp"
#include "linfermi/quadratic_model.hpp"

namespace linfermi {

using SparseMatrixC = Eigen::SparseMatrix<cplx, Eigen::ColMajor, std::int64_t>;

inline void require_compatible(const CoefficientMatrix& h, const BathSet& baths) {
  if (baths.n_sites() != h.n_sites())
    throw PreconditionError("bath slots (" + std::to_string(2 * baths.n_sites()) +
                            ") do not match the Hamiltonian size (" + std::to_string(h.n_sites()) + ")");
}

inline CoefficientMatrix zero_hamiltonian(int n_sites) {
  return CoefficientMatrix(Eigen::MatrixXd::Zero(n_sites, n_sites));
}

// ---------------------------------------------------------------------------
// Majorana structure matrix

/// L~ = sum_{jk} coeffs(j,k) g~_j g~_k = scalar + sum_{j<k} 2 antisym(j,k) g~_j g~_k.
struct StructureMatrix {
  Eigen::MatrixXcd coeffs;

  int n_modes() const { return static_cast<int>(coeffs.rows() / 4); }
  cplx scalar() const { return coeffs.trace(); }
  Eigen::MatrixXcd antisym() const { return (coeffs - coeffs.transpose()) / 2.0; }

  /// Normalized Hilbert-Schmidt norm sqrt(Tr(L~^dag L~) / 4^N), computed from the
  /// expansion over orthonormal Majorana monomials.
  double hs_norm() const {
    const Eigen::MatrixXcd a = antisym();
    double sq = std::norm(scalar());
    for (Eigen::Index j = 0; j < a.rows(); ++j)
      for (Eigen::Index k = j + 1; k < a.cols(); ++k) sq += std::norm(2.0 * a(j, k));
    return std::sqrt(sq);
  }
};

/// Term-by-term transcription of the Majorana expansion of the Liouvillian
/// (indices below are the 1-based Majorana labels of the expansion).
inline StructureMatrix build_structure_matrix(const CoefficientMatrix& h, const BathSet& baths) {
  require_compatible(h, baths);
  const int n = h.n_sites();
  StructureMatrix sm{Eigen::MatrixXcd::Zero(4 * n, 4 * n)};
  auto at = [&](int a, int b) -> cplx& { return sm.coeffs(a - 1, b - 1); };
  const cplx i1(0.0, 1.0);

  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k) {
      const double hjk = h(j - 1, k - 1);
      if (hjk == 0.0) continue;
      at(4 * k, 4 * j - 3) += hjk / 2.0;
      at(4 * j - 2, 4 * k - 1) += hjk / 2.0;
    }

  const Eigen::MatrixXd& B = baths.coefficients();
  for (int m = 0; m < baths.n_baths(); ++m) {
    auto odd = [&](int j) { return B(m, 2 * j - 2); };  // B_{2j-1}
    auto even = [&](int j) { return B(m, 2 * j - 1); };  // B_{2j}
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= n; ++k) {
        const double ee = even(j) * even(k);
        const double oo = odd(j) * odd(k);
        const double oe = odd(j) * even(k);
        const double eo = even(j) * odd(k);
        at(4 * j, 4 * k) -= ee;
        at(4 * j - 1, 4 * k - 1) -= ee;
        at(4 * j - 2, 4 * k - 2) -= oo;
        at(4 * j - 3, 4 * k - 3) -= oo;
        at(4 * j - 2, 4 * k) += 2.0 * oe;
        at(4 * j - 1, 4 * k - 3) += 2.0 * eo;
        at(4 * j - 2, 4 * k - 3) += 2.0 * i1 * oo;
        at(4 * j, 4 * k - 1) += 2.0 * i1 * ee;
        at(4 * j - 3, 4 * k) += 2.0 * i1 * oe;
        at(4 * j - 2, 4 * k - 1) += 2.0 * i1 * oe;
      }
  }
  return sm;
}

// ---------------------------------------------------------------------------
// Creation/annihilation form: L~ = sum_ab D(a,b) c~_a^dag c~_b + E(a,b) c~_a^dag c~_b^dag

struct ModeForm {
  Eigen::MatrixXcd D;
  Eigen::MatrixXcd E;
};

inline ModeForm mode_form(const CoefficientMatrix& h, const BathSet& baths) {
  require_compatible(h, baths);
  const int n = h.n_sites();
  const int s = 2 * n;
  ModeForm f{Eigen::MatrixXcd::Zero(s, s), Eigen::MatrixXcd::Zero(s, s)};
  const cplx i1(0.0, 1.0);
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k) {
      const double hjk = h(j - 1, k - 1);
      if (hjk == 0.0) continue;
      f.D(2 * k - 1, 2 * j - 2) += i1 * hjk;
      f.D(2 * j - 2, 2 * k - 1) += i1 * hjk;
    }
  const Eigen::MatrixXd& B = baths.coefficients();
  for (int m = 0; m < baths.n_baths(); ++m) {
    Eigen::VectorXd l1(s), l2(s), r1a(s), r1c(s), r2a(s), r2c(s);
    for (int j = 0; j < n; ++j) {
      const double bo = B(m, 2 * j);
      const double be = B(m, 2 * j + 1);
      l1[2 * j] = -bo, l1[2 * j + 1] = be;
      l2[2 * j] = bo, l2[2 * j + 1] = be;
      r1a[2 * j] = bo, r1a[2 * j + 1] = -be;
      r1c[2 * j] = bo, r1c[2 * j + 1] = be;
      r2a[2 * j] = -bo, r2a[2 * j + 1] = -be;
      r2c[2 * j] = bo, r2c[2 * j + 1] = -be;
    }
    f.D += (2.0 * (l1 * r1a.transpose() + l2 * r2a.transpose())).cast<cplx>();
    f.E += (2.0 * (l1 * r1c.transpose() + l2 * r2c.transpose())).cast<cplx>();
  }
  return f;
}

/// Sparse matrix of the Liouvillian on the 4^N second-space Fock basis.
class SuperOperator {
 public:
  SuperOperator(SparseMatrixC m, int n_modes) : m_(std::move(m)), n_modes_(n_modes) {}

  const SparseMatrixC& matrix() const { return m_; }
  int n_modes() const { return n_modes_; }
  Eigen::Index dim() const { return m_.rows(); }
  Eigen::Index nnz() const { return m_.nonZeros(); }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const {
    if (v.size() != dim()) throw PreconditionError("vector dimension does not match the superoperator");
    return m_ * v;
  }

  /// Normalized Hilbert-Schmidt norm: Frobenius norm over sqrt(4^N).
  double hs_norm() const { return m_.norm() / std::sqrt(static_cast<double>(dim())); }

  Eigen::MatrixXcd to_dense() const {
    if (n_modes_ > 6) throw ResourceLimitError("dense superoperator export is limited to N <= 6");
    return Eigen::MatrixXcd(m_);
  }

  /// One "row col re im" line per stored entry, 0-based indices.
  void write_coordinates(std::ostream& os) const {
    os.precision(17);
    for (int c = 0; c < m_.outerSize(); ++c)
      for (SparseMatrixC::InnerIterator it(m_, c); it; ++it)
        os << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
  }

 private:
  SparseMatrixC m_;
  int n_modes_;
};

inline constexpr double kDefaultMaxNonZeros = 6e7;

inline SuperOperator superoperator_from_mode_form(const ModeForm& f, int n_modes,
                                                  double max_nonzeros = kDefaultMaxNonZeros) {
  const int sites = 2 * n_modes;
  if (n_modes < 1 || n_modes > 12) throw PreconditionError("superoperator supports 1..12 modes");
  struct Term {
    int a, b;
    cplx value;
    bool pair;  // c~_a^dag c~_b^dag instead of c~_a^dag c~_b
  };
  std::vector<Term> terms;
  for (int a = 0; a < sites; ++a)
    for (int b = 0; b < sites; ++b) {
      if (f.D(a, b) != cplx(0.0)) terms.push_back({a, b, f.D(a, b), false});
      if (f.E(a, b) != cplx(0.0) && a != b) terms.push_back({a, b, f.E(a, b), true});
    }
  const auto dim = static_cast<std::int64_t>(1) << sites;
  if (static_cast<double>(dim) * static_cast<double>(terms.size()) > max_nonzeros)
    throw ResourceLimitError("superoperator would exceed " + std::to_string(max_nonzeros) +
                             " stored entries");
  std::vector<Eigen::Triplet<cplx, std::int64_t>> trip;
  trip.reserve(static_cast<std::size_t>(dim) * terms.size());
  for (std::int64_t col = 0; col < dim; ++col) {
    const auto bits = static_cast<fock::Bits>(col);
    for (const auto& t : terms) {
      const auto first = t.pair ? fock::create(bits, t.b, sites) : fock::annihilate(bits, t.b, sites);
      if (!first) continue;
      const auto second = fock::create(first->bits, t.a, sites);
      if (!second) continue;
      trip.emplace_back(static_cast<std::int64_t>(second->bits), col, t.value * first->phase * second->phase);
    }
  }
  SparseMatrixC m(dim, dim);
  m.setFromTriplets(trip.begin(), trip.end());
  m.prune(cplx(0.0));
  return SuperOperator(std::move(m), n_modes);
}

inline SuperOperator build_superoperator(const CoefficientMatrix& h, const BathSet& baths,
                                         double max_nonzeros = kDefaultMaxNonZeros) {
  return superoperator_from_mode_form(mode_form(h, baths), h.n_sites(), max_nonzeros);
}

/// Superoperator rebuilt directly from Majorana products of a structure matrix.
inline SuperOperator superoperator_from_structure(const StructureMatrix& sm,
                                                  double max_nonzeros = kDefaultMaxNonZeros) {
  const int n = sm.n_modes();
  const int sites = 2 * n;
  if (n < 1 || n > 12) throw PreconditionError("superoperator supports 1..12 modes");
  const auto dim = static_cast<std::int64_t>(1) << sites;
  const Eigen::Index m4 = sm.coeffs.rows();
  std::int64_t nz_terms = 0;
  for (Eigen::Index a = 0; a < m4; ++a)
    for (Eigen::Index b = 0; b < m4; ++b) nz_terms += sm.coeffs(a, b) != cplx(0.0);
  if (static_cast<double>(dim) * static_cast<double>(nz_terms) > max_nonzeros)
    throw ResourceLimitError("superoperator would exceed the stored-entry budget");
  std::vector<Eigen::Triplet<cplx, std::int64_t>> trip;
  for (std::int64_t col = 0; col < dim; ++col)
    for (Eigen::Index a = 0; a < m4; ++a)
      for (Eigen::Index b = 0; b < m4; ++b) {
        const cplx v = sm.coeffs(a, b);
        if (v == cplx(0.0)) continue;
        const auto first = fock::apply_majorana(static_cast<fock::Bits>(col), static_cast<int>(b), sites);
        const auto second = fock::apply_majorana(first.bits, static_cast<int>(a), sites);
        trip.emplace_back(static_cast<std::int64_t>(second.bits), col, v * first.phase * second.phase);
      }
  SparseMatrixC m(dim, dim);
  m.setFromTriplets(trip.begin(), trip.end());
  m.prune(cplx(0.0));
  return SuperOperator(std::move(m), n);
}

// ---------------------------------------------------------------------------
// Parity-even sector

inline std::vector<std::int64_t> even_sector_indices(int n_modes) {
  std::vector<std::int64_t> idx;
  const auto dim = static_cast<std::int64_t>(1) << (2 * n_modes);
  for (std::int64_t b = 0; b < dim; ++b)
    if (std::popcount(static_cast<std::uint64_t>(b)) % 2 == 0) idx.push_back(b);
  return idx;
}

inline SparseMatrixC even_block(const SuperOperator& su) {
  const auto idx = even_sector_indices(su.n_modes());
  std::vector<std::int64_t> pos(static_cast<std::size_t>(su.dim()), -1);
  for (std::size_t i = 0; i < idx.size(); ++i) pos[static_cast<std::size_t>(idx[i])] = static_cast<std::int64_t>(i);
  std::vector<Eigen::Triplet<cplx, std::int64_t>> trip;
  const auto& m = su.matrix();
  for (std::int64_t c = 0; c < m.outerSize(); ++c) {
    if (pos[c] < 0) continue;
    for (SparseMatrixC::InnerIterator it(m, c); it; ++it)
      if (pos[it.row()] >= 0) trip.emplace_back(pos[it.row()], pos[c], it.value());
  }
  const auto d = static_cast<std::int64_t>(idx.size());
  SparseMatrixC out(d, d);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

// ---------------------------------------------------------------------------
// Kernel extraction

struct NessKernel {
  Eigen::VectorXcd trace_normalized;  // 2^N (0...0|rho) = 1
  Eigen::VectorXcd unit;              // unit 2-norm, identity-string amplitude real positive
  int kernel_dim = 0;
  bool kernel_dim_exact = true;       // false: kernel_dim is a lower bound
  double residual = 0.0;              // ||L rho|| / (||L|| ||rho||) for `unit`
  std::string note;
};

struct KernelOptions {
  double tol = 1e-9;              // singular values <= tol * sigma_max count as zero
  int dense_max_modes = 5;        // dense SVD up to this N, sparse solve above
  int direct_max_modes = 7;       // sparse LU up to this N, iterative above
  double iterative_tol = 1e-13;
  int max_iterations = 20000;
};

namespace detail {

inline Eigen::VectorXcd embed_even(const Eigen::VectorXcd& even, int n_modes) {
  const auto idx = even_sector_indices(n_modes);
  Eigen::VectorXcd full = Eigen::VectorXcd::Zero(Eigen::Index{1} << (2 * n_modes));
  for (std::size_t i = 0; i < idx.size(); ++i) full[idx[i]] = even[static_cast<Eigen::Index>(i)];
  return full;
}

inline void finish_kernel(NessKernel& k, const SuperOperator& su, const Eigen::VectorXcd& v) {
  const int n = su.n_modes();
  const cplx v0 = v[0];
  const double scale = std::ldexp(1.0, n);
  if (std::abs(v0) > 1e-12 * v.norm()) {
    k.trace_normalized = v / (scale * v0);
    k.unit = k.trace_normalized / k.trace_normalized.norm();
  } else {
    Eigen::Index p = 0;
    v.cwiseAbs().maxCoeff(&p);
    k.unit = v * (std::abs(v[p]) / v[p]) / v.norm();
    k.trace_normalized = k.unit;
    k.note += "kernel vector has no identity-string component; trace normalization skipped. ";
  }
  const double lnorm = su.hs_norm();
  k.residual = lnorm > 0.0 ? su.apply(k.unit).norm() / lnorm : 0.0;
}

}  // namespace detail

inline NessKernel ness_kernel(const SuperOperator& su, const KernelOptions& opt = {}) {
  const int n = su.n_modes();
  NessKernel out;
  const SparseMatrixC block = even_block(su);
  const Eigen::Index d = block.rows();

  if (n <= opt.dense_max_modes) {
    const Eigen::MatrixXcd dense(block);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(dense, Eigen::ComputeFullV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double smax = s.size() ? s[0] : 0.0;
    int kdim = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s[i] <= opt.tol * smax || smax == 0.0) ++kdim;
    out.kernel_dim = kdim;
    if (kdim == 0) throw ConvergenceError("Liouvillian has no kernel within tolerance", s[s.size() - 1] / smax);
    const Eigen::MatrixXcd kernel = svd.matrixV().rightCols(kdim);
    Eigen::VectorXcd v = kernel * kernel.row(0).adjoint();  // projection of the identity string
    if (v.norm() < 1e-12) v = kernel.col(0);
    if (kdim > 1) out.note += "kernel is degenerate (" + std::to_string(kdim) + " vectors); returning the projection of the identity string. ";
    detail::finish_kernel(out, su, detail::embed_even(v, n));
    return out;
  }

  // Row 0 of the block vanishes by trace preservation; replace it with the trace condition.
  SparseMatrixC sys = block;
  sys.prune([](std::int64_t row, std::int64_t, const cplx&) { return row != 0; });
  {
    std::vector<Eigen::Triplet<cplx, std::int64_t>> trip;
    for (std::int64_t c = 0; c < sys.outerSize(); ++c)
      for (SparseMatrixC::InnerIterator it(sys, c); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    trip.emplace_back(0, 0, cplx(1.0));
    sys.setFromTriplets(trip.begin(), trip.end());
  }
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(d);
  rhs[0] = std::ldexp(1.0, -n);
  Eigen::VectorXcd x;
  if (n <= opt.direct_max_modes) {
    Eigen::SparseLU<SparseMatrixC> lu;
    lu.compute(sys);
    if (lu.info() != Eigen::Success) {
      out.kernel_dim = 2;
      out.kernel_dim_exact = false;
      throw ConvergenceError("trace-constrained system is singular: kernel dimension exceeds one", 0.0);
    }
    x = lu.solve(rhs);
  } else {
    Eigen::BiCGSTAB<SparseMatrixC, Eigen::IncompleteLUT<cplx, std::int64_t>> solver;
    solver.setTolerance(opt.iterative_tol);
    solver.setMaxIterations(opt.max_iterations);
    solver.compute(sys);
    x = solver.solve(rhs);
    if (solver.info() != Eigen::Success)
      throw ConvergenceError("iterative kernel solve did not converge", solver.error());
  }
  out.kernel_dim = 1;
  out.kernel_dim_exact = false;
  out.note += "sparse path: kernel dimension inferred from a nonsingular trace-constrained system. ";
  detail::finish_kernel(out, su, detail::embed_even(x, n));
  return out;
}

// ---------------------------------------------------------------------------
// Matrix-product operators for Majorana-linear and Majorana-quadratic forms

namespace detail {

inline Eigen::Matrix2cd pauli_x() { return (Eigen::Matrix2cd() << 0, 1, 1, 0).finished(); }
inline Eigen::Matrix2cd pauli_z() { return (Eigen::Matrix2cd() << 1, 0, 0, -1).finished(); }

// Local factor of g~_m on its own site: X for even 0-based m, Y for odd, in the
// basis |0),|1) with op(out, in). Y|0) = i|1).
inline Eigen::Matrix2cd local_majorana(int m) {
  if (m % 2 == 0) return pauli_x();
  Eigen::Matrix2cd y;
  y << 0, cplx(0, -1), cplx(0, 1), 0;
  return y;
}

}  // namespace detail

/// MPO of sum_m r_m g~_m over 2N sites (0-based Majorana labels).
inline Mpo majorana_linear_mpo(const Eigen::VectorXcd& r) {
  const auto sites = static_cast<int>(r.size() / 2);
  Mpo mpo;
  for (int s = 0; s < sites; ++s) {
    MpoSite w(s == 0 ? 1 : 2, s + 1 == sites ? 1 : 2);
    const Eigen::Index done = w.dr - 1;
    const Eigen::Matrix2cd place = r[2 * s] * detail::local_majorana(2 * s) + r[2 * s + 1] * detail::local_majorana(2 * s + 1);
    if (w.dr == 2) w.add(0, 0, detail::pauli_z());
    w.add(0, done, place);
    if (w.dl == 2) w.add(1, done, Eigen::Matrix2cd::Identity());
    mpo.push_back(std::move(w));
  }
  return mpo;
}

/// MPO of scalar + sum_{p<q} a(p,q) g~_p g~_q with a = 2 antisym(structure matrix).
/// Bond states: 0 = nothing placed, 1 + p = Majorana p placed, last = complete.
inline Mpo quadratic_form_mpo(const StructureMatrix& sm) {
  const int sites = 2 * sm.n_modes();
  const int n_maj = 2 * sites;
  const Eigen::MatrixXcd a = 2.0 * sm.antisym();
  const cplx c0 = sm.scalar();
  const Eigen::Index D = n_maj + 2;
  const Eigen::Index done = D - 1;
  const Eigen::Matrix2cd I = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd Z = detail::pauli_z();
  Mpo mpo;
  for (int s = 0; s < sites; ++s) {
    const Eigen::Index dl = s == 0 ? 1 : D;
    const Eigen::Index dr = s + 1 == sites ? 1 : D;
    MpoSite w(dl, dr);
    auto right = [&](Eigen::Index state) { return dr == 1 ? Eigen::Index{0} : state; };
    auto left_ok = [&](Eigen::Index state) { return dl != 1 || state == 0; };
    auto right_ok = [&](Eigen::Index state) { return dr != 1 || state == done; };
    const int p0 = 2 * s, p1 = 2 * s + 1;
    // nothing placed -> nothing placed
    if (right_ok(0)) w.add(0, right(0), I);
    // nothing placed -> complete on this site
    {
      Eigen::Matrix2cd op = a(p0, p1) * cplx(0.0, 1.0) * Z;  // g~_{2s} g~_{2s+1} = X Y = iZ locally
      if (s == 0) op += c0 * I;
      if (right_ok(done)) w.add(0, right(done), op);
    }
    // nothing placed -> open a channel: local P followed by the Z of the partner's string
    for (int p : {p0, p1})
      if (right_ok(1 + p)) w.add(0, right(1 + p), detail::local_majorana(p) * Z);
    // open channels pass through or close
    for (int p = 0; p < p0; ++p) {
      if (!left_ok(1 + p)) continue;
      if (right_ok(1 + p)) w.add(1 + p, right(1 + p), Z);
      const Eigen::Matrix2cd close = a(p, p0) * detail::local_majorana(p0) + a(p, p1) * detail::local_majorana(p1);
      if (right_ok(done)) w.add(1 + p, right(done), close);
    }
    if (left_ok(done) && s > 0 && right_ok(done)) w.add(done, right(done), I);
    mpo.push_back(std::move(w));
  }
  return mpo;
}

/// ||W |psi)|| for a canonical state.
inline double mpo_image_norm(const Mpo& mpo, const CanonicalMps& s) {
  const TensorTrain t = apply_mpo(mpo, tensors_of(s));
  const double sq = contract_overlap(t, t).real();
  return std::exp(s.log_norm()) * std::sqrt(std::max(0.0, sq));
}

// ---------------------------------------------------------------------------
// Product-form stationary state

struct NessProductForm {
  std::optional<CanonicalMps> state;  // trace-normalized; empty when the construction is not applicable
  Eigen::VectorXcd rates;             // eigenvalues kappa of the selected normal modes
  std::string message;
};

/// prod_l (r_l . g~) |1...1) over the 2N normal modes r_l of the antisymmetric
/// structure matrix with Re kappa_l > 0, where [L~, r.g~] = 4 kappa r.g~.
inline NessProductForm ness_product_form(const StructureMatrix& sm, TruncationPolicy policy = {},
                                         double gap_tol = 1e-10) {
  const int n = sm.n_modes();
  const int sites = 2 * n;
  NessProductForm out;
  const Eigen::MatrixXcd A = sm.antisym();
  const double scale = std::max(A.norm(), 1e-300);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A);
  if (es.info() != Eigen::Success) {
    out.message = "eigendecomposition of the structure matrix failed";
    return out;
  }
  std::vector<Eigen::Index> chosen;
  double closest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double re = es.eigenvalues()[i].real();
    closest = std::min(closest, std::abs(re));
    if (re > gap_tol * scale) chosen.push_back(i);
  }
  if (closest <= gap_tol * scale || static_cast<int>(chosen.size()) != sites) {
    out.message = "normal-mode damping rates are not separated from zero; product form not applicable";
    return out;
  }
  out.rates.resize(sites);
  CanonicalMps state = CanonicalMps::basis_state((fock::Bits{1} << sites) - 1, sites, policy);
  for (int l = 0; l < sites; ++l) {
    out.rates[l] = es.eigenvalues()[chosen[l]];
    const Eigen::VectorXcd r = es.eigenvectors().col(chosen[l]).normalized();
    const TensorTrain next = apply_mpo(majorana_linear_mpo(r), tensors_of(state));
    try {
      state = CanonicalMps::from_tensors(next, policy, state.log_norm());
    } catch (const IntegrityError&) {
      out.message = "normal-mode product annihilated the fully occupied state";
      return out;
    }
  }
  const LogAmplitude a0 = log_amplitude(state, 0);
  if (std::isinf(a0.log_abs) || a0.log_abs - state.log_norm() < -30.0) {
    out.message = "product-form state has no identity-string component";
    return out;
  }
  // 2^N (0|rho) = 1
  const cplx amp0 = std::exp(a0.log_abs - state.log_norm()) * a0.phase;
  out.state = state.normalized().scaled(1.0 / (std::ldexp(1.0, n) * amp0));
  return out;
}

}  // namespace linfermi
