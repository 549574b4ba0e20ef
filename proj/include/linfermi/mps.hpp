#pragma once

// Matrix-product states over second-space fermionic sites in Vidal canonical
// form. Site tensors are stored right-canonical, B^L = Gamma^L lambda^L, next to
// the Schmidt vectors lambda, so two-site updates never divide by Schmidt
// values. Schmidt vectors are normalized; the global magnitude lives in
// log_norm, which keeps e^{A0}-sized scales representable.
//
// Local basis per site: |0), |1). Two-site gates use |00), |01), |10), |11).
// Adjacent-site quadratic gates need no Jordan-Wigner string.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "linfermi/errors.hpp"
#include "linfermi/fock.hpp"

namespace linfermi {

using cplx = std::complex<double>;

/// One site of a tensor train: a (left x right) matrix per local occupation.
struct SiteTensor {
  std::array<Eigen::MatrixXcd, 2> k;

  Eigen::Index left() const { return k[0].rows(); }
  Eigen::Index right() const { return k[0].cols(); }
};

using TensorTrain = std::vector<SiteTensor>;

struct TruncationPolicy {
  Eigen::Index max_bond = 256;
  double threshold = 0.0;  // normalized Schmidt values at or below this are dropped; 0 = exact
};

/// Schmidt values at or below this fraction of the largest are numerical zeros.
inline constexpr double kNumericalZero = 1e-14;

/// Pair amplitude a|0_{2l-1} 0_{2l}) + b|1_{2l-1} 1_{2l}).
struct PairAmplitude {
  cplx empty{1.0, 0.0};
  cplx full{0.0, 0.0};
};

/// Parity-conserving 4x4 operator on adjacent sites in the ordered basis |00),|01),|10),|11).
class TwoSiteGate {
 public:
  TwoSiteGate() : m_(Eigen::Matrix4cd::Identity()) {}

  explicit TwoSiteGate(const Eigen::Matrix4cd& m) : m_(m) {
    constexpr int even[2] = {0, 3};
    constexpr int odd[2] = {1, 2};
    for (int a : even)
      for (int b : odd)
        if (m_(a, b) != cplx(0.0) || m_(b, a) != cplx(0.0))
          throw PreconditionError("two-site gate mixes occupation parity");
  }

  const Eigen::Matrix4cd& matrix() const { return m_; }
  bool is_unitary(double tol = 1e-12) const {
    return (m_.adjoint() * m_ - Eigen::Matrix4cd::Identity()).norm() <= tol;
  }
  TwoSiteGate adjoint() const { return TwoSiteGate(m_.adjoint()); }

 private:
  Eigen::Matrix4cd m_;
};

/// Second-space image of the first-space rotation exp(theta/2 g_{j-1} g_j):
/// exp(i theta (-1)^j (c_j^dag c_{j-1} + c_{j-1}^dag c_j)) on sites (j-1, j), 1-based.
inline TwoSiteGate gate_from_majorana_rotation(int plane, double theta) {
  if (plane < 2) throw PreconditionError("rotation plane must be >= 2");
  const double sign = (plane % 2 == 0) ? 1.0 : -1.0;
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  m(0, 0) = m(3, 3) = 1.0;
  m(1, 1) = m(2, 2) = std::cos(theta);
  m(1, 2) = m(2, 1) = cplx(0.0, sign * std::sin(theta));
  return TwoSiteGate(m);
}

namespace detail {

struct SplitResult {
  Eigen::MatrixXcd left;   // columns: kept left singular vectors
  Eigen::VectorXd values;  // kept, normalized
  Eigen::MatrixXcd right;  // rows: kept right singular vectors (Y^dag)
  double kept_norm = 0.0;
  double discarded = 0.0;  // discarded weight relative to the total
};

struct ThinSvd {
  Eigen::VectorXd s;  // descending
  Eigen::MatrixXcd U;
  Eigen::MatrixXcd V;
};

// Thin SVD that factorizes each connected block of the row/column sparsity
// graph separately. Parity-conserving states have two such blocks per bond.
inline ThinSvd block_svd(const Eigen::MatrixXcd& theta) {
  const Eigen::Index R = theta.rows(), C = theta.cols();
  std::vector<Eigen::Index> parent(R + C);
  for (Eigen::Index i = 0; i < R + C; ++i) parent[i] = i;
  auto find = [&](Eigen::Index i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (Eigen::Index c = 0; c < C; ++c)
    for (Eigen::Index r = 0; r < R; ++r)
      if (theta(r, c) != cplx(0.0)) {
        const Eigen::Index a = find(r), b = find(R + c);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<std::vector<Eigen::Index>> rows, cols;
  std::vector<Eigen::Index> slot(R + C, -1);
  for (Eigen::Index i = 0; i < R + C; ++i) {
    const Eigen::Index root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<Eigen::Index>(rows.size());
      rows.emplace_back();
      cols.emplace_back();
    }
    (i < R ? rows : cols)[slot[root]].push_back(i < R ? i : i - R);
  }

  struct Entry {
    double value;
    std::size_t block;
    Eigen::Index index;
  };
  std::vector<Entry> entries;
  std::vector<Eigen::MatrixXcd> us, vs;
  std::vector<std::size_t> block_of;
  for (std::size_t b = 0; b < rows.size(); ++b) {
    if (rows[b].empty() || cols[b].empty()) continue;
    const Eigen::MatrixXcd sub = theta(rows[b], cols[b]);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(sub, Eigen::ComputeThinU | Eigen::ComputeThinV);
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      entries.push_back({svd.singularValues()[i], us.size(), i});
    us.push_back(svd.matrixU());
    vs.push_back(svd.matrixV());
    block_of.push_back(b);
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) { return x.value > y.value; });

  ThinSvd out;
  const auto m = static_cast<Eigen::Index>(entries.size());
  out.s.resize(m);
  out.U = Eigen::MatrixXcd::Zero(R, m);
  out.V = Eigen::MatrixXcd::Zero(C, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Entry& e = entries[j];
    const std::size_t b = block_of[e.block];
    out.s[j] = e.value;
    for (std::size_t i = 0; i < rows[b].size(); ++i) out.U(rows[b][i], j) = us[e.block](i, e.index);
    for (std::size_t i = 0; i < cols[b].size(); ++i) out.V(cols[b][i], j) = vs[e.block](i, e.index);
  }
  return out;
}

// SVD with truncation and the phase gauge: the largest-magnitude entry of every
// kept left singular vector is real positive.
inline SplitResult split(const Eigen::MatrixXcd& theta, const TruncationPolicy& policy) {
  const ThinSvd svd = block_svd(theta);
  const Eigen::VectorXd& s = svd.s;
  SplitResult out;
  const double total = s.squaredNorm();
  if (s.size() == 0 || !(total > 0.0)) throw IntegrityError("cannot split a zero state");
  const double total_norm = std::sqrt(total);
  Eigen::Index keep = 0;
  while (keep < s.size() && s[keep] > kNumericalZero * s[0] && s[keep] / total_norm > policy.threshold)
    ++keep;
  if (keep > policy.max_bond) {
    if (policy.threshold == 0.0)
      throw BondOverflowError("exact mode needs bond dimension " + std::to_string(keep) +
                              " above the cap " + std::to_string(policy.max_bond));
    keep = policy.max_bond;
  }
  out.kept_norm = s.head(keep).norm();
  out.discarded = std::max(0.0, 1.0 - out.kept_norm * out.kept_norm / total);
  out.values = s.head(keep) / out.kept_norm;
  out.left = svd.U.leftCols(keep);
  out.right = svd.V.leftCols(keep).adjoint();
  for (Eigen::Index c = 0; c < keep; ++c) {
    Eigen::Index p = 0;
    out.left.col(c).cwiseAbs().maxCoeff(&p);
    const cplx z = out.left(p, c);
    if (std::abs(z) == 0.0) continue;
    const cplx phase = z / std::abs(z);
    out.left.col(c) *= std::conj(phase);
    out.right.row(c) *= phase;
  }
  return out;
}

inline Eigen::MatrixXcd stack_rows(const SiteTensor& t) {
  Eigen::MatrixXcd m(2 * t.left(), t.right());
  m << t.k[0], t.k[1];
  return m;
}

inline Eigen::MatrixXcd stack_cols(const SiteTensor& t) {
  Eigen::MatrixXcd m(t.left(), 2 * t.right());
  m << t.k[0], t.k[1];
  return m;
}

inline SiteTensor unstack_rows(const Eigen::MatrixXcd& m) {
  const Eigen::Index l = m.rows() / 2;
  return SiteTensor{{m.topRows(l), m.bottomRows(l)}};
}

inline SiteTensor unstack_cols(const Eigen::MatrixXcd& m) {
  const Eigen::Index r = m.cols() / 2;
  return SiteTensor{{m.leftCols(r), m.rightCols(r)}};
}

}  // namespace detail

class CanonicalMps {
 public:
  /// Bring an arbitrary open-boundary tensor train into canonical form. The
  /// represented state is exp(log_scale) * (contraction of `train`).
  static CanonicalMps from_tensors(TensorTrain train, TruncationPolicy policy = {},
                                   double log_scale = 0.0) {
    const auto n = static_cast<int>(train.size());
    if (n == 0) throw PreconditionError("tensor train must have at least one site");
    if (train.front().left() != 1 || train.back().right() != 1)
      throw PreconditionError("tensor train must have open boundaries");
    for (int s = 0; s + 1 < n; ++s)
      if (train[s].right() != train[s + 1].left())
        throw PreconditionError("tensor train bond dimensions do not match");

    CanonicalMps out;
    out.policy_ = policy;
    out.log_norm_ = log_scale;

    // left-canonical sweep
    for (int s = 0; s < n; ++s) {
      const Eigen::MatrixXcd m = detail::stack_rows(train[s]);
      Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
      const Eigen::Index r = std::min(m.rows(), m.cols());
      Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(m.rows(), r);
      Eigen::MatrixXcd carry = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
      const double nrm = carry.norm();
      if (!(nrm > 0.0)) throw IntegrityError("tensor train represents the zero state");
      carry /= nrm;
      out.log_norm_ += std::log(nrm);
      if (s + 1 < n) {
        for (auto& km : train[s + 1].k) km = carry * km;
      } else {
        q *= carry(0, 0);  // unit-modulus phase
      }
      train[s] = detail::unstack_rows(q);
    }

    // right-to-left SVD sweep producing Schmidt values and right-canonical tensors
    out.lambda_.assign(n + 1, Eigen::VectorXd::Ones(1));
    out.b_.resize(n);
    Eigen::MatrixXcd carry = Eigen::MatrixXcd::Identity(1, 1);
    for (int s = n - 1; s >= 0; --s) {
      SiteTensor t = train[s];
      for (auto& km : t.k) km = km * carry;
      const auto sp = detail::split(detail::stack_cols(t), policy);
      out.discarded_ += sp.discarded;
      out.log_norm_ += std::log(sp.kept_norm);
      out.b_[s] = detail::unstack_cols(sp.right);
      if (s > 0) {
        out.lambda_[s] = sp.values;
        carry = sp.left * sp.values.asDiagonal();
      } else {
        // left boundary: 1x1 unit phase folded into the first tensor
        for (auto& km : out.b_[0].k) km = sp.left(0, 0) * km;
      }
    }
    return out;
  }

  static CanonicalMps product_state(std::span<const PairAmplitude> pairs, double log_scale = 0.0,
                                    TruncationPolicy policy = {}) {
    if (pairs.empty()) throw PreconditionError("product state needs at least one pair");
    TensorTrain train;
    double log_total = log_scale;
    for (const auto& p : pairs) {
      const double nrm = std::hypot(std::abs(p.empty), std::abs(p.full));
      if (!(nrm > 0.0)) throw PreconditionError("pair amplitude is zero");
      log_total += std::log(nrm);
      SiteTensor first{{Eigen::MatrixXcd::Zero(1, 2), Eigen::MatrixXcd::Zero(1, 2)}};
      first.k[0](0, 0) = p.empty / nrm;
      first.k[1](0, 1) = p.full / nrm;
      SiteTensor second{{Eigen::MatrixXcd::Zero(2, 1), Eigen::MatrixXcd::Zero(2, 1)}};
      second.k[0](0, 0) = 1.0;
      second.k[1](1, 0) = 1.0;
      train.push_back(std::move(first));
      train.push_back(std::move(second));
    }
    return from_tensors(std::move(train), policy, log_total);
  }

  static CanonicalMps basis_state(fock::Bits bits, int n_sites, TruncationPolicy policy = {}) {
    TensorTrain train;
    for (int s = 0; s < n_sites; ++s) {
      SiteTensor t{{Eigen::MatrixXcd::Zero(1, 1), Eigen::MatrixXcd::Zero(1, 1)}};
      t.k[fock::occupied(bits, s, n_sites) ? 1 : 0](0, 0) = 1.0;
      train.push_back(std::move(t));
    }
    return from_tensors(std::move(train), policy);
  }

  /// Canonical MPS of a dense vector over `n_sites` sites (site 0 is the most significant bit).
  static CanonicalMps from_dense(const Eigen::VectorXcd& v, int n_sites, TruncationPolicy policy = {}) {
    if (n_sites < 1 || n_sites > 30 || v.size() != (Eigen::Index{1} << n_sites))
      throw PreconditionError("dense vector size does not match the number of sites");
    const double nrm = v.norm();
    if (!(nrm > 0.0)) throw PreconditionError("cannot represent the zero vector");
    TensorTrain train;
    Eigen::MatrixXcd rem = (v / nrm).transpose();  // 1 x 2^n
    for (int s = 0; s < n_sites; ++s) {
      const Eigen::Index cl = rem.rows();
      const Eigen::Index rest = rem.cols() / 2;
      Eigen::MatrixXcd m(2 * cl, rest);
      m << rem.leftCols(rest), rem.rightCols(rest);
      if (s + 1 == n_sites) {
        train.push_back(detail::unstack_rows(m));
        break;
      }
      Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
      const Eigen::Index r = std::min(m.rows(), m.cols());
      train.push_back(detail::unstack_rows(qr.householderQ() * Eigen::MatrixXcd::Identity(m.rows(), r)));
      rem = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    }
    return from_tensors(std::move(train), policy, std::log(nrm));
  }

  int n_sites() const { return static_cast<int>(b_.size()); }
  const SiteTensor& tensor(int site) const { return b_.at(site); }
  /// Schmidt vector on bond `bond` (between sites bond-1 and bond); bonds 0 and n are trivial.
  const Eigen::VectorXd& schmidt(int bond) const { return lambda_.at(bond); }
  double log_norm() const { return log_norm_; }
  double norm() const { return std::exp(log_norm_); }
  const TruncationPolicy& policy() const { return policy_; }
  double discarded_weight() const { return discarded_; }

  Eigen::Index max_bond_dim() const {
    Eigen::Index m = 1;
    for (const auto& l : lambda_) m = std::max(m, l.size());
    return m;
  }

  /// Gamma^L = B^L (lambda^{L+1})^{-1}.
  SiteTensor gamma(int site) const {
    SiteTensor g = b_.at(site);
    const Eigen::VectorXd inv = lambda_.at(site + 1).cwiseInverse();
    for (auto& km : g.k) km = km * inv.asDiagonal();
    return g;
  }

  CanonicalMps with_policy(TruncationPolicy policy) const {
    CanonicalMps out = *this;
    out.policy_ = policy;
    return out;
  }

  /// Unit-norm copy.
  CanonicalMps normalized() const {
    CanonicalMps out = *this;
    out.log_norm_ = 0.0;
    return out;
  }

  /// The state multiplied by a nonzero complex scalar.
  CanonicalMps scaled(cplx factor) const {
    if (factor == cplx(0.0)) throw PreconditionError("cannot scale a state to zero");
    CanonicalMps out = *this;
    out.log_norm_ += std::log(std::abs(factor));
    const cplx phase = factor / std::abs(factor);
    for (auto& km : out.b_[0].k) km *= phase;
    return out;
  }

  /// Largest deviation from the canonical conditions over all sites:
  /// sum_k B^k B^k^dag = I and sum_k B^k^dag diag(lambda_L^2) B^k = diag(lambda_{L+1}^2).
  double canonical_residual() const {
    double worst = 0.0;
    for (int s = 0; s < n_sites(); ++s) {
      const auto& t = b_[s];
      Eigen::MatrixXcd right = t.k[0] * t.k[0].adjoint() + t.k[1] * t.k[1].adjoint();
      worst = std::max(worst, (right - Eigen::MatrixXcd::Identity(t.left(), t.left())).norm());
      const Eigen::VectorXd l2 = lambda_[s].array().square();
      Eigen::MatrixXcd left = t.k[0].adjoint() * l2.asDiagonal() * t.k[0] +
                              t.k[1].adjoint() * l2.asDiagonal() * t.k[1];
      const Eigen::VectorXd r2 = lambda_[s + 1].array().square();
      left.diagonal() -= r2.cast<cplx>();
      worst = std::max(worst, left.norm());
    }
    for (const auto& l : lambda_) worst = std::max(worst, std::abs(l.squaredNorm() - 1.0));
    return worst;
  }

  /// In-place two-site update on sites (site, site+1), 0-based.
  void apply_gate_in_place(int site, const TwoSiteGate& gate) {
    if (site < 0 || site + 1 >= n_sites()) throw PreconditionError("gate site out of range");
    const SiteTensor& a = b_[site];
    const SiteTensor& b = b_[site + 1];
    const Eigen::Index cl = a.left();
    const Eigen::Index cr = b.right();
    std::array<Eigen::MatrixXcd, 4> theta;
    for (int k1 = 0; k1 < 2; ++k1)
      for (int k2 = 0; k2 < 2; ++k2) theta[2 * k1 + k2] = a.k[k1] * b.k[k2];
    const auto& g = gate.matrix();
    Eigen::MatrixXcd updated(2 * cl, 2 * cr);
    for (int k1 = 0; k1 < 2; ++k1)
      for (int k2 = 0; k2 < 2; ++k2) {
        Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(cl, cr);
        for (int in = 0; in < 4; ++in)
          if (g(2 * k1 + k2, in) != cplx(0.0)) block += g(2 * k1 + k2, in) * theta[in];
        updated.block(k1 * cl, k2 * cr, cl, cr) = block;
      }
    Eigen::MatrixXcd weighted = updated;
    const Eigen::VectorXd& lam = lambda_[site];
    for (int k1 = 0; k1 < 2; ++k1) weighted.middleRows(k1 * cl, cl) = lam.asDiagonal() * updated.middleRows(k1 * cl, cl);

    const auto sp = detail::split(weighted, policy_);
    discarded_ += sp.discarded;
    log_norm_ += std::log(sp.kept_norm);
    lambda_[site + 1] = sp.values;
    b_[site + 1] = detail::unstack_cols(sp.right);
    b_[site] = detail::unstack_rows(updated * sp.right.adjoint() / sp.kept_norm);
  }

  Eigen::VectorXcd to_dense() const {
    if (n_sites() > 24) throw ResourceLimitError("dense export limited to 24 sites");
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Identity(1, 1);  // rows: basis prefix, cols: bond
    for (const auto& t : b_) {
      Eigen::MatrixXcd next(acc.rows() * 2, t.right());
      for (Eigen::Index r = 0; r < acc.rows(); ++r) {
        next.row(2 * r) = acc.row(r) * t.k[0];
        next.row(2 * r + 1) = acc.row(r) * t.k[1];
      }
      acc = std::move(next);
    }
    return std::exp(log_norm_) * acc.col(0);
  }

  void write(std::ostream& os) const;
  static CanonicalMps read(std::istream& is);

  friend bool operator==(const CanonicalMps&, const CanonicalMps&);

 private:
  TensorTrain b_;
  std::vector<Eigen::VectorXd> lambda_;
  double log_norm_ = 0.0;
  double discarded_ = 0.0;
  TruncationPolicy policy_;
};

inline CanonicalMps product_state(std::span<const PairAmplitude> pairs, double log_scale = 0.0,
                                  TruncationPolicy policy = {}) {
  return CanonicalMps::product_state(pairs, log_scale, policy);
}

/// Applies `gate` on sites (site, site+1), 0-based, and restores canonical form.
inline CanonicalMps apply_two_site_gate(CanonicalMps state, int site, const TwoSiteGate& gate) {
  state.apply_gate_in_place(site, gate);
  return state;
}

/// Contraction of the bare tensors: sum over the train of M1^k^dag E M2^k.
inline cplx contract_overlap(const TensorTrain& bra, const TensorTrain& ket) {
  if (bra.size() != ket.size()) throw PreconditionError("states have different numbers of sites");
  Eigen::MatrixXcd env = Eigen::MatrixXcd::Identity(1, 1);
  for (std::size_t s = 0; s < bra.size(); ++s)
    env = bra[s].k[0].adjoint() * env * ket[s].k[0] + bra[s].k[1].adjoint() * env * ket[s].k[1];
  return env(0, 0);
}

inline TensorTrain tensors_of(const CanonicalMps& s) {
  TensorTrain t;
  for (int i = 0; i < s.n_sites(); ++i) t.push_back(s.tensor(i));
  return t;
}

/// (s1|s2), antilinear in the first argument.
inline cplx inner_product(const CanonicalMps& s1, const CanonicalMps& s2) {
  if (s1.n_sites() != s2.n_sites()) throw PreconditionError("inner product of states with different sizes");
  return std::exp(s1.log_norm() + s2.log_norm()) * contract_overlap(tensors_of(s1), tensors_of(s2));
}

/// |(s1|s2)| / (|s1| |s2|) without forming the norms.
inline double normalized_overlap(const CanonicalMps& s1, const CanonicalMps& s2) {
  if (s1.n_sites() != s2.n_sites()) throw PreconditionError("overlap of states with different sizes");
  return std::abs(contract_overlap(tensors_of(s1), tensors_of(s2)));
}

struct LogAmplitude {
  double log_abs = -std::numeric_limits<double>::infinity();
  cplx phase{1.0, 0.0};

  cplx value() const { return std::isinf(log_abs) ? cplx(0.0) : std::exp(log_abs) * phase; }
};

inline LogAmplitude log_amplitude(const CanonicalMps& s, fock::Bits occupation) {
  const int n = s.n_sites();
  Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Ones(1);
  for (int i = 0; i < n; ++i) row = row * s.tensor(i).k[fock::occupied(occupation, i, n) ? 1 : 0];
  const cplx c = row(0);
  LogAmplitude out;
  if (std::abs(c) == 0.0) return out;
  out.log_abs = s.log_norm() + std::log(std::abs(c));
  out.phase = c / std::abs(c);
  return out;
}

inline cplx amplitude(const CanonicalMps& s, fock::Bits occupation) {
  return log_amplitude(s, occupation).value();
}

/// Bits from a 0/1 list, site 0 first.
inline fock::Bits occupation_bits(std::span<const int> occupation) {
  const int n = static_cast<int>(occupation.size());
  fock::Bits b = 0;
  for (int s = 0; s < n; ++s)
    if (occupation[s]) b |= fock::site_mask(s, n);
  return b;
}

// ---------------------------------------------------------------------------
// Matrix-product operators

/// Bond-resolved local operators: op(a, b) acts on the site between MPO bonds a and b.
struct MpoSite {
  Eigen::Index dl = 1, dr = 1;
  std::vector<Eigen::Matrix2cd> ops;  // dl * dr entries, row-major in (a, b)
  std::vector<char> used;

  MpoSite(Eigen::Index left, Eigen::Index right)
      : dl(left), dr(right), ops(left * right, Eigen::Matrix2cd::Zero()), used(left * right, 0) {}

  void add(Eigen::Index a, Eigen::Index b, const Eigen::Matrix2cd& op) {
    ops[a * dr + b] += op;
    used[a * dr + b] = 1;
  }
};

using Mpo = std::vector<MpoSite>;

/// W|psi) as a bare tensor train with bond (mps bond) x (mpo bond).
inline TensorTrain apply_mpo(const Mpo& mpo, const TensorTrain& state) {
  if (mpo.size() != state.size()) throw PreconditionError("MPO and state sizes differ");
  TensorTrain out;
  for (std::size_t s = 0; s < state.size(); ++s) {
    const auto& w = mpo[s];
    const auto& t = state[s];
    const Eigen::Index cl = t.left(), cr = t.right();
    SiteTensor r{{Eigen::MatrixXcd::Zero(cl * w.dl, cr * w.dr), Eigen::MatrixXcd::Zero(cl * w.dl, cr * w.dr)}};
    for (Eigen::Index a = 0; a < w.dl; ++a)
      for (Eigen::Index b = 0; b < w.dr; ++b) {
        if (!w.used[a * w.dr + b]) continue;
        const auto& op = w.ops[a * w.dr + b];
        for (int ko = 0; ko < 2; ++ko)
          for (int ki = 0; ki < 2; ++ki)
            if (op(ko, ki) != cplx(0.0)) r.k[ko].block(a * cl, b * cr, cl, cr) += op(ko, ki) * t.k[ki];
      }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Snapshot format (little-endian):
//   "LFMPS001", u64 n_sites, u64 max_bond, f64 threshold, f64 log_norm, f64 discarded,
//   n_sites+1 Schmidt vectors as (u64 length, f64[length]),
//   n_sites tensors as (u64 left, u64 local_dim = 2, u64 right, then (re, im) f64 pairs
//   in row-major order over (k, left, right)).

namespace detail {

static_assert(std::endian::native == std::endian::little, "snapshot format assumes little-endian");

inline void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) throw PreconditionError("truncated snapshot");
  return v;
}
inline double get_f64(std::istream& is) {
  double v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), 8)) throw PreconditionError("truncated snapshot");
  return v;
}

inline constexpr char kSnapshotMagic[8] = {'L', 'F', 'M', 'P', 'S', '0', '0', '1'};

}  // namespace detail

inline void CanonicalMps::write(std::ostream& os) const {
  using namespace detail;
  os.write(kSnapshotMagic, 8);
  put_u64(os, static_cast<std::uint64_t>(n_sites()));
  put_u64(os, static_cast<std::uint64_t>(policy_.max_bond));
  put_f64(os, policy_.threshold);
  put_f64(os, log_norm_);
  put_f64(os, discarded_);
  for (const auto& l : lambda_) {
    put_u64(os, static_cast<std::uint64_t>(l.size()));
    for (Eigen::Index i = 0; i < l.size(); ++i) put_f64(os, l[i]);
  }
  for (const auto& t : b_) {
    put_u64(os, static_cast<std::uint64_t>(t.left()));
    put_u64(os, 2);
    put_u64(os, static_cast<std::uint64_t>(t.right()));
    for (int k = 0; k < 2; ++k)
      for (Eigen::Index r = 0; r < t.left(); ++r)
        for (Eigen::Index c = 0; c < t.right(); ++c) {
          put_f64(os, t.k[k](r, c).real());
          put_f64(os, t.k[k](r, c).imag());
        }
  }
}

inline CanonicalMps CanonicalMps::read(std::istream& is) {
  using namespace detail;
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kSnapshotMagic, 8) != 0)
    throw PreconditionError("not an MPS snapshot");
  CanonicalMps out;
  const auto n = get_u64(is);
  if (n == 0 || n > 4096) throw PreconditionError("snapshot has an invalid site count");
  out.policy_.max_bond = static_cast<Eigen::Index>(get_u64(is));
  out.policy_.threshold = get_f64(is);
  out.log_norm_ = get_f64(is);
  out.discarded_ = get_f64(is);
  out.lambda_.resize(n + 1);
  for (auto& l : out.lambda_) {
    const auto len = get_u64(is);
    if (len > (std::uint64_t{1} << 24)) throw PreconditionError("snapshot Schmidt vector too long");
    l.resize(static_cast<Eigen::Index>(len));
    for (Eigen::Index i = 0; i < l.size(); ++i) l[i] = get_f64(is);
  }
  out.b_.resize(n);
  for (auto& t : out.b_) {
    const auto left = get_u64(is);
    const auto local = get_u64(is);
    const auto right = get_u64(is);
    if (local != 2 || left > (1u << 24) || right > (1u << 24))
      throw PreconditionError("snapshot tensor has invalid dimensions");
    for (int k = 0; k < 2; ++k) {
      t.k[k].resize(static_cast<Eigen::Index>(left), static_cast<Eigen::Index>(right));
      for (Eigen::Index r = 0; r < t.k[k].rows(); ++r)
        for (Eigen::Index c = 0; c < t.k[k].cols(); ++c) {
          const double re = get_f64(is);
          const double im = get_f64(is);
          t.k[k](r, c) = cplx(re, im);
        }
    }
  }
  return out;
}

inline bool operator==(const CanonicalMps& a, const CanonicalMps& b) {
  if (a.n_sites() != b.n_sites() || a.log_norm_ != b.log_norm_ || a.discarded_ != b.discarded_ ||
      a.policy_.max_bond != b.policy_.max_bond || a.policy_.threshold != b.policy_.threshold)
    return false;
  for (std::size_t i = 0; i < a.lambda_.size(); ++i)
    if (a.lambda_[i].size() != b.lambda_[i].size() || a.lambda_[i] != b.lambda_[i]) return false;
  for (std::size_t i = 0; i < a.b_.size(); ++i)
    for (int k = 0; k < 2; ++k)
      if (a.b_[i].k[k].rows() != b.b_[i].k[k].rows() || a.b_[i].k[k].cols() != b.b_[i].k[k].cols() ||
          a.b_[i].k[k] != b.b_[i].k[k])
        return false;
  return true;
}

}  // namespace linfermi
