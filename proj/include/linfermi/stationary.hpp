#pragma once

// Closed-form stationary states for baths acting on single sites: the
// infinite-temperature product state for an irreducible Hamiltonian and the
// block-wise characteristic state for block-diagonal Hamiltonians, together
// with residual checks and the classification against thermal states.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "linfermi/errors.hpp"
#include "linfermi/liouvillian.hpp"
#include "linfermi/mps.hpp"
#include "linfermi/quadratic_model.hpp"

namespace linfermi {

enum class Branch { plus, minus };

inline const char* to_string(Branch b) { return b == Branch::plus ? "plus" : "minus"; }

/// B_{2j} / B_{2j-1} = (-1 +- sqrt(1 - x^2)) / x.
inline double bath_ratio(double x, Branch branch) {
  if (!std::isfinite(x) || std::abs(x) >= 1.0) throw PreconditionError("bath parameter x must satisfy |x| < 1");
  if (std::abs(x) < 1e-8) {
    if (branch == Branch::minus) throw PreconditionError("the minus branch diverges as x -> 0");
    return -x / 2.0 - x * x * x / 8.0;
  }
  const double root = std::sqrt(1.0 - x * x);
  if (branch == Branch::plus) return -x / (1.0 + root);  // (-1 + root) / x without cancellation
  return (-1.0 - root) / x;
}

struct Theorem1Config {
  double x = 0.0;
  Eigen::VectorXd b;  // one amplitude per site
  Branch branch = Branch::plus;

  void validate() const {
    if (!std::isfinite(x) || std::abs(x) >= 1.0) throw PreconditionError("x must satisfy |x| < 1");
    if (b.size() == 0 || !b.allFinite()) throw PreconditionError("bath amplitudes must be finite and non-empty");
    if (b.isZero(0.0)) throw PreconditionError("at least one bath amplitude must be nonzero");
    if (branch == Branch::minus && std::abs(x) < 1e-8) throw PreconditionError("the minus branch diverges as x -> 0");
  }
};

/// Bath n acts on site n alone: B_{2n-1} = b_n, B_{2n} = ratio(x) b_n.
inline BathSet single_site_baths(const Eigen::VectorXd& b, const Eigen::VectorXd& ratio) {
  const auto n = b.size();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, 2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    B(j, 2 * j) = b[j];
    B(j, 2 * j + 1) = ratio[j] * b[j];
  }
  return BathSet(std::move(B));
}

inline BathSet theorem1_baths(const Theorem1Config& cfg) {
  cfg.validate();
  return single_site_baths(cfg.b, Eigen::VectorXd::Constant(cfg.b.size(), bath_ratio(cfg.x, cfg.branch)));
}

/// 2^{-N} prod_l [|00) + x_l |11)].
inline CanonicalMps characteristic_state(const Eigen::VectorXd& x_per_site, TruncationPolicy policy = {}) {
  std::vector<PairAmplitude> pairs;
  for (Eigen::Index j = 0; j < x_per_site.size(); ++j) {
    if (!std::isfinite(x_per_site[j]) || std::abs(x_per_site[j]) >= 1.0)
      throw PreconditionError("pair parameter must satisfy |x| < 1");
    pairs.push_back({1.0, x_per_site[j]});
  }
  return product_state(pairs, -static_cast<double>(x_per_site.size()) * std::log(2.0), policy);
}

inline CanonicalMps theorem1_state(double x, int n_sites, TruncationPolicy policy = {}) {
  if (n_sites < 1) throw PreconditionError("need at least one site");
  return characteristic_state(Eigen::VectorXd::Constant(n_sites, x), policy);
}

struct Theorem2Block {
  double x = 0.0;
  Eigen::VectorXd b;  // one amplitude per site of the block; size = block size
};

struct Theorem2Config {
  std::vector<Theorem2Block> blocks;
  Branch branch = Branch::plus;

  int n_sites() const {
    int n = 0;
    for (const auto& blk : blocks) n += static_cast<int>(blk.b.size());
    return n;
  }

  void validate() const {
    if (blocks.empty()) throw PreconditionError("need at least one block");
    for (std::size_t l = 0; l < blocks.size(); ++l) {
      const auto& blk = blocks[l];
      if (!std::isfinite(blk.x) || std::abs(blk.x) >= 1.0)
        throw PreconditionError("block " + std::to_string(l) + ": x must satisfy |x| < 1");
      if (blk.b.size() == 0 || !blk.b.allFinite())
        throw PreconditionError("block " + std::to_string(l) + ": bath amplitudes must be finite and non-empty");
      if (blk.b.isZero(0.0))
        throw PreconditionError("block " + std::to_string(l) + ": at least one bath amplitude must be nonzero");
      if (branch == Branch::minus && std::abs(blk.x) < 1e-8)
        throw PreconditionError("the minus branch diverges as x -> 0");
    }
  }

  Eigen::VectorXd x_per_site() const {
    Eigen::VectorXd x(n_sites());
    Eigen::Index p = 0;
    for (const auto& blk : blocks)
      for (Eigen::Index i = 0; i < blk.b.size(); ++i) x[p++] = blk.x;
    return x;
  }

  std::vector<int> sizes() const {
    std::vector<int> d;
    for (const auto& blk : blocks) d.push_back(static_cast<int>(blk.b.size()));
    return d;
  }
};

inline BathSet theorem2_baths(const Theorem2Config& cfg) {
  cfg.validate();
  const int n = cfg.n_sites();
  Eigen::VectorXd b(n), ratio(n);
  Eigen::Index p = 0;
  for (const auto& blk : cfg.blocks) {
    const double r = bath_ratio(blk.x, cfg.branch);
    for (Eigen::Index i = 0; i < blk.b.size(); ++i, ++p) {
      b[p] = blk.b[i];
      ratio[p] = r;
    }
  }
  return single_site_baths(b, ratio);
}

inline CanonicalMps theorem2_state(const Theorem2Config& cfg, TruncationPolicy policy = {}) {
  cfg.validate();
  return characteristic_state(cfg.x_per_site(), policy);
}

/// Block-diagonal coefficient matrix from square symmetric blocks.
inline CoefficientMatrix block_diagonal(const std::vector<Eigen::MatrixXd>& blocks) {
  Eigen::Index n = 0;
  for (const auto& y : blocks) n += y.rows();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  Eigen::Index off = 0;
  for (const auto& y : blocks) {
    if (y.rows() != y.cols()) throw PreconditionError("Hamiltonian blocks must be square");
    h.block(off, off, y.rows(), y.cols()) = y;
    off += y.rows();
  }
  return CoefficientMatrix(std::move(h));
}

// ---------------------------------------------------------------------------
// Residuals

struct StationarityReport {
  double total = 0.0;        // ||L rho|| / (||L|| ||rho||)
  double hamiltonian = 0.0;  // Hamiltonian part alone, same normalization
  double bath = 0.0;         // bath part alone, same normalization
  double liouvillian_norm = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::string method;
};

inline constexpr int kDenseVerifyMaxModes = 6;

/// Relative residual of the Liouvillian on `state`. Norms: the state's 2-norm
/// and the normalized Hilbert-Schmidt norm of the Liouvillian.
inline StationarityReport verify_stationarity(const CanonicalMps& state, const CoefficientMatrix& h,
                                              const BathSet& baths, double tol) {
  require_compatible(h, baths);
  const int n = h.n_sites();
  if (state.n_sites() != 2 * n) throw PreconditionError("state size does not match the Hamiltonian");
  StationarityReport rep;
  rep.tol = tol;
  const CoefficientMatrix h0 = zero_hamiltonian(n);
  const BathSet none = BathSet::none(n);
  const StructureMatrix full = build_structure_matrix(h, baths);
  rep.liouvillian_norm = full.hs_norm();
  if (rep.liouvillian_norm == 0.0) {
    rep.pass = true;
    rep.method = "zero Liouvillian";
    return rep;
  }
  const double denom = rep.liouvillian_norm * state.norm();
  if (n <= kDenseVerifyMaxModes) {
    rep.method = "dense matvec";
    const Eigen::VectorXcd v = state.to_dense();
    const Eigen::VectorXcd lh = build_superoperator(h, none).apply(v);
    const Eigen::VectorXcd lb = build_superoperator(h0, baths).apply(v);
    rep.hamiltonian = lh.norm() / denom;
    rep.bath = lb.norm() / denom;
    rep.total = (lh + lb).norm() / denom;
  } else {
    rep.method = "MPO contraction";
    rep.hamiltonian = mpo_image_norm(quadratic_form_mpo(build_structure_matrix(h, none)), state) / denom;
    rep.bath = mpo_image_norm(quadratic_form_mpo(build_structure_matrix(h0, baths)), state) / denom;
    rep.total = mpo_image_norm(quadratic_form_mpo(full), state) / denom;
  }
  rep.pass = rep.total <= tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Thermal classification

enum class ThermalKind { thermal, non_thermal, underdetermined };

inline const char* to_string(ThermalKind k) {
  switch (k) {
    case ThermalKind::thermal: return "thermal";
    case ThermalKind::non_thermal: return "non-thermal";
    default: return "underdetermined";
  }
}

struct ThermalMatch {
  ThermalKind kind = ThermalKind::underdetermined;
  double beta = std::numeric_limits<double>::quiet_NaN();
  double mu = std::numeric_limits<double>::quiet_NaN();  // undefined when beta = 0
  double beta_mu = std::numeric_limits<double>::quiet_NaN();
  double max_deviation = 0.0;
  std::string note;
};

/// Infinite temperature at constant fugacity: beta = 0, beta mu = 2 atanh(x).
inline ThermalMatch thermal_match_theorem1(double x) {
  if (!std::isfinite(x) || std::abs(x) >= 1.0) throw PreconditionError("x must satisfy |x| < 1");
  ThermalMatch m;
  m.kind = ThermalKind::thermal;
  m.beta = 0.0;
  m.beta_mu = 2.0 * std::atanh(x);
  m.note = "infinite temperature; only the fugacity is fixed";
  return m;
}

/// Solves x_l = tanh(beta (mu - eps_l) / 2) for (beta, beta mu) with eps_l the
/// diagonal of h; requires a diagonal h and beta >= 0.
inline ThermalMatch thermal_match_theorem2(const Eigen::VectorXd& x_per_site, const CoefficientMatrix& h,
                                           double tol = 1e-9) {
  const int n = h.n_sites();
  if (x_per_site.size() != n) throw PreconditionError("one x per site is required");
  ThermalMatch m;
  const Eigen::MatrixXd& H = h.matrix();
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      if (j != k && H(j, k) != 0.0) {
        m.kind = ThermalKind::non_thermal;
        m.note = "Hamiltonian has off-diagonal coefficients";
        return m;
      }
  Eigen::VectorXd y(n);
  for (int j = 0; j < n; ++j) {
    if (std::abs(x_per_site[j]) >= 1.0) throw PreconditionError("x must satisfy |x| < 1");
    y[j] = 2.0 * std::atanh(x_per_site[j]);  // = beta mu - beta eps_j
  }
  const Eigen::VectorXd eps = H.diagonal();
  int other = -1;
  for (int j = 1; j < n && other < 0; ++j)
    if (eps[j] != eps[0]) other = j;
  if (other < 0) {
    m.max_deviation = (y.array() - y[0]).abs().maxCoeff();
    if (m.max_deviation > tol) {
      m.kind = ThermalKind::non_thermal;
      m.note = "equal energies with different pair parameters";
    } else {
      m.kind = ThermalKind::underdetermined;
      m.beta_mu = y[0] + 0.0;
      m.note = "all energies coincide; beta is not determined";
    }
    return m;
  }
  const double beta = (y[0] - y[other]) / (eps[other] - eps[0]);
  const double beta_mu = y[0] + beta * eps[0];
  m.max_deviation = (y.array() - (beta_mu - beta * eps.array())).abs().maxCoeff();
  m.beta = beta;
  m.beta_mu = beta_mu;
  m.mu = beta != 0.0 ? beta_mu / beta : std::numeric_limits<double>::quiet_NaN();
  if (beta < -tol) {
    m.kind = ThermalKind::non_thermal;
    m.note = "solution needs negative beta";
  } else if (m.max_deviation > tol) {
    m.kind = ThermalKind::non_thermal;
    m.note = "pair parameters are not of Fermi-Dirac form";
  } else {
    m.kind = ThermalKind::thermal;
  }
  return m;
}

}  // namespace linfermi
