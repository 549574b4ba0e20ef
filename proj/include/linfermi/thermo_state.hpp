#pragma once

// Grand-canonical state exp(-beta (H - mu M)) as a second-space MPS: canonical
// factorization of the argument matrix matched to the single-body spectrum,
// the reduced product state, the unfolding through Givens gates, and the
// partition function and mode occupations read back from the MPS.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "linfermi/antisym_canonical.hpp"
#include "linfermi/errors.hpp"
#include "linfermi/first_space.hpp"
#include "linfermi/mps.hpp"
#include "linfermi/quadratic_model.hpp"

namespace linfermi {

/// log(cosh(x)) without overflow.
inline double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

/// Canonical factorization whose pair l carries alpha_l = -2 beta (eps_l - mu),
/// with pairs ordered like the ascending single-body spectrum.
struct MatchedFactorization {
  CanonicalFactorization fact;
  SingleBodySpectrum spectrum;
  ArgumentMatrices args;
  double max_mismatch = 0.0;  // largest |alpha_l - target_l| after matching
};

inline Eigen::VectorXd alpha_targets(const SingleBodySpectrum& spectrum, const ThermoParams& p) {
  return (2.0 * (p.beta_mu() - p.beta * spectrum.energies.array())).matrix();
}

inline MatchedFactorization matched_factorization(const CoefficientMatrix& h, const ThermoParams& p) {
  MatchedFactorization out;
  out.args = argument_matrices(h, p);
  out.spectrum = single_body_spectrum(h);
  const CanonicalFactorization raw = youla_factorize(out.args.A);
  const Eigen::VectorXd target = alpha_targets(out.spectrum, p);
  const Eigen::Index n = target.size();

  // assign every target (in spectrum order) the unused pair with the closest |alpha|
  std::vector<char> used(n, 0);
  CanonicalFactorization f{Eigen::MatrixXd(2 * n, 2 * n), Eigen::VectorXd(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index best = -1;
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index l = 0; l < n; ++l) {
      if (used[l]) continue;
      const double d = std::abs(std::abs(raw.alpha[l]) - std::abs(target[k]));
      if (d < gap) {
        gap = d;
        best = l;
      }
    }
    used[best] = 1;
    f.U.middleCols(2 * k, 2) = raw.U.middleCols(2 * best, 2);
    f.alpha[k] = raw.alpha[best];
    if ((f.alpha[k] > 0.0 && target[k] < 0.0) || (f.alpha[k] < 0.0 && target[k] > 0.0)) f.flip_pair(k);
  }

  const double scale = std::max(1.0, target.cwiseAbs().maxCoeff());
  out.max_mismatch = (f.alpha - target).cwiseAbs().maxCoeff();
  if (out.max_mismatch > 1e-8 * scale)
    throw IntegrityError("pair amplitudes do not match -2 beta (eps - mu); mismatch " +
                         std::to_string(out.max_mismatch));

  if (f.U.determinant() < 0.0) {
    // only a vanishing pair leaves room for a reflection
    Eigen::Index zero_pair = -1;
    for (Eigen::Index k = 0; k < n && zero_pair < 0; ++k)
      if (std::abs(f.alpha[k]) <= 1e-12 * scale) zero_pair = k;
    if (zero_pair < 0) throw IntegrityError("matched factorization has determinant -1");
    f.U.col(2 * zero_pair) *= -1.0;
  }
  out.fact = std::move(f);
  return out;
}

/// Pair amplitudes in log form: cosh(alpha/4) and sinh(alpha/4) as (log magnitude, sign).
struct PairLogAmplitude {
  double log_empty = 0.0;
  double log_full = -std::numeric_limits<double>::infinity();
  int sign_full = 0;
};

inline std::vector<PairLogAmplitude> reduced_pair_amplitudes(const CanonicalFactorization& f) {
  std::vector<PairLogAmplitude> out;
  for (Eigen::Index l = 0; l < f.alpha.size(); ++l) {
    const double x = f.alpha[l] / 4.0;
    PairLogAmplitude a;
    a.log_empty = log_cosh(x);
    if (x != 0.0) {
      a.sign_full = x > 0.0 ? 1 : -1;
      a.log_full = a.log_empty + std::log(std::abs(std::tanh(x)));
    }
    out.push_back(a);
  }
  return out;
}

/// e^{A0} prod_l [cosh(alpha_l/4)|00) + sinh(alpha_l/4)|11)], with every pair
/// normalized to (1, tanh) and the cosh factors carried by the log scale.
inline CanonicalMps reduced_thermo_state(const CanonicalFactorization& f, double A0,
                                         TruncationPolicy policy = {}) {
  std::vector<PairAmplitude> pairs;
  double log_scale = A0;
  for (Eigen::Index l = 0; l < f.alpha.size(); ++l) {
    const double x = f.alpha[l] / 4.0;
    pairs.push_back({1.0, std::tanh(x)});
    log_scale += log_cosh(x);
  }
  return product_state(pairs, log_scale, policy);
}

/// Applies the second-space images of the schedule's inverse rotations in reverse order.
inline CanonicalMps unfold_thermo_state(CanonicalMps reduced, const GivensSchedule& schedule) {
  for (auto it = schedule.rbegin(); it != schedule.rend(); ++it) {
    if (it->plane > reduced.n_sites()) throw PreconditionError("schedule plane beyond the state size");
    reduced.apply_gate_in_place(it->plane - 2, gate_from_majorana_rotation(it->plane, -it->angle));
  }
  return reduced;
}

struct ThermoState {
  MatchedFactorization matched;
  GivensSchedule schedule;
  CanonicalMps reduced;
  CanonicalMps state;
};

inline ThermoState build_thermo_state(const CoefficientMatrix& h, const ThermoParams& p,
                                      TruncationPolicy policy = {}) {
  ThermoState out{matched_factorization(h, p), {}, {}, {}};
  out.schedule = fold_to_identity(out.matched.fact.U);
  out.reduced = reduced_thermo_state(out.matched.fact, out.matched.args.A0, policy);
  out.state = unfold_thermo_state(out.reduced, out.schedule);
  return out;
}

/// Xi = 2^N (0|state); the identity-string amplitude must be real positive.
inline PartitionFunction partition_function_from_state(const CanonicalMps& s) {
  const int n_modes = s.n_sites() / 2;
  const LogAmplitude a = log_amplitude(s, 0);
  if (std::isinf(a.log_abs) || a.phase.real() <= 0.0 || std::abs(a.phase.imag()) > 1e-10)
    throw IntegrityError("identity-string amplitude is not real positive");
  PartitionFunction out;
  out.log_xi = n_modes * std::log(2.0) + a.log_abs;
  out.xi = std::exp(out.log_xi);
  return out;
}

/// 2^N e^{A0} prod cosh(alpha_l / 4).
inline PartitionFunction partition_function_from_factorization(const CanonicalFactorization& f, double A0) {
  PartitionFunction out;
  out.log_xi = f.alpha.size() * std::log(2.0) + A0;
  for (Eigen::Index l = 0; l < f.alpha.size(); ++l) out.log_xi += log_cosh(f.alpha[l] / 4.0);
  out.xi = std::exp(out.log_xi);
  return out;
}

inline fock::Bits pair_bits(int pair, int n_sites) {
  return fock::site_mask(2 * pair, n_sites) | fock::site_mask(2 * pair + 1, n_sites);
}

namespace detail {

// amplitude(bits) / amplitude(0) without leaving log space.
inline cplx amplitude_ratio(const CanonicalMps& s, fock::Bits bits, const LogAmplitude& ref) {
  const LogAmplitude a = log_amplitude(s, bits);
  if (std::isinf(a.log_abs)) return 0.0;
  return std::exp(a.log_abs - ref.log_abs) * a.phase / ref.phase;
}

}  // namespace detail

/// f_k = (1 + 2^N (..1_{2k-1} 1_{2k}..|state) / Xi) / 2 on the reduced state,
/// checked against (1 + tanh(alpha_k / 4)) / 2.
inline Eigen::VectorXd occupations_from_reduced(const CanonicalMps& reduced, const CanonicalFactorization& f) {
  const int n_sites = reduced.n_sites();
  const Eigen::Index n = f.alpha.size();
  if (n_sites != 2 * n) throw PreconditionError("reduced state and factorization sizes differ");
  const LogAmplitude ref = log_amplitude(reduced, 0);
  if (std::isinf(ref.log_abs)) throw IntegrityError("reduced state has no identity-string component");
  Eigen::VectorXd occ(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx ratio = detail::amplitude_ratio(reduced, pair_bits(static_cast<int>(k), n_sites), ref);
    occ[k] = 0.5 * (1.0 + ratio.real());
    const double expected = 0.5 * (1.0 + std::tanh(f.alpha[k] / 4.0));
    if (std::abs(occ[k] - expected) > 1e-8 || std::abs(ratio.imag()) > 1e-8)
      throw IntegrityError("reduced-state occupation disagrees with its pair amplitude for mode " +
                           std::to_string(k));
  }
  return occ;
}

/// Mode occupations from the unfolded state, combining the amplitudes of the
/// two-Majorana strings g_{2j-1} (i g_{2i}) with the single-body eigenvectors.
inline Eigen::VectorXd occupations_from_state(const CanonicalMps& state, const SingleBodySpectrum& spectrum) {
  const int n_sites = state.n_sites();
  const auto n = static_cast<int>(spectrum.energies.size());
  if (n_sites != 2 * n) throw PreconditionError("state and spectrum sizes differ");
  const LogAmplitude ref = log_amplitude(state, 0);
  if (std::isinf(ref.log_abs)) throw IntegrityError("state has no identity-string component");
  Eigen::MatrixXd c(n, n);  // c(j, i): string with slots 2j-1 and 2i occupied (1-based)
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const fock::Bits bits = fock::site_mask(2 * j, n_sites) | fock::site_mask(2 * i + 1, n_sites);
      const double sign = j > i ? -1.0 : 1.0;
      c(j, i) = sign * detail::amplitude_ratio(state, bits, ref).real();
    }
  Eigen::VectorXd occ(n);
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd v = spectrum.modes.col(k);
    occ[k] = 0.5 * (1.0 + v.dot(c * v));
  }
  return occ;
}

/// Dense reference: exp(-beta (H - mu M)) expanded over ordered strings (N <= 6).
inline Eigen::VectorXcd dense_thermo_oracle(const CoefficientMatrix& h, const ThermoParams& p) {
  dense::require_small(h.n_sites());
  const ArgumentMatrices args = argument_matrices(h, p);
  return dense::to_string_basis(dense::hermitian_exp(dense::quadratic_operator(args.R)), h.n_sites());
}

}  // namespace linfermi
