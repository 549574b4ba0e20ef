#pragma once

// Bit-level Jordan-Wigner helpers shared by the dense oracles and the sparse
// superoperator. A Fock basis state over n sites is a bit pattern where site 0
// is the most significant bit, so the integer value of the pattern equals the
// row index of the Kronecker-ordered dense vector |n_0 n_1 ... n_{n-1}).
//
// Majorana operators are 0-based: index 2m is (c_m + c_m^dag) and index 2m+1
// is i(c_m^dag - c_m), both carrying the string of Z's on sites < m.

#include <bit>
#include <complex>
#include <cstdint>
#include <optional>

namespace linfermi::fock {

using Bits = std::uint64_t;
using cplx = std::complex<double>;

inline constexpr Bits site_mask(int site, int n_sites) {
  return Bits{1} << (n_sites - 1 - site);
}

inline constexpr bool occupied(Bits b, int site, int n_sites) {
  return (b & site_mask(site, n_sites)) != 0;
}

/// Number of occupied sites strictly left of `site`.
inline int count_before(Bits b, int site, int n_sites) {
  const Bits high = ~((site_mask(site, n_sites) << 1) - 1);
  return std::popcount(b & high & ((Bits{1} << n_sites) - 1));
}

inline double jw_sign(Bits b, int site, int n_sites) {
  return (count_before(b, site, n_sites) & 1) ? -1.0 : 1.0;
}

struct Phased {
  cplx phase;
  Bits bits;
};

inline std::optional<Phased> annihilate(Bits b, int site, int n_sites) {
  if (!occupied(b, site, n_sites)) return std::nullopt;
  return Phased{cplx(jw_sign(b, site, n_sites)), b ^ site_mask(site, n_sites)};
}

inline std::optional<Phased> create(Bits b, int site, int n_sites) {
  if (occupied(b, site, n_sites)) return std::nullopt;
  return Phased{cplx(jw_sign(b, site, n_sites)), b ^ site_mask(site, n_sites)};
}

inline Phased apply_majorana(Bits b, int majorana, int n_sites) {
  const int site = majorana / 2;
  const double s = jw_sign(b, site, n_sites);
  const Bits flipped = b ^ site_mask(site, n_sites);
  if (majorana % 2 == 0) return {cplx(s), flipped};
  // Y|0) = i|1), Y|1) = -i|0)
  return {occupied(b, site, n_sites) ? cplx(0.0, -s) : cplx(0.0, s), flipped};
}

/// Action of the ordered first-space string s = g_1^{n_1} (i g_2)^{n_2} ... on a
/// first-space basis state. `string_bits` is a pattern over 2*n_modes Majorana
/// slots using the same MSB-first convention.
inline Phased apply_string(Bits string_bits, Bits state, int n_modes) {
  const int n_maj = 2 * n_modes;
  Phased out{cplx(1.0), state};
  for (int k = n_maj - 1; k >= 0; --k) {
    if (!occupied(string_bits, k, n_maj)) continue;
    const Phased step = apply_majorana(out.bits, k, n_modes);
    cplx factor = step.phase;
    if (k % 2 == 1) factor *= cplx(0.0, 1.0);
    out = {out.phase * factor, step.bits};
  }
  return out;
}

}  // namespace linfermi::fock
