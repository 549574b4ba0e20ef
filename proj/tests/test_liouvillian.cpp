#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "linfermi/liouvillian.hpp"
#include "linfermi/stationary.hpp"
#include "support.hpp"

using namespace linfermi;
using support::Gen;

namespace {

// Restriction of a 4^N x 4^N matrix to rows and columns of even string parity.
Eigen::MatrixXcd even_part(const Eigen::MatrixXcd& m, int n) {
  const auto idx = even_sector_indices(n);
  Eigen::MatrixXcd out(idx.size(), idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c) out(r, c) = m(idx[r], idx[c]);
  return out;
}

double max_abs(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(Superoperator, ZeroInputsGiveZeroOperator) {
  const auto su = build_superoperator(zero_hamiltonian(2), BathSet::none(2));
  EXPECT_EQ(su.nnz(), 0);
  const auto sm = build_structure_matrix(zero_hamiltonian(2), BathSet::none(2));
  EXPECT_EQ(sm.coeffs.norm(), 0.0);
  EXPECT_EQ(sm.scalar(), cplx(0.0));
}

TEST(Superoperator, DimensionMismatchRejected) {
  EXPECT_THROW(build_superoperator(zero_hamiltonian(2), BathSet::none(3)), PreconditionError);
}

TEST(Superoperator, ResourceGuard) {
  EXPECT_THROW(build_superoperator(CoefficientMatrix::tridiagonal(4), BathSet::none(4), 100.0), ResourceLimitError);
  EXPECT_THROW(build_superoperator(CoefficientMatrix::tridiagonal(13), BathSet::none(13)), PreconditionError);
}

TEST(Superoperator, MatchesLindbladOracleOnEvenSector) {
  Gen g(301);
  for (int draw = 0; draw < 8; ++draw) {
    const int n = g.integer(1, 3);
    const CoefficientMatrix h(g.symmetric(n));
    const BathSet baths = support::random_baths(g, n, g.integer(1, 2));
    const Eigen::MatrixXcd ours(build_superoperator(h, baths).to_dense());
    const Eigen::MatrixXcd ref = support::lindblad_in_strings(h.matrix(), baths.coefficients());
    EXPECT_LE(max_abs(even_part(ours, n) - even_part(ref, n)), 1e-10);
  }
}

TEST(Superoperator, StructureMatrixRebuildMatchesModeForm) {
  Gen g(307);
  for (int draw = 0; draw < 10; ++draw) {
    const int n = g.integer(1, 3);
    const CoefficientMatrix h(g.symmetric(n));
    const BathSet baths = support::random_baths(g, n, g.integer(0, 3));
    const Eigen::MatrixXcd a(build_superoperator(h, baths).to_dense());
    const Eigen::MatrixXcd b(superoperator_from_structure(build_structure_matrix(h, baths)).to_dense());
    EXPECT_LE(max_abs(a - b), 1e-10);
  }
}

TEST(Superoperator, FullyOccupiedEigenpair) {
  Gen g(311);
  for (int draw = 0; draw < 100; ++draw) {
    const int n = g.integer(1, 3);
    const CoefficientMatrix h(g.symmetric(n));
    const BathSet baths = support::random_baths(g, n, g.integer(1, 3));
    const auto su = build_superoperator(h, baths);
    Eigen::VectorXcd ones = Eigen::VectorXcd::Zero(su.dim());
    ones[su.dim() - 1] = 1.0;
    const double L = baths.fully_occupied_eigenvalue();
    EXPECT_LE((su.apply(ones) - L * ones).norm(), 1e-10 * std::max(1.0, std::abs(L)));
  }
}

TEST(Superoperator, SingleBathEigenvalueExample) {
  Eigen::MatrixXd B(1, 2);
  B << 1.0, 2.0 - std::sqrt(3.0);
  const BathSet baths(B);
  EXPECT_NEAR(baths.fully_occupied_eigenvalue(), -4.2871870, 1e-7);
  const auto su = build_superoperator(zero_hamiltonian(1), baths);
  EXPECT_NEAR(std::abs(su.matrix().coeff(3, 3) - baths.fully_occupied_eigenvalue()), 0.0, 1e-14);
}

TEST(Superoperator, TracePreservation) {
  Gen g(313);
  for (int draw = 0; draw < 10; ++draw) {
    const int n = g.integer(1, 3);
    const auto su = build_superoperator(CoefficientMatrix(g.symmetric(n)), support::random_baths(g, n, 2));
    const Eigen::MatrixXcd m = even_part(Eigen::MatrixXcd(su.to_dense()), n);
    EXPECT_LE(m.row(0).norm(), 1e-12);
  }
}

TEST(Superoperator, SpectrumClosedUnderConjugation) {
  Gen g(317);
  const auto su = build_superoperator(CoefficientMatrix(g.symmetric(2)), support::random_baths(g, 2, 2));
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(su.to_dense());
  const Eigen::VectorXcd ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    double best = 1e300;
    for (Eigen::Index j = 0; j < ev.size(); ++j) best = std::min(best, std::abs(ev[j] - std::conj(ev[i])));
    EXPECT_LE(best, 1e-9);
  }
}

TEST(Superoperator, CoordinateExport) {
  Eigen::MatrixXd B(1, 2);
  B << 1.0, 0.5;
  const auto su = build_superoperator(zero_hamiltonian(1), BathSet(B));
  std::ostringstream os;
  su.write_coordinates(os);
  std::istringstream is(os.str());
  long r, c;
  double re, im;
  Eigen::Index lines = 0;
  while (is >> r >> c >> re >> im) {
    EXPECT_EQ(su.matrix().coeff(r, c), cplx(re, im));
    ++lines;
  }
  EXPECT_EQ(lines, su.nnz());
}

TEST(StructureMatrix, PureHoppingSupport) {
  Eigen::MatrixXd h(2, 2);
  h << 0, 1, 1, 0;
  const auto sm = build_structure_matrix(CoefficientMatrix(h), BathSet::none(2));
  std::set<std::pair<int, int>> expected;
  for (int j = 1; j <= 2; ++j)
    for (int k = 1; k <= 2; ++k)
      if (h(j - 1, k - 1) != 0.0) {
        expected.insert({4 * k, 4 * j - 3});
        expected.insert({4 * j - 2, 4 * k - 1});
      }
  for (int a = 1; a <= 8; ++a)
    for (int b = 1; b <= 8; ++b) {
      const cplx v = sm.coeffs(a - 1, b - 1);
      if (expected.count({a, b})) EXPECT_EQ(v, cplx(0.5));
      else EXPECT_EQ(v, cplx(0.0));
    }
}

TEST(StructureMatrix, HsNormMatchesSuperoperator) {
  Gen g(331);
  for (int draw = 0; draw < 6; ++draw) {
    const int n = g.integer(1, 3);
    const CoefficientMatrix h(g.symmetric(n));
    const BathSet baths = support::random_baths(g, n, 2);
    const auto sm = build_structure_matrix(h, baths);
    const auto su = superoperator_from_structure(sm);
    EXPECT_NEAR(sm.hs_norm(), su.hs_norm(), 1e-12 * su.hs_norm());
  }
}

TEST(QuadraticMpo, ImageNormMatchesDenseMatvec) {
  Gen g(337);
  for (int draw = 0; draw < 6; ++draw) {
    const int n = g.integer(1, 3);
    const CoefficientMatrix h(g.symmetric(n));
    const BathSet baths = support::random_baths(g, n, 2);
    const auto sm = build_structure_matrix(h, baths);
    const Eigen::VectorXcd v = g.complex_vector(Eigen::Index{1} << (2 * n));
    const auto s = CanonicalMps::from_dense(v, 2 * n, {1 << 12, 0.0});
    const double dense = superoperator_from_structure(sm).apply(v).norm();
    EXPECT_NEAR(mpo_image_norm(quadratic_form_mpo(sm), s), dense, 1e-10 * std::max(1.0, dense));
  }
}

TEST(Kernel, SingleModeSingleBath) {
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(1);
  const BathSet baths = theorem1_baths({-0.5, b, Branch::plus});
  const auto k = ness_kernel(build_superoperator(zero_hamiltonian(1), baths));
  EXPECT_EQ(k.kernel_dim, 1);
  EXPECT_NEAR(std::abs(k.trace_normalized[0] - 0.5), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(k.trace_normalized[3] + 0.25), 0.0, 1e-12);
  EXPECT_LE(std::abs(k.trace_normalized[1]) + std::abs(k.trace_normalized[2]), 1e-12);
}

TEST(Kernel, ChainWithClosedFormBaths) {
  const int n = 3;
  const BathSet baths = theorem1_baths({-0.5, Eigen::VectorXd::Ones(n), Branch::plus});
  const auto su = build_superoperator(CoefficientMatrix::tridiagonal(n), baths);
  const auto k = ness_kernel(su);
  EXPECT_EQ(k.kernel_dim, 1);
  EXPECT_LE(k.residual, 1e-9);
  const Eigen::VectorXcd closed = theorem1_state(-0.5, n).to_dense();
  EXPECT_GE(support::fidelity(k.unit, closed), 1.0 - 1e-10);
  EXPECT_NEAR(std::abs(k.trace_normalized[0]) * std::ldexp(1.0, n), 1.0, 1e-12);
}

TEST(Kernel, SparsePathAgreesWithClosedForm) {
  const int n = 6;
  const BathSet baths = theorem1_baths({0.3, Eigen::VectorXd::Ones(n), Branch::plus});
  const auto k = ness_kernel(build_superoperator(CoefficientMatrix::tridiagonal(n), baths));
  EXPECT_FALSE(k.kernel_dim_exact);
  EXPECT_LE(k.residual, 1e-9);
  EXPECT_GE(support::fidelity(k.unit, theorem1_state(0.3, n).to_dense()), 1.0 - 1e-10);
}

TEST(Kernel, BathFreeDegeneracyMatchesCommutant) {
  Gen g(347);
  for (int n = 1; n <= 3; ++n) {
    const CoefficientMatrix h(g.irreducible_symmetric(n));
    KernelOptions opt;
    const auto k = ness_kernel(build_superoperator(h, BathSet::none(n)), opt);
    // oracle: even-sector null space of the commutator with H
    const Eigen::MatrixXcd ref = even_part(support::lindblad_in_strings(h.matrix(), Eigen::MatrixXd(0, 2 * n)), n);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ref);
    const auto& s = svd.singularValues();
    int expected = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) expected += s[i] <= opt.tol * std::max(1e-300, s[0]);
    EXPECT_EQ(k.kernel_dim, expected);
    EXPECT_GT(k.kernel_dim, 1);
  }
}

TEST(ProductForm, ClosedFormConfigurations) {
  for (int n : {1, 2, 3}) {
    const BathSet baths = theorem1_baths({-0.5, Eigen::VectorXd::Ones(n), Branch::plus});
    const auto pf = ness_product_form(build_structure_matrix(CoefficientMatrix::tridiagonal(n), baths));
    ASSERT_TRUE(pf.state.has_value()) << pf.message;
    EXPECT_GE(support::fidelity(pf.state->to_dense(), theorem1_state(-0.5, n).to_dense()), 1.0 - 1e-8);
    EXPECT_NEAR(std::abs(amplitude(*pf.state, 0)) * std::ldexp(1.0, n), 1.0, 1e-10);
  }
}

TEST(ProductForm, RandomBathsMatchDenseKernel) {
  Gen g(349);
  int built = 0;
  for (int draw = 0; draw < 12; ++draw) {
    const int n = g.integer(1, 4);
    const CoefficientMatrix h(g.irreducible_symmetric(n));
    const BathSet baths = support::random_baths(g, n, g.integer(1, 3));
    const auto pf = ness_product_form(build_structure_matrix(h, baths));
    if (!pf.state) continue;
    ++built;
    const auto k = ness_kernel(build_superoperator(h, baths));
    ASSERT_EQ(k.kernel_dim, 1);
    EXPECT_GE(support::fidelity(pf.state->to_dense(), k.unit), 1.0 - 1e-8);
  }
  EXPECT_GE(built, 10);
}

TEST(ProductForm, DeclinesWithoutBaths) {
  const auto pf = ness_product_form(build_structure_matrix(CoefficientMatrix::tridiagonal(2), BathSet::none(2)));
  EXPECT_FALSE(pf.state.has_value());
  EXPECT_FALSE(pf.message.empty());
}
