#include <gtest/gtest.h>

#include "equifold/invariants.hpp"
#include "equifold/io.hpp"
#include "test_support.hpp"

using namespace equifold;

namespace {

EquivariantKernel hexagon_adjacency() {
  auto base = fixture::cycle(3);
  auto c = build_cover(base, fixture::one_voltage(3, 1), cyclic_group(2));
  return lift_base_operator(fixture::adjacency(*base), c);
}

Tower graded_tower() { return build_tower(builtin_config("z6_mod_z2_square_graded")); }

// Dense 2×2 block matrix from four dense blocks.
Matrix blocks2(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d) {
  Matrix out(2 * a.rows(), 2 * a.cols());
  out << a, b, c, d;
  return out;
}

}  // namespace

TEST(IndexOdd, SignAndZero) {
  const auto d = hexagon_adjacency();
  const auto one = EquivariantKernel::identity(d.cover());
  EXPECT_LT(max_abs_diff(index_odd(d, sign_function()).matrix, one), 1e-13);
  EXPECT_LT(max_abs_diff(index_odd(d, constant_function(0.0)).matrix, Complex(-1.0) * one), 1e-13);
  const auto a = index_odd(d, chi_default_function());
  EXPECT_LT(unitarity_defect(a.matrix), 1e-12);
  EXPECT_FALSE(a.graded);
}

TEST(IndexOdd, RejectsGraded) {
  const auto t = graded_tower();
  try {
    index_odd(t.d1, chi_default_function());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotGraded);
  }
  EXPECT_THROW(index_even(hexagon_adjacency(), chi_default_function()), Error);
}

TEST(IndexEven, ZeroChiGivesGradingPattern) {
  const auto t = graded_tower();
  const auto a = index_even(t.d1, constant_function(0.0));
  const auto p_plus = grading_projection(t.d1.cover(), true);
  const auto p_minus = grading_projection(t.d1.cover(), false);
  EXPECT_LT(max_abs_diff(a.matrix, p_plus - p_minus), 1e-14);
  EXPECT_LT(max_abs_diff(a.idempotent, p_plus), 1e-14);
}

TEST(IndexEven, DefectBoundedByChiDefect) {
  const auto t = graded_tower();
  const auto one = EquivariantKernel::identity(t.d1.cover());
  const auto dec = eigendecompose(t.d1);
  for (const auto& chi : {chi_default_function(), fejer_function(0.5), fejer_function(4.0)}) {
    const auto a = index_even(dec, t.d1, chi);
    const auto x = apply_function(dec, chi.eval);
    const double chi_defect = operator_norm(one - x * x);
    EXPECT_LE(idempotency_defect_norm(a.idempotent), 32.0 * chi_defect + 1e-12) << chi.name;
  }
  // With χ = sign and a gap, χ(D)² = 1 and the representative is idempotent.
  const auto s = index_even(dec, t.d1, sign_function());
  EXPECT_LT(idempotency_defect_norm(s.idempotent), 1e-12);
}

TEST(IndexEven, ExplicitFormulaOnDenseBlocks) {
  // Rebuild the idempotent from dense matrices with the grading blocks
  // written out by hand.
  const auto t = graded_tower();
  const auto dec = eigendecompose(t.d1);
  const auto chi = chi_default_function();
  const Matrix x = assemble(apply_function(dec, chi.eval));
  const auto n = x.rows();
  Matrix pp = Matrix::Zero(n, n), pm = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) (i % 2 == 0 ? pp : pm)(i, i) = 1.0;
  const Matrix one = Matrix::Identity(n, n), y = x * x;
  const Matrix expected = pp * (one - y) * (one - y) * pp + pp * x * (one - y) * pm +
                          pm * x * (2.0 * one - y) * (one - y) * pp + pm * (y * (2.0 * one - y) - one) * pm + pm;
  EXPECT_LT((assemble(index_even(dec, t.d1, chi).idempotent) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IndexFunctoriality, ChiDefaultAndFejer) {
  for (const auto& name : builtin_tower_names()) {
    const auto c = builtin_config(name);
    const auto t = build_tower(c);
    for (const auto& chi : {chi_default_function(), fejer_function(1.0)}) {
      const auto r = check_index_functoriality(c.base_operator, t.ctx, chi);
      EXPECT_TRUE(r.pass) << name << " " << chi.name << " residual " << r.residual;
    }
  }
}

TEST(BoundaryIdempotent, ScalarExamples) {
  auto base = fixture::cycle(1);
  auto c = build_cover(base, fixture::one_voltage(1, 0), cyclic_group(1));
  const auto one = EquivariantKernel::identity(c);
  const auto zero = EquivariantKernel::zero(c);
  auto entry = [](const EquivariantKernel& k) { return k.coefficient(0)(0, 0); };

  const auto b = boundary_idempotent(one, one);
  oracle::M2 w;
  w << entry(b.w.a), entry(b.w.b), entry(b.w.c), entry(b.w.d);
  oracle::M2 expected_w;
  expected_w << 0.0, -1.0, 1.0, 0.0;
  EXPECT_EQ(w, expected_w);
  EXPECT_EQ(entry(b.p.d), Complex(1.0));
  EXPECT_EQ(entry(b.p.a), Complex(0.0));

  const Complex v(0.3, -0.7);
  const auto b0 = boundary_idempotent(zero, v * one);
  EXPECT_EQ(entry(b0.p.a), Complex(1.0));
  EXPECT_EQ(entry(b0.p.b), v);
  EXPECT_EQ(entry(b0.p.c), Complex(0.0));
  EXPECT_EQ(entry(b0.p.d), Complex(0.0));
}

TEST(BoundaryIdempotent, DenseOracle) {
  fixture::S3Dipole s;
  CounterRng rng(40);
  const auto u = Complex(0.3) * random_kernel(s.m1, rng), v = Complex(0.3) * random_kernel(s.m1, rng);
  const Matrix du = assemble(u), dv = assemble(v);
  const auto n = du.rows();
  const Matrix one = Matrix::Identity(n, n), zero = Matrix::Zero(n, n);
  const Matrix lower = blocks2(one, zero, du, one), upper = blocks2(one, -dv, zero, one);
  const Matrix w = lower * upper * lower;
  const Matrix w_inv = w.inverse();
  const Matrix p = w * blocks2(one, zero, zero, zero) * w_inv;

  const auto b = boundary_idempotent(u, v);
  const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
  EXPECT_LT((assemble(b.w) - w).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((assemble(b.w_inverse) - w_inv).cwiseAbs().maxCoeff() / scale, 1e-10);
  EXPECT_LT((assemble(b.p) - p).cwiseAbs().maxCoeff() / scale, 1e-10);
  EXPECT_LT(idempotency_defect(b.p), 1e-10 * scale);
}

TEST(BoundaryExponential, Examples) {
  fixture::Z4Triangle z;
  const auto one = EquivariantKernel::identity(z.m1);
  EXPECT_LT(max_abs_diff(boundary_exponential(Complex(0.5) * one), Complex(-1.0) * one), 1e-13);
  EXPECT_LT(max_abs_diff(boundary_exponential(Complex(3.0) * one), one), 1e-12);

  // Q = ½ + 10⁻³H with ‖H‖ ≤ 1 stays within 2π·10⁻³ of −1.
  CounterRng rng(41);
  auto h = random_hermitian_kernel(z.m1, rng);
  h = Complex(1.0 / operator_norm(h)) * h;
  const auto e = boundary_exponential(Complex(0.5) * one + Complex(1e-3) * h);
  EXPECT_LE(operator_norm(e + one), 2.0 * std::numbers::pi * 1e-3 + 1e-6);
  EXPECT_LT(unitarity_defect(e), 1e-12);

  // Non-Hermitian input goes through the dense exponential: c·1 ↦ e^{2πic}·1.
  const Complex c(0.25, 0.1);
  const auto g = boundary_exponential(c * one);
  const Complex expected = std::exp(Complex(0.0, 2.0 * std::numbers::pi) * c);
  EXPECT_LT(max_abs_diff(g, expected * one), 1e-12);
}

TEST(RhoPath, ErrorsAndTrivialStart) {
  const auto d = hexagon_adjacency();
  const auto fam = fejer_normalizing_family();
  const std::vector<double> grid{0.0, 1.0, 4.0};
  const auto path = rho_path(d, fam, grid);
  EXPECT_LT(path.trivial_defect(), 1e-12);
  EXPECT_NEAR(path.gap, 1.0, 1e-12);
  for (std::size_t i = 1; i < path.samples.size(); ++i) {
    EXPECT_LT(unitarity_defect(path.samples[i].rep.matrix), 1e-12);
    EXPECT_LE(path.samples[i].prop, d.cover()->diameter());
  }

  const std::vector<double> no_zero{1.0, 2.0};
  try {
    rho_path(d, fam, no_zero);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
  }

  auto base = fixture::cycle(2);
  auto c4 = build_cover(base, fixture::one_voltage(2, 1), cyclic_group(2));
  try {
    rho_path(lift_base_operator(fixture::adjacency(*base), c4), fam, grid);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoSpectralGap);
  }
}

TEST(RhoPath, GradedTrivialStart) {
  const auto t = graded_tower();
  const std::vector<double> grid{0.0, 2.0};
  const auto path = rho_path(t.d1, fejer_normalizing_family(), grid);
  EXPECT_TRUE(path.graded);
  EXPECT_LT(path.trivial_defect(), 1e-12);
}

TEST(RhoFunctoriality, TrivialSubgroupIsExact) {
  auto c = builtin_config("z4_mod_z2_triangle");
  const auto t = build_tower(c);
  const auto ctx = make_fold_context(t.ctx.m1, quotient(t.group, subgroup_closure(t.group, {})));
  const std::vector<double> grid{0.0, 0.5, 2.0};
  const auto r = check_rho_functoriality(c.base_operator, ctx, fejer_normalizing_family(), grid);
  EXPECT_EQ(r.max_residual, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(RhoFunctoriality, BuiltinTowers) {
  const std::vector<double> grid{0.0, 0.5, 4.0, 32.0};
  for (const auto& name : builtin_tower_names()) {
    const auto c = builtin_config(name);
    const auto t = build_tower(c);
    const auto r = check_rho_functoriality(c.base_operator, t.ctx, fejer_normalizing_family(), grid, c.gap_floor);
    EXPECT_TRUE(r.pass) << name << " residual " << r.max_residual;
    EXPECT_LT(r.trivial_defect_m1, 1e-10);
    EXPECT_LT(r.trivial_defect_m2, 1e-10);
  }
}
