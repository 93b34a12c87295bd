#pragma once

// Representatives of the higher index and the higher rho invariant built from
// functional calculus of a lifted operator, the two index maps, and the
// representative-level functoriality checks under folding.

#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "equifold/error.hpp"
#include "equifold/folding.hpp"
#include "equifold/kernel.hpp"
#include "equifold/spectral.hpp"

namespace equifold {

/// Index representative A(χ).
///
/// Ungraded: the unitary e^{πi(χ+1)}(D).
/// Graded:   the 2×2 matrix in χ(D)^± stored as a single kernel on
///           E = E⁺ ⊕ E⁻ (its ++, +−, −+, −− blocks are the four entries),
///           whose diagonal carries the "−1" of the formal difference
///           [P] − [e₂₂]; `idempotent` is P = A + e₂₂.
struct IndexRepresentative {
  bool graded = false;
  EquivariantKernel matrix;
  EquivariantKernel idempotent;
  std::string chi;
};

inline IndexRepresentative index_odd(const SpectralDecomposition& dec, const ScalarFunction& chi) {
  if (dec.cover->base()->grading) throw Error(ErrorKind::NotGraded, "index_odd expects an ungraded operator");
  auto u = apply_function(dec, [&chi](double x) {
    return std::exp(Complex(0.0, std::numbers::pi * (chi(x) + 1.0)));
  });
  return {false, std::move(u), {}, chi.name};
}

inline IndexRepresentative index_odd(const EquivariantKernel& d, const ScalarFunction& chi) {
  return index_odd(eigendecompose(d), chi);
}

/// Builds A(χ) from X = χ(D) with χ⁺ = P⁻XP⁺ and χ⁻ = P⁺XP⁻:
///   [ (1 − χ⁻χ⁺)²                 χ⁻(1 − χ⁺χ⁻)         ]
///   [ χ⁺(2 − χ⁻χ⁺)(1 − χ⁻χ⁺)      χ⁺χ⁻(2 − χ⁺χ⁻) − 1   ]
inline IndexRepresentative index_even_from_chi(const EquivariantKernel& x, const std::string& chi_name) {
  const auto& cover = x.cover();
  const auto one = EquivariantKernel::identity(cover);
  const auto p_plus = grading_projection(cover, true);
  const auto p_minus = grading_projection(cover, false);
  const auto y = compose(x, x);
  const auto one_minus_y = one - y;
  const auto two_minus_y = Complex(2.0) * one - y;

  const auto top_left = p_plus * one_minus_y * one_minus_y * p_plus;
  const auto top_right = p_plus * x * one_minus_y * p_minus;
  const auto bottom_left = p_minus * x * two_minus_y * one_minus_y * p_plus;
  const auto bottom_right = p_minus * (y * two_minus_y - one) * p_minus;

  IndexRepresentative out;
  out.graded = true;
  out.matrix = top_left + top_right + bottom_left + bottom_right;
  out.idempotent = out.matrix + p_minus;
  out.chi = chi_name;
  return out;
}

inline IndexRepresentative index_even(const SpectralDecomposition& dec, const EquivariantKernel& d,
                                      const ScalarFunction& chi) {
  const auto& grading = d.cover()->base()->grading;
  if (!grading) throw Error(ErrorKind::NotGraded, "index_even expects a graded operator");
  if (kernel_parity(d, *grading, 1e-13 * std::max(1.0, max_abs_entry(d))) != Parity::Odd) {
    throw Error(ErrorKind::NotGraded, "operator is not odd for the grading");
  }
  return index_even_from_chi(apply_function(dec, chi.eval), chi.name);
}

inline IndexRepresentative index_even(const EquivariantKernel& d, const ScalarFunction& chi) {
  require_hermitian(d);
  return index_even(eigendecompose(d), d, chi);
}

/// Dispatches on the grading of the cover.
inline IndexRepresentative index_representative(const SpectralDecomposition& dec, const EquivariantKernel& d,
                                                const ScalarFunction& chi) {
  return d.cover()->base()->grading ? index_even(dec, d, chi) : index_odd(dec, chi);
}

/// ‖A² − A‖ (operator norm) for the representative's idempotent form in the
/// graded case and for A itself otherwise.
inline double idempotency_defect_norm(const EquivariantKernel& a) {
  return operator_norm(compose(a, a) - a);
}

// ---------------------------------------------------------------------------
// Index maps.

/// 2×2 matrix over the kernel algebra.
struct KernelMatrix2 {
  EquivariantKernel a, b, c, d;  // [[a, b], [c, d]]

  static KernelMatrix2 identity(const CoverPtr& cover) {
    const auto one = EquivariantKernel::identity(cover);
    const auto zero = EquivariantKernel::zero(cover);
    return {one, zero, zero, one};
  }
};

inline KernelMatrix2 operator*(const KernelMatrix2& x, const KernelMatrix2& y) {
  return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

inline KernelMatrix2 operator-(const KernelMatrix2& x, const KernelMatrix2& y) {
  return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
}

inline double max_abs_entry(const KernelMatrix2& x) {
  return std::max({max_abs_entry(x.a), max_abs_entry(x.b), max_abs_entry(x.c), max_abs_entry(x.d)});
}

inline Matrix assemble(const KernelMatrix2& x) {
  const Matrix a = assemble(x.a);
  const auto n = a.rows();
  Matrix out(2 * n, 2 * n);
  out << a, assemble(x.b), assemble(x.c), assemble(x.d);
  return out;
}

struct BoundaryIdempotent {
  KernelMatrix2 w;
  KernelMatrix2 w_inverse;
  KernelMatrix2 p;
};

/// W = [[1,0],[U,1]]·[[1,−V],[0,1]]·[[1,0],[U,1]], P = W·diag(1,0)·W⁻¹. The
/// inverse is the product of the inverted triangular factors.
inline BoundaryIdempotent boundary_idempotent(const EquivariantKernel& u, const EquivariantKernel& v) {
  u.require_same_cover(v);
  const auto& cover = u.cover();
  const auto one = EquivariantKernel::identity(cover);
  const auto zero = EquivariantKernel::zero(cover);
  const KernelMatrix2 lower{one, zero, u, one};
  const KernelMatrix2 upper{one, Complex(-1.0) * v, zero, one};
  const KernelMatrix2 lower_inv{one, zero, Complex(-1.0) * u, one};
  const KernelMatrix2 upper_inv{one, v, zero, one};
  BoundaryIdempotent out;
  out.w = lower * upper * lower;
  out.w_inverse = lower_inv * upper_inv * lower_inv;
  const KernelMatrix2 e11{one, zero, zero, zero};
  out.p = out.w * e11 * out.w_inverse;
  return out;
}

inline double idempotency_defect(const KernelMatrix2& p) { return max_abs_entry(p * p - p); }

/// e^{2πiQ}: spectral calculus for Hermitian Q, dense exponential otherwise.
inline EquivariantKernel boundary_exponential(const EquivariantKernel& q) {
  if (hermiticity_defect(q) <= 1e-13 * std::max(1.0, max_abs_entry(q))) {
    return apply_function(eigendecompose(q), [](double x) { return std::exp(Complex(0.0, 2.0 * std::numbers::pi * x)); });
  }
  const Matrix m = (Complex(0.0, 2.0 * std::numbers::pi) * assemble(q)).exp();
  return compress(m, q.cover(), 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()));
}

// ---------------------------------------------------------------------------
// Higher rho paths.

struct RhoSample {
  double t = 0.0;
  double lambda = kInfinity;  // Fourier-support radius of F_t
  IndexRepresentative rep;
  double prop = 0.0;          // ε-propagation of F_t(D)
};

struct RhoPath {
  bool graded = false;
  double gap = 0.0;
  PropagationSpeed speed;
  std::vector<RhoSample> samples;

  /// Distance of R(0) from the trivial element: the identity in the
  /// ungraded case and e₂₂ (for the idempotent form) in the graded case.
  double trivial_defect() const {
    const auto& rep = samples.front().rep;
    if (!graded) return max_abs_diff(rep.matrix, EquivariantKernel::identity(rep.matrix.cover()));
    return max_abs_diff(rep.idempotent, grading_projection(rep.idempotent.cover(), false));
  }
};

inline RhoPath rho_path(const EquivariantKernel& d, const NormalizingFamily& fam, std::span<const double> grid,
                        double gap_floor = 0.1, double tau = 1e-9) {
  if (grid.empty() || grid.front() != 0.0) throw Error(ErrorKind::ConfigError, "rho grid must start at t = 0");
  const auto dec = eigendecompose(d);
  RhoPath path;
  path.graded = bool(d.cover()->base()->grading);
  path.gap = spectral_gap(dec);
  if (path.gap < gap_floor) {
    throw Error(ErrorKind::NoSpectralGap, "spectral gap " + std::to_string(path.gap) + " below floor");
  }
  path.speed = propagation_speed(d);
  for (double t : grid) {
    const auto f = fam.member(t);
    RhoSample s;
    s.t = t;
    s.lambda = t == 0.0 ? kInfinity : fam.lambda(t);
    s.prop = propagation(apply_function(dec, f.eval), tau);
    s.rep = index_representative(dec, d, f);
    path.samples.push_back(std::move(s));
  }
  return path;
}

// ---------------------------------------------------------------------------
// Functoriality under folding.

struct LiftedPair {
  EquivariantKernel d1;
  EquivariantKernel d2;
};

/// D₁ and D₂ lifted independently from the base operator.
inline LiftedPair lift_pair(const BaseOperator& op, const FoldContext& ctx) {
  return {lift_base_operator(op, ctx.m1), lift_base_operator(op, ctx.m2)};
}

struct FunctorialityResult {
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// max |Ψ(A₁(χ)) − A₂(χ)| with both sides built from independent lifts.
inline FunctorialityResult check_index_functoriality(const BaseOperator& op, const FoldContext& ctx,
                                                     const ScalarFunction& chi, double tolerance = 1e-10) {
  const auto lifted = lift_pair(op, ctx);
  const auto a1 = index_representative(eigendecompose(lifted.d1), lifted.d1, chi);
  const auto a2 = index_representative(eigendecompose(lifted.d2), lifted.d2, chi);
  const double r = max_abs_diff(fold_kernel(a1.matrix, ctx), a2.matrix);
  return {r, tolerance, r < tolerance};
}

struct RhoFunctorialityResult {
  std::vector<double> t;
  std::vector<double> residuals;
  double max_residual = 0.0;
  double trivial_defect_m1 = 0.0;
  double trivial_defect_m2 = 0.0;
  RhoPath path1;
  RhoPath path2;
  bool pass = false;
};

/// Ψ∘R_{D₁} against R_{D₂} sample by sample.
inline RhoFunctorialityResult check_rho_functoriality(const BaseOperator& op, const FoldContext& ctx,
                                                      const NormalizingFamily& fam, std::span<const double> grid,
                                                      double gap_floor = 0.1, double tolerance = 1e-10) {
  const auto lifted = lift_pair(op, ctx);
  RhoFunctorialityResult out;
  out.path1 = rho_path(lifted.d1, fam, grid, gap_floor);
  out.path2 = rho_path(lifted.d2, fam, grid, 0.0);
  std::vector<PathSample> samples;
  for (const auto& s : out.path1.samples) samples.push_back({s.t, s.rep.matrix});
  const auto folded = fold_path(samples, ctx);
  for (std::size_t i = 0; i < folded.samples.size(); ++i) {
    const double r = max_abs_diff(folded.samples[i].kernel, out.path2.samples[i].rep.matrix);
    out.t.push_back(folded.samples[i].t);
    out.residuals.push_back(r);
    out.max_residual = std::max(out.max_residual, r);
  }
  out.trivial_defect_m1 = out.path1.trivial_defect();
  out.trivial_defect_m2 = out.path2.trivial_defect();
  out.pass = out.max_residual < tolerance;
  return out;
}

}  // namespace equifold
