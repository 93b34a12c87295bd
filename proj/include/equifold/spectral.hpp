#pragma once

// Functional calculus for Hermitian equivariant kernels, wave operators,
// Fourier-inversion reconstruction, and the normalizing functions χ and F_t.

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "equifold/error.hpp"
#include "equifold/kernel.hpp"

namespace equifold {

struct SpectralDecomposition {
  CoverPtr cover;
  Eigen::VectorXd eigenvalues;  // ascending
  Matrix eigenvectors;          // columns

  /// ‖UΛUᴴ − A‖_max relative to ‖A‖_max.
  double reconstruction_defect(const Matrix& a) const {
    const Matrix back = eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (back - a).cwiseAbs().maxCoeff() / scale;
  }

  double unitarity_defect() const {
    const auto n = eigenvectors.cols();
    return (eigenvectors.adjoint() * eigenvectors - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  }
};

inline void require_hermitian(const EquivariantKernel& k, double tol = 1e-13) {
  const double defect = hermiticity_defect(k);
  if (defect > tol * std::max(1.0, max_abs_entry(k))) {
    throw Error(ErrorKind::NotHermitian, "hermiticity defect " + std::to_string(defect));
  }
}

inline SpectralDecomposition eigendecompose(const EquivariantKernel& k) {
  require_hermitian(k);
  Matrix a = assemble(k);
  a = 0.5 * (a + a.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::NotHermitian, "eigensolver did not converge");
  return {k.cover(), solver.eigenvalues(), solver.eigenvectors()};
}

/// f(D) = U f(Λ) Uᴴ for f: ℝ → ℝ or ℂ, returned as a kernel.
template <class F>
EquivariantKernel apply_function(const SpectralDecomposition& dec, F&& f) {
  const auto n = dec.eigenvalues.size();
  Eigen::VectorXcd values(n);
  double scale = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    values(i) = Complex(f(dec.eigenvalues(i)));
    scale = std::max(scale, std::abs(values(i)));
  }
  const Matrix m = dec.eigenvectors * values.asDiagonal() * dec.eigenvectors.adjoint();
  return compress(m, dec.cover, 1e-11 * scale);
}

// ---------------------------------------------------------------------------
// Scalar functions.

enum class FunctionClass { C0, Bounded, Normalizing, Bandlimited };

struct ScalarFunction {
  std::string name;
  std::function<double(double)> eval;
  FunctionClass kind = FunctionClass::Bounded;
  /// Fourier-support radius λ for band-limited functions.
  double bandwidth = 0.0;
  /// f̂(t) = ∫ f(x) e^{-itx} dx, when f̂ is real and known in closed form.
  std::function<double(double)> fourier;
  /// Bound on (1/2π)∫_{|t|>T} |f̂(t)| dt.
  std::function<double(double)> fourier_tail;

  double operator()(double x) const { return eval(x); }
};

/// Normalizing functions must be odd with limits ±1; checked at ±10⁶ and on
/// a small grid.
inline void validate_normalizing(const ScalarFunction& f, double tol = 1e-3) {
  if (std::abs(f(1e6) - 1.0) > tol || std::abs(f(-1e6) + 1.0) > tol) {
    throw Error(ErrorKind::BadParameterization, f.name + " does not tend to ±1");
  }
  for (double x : {0.0, 0.1, 0.5, 1.0, 2.0, 7.5}) {
    if (std::abs(f(x) + f(-x)) > 1e-12) throw Error(ErrorKind::BadParameterization, f.name + " is not odd");
  }
}

inline double chi_default(double x) { return x / std::sqrt(1.0 + x * x); }

inline ScalarFunction chi_default_function() {
  return {"chi_default", chi_default, FunctionClass::Normalizing, 0.0, {}, {}};
}

inline ScalarFunction sign_function() {
  return {"sign", [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }, FunctionClass::Normalizing,
          0.0, {}, {}};
}

/// e^{-x²/2}, with f̂(t) = √(2π) e^{-t²/2}.
inline ScalarFunction gaussian_function() {
  ScalarFunction f{"gaussian", [](double x) { return std::exp(-0.5 * x * x); }, FunctionClass::C0, 0.0, {}, {}};
  f.fourier = [](double t) { return std::sqrt(2.0 * std::numbers::pi) * std::exp(-0.5 * t * t); };
  f.fourier_tail = [](double t_max) { return std::erfc(t_max / std::sqrt(2.0)); };
  return f;
}

inline ScalarFunction constant_function(double c) {
  return {"constant", [c](double) { return c; }, FunctionClass::Bounded, 0.0, {}, {}};
}

/// Σ c_k x^k (Horner).
inline ScalarFunction polynomial_function(std::vector<double> coeffs) {
  return {"polynomial",
          [coeffs = std::move(coeffs)](double x) {
            double acc = 0.0;
            for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
            return acc;
          },
          FunctionClass::Bounded, 0.0, {}, {}};
}

template <class F>
EquivariantKernel apply_function(const EquivariantKernel& k, F&& f) {
  return apply_function(eigendecompose(k), std::forward<F>(f));
}

// ---------------------------------------------------------------------------
// Fejér-smoothed sign functions.

namespace detail {

/// ∫₀¹ (1 − u) sin(zu)/u du. Adaptive Gauss–Kronrod up to |z| = 32; beyond
/// that the equivalent form Si(z) − (1 − cos z)/z, with Si from its
/// asymptotic series truncated at the smallest term (error ≈ e^{−z}).
inline double fejer_integral(double z) {
  if (z == 0.0) return 0.0;
  if (z < 0.0) return -fejer_integral(-z);
  if (z <= 32.0) {
    auto integrand = [z](double u) { return u == 0.0 ? z : (1.0 - u) * std::sin(z * u) / u; };
    // Pieces of at most two periods so each Kronrod panel resolves the
    // oscillation.
    const int pieces = std::max(1, int(std::ceil(z / (4.0 * std::numbers::pi))));
    double total = 0.0;
    for (int p = 0; p < pieces; ++p) {
      const double a = double(p) / pieces, b = double(p + 1) / pieces;
      total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, a, b, 6, 1e-12);
    }
    return total;
  }
  // f(z) ~ Σ (−1)^k (2k)!/z^{2k+1}, g(z) ~ Σ (−1)^k (2k+1)!/z^{2k+2}.
  double f = 0.0, g = 0.0;
  double tf = 1.0 / z, tg = 1.0 / (z * z);
  for (int k = 0; k < 64; ++k) {
    f += tf;
    g += tg;
    const double nf = -tf * double((2 * k + 1) * (2 * k + 2)) / (z * z);
    const double ng = -tg * double((2 * k + 2) * (2 * k + 3)) / (z * z);
    if (std::abs(nf) >= std::abs(tf) || std::abs(nf) < 1e-18 * std::abs(f)) break;
    tf = nf;
    tg = ng;
  }
  const double si = 0.5 * std::numbers::pi - f * std::cos(z) - g * std::sin(z);
  return si - (1.0 - std::cos(z)) / z;
}

}  // namespace detail

/// F(x) = (2/π) ∫₀^λ (1 − s/λ) sin(sx)/s ds: sign convolved with a Fejér
/// kernel. Its distributional Fourier transform is supported in [−λ, λ].
inline double fejer_sign(double lambda, double x) {
  return 2.0 / std::numbers::pi * detail::fejer_integral(lambda * x);
}

inline ScalarFunction fejer_function(double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::BadParameterization, "Fejér radius must be positive");
  return {"fejer", [lambda](double x) { return fejer_sign(lambda, x); }, FunctionClass::Bandlimited, lambda, {}, {}};
}

/// t ↦ F_t with band radius λ(t); F₀ is the sign function.
struct NormalizingFamily {
  std::function<double(double)> lambda;

  ScalarFunction member(double t) const {
    if (t == 0.0) return sign_function();
    return fejer_function(lambda(t));
  }
};

inline NormalizingFamily fejer_normalizing_family(std::function<double(double)> lambda = [](double t) {
  return 1.0 / t;
}) {
  double prev = kInfinity;
  for (double t = 1e-3; t <= 1e4; t *= 1.5) {
    const double l = lambda(t);
    if (!(l > 0.0) || !(l < prev)) {
      throw Error(ErrorKind::BadParameterization, "λ(t) must be positive and strictly decreasing");
    }
    prev = l;
  }
  if (!(lambda(1e6) < 1e-2 * lambda(1.0))) {
    throw Error(ErrorKind::BadParameterization, "λ(t) does not decay to zero");
  }
  return {std::move(lambda)};
}

// ---------------------------------------------------------------------------
// Wave operators.

inline EquivariantKernel wave_operator(const SpectralDecomposition& dec, double t) {
  return apply_function(dec, [t](double x) { return std::exp(Complex(0.0, t * x)); });
}

inline EquivariantKernel wave_operator(const EquivariantKernel& k, double t) {
  return wave_operator(eigendecompose(k), t);
}

/// Independent construction of e^{itD}: classical RK4 on U' = iDU, U(0) = 1,
/// using only kernel composition, with step at most 1e-3/‖D‖.
inline EquivariantKernel wave_operator_rk4(const EquivariantKernel& d, double t) {
  const double norm = operator_norm(d);
  const auto steps = std::max<long>(1, long(std::ceil(std::abs(t) * norm / 1e-3)));
  const double h = t / double(steps);
  const EquivariantKernel ihd = Complex(0.0, h) * d;
  EquivariantKernel u = EquivariantKernel::identity(d.cover());
  for (long s = 0; s < steps; ++s) {
    const auto k1 = compose(ihd, u);
    const auto k2 = compose(ihd, u + Complex(0.5) * k1);
    const auto k3 = compose(ihd, u + Complex(0.5) * k2);
    const auto k4 = compose(ihd, u + k3);
    u += Complex(1.0 / 6.0) * (k1 + Complex(2.0) * k2 + Complex(2.0) * k3 + k4);
  }
  return u;
}

inline double unitarity_defect(const EquivariantKernel& u) {
  return max_abs_diff(compose(adjoint(u), u), EquivariantKernel::identity(u.cover()));
}

struct ProfilePoint {
  double t = 0.0;
  double prop = 0.0;
  double residual = 0.0;  // unitarity defect of e^{itD}
};

/// ε-propagation of e^{itD} along a t-grid.
inline std::vector<ProfilePoint> epsilon_propagation_profile(const EquivariantKernel& k, std::span<const double> grid,
                                                             double tau = 1e-9) {
  const auto dec = eigendecompose(k);
  std::vector<ProfilePoint> out;
  for (double t : grid) {
    const auto u = wave_operator(dec, t);
    out.push_back({t, propagation(u, tau), unitarity_defect(u)});
  }
  return out;
}

/// Speed v = ‖D‖·(max edge length) and slack s₀ = one (maximal) edge length
/// used by the discrete propagation bounds.
struct PropagationSpeed {
  double speed = 0.0;
  double slack = 0.0;
};

inline PropagationSpeed propagation_speed(const EquivariantKernel& k) {
  const double len = k.cover()->base()->max_edge_length();
  return {operator_norm(k) * len, len};
}

// ---------------------------------------------------------------------------
// Fourier inversion: f(D) = (1/2π) ∫ f̂(t) e^{itD} dt.

struct QuadratureSpec {
  double t_max = 8.0;
  int intervals = 2048;  // composite Simpson panels count; must be even
};

struct FourierInversion {
  EquivariantKernel kernel;
  double richardson_estimate = 0.0;  // |S_n − S_{n/2}| / 15, max entry
  double tail_bound = 0.0;
};

namespace detail {

inline EquivariantKernel simpson_fourier(const SpectralDecomposition& dec, const ScalarFunction& f,
                                         double t_max, int intervals) {
  const double h = 2.0 * t_max / intervals;
  EquivariantKernel acc(dec.cover);
  for (int k = 0; k <= intervals; ++k) {
    const double t = -t_max + k * h;
    const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    acc += Complex(w * h / 3.0 * f.fourier(t) / (2.0 * std::numbers::pi)) * wave_operator(dec, t);
  }
  return acc;
}

}  // namespace detail

inline FourierInversion fourier_inversion_apply(const SpectralDecomposition& dec, const ScalarFunction& f,
                                                QuadratureSpec quad, double tolerance = kInfinity) {
  if (!f.fourier) throw Error(ErrorKind::ConfigError, f.name + " has no closed-form Fourier transform");
  if (quad.intervals < 4 || quad.intervals % 4 != 0) {
    throw Error(ErrorKind::ConfigError, "Simpson interval count must be a positive multiple of 4");
  }
  FourierInversion out{detail::simpson_fourier(dec, f, quad.t_max, quad.intervals), 0.0, 0.0};
  const auto coarse = detail::simpson_fourier(dec, f, quad.t_max, quad.intervals / 2);
  out.richardson_estimate = max_abs_diff(out.kernel, coarse) / 15.0;
  out.tail_bound = f.fourier_tail ? f.fourier_tail(quad.t_max) : kInfinity;
  if (out.richardson_estimate + out.tail_bound > tolerance) {
    throw Error(ErrorKind::QuadratureUnderresolved,
                "estimated error " + std::to_string(out.richardson_estimate + out.tail_bound));
  }
  return out;
}

inline FourierInversion fourier_inversion_apply(const EquivariantKernel& k, const ScalarFunction& f,
                                                QuadratureSpec quad, double tolerance = kInfinity) {
  return fourier_inversion_apply(eigendecompose(k), f, quad, tolerance);
}

struct ConvergenceAudit {
  std::vector<std::pair<int, double>> residuals;  // (intervals, residual vs eigendecomposition)
  double observed_order = 0.0;
};

/// Residual of the Simpson reconstruction under node doubling. The order is
/// measured on the first doubling that starts below `entry_residual`, which
/// skips the pre-asymptotic regime where the nodes do not resolve ‖D‖.
inline ConvergenceAudit fourier_convergence_audit(const SpectralDecomposition& dec, const ScalarFunction& f,
                                                  double t_max, double entry_residual = 1e-3,
                                                  int max_intervals = 4096) {
  const auto exact = apply_function(dec, f.eval);
  ConvergenceAudit audit;
  for (int n = 8; n <= max_intervals; n *= 2) {
    const auto approx = detail::simpson_fourier(dec, f, t_max, n);
    audit.residuals.emplace_back(n, max_abs_diff(approx, exact));
  }
  for (std::size_t i = 0; i + 1 < audit.residuals.size(); ++i) {
    const double a = audit.residuals[i].second, b = audit.residuals[i + 1].second;
    if (a < entry_residual) {
      audit.observed_order = std::log2(a / std::max(b, 1e-300));
      break;
    }
  }
  return audit;
}

inline double spectral_gap(const SpectralDecomposition& dec) {
  return dec.eigenvalues.size() == 0 ? 0.0 : dec.eigenvalues.cwiseAbs().minCoeff();
}

inline double spectral_gap(const EquivariantKernel& k) { return spectral_gap(eigendecompose(k)); }

/// True if `sub` (ascending) embeds in `super` (ascending) as a multiset
/// with matched values within tol.
inline bool spectrum_contained(const Eigen::VectorXd& sub, const Eigen::VectorXd& super, double tol) {
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < sub.size(); ++i) {
    while (j < super.size() && super(j) < sub(i) - tol) ++j;
    if (j == super.size() || std::abs(super(j) - sub(i)) > tol) return false;
    ++j;
  }
  return true;
}

}  // namespace equifold
