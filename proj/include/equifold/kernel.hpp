#pragma once

// Γ-equivariant operators on sections over a cover, stored by group element:
// the full kernel is k((γ, v), (γ', w)) = B(γ⁻¹γ')[v, w], where B(g) is a
// (|V|·r)×(|V|·r) matrix of fiber blocks. Equivariance is therefore
// structural; dense assembly exists as an oracle and for eigensolves.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "equifold/cover.hpp"
#include "equifold/error.hpp"
#include "equifold/group.hpp"
#include "equifold/rng.hpp"

namespace equifold {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

class EquivariantKernel {
 public:
  EquivariantKernel() = default;

  explicit EquivariantKernel(CoverPtr cover)
      : cover_(std::move(cover)),
        blocks_(cover_->group()->order(), Matrix::Zero(width(), width())) {}

  EquivariantKernel(CoverPtr cover, std::vector<Matrix> blocks)
      : cover_(std::move(cover)), blocks_(std::move(blocks)) {
    if (blocks_.size() != cover_->group()->order()) {
      throw Error(ErrorKind::CoverMismatch, "one coefficient block per group element is required");
    }
    for (const auto& b : blocks_) {
      if (b.rows() != Eigen::Index(width()) || b.cols() != Eigen::Index(width())) {
        throw Error(ErrorKind::CoverMismatch, "coefficient block has the wrong shape");
      }
    }
  }

  static EquivariantKernel zero(const CoverPtr& cover) { return EquivariantKernel(cover); }

  static EquivariantKernel identity(const CoverPtr& cover) {
    EquivariantKernel k(cover);
    k.blocks_[cover->group()->identity()].setIdentity();
    return k;
  }

  const CoverPtr& cover() const noexcept { return cover_; }
  const FiniteGroup& group() const noexcept { return *cover_->group(); }
  std::size_t fiber_rank() const noexcept { return cover_->fiber_rank(); }
  /// Side length of a coefficient block, |V|·r.
  std::size_t width() const noexcept { return cover_->base_vertex_count() * cover_->fiber_rank(); }

  const Matrix& coefficient(Index g) const { return blocks_.at(g); }
  Matrix& coefficient(Index g) { return blocks_.at(g); }
  const std::vector<Matrix>& coefficients() const noexcept { return blocks_; }

  /// r×r block K(g, v, w).
  auto block(Index g, Index v, Index w) const {
    const auto r = Eigen::Index(fiber_rank());
    return blocks_.at(g).block(v * r, w * r, r, r);
  }
  auto block(Index g, Index v, Index w) {
    const auto r = Eigen::Index(fiber_rank());
    return blocks_.at(g).block(v * r, w * r, r, r);
  }

  EquivariantKernel& operator+=(const EquivariantKernel& other) {
    require_same_cover(other);
    for (std::size_t g = 0; g < blocks_.size(); ++g) blocks_[g] += other.blocks_[g];
    return *this;
  }
  EquivariantKernel& operator-=(const EquivariantKernel& other) {
    require_same_cover(other);
    for (std::size_t g = 0; g < blocks_.size(); ++g) blocks_[g] -= other.blocks_[g];
    return *this;
  }
  EquivariantKernel& operator*=(Complex s) {
    for (auto& b : blocks_) b *= s;
    return *this;
  }

  void require_same_cover(const EquivariantKernel& other) const {
    if (!same_cover(other)) throw Error(ErrorKind::CoverMismatch, "kernels live on different covers");
  }

  bool same_cover(const EquivariantKernel& other) const {
    if (cover_ == other.cover_) return true;
    return cover_ && other.cover_ && *cover_->group() == *other.cover_->group() &&
           cover_->base_vertex_count() == other.cover_->base_vertex_count() &&
           cover_->fiber_rank() == other.cover_->fiber_rank() &&
           cover_->voltages() == other.cover_->voltages();
  }

 private:
  CoverPtr cover_;
  std::vector<Matrix> blocks_;
};

inline EquivariantKernel operator+(EquivariantKernel a, const EquivariantKernel& b) { return a += b; }
inline EquivariantKernel operator-(EquivariantKernel a, const EquivariantKernel& b) { return a -= b; }
inline EquivariantKernel operator*(Complex s, EquivariantKernel a) { return a *= s; }

/// Composition: (KK')(g) = Σ_a K(a)·K'(a⁻¹g).
inline EquivariantKernel compose(const EquivariantKernel& a, const EquivariantKernel& b) {
  a.require_same_cover(b);
  const auto& grp = a.group();
  EquivariantKernel out(a.cover());
  for (Index x = 0; x < grp.order(); ++x) {
    const Matrix& ax = a.coefficient(x);
    if (ax.isZero(0.0)) continue;
    for (Index y = 0; y < grp.order(); ++y) {
      const Matrix& by = b.coefficient(y);
      if (by.isZero(0.0)) continue;
      out.coefficient(grp.mul(x, y)).noalias() += ax * by;
    }
  }
  return out;
}

inline EquivariantKernel operator*(const EquivariantKernel& a, const EquivariantKernel& b) {
  return compose(a, b);
}

/// K*(g) = K(g⁻¹)ᴴ.
inline EquivariantKernel adjoint(const EquivariantKernel& k) {
  EquivariantKernel out(k.cover());
  for (Index g = 0; g < k.group().order(); ++g) out.coefficient(g) = k.coefficient(k.group().inv(g)).adjoint();
  return out;
}

inline double max_abs_entry(const EquivariantKernel& k) {
  double m = 0.0;
  for (const auto& b : k.coefficients()) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

/// Entrywise max |a − b|; covers must agree.
inline double max_abs_diff(const EquivariantKernel& a, const EquivariantKernel& b) {
  a.require_same_cover(b);
  double m = 0.0;
  for (Index g = 0; g < a.group().order(); ++g)
    m = std::max(m, (a.coefficient(g) - b.coefficient(g)).cwiseAbs().maxCoeff());
  return m;
}

inline bool exactly_equal(const EquivariantKernel& a, const EquivariantKernel& b) {
  return a.same_cover(b) && a.coefficients() == b.coefficients();
}

/// max |K − K*| entrywise.
inline double hermiticity_defect(const EquivariantKernel& k) { return max_abs_diff(k, adjoint(k)); }

// ---------------------------------------------------------------------------
// Dense representation on L²(E), basis ordered (g, v, fiber) lexicographically.

/// Row/column block for sheets (γ, γ') is B(γ⁻¹γ').
inline Matrix assemble(const EquivariantKernel& k) {
  const auto& grp = k.group();
  const auto w = Eigen::Index(k.width());
  const auto n = Eigen::Index(grp.order()) * w;
  Matrix out(n, n);
  for (Index a = 0; a < grp.order(); ++a)
    for (Index b = 0; b < grp.order(); ++b)
      out.block(a * w, b * w, w, w) = k.coefficient(grp.mul(grp.inv(a), b));
  return out;
}

/// Dense matrix of the deck translation x ↦ g·x: (U_g s)(g·x) = s(x).
inline Matrix deck_matrix(const CoverGraph& cover, Index g) {
  const auto r = Eigen::Index(cover.fiber_rank());
  const auto n = Eigen::Index(cover.dimension());
  Matrix u = Matrix::Zero(n, n);
  for (Index x = 0; x < cover.vertex_count(); ++x)
    for (Eigen::Index a = 0; a < r; ++a) u(cover.deck(g, x) * r + a, x * r + a) = 1.0;
  return u;
}

/// max over g and entries of |A(gx, gy) − A(x, y)|, i.e. of [A, U_g].
inline double equivariance_defect(const Matrix& a, const CoverGraph& cover) {
  const auto r = Eigen::Index(cover.fiber_rank());
  const auto n = Eigen::Index(cover.vertex_count());
  if (a.rows() != n * r || a.cols() != n * r) throw Error(ErrorKind::CoverMismatch, "dense operator has wrong size");
  double worst = 0.0;
  for (Index g = 0; g < cover.group()->order(); ++g)
    for (Index x = 0; x < n; ++x)
      for (Index y = 0; y < n; ++y)
        worst = std::max(worst, (a.block(cover.deck(g, x) * r, cover.deck(g, y) * r, r, r) -
                                 a.block(x * r, y * r, r, r))
                                    .cwiseAbs()
                                    .maxCoeff());
  return worst;
}

/// Kernel of a dense operator. Exactly equivariant input is read off without
/// arithmetic; otherwise the group average is returned, provided the
/// commutator with every deck translation stays within `tol`.
inline EquivariantKernel compress(const Matrix& a, const CoverPtr& cover, double tol) {
  const double defect = equivariance_defect(a, *cover);
  if (defect > tol) {
    throw Error(ErrorKind::NotEquivariant,
                "commutator with the deck action is " + std::to_string(defect));
  }
  const auto& grp = *cover->group();
  const auto w = Eigen::Index(cover->base_vertex_count() * cover->fiber_rank());
  EquivariantKernel out(cover);
  const Index e = grp.identity();
  for (Index g = 0; g < grp.order(); ++g) {
    if (defect == 0.0) {
      out.coefficient(g) = a.block(e * w, g * w, w, w);
      continue;
    }
    Matrix acc = Matrix::Zero(w, w);
    for (Index s = 0; s < grp.order(); ++s) acc += a.block(s * w, grp.mul(s, g) * w, w, w);
    out.coefficient(g) = acc / double(grp.order());
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Largest d((e, v), (g, w)) over blocks with Frobenius norm above `tau`.
inline double propagation(const EquivariantKernel& k, double tau = 1e-12) {
  const auto& cover = *k.cover();
  const Index e = k.group().identity();
  double prop = 0.0;
  for (Index g = 0; g < k.group().order(); ++g)
    for (Index v = 0; v < cover.base_vertex_count(); ++v)
      for (Index w = 0; w < cover.base_vertex_count(); ++w)
        if (k.block(g, v, w).norm() > tau) prop = std::max(prop, cover.dist(cover.vertex(e, v), cover.vertex(g, w)));
  return prop;
}

/// Spectral norm of the assembled operator. For a finite group this is the
/// maximal norm: the regular representation contains every irreducible.
inline double operator_norm(const EquivariantKernel& k) {
  const Matrix a = assemble(k);
  if (a.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------
// Base operators and their lifts.

/// Hermitian operator on the base: a block per vertex (acting within the
/// fiber) and a block per edge v → w (mapping the w-fiber to the v-fiber).
/// The reversed edge carries the adjoint block implicitly.
struct BaseOperator {
  std::vector<Matrix> vertex_blocks;
  std::vector<Matrix> edge_blocks;
};

enum class Parity { Even, Odd, Mixed };

/// Parity of a kernel with respect to the fiber grading r = r⁺ + r⁻, where
/// the first r⁺ fiber coordinates are even.
inline Parity kernel_parity(const EquivariantKernel& k, const Grading& grading, double tol = 0.0) {
  const auto p = Eigen::Index(grading.positive);
  const auto m = Eigen::Index(grading.negative);
  double diag = 0.0, off = 0.0;
  const auto nv = k.cover()->base_vertex_count();
  for (Index g = 0; g < k.group().order(); ++g)
    for (Index v = 0; v < nv; ++v)
      for (Index w = 0; w < nv; ++w) {
        const auto b = k.block(g, v, w);
        if (p > 0) diag = std::max(diag, b.topLeftCorner(p, p).cwiseAbs().maxCoeff());
        if (m > 0) diag = std::max(diag, b.bottomRightCorner(m, m).cwiseAbs().maxCoeff());
        if (p > 0 && m > 0) {
          off = std::max(off, b.topRightCorner(p, m).cwiseAbs().maxCoeff());
          off = std::max(off, b.bottomLeftCorner(m, p).cwiseAbs().maxCoeff());
        }
      }
  if (off <= tol) return Parity::Even;
  if (diag <= tol) return Parity::Odd;
  return Parity::Mixed;
}

/// Diagonal kernel projecting onto E⁺ (positive = true) or E⁻.
inline EquivariantKernel grading_projection(const CoverPtr& cover, bool positive) {
  const auto& grading = cover->base()->grading;
  if (!grading) throw Error(ErrorKind::NotGraded, "cover has no grading");
  EquivariantKernel k(cover);
  const Index e = cover->group()->identity();
  for (Index v = 0; v < cover->base_vertex_count(); ++v) {
    auto b = k.block(e, v, v);
    for (std::size_t a = 0; a < cover->fiber_rank(); ++a)
      if ((a < grading->positive) == positive) b(Eigen::Index(a), Eigen::Index(a)) = 1.0;
  }
  return k;
}

inline EquivariantKernel lift_base_operator(const BaseOperator& op, const CoverPtr& cover) {
  const auto& base = *cover->base();
  const auto r = Eigen::Index(base.fiber_rank);
  if (op.vertex_blocks.size() != base.vertex_count || op.edge_blocks.size() != base.edges.size()) {
    throw Error(ErrorKind::NonHermitianBase, "base operator needs one block per vertex and per edge");
  }
  for (const auto& b : op.vertex_blocks) {
    if (b.rows() != r || b.cols() != r) throw Error(ErrorKind::NonHermitianBase, "vertex block has wrong size");
    if ((b - b.adjoint()).cwiseAbs().maxCoeff() > 1e-14) {
      throw Error(ErrorKind::NonHermitianBase, "vertex block is not Hermitian");
    }
  }
  for (const auto& b : op.edge_blocks) {
    if (b.rows() != r || b.cols() != r) throw Error(ErrorKind::NonHermitianBase, "edge block has wrong size");
  }
  const auto& grp = *cover->group();
  EquivariantKernel k(cover);
  for (Index v = 0; v < base.vertex_count; ++v) k.block(grp.identity(), v, v) += op.vertex_blocks[v];
  for (std::size_t e = 0; e < base.edges.size(); ++e) {
    const auto& be = base.edges[e];
    const Index s = cover->voltages()[e];
    k.block(s, be.from, be.to) += op.edge_blocks[e];
    k.block(grp.inv(s), be.to, be.from) += op.edge_blocks[e].adjoint();
  }
  if (base.grading && kernel_parity(k, *base.grading) != Parity::Odd) {
    throw Error(ErrorKind::NotGraded, "graded base operator must be odd");
  }
  return k;
}

// ---------------------------------------------------------------------------
// ℂΓ ⊗ M_{|V|r}(ℂ) picture: K ↦ Σ_g g ⊗ B(g).

struct GroupMatrixElement {
  GroupPtr group;
  std::vector<Matrix> coeffs;
};

inline GroupMatrixElement operator*(const GroupMatrixElement& x, const GroupMatrixElement& y) {
  if (!(*x.group == *y.group)) throw Error(ErrorKind::GroupMismatch, "product across groups");
  const auto& grp = *x.group;
  GroupMatrixElement out{x.group, std::vector<Matrix>(grp.order(), Matrix::Zero(x.coeffs[0].rows(), x.coeffs[0].cols()))};
  for (Index a = 0; a < grp.order(); ++a)
    for (Index b = 0; b < grp.order(); ++b) out.coeffs[grp.mul(a, b)].noalias() += x.coeffs[a] * y.coeffs[b];
  return out;
}

inline GroupMatrixElement phi_transform(const EquivariantKernel& k) {
  return {k.cover()->group(), k.coefficients()};
}

inline EquivariantKernel phi_inverse(const GroupMatrixElement& x, const CoverPtr& cover) {
  if (!(*x.group == *cover->group())) throw Error(ErrorKind::GroupMismatch, "element is not over the cover group");
  return EquivariantKernel(cover, x.coeffs);
}

/// Σ_g R_g ⊗ B(g), with R_g the right translation γ ↦ γg on ℓ²(Γ).
inline Matrix regular_representation(const GroupMatrixElement& x) {
  const auto& grp = *x.group;
  const auto w = x.coeffs.at(0).rows();
  const auto n = Eigen::Index(grp.order()) * w;
  Matrix out = Matrix::Zero(n, n);
  for (Index g = 0; g < grp.order(); ++g)
    for (Index row = 0; row < grp.order(); ++row) out.block(row * w, grp.mul(row, g) * w, w, w) += x.coeffs[g];
  return out;
}

// ---------------------------------------------------------------------------

/// Kernel with i.i.d. complex Gaussian entries; each (g, v, w) block is kept
/// with probability `density`.
inline EquivariantKernel random_kernel(const CoverPtr& cover, CounterRng& rng, double density = 1.0) {
  EquivariantKernel k(cover);
  const auto r = Eigen::Index(cover->fiber_rank());
  for (Index g = 0; g < cover->group()->order(); ++g)
    for (Index v = 0; v < cover->base_vertex_count(); ++v)
      for (Index w = 0; w < cover->base_vertex_count(); ++w) {
        const bool keep = rng.uniform() < density;
        auto b = k.block(g, v, w);
        for (Eigen::Index i = 0; i < r; ++i)
          for (Eigen::Index j = 0; j < r; ++j) {
            const double re = rng.normal(), im = rng.normal();
            if (keep) b(i, j) = Complex(re, im);
          }
      }
  return k;
}

inline EquivariantKernel random_hermitian_kernel(const CoverPtr& cover, CounterRng& rng, double density = 1.0) {
  const auto k = random_kernel(cover, rng, density);
  return Complex(0.5) * (k + adjoint(k));
}

}  // namespace equifold
