#pragma once

// The folding map Ψ from Γ₁-equivariant operators on M₁ to Γ₂-equivariant
// operators on M₂ = M₁/H, in four equivalent formulations, and the unfolding
// right inverse.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "equifold/cover.hpp"
#include "equifold/error.hpp"
#include "equifold/group.hpp"
#include "equifold/kernel.hpp"

namespace equifold {

struct FoldContext {
  CoverPtr m1;
  CoverPtr m2;
  QuotientData q;
  std::vector<Index> pi;

  std::size_t kernel_order() const noexcept { return q.kernel_order(); }
};

inline FoldContext make_fold_context(const CoverPtr& m1, const QuotientData& q) {
  auto projected = project_cover(*m1, q);
  return {m1, std::move(projected.cover), q, std::move(projected.pi)};
}

namespace detail {

inline void require_over(const EquivariantKernel& k, const CoverPtr& cover, const char* what) {
  if (!k.same_cover(EquivariantKernel(cover))) throw Error(ErrorKind::ContextMismatch, what);
}

}  // namespace detail

/// (Kv)(γ, v) = Σ_{γ'} B(γ⁻¹γ')[v, ·] v(γ', ·) without assembling K.
inline Vector apply_kernel(const EquivariantKernel& k, const Vector& section) {
  const auto& grp = k.group();
  const auto w = Eigen::Index(k.width());
  if (section.size() != Eigen::Index(grp.order()) * w) {
    throw Error(ErrorKind::CoverMismatch, "section has the wrong dimension");
  }
  Vector out = Vector::Zero(section.size());
  for (Index a = 0; a < grp.order(); ++a)
    for (Index b = 0; b < grp.order(); ++b)
      out.segment(a * w, w).noalias() += k.coefficient(grp.mul(grp.inv(a), b)) * section.segment(b * w, w);
  return out;
}

/// Ψ(K)([g]) = Σ_{h∈H} K(hg): the coefficient of each coset is the
/// (correctly rounded) sum of the coefficients over that coset.
inline EquivariantKernel fold_kernel(const EquivariantKernel& k1, const FoldContext& ctx) {
  detail::require_over(k1, ctx.m1, "kernel is not over the context's M₁");
  EquivariantKernel out(ctx.m2);
  std::vector<Complex> terms;
  for (std::size_t c = 0; c < ctx.q.cosets.size(); ++c) {
    Matrix& acc = out.coefficient(Index(c));
    for (Eigen::Index i = 0; i < acc.rows(); ++i)
      for (Eigen::Index j = 0; j < acc.cols(); ++j) {
        terms.clear();
        for (Index g : ctx.q.cosets[c]) terms.push_back(k1.coefficient(g)(i, j));
        acc(i, j) = exact_sum(terms);
      }
  }
  return out;
}

/// Right inverse of fold_kernel: K₁(g) = K₂([g]) for g in the transversal,
/// zero elsewhere.
inline EquivariantKernel unfold_kernel(const EquivariantKernel& k2, const FoldContext& ctx,
                                       std::span<const Index> transversal) {
  detail::require_over(k2, ctx.m2, "kernel is not over the context's M₂");
  if (!is_transversal(ctx.q, transversal)) throw Error(ErrorKind::ConfigError, "not a transversal");
  EquivariantKernel out(ctx.m1);
  for (Index s : transversal) out.coefficient(s) = k2.coefficient(ctx.q.proj[s]);
  return out;
}

inline EquivariantKernel unfold_kernel(const EquivariantKernel& k2, const FoldContext& ctx) {
  return unfold_kernel(k2, ctx, ctx.q.transversal);
}

/// Ψ(T)u = Σ_{g∈Γ₁, s∈S} Σ_{i,j} π_*(φ_i^g · T(π|*_{U_j^s} φ_j^{[s]} u)),
/// evaluated densely column by column and read back as a Γ₂ kernel.
inline EquivariantKernel fold_via_partition(const EquivariantKernel& k1, const FoldContext& ctx,
                                            const Partition& part, std::span<const Index> transversal) {
  detail::require_over(k1, ctx.m1, "kernel is not over the context's M₁");
  if (part.cover() != ctx.m1 && !(*part.cover()->group() == *ctx.m1->group())) {
    throw Error(ErrorKind::ContextMismatch, "partition is not over M₁");
  }
  if (!is_transversal(ctx.q, transversal)) throw Error(ErrorKind::ConfigError, "not a transversal");
  const double diam = part.max_support_diameter();
  if (!(diam < ctx.m1->even_cover_radius())) {
    throw Error(ErrorKind::PartitionTooCoarse, "support diameter " + std::to_string(diam) +
                                                   " is not below the even-cover radius");
  }
  const auto& m1 = *ctx.m1;
  const auto r = Eigen::Index(m1.fiber_rank());
  const auto n1 = Eigen::Index(m1.dimension());
  const auto n2 = Eigen::Index(ctx.m2->dimension());

  // Pushforward Σ_{g,i} π_*(φ_i^g ·): M₁ sections → M₂ sections.
  Matrix push = Matrix::Zero(n2, n1);
  for (std::size_t i = 0; i < part.index_count(); ++i)
    for (Index g = 0; g < m1.group()->order(); ++g)
      for (Index x : part.support(i, g))
        for (Eigen::Index a = 0; a < r; ++a) push(ctx.pi[x] * r + a, x * r + a) += part(i, g, x);

  const Matrix t = assemble(k1);
  Matrix out = Matrix::Zero(n2, n2);
  for (Index s : transversal) {
    for (std::size_t j = 0; j < part.index_count(); ++j) {
      // Local lift of φ_j^{[s]}u to U_j^s.
      Matrix lift = Matrix::Zero(n1, n2);
      for (Index x : part.support(j, s))
        for (Eigen::Index a = 0; a < r; ++a) lift(x * r + a, ctx.pi[x] * r + a) = part(j, s, x);
      out.noalias() += push * (t * lift);
    }
  }
  return compress(out, ctx.m2, 1e-11);
}

inline EquivariantKernel fold_via_partition(const EquivariantKernel& k1, const FoldContext& ctx,
                                            const Partition& part) {
  return fold_via_partition(k1, ctx, part, ctx.q.transversal);
}

struct PointwiseFold {
  Vector value;
  /// Largest deviation between evaluations at different lifts y₀ of x.
  double lift_spread = 0.0;
};

/// (Ψ(T)u)(x) = π_*(Σ_{j,g} T(φ_j^g u)(y₀)), evaluated at every lift y₀.
inline PointwiseFold fold_pointwise(const EquivariantKernel& k1, const FoldContext& ctx, const Partition& part,
                                    const Vector& u, Index x) {
  detail::require_over(k1, ctx.m1, "kernel is not over the context's M₁");
  const auto& m1 = *ctx.m1;
  const auto& grp = *m1.group();
  const auto r = Eigen::Index(m1.fiber_rank());
  if (u.size() != Eigen::Index(ctx.m2->dimension())) throw Error(ErrorKind::CoverMismatch, "section is not over M₂");

  // Σ_{j,g} φ_j^g u as a section over M₁.
  Vector lifted = Vector::Zero(Eigen::Index(m1.dimension()));
  for (std::size_t j = 0; j < part.index_count(); ++j)
    for (Index g = 0; g < grp.order(); ++g)
      for (Index y : part.support(j, g)) lifted.segment(y * r, r) += part(j, g, y) * u.segment(ctx.pi[y] * r, r);

  PointwiseFold out;
  bool first = true;
  for (Index y0 = 0; y0 < m1.vertex_count(); ++y0) {
    if (ctx.pi[y0] != x) continue;
    Vector value = Vector::Zero(r);
    const Index a = m1.sheet(y0), v = m1.base_vertex(y0);
    for (Index y = 0; y < m1.vertex_count(); ++y)
      value.noalias() += k1.block(grp.mul(grp.inv(a), m1.sheet(y)), v, m1.base_vertex(y)) * lifted.segment(y * r, r);
    if (first) {
      out.value = value;
      first = false;
    } else {
      out.lift_spread = std::max(out.lift_spread, (value - out.value).cwiseAbs().maxCoeff());
    }
  }
  return out;
}

/// Identify an H-invariant section s on M₁ with a section on M₂ through the
/// cutoff: u(z) = Σ_{x∈π⁻¹(z)} c(x)² s(x).
inline Vector identify_invariant_section(const FoldContext& ctx, const Vector& s, const CutoffFunction& c) {
  const auto r = Eigen::Index(ctx.m1->fiber_rank());
  Vector u = Vector::Zero(Eigen::Index(ctx.m2->dimension()));
  for (Index x = 0; x < ctx.m1->vertex_count(); ++x)
    u.segment(ctx.pi[x] * r, r) += (c.values[x] * c.values[x]) * s.segment(x * r, r);
  return u;
}

/// Pull a section on M₂ back to an H-invariant section on M₁.
inline Vector lift_section(const FoldContext& ctx, const Vector& u) {
  const auto r = Eigen::Index(ctx.m1->fiber_rank());
  Vector s(Eigen::Index(ctx.m1->dimension()));
  for (Index x = 0; x < ctx.m1->vertex_count(); ++x) s.segment(x * r, r) = u.segment(ctx.pi[x] * r, r);
  return s;
}

inline double h_invariance_defect(const FoldContext& ctx, const Vector& s) {
  const auto& m1 = *ctx.m1;
  const auto r = Eigen::Index(m1.fiber_rank());
  double worst = 0.0;
  for (Index h : ctx.q.kernel.members)
    for (Index x = 0; x < m1.vertex_count(); ++x)
      worst = std::max(worst, (s.segment(m1.deck(h, x) * r, r) - s.segment(x * r, r)).cwiseAbs().maxCoeff());
  return worst;
}

struct InvariantFold {
  Vector section;     // H-invariant, over M₁
  Vector identified;  // the same section viewed over M₂
};

/// (Ψ(T)s)(y) = Σ_{i,g} T(φ_i^g s)(y) on H-invariant sections of M₁.
inline InvariantFold fold_invariant_action(const EquivariantKernel& k1, const FoldContext& ctx,
                                           const Partition& part, const Vector& s, const CutoffFunction& c) {
  detail::require_over(k1, ctx.m1, "kernel is not over the context's M₁");
  const auto& m1 = *ctx.m1;
  const auto r = Eigen::Index(m1.fiber_rank());
  if (s.size() != Eigen::Index(m1.dimension())) throw Error(ErrorKind::CoverMismatch, "section is not over M₁");
  if (h_invariance_defect(ctx, s) > 1e-13) throw Error(ErrorKind::NotInvariant, "section is not H-invariant");
  if (cutoff_defect(m1, ctx.q, c) > 1e-13) throw Error(ErrorKind::ConfigError, "cutoff violates Σ_h c(hx)² = 1");

  InvariantFold out;
  out.section = Vector::Zero(s.size());
  for (std::size_t i = 0; i < part.index_count(); ++i)
    for (Index g = 0; g < m1.group()->order(); ++g) {
      Vector piece = Vector::Zero(s.size());
      for (Index x : part.support(i, g)) piece.segment(x * r, r) = part(i, g, x) * s.segment(x * r, r);
      out.section += apply_kernel(k1, piece);
    }
  out.identified = identify_invariant_section(ctx, out.section, c);
  return out;
}

struct PathSample {
  double t = 0.0;
  EquivariantKernel kernel;
};

struct PropagationAudit {
  double t = 0.0;
  double prop_in = 0.0;
  double prop_out = 0.0;
};

struct FoldedPath {
  std::vector<PathSample> samples;
  std::vector<PropagationAudit> audit;
};

/// Samplewise fold; propagation is audited at τ on M₁ and |H|·τ on M₂.
inline FoldedPath fold_path(std::span<const PathSample> path, const FoldContext& ctx, double tau = 1e-12) {
  FoldedPath out;
  for (const auto& sample : path) {
    auto folded = fold_kernel(sample.kernel, ctx);
    out.audit.push_back({sample.t, propagation(sample.kernel, tau),
                         propagation(folded, double(ctx.kernel_order()) * tau)});
    out.samples.push_back({sample.t, std::move(folded)});
  }
  return out;
}

/// Transport a kernel over Γ across a group isomorphism given as an index
/// map onto the target cover's group.
inline EquivariantKernel relabel_kernel(const EquivariantKernel& k, const CoverPtr& target,
                                        std::span<const Index> map) {
  EquivariantKernel out(target);
  for (Index a = 0; a < map.size(); ++a) out.coefficient(map[a]) = k.coefficient(a);
  return out;
}

}  // namespace equifold
