#pragma once

// Voltage-graph covers of a finite weighted base graph, their metrics and
// deck actions, and the equivariant partitions of unity and cutoffs used by
// the folding constructions.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <queue>
#include <utility>
#include <vector>

#include "equifold/error.hpp"
#include "equifold/group.hpp"
#include "equifold/rng.hpp"

namespace equifold {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct BaseEdge {
  Index from = 0;
  Index to = 0;
  double length = 1.0;
};

struct Grading {
  std::size_t positive = 0;
  std::size_t negative = 0;
};

struct BaseGraph {
  std::size_t vertex_count = 0;
  std::size_t fiber_rank = 1;
  std::optional<Grading> grading;
  std::vector<BaseEdge> edges;

  double min_edge_length() const {
    double m = kInfinity;
    for (const auto& e : edges) m = std::min(m, e.length);
    return m;
  }
  double max_edge_length() const {
    double m = 0.0;
    for (const auto& e : edges) m = std::max(m, e.length);
    return m;
  }
};

inline void validate_base_graph(const BaseGraph& base) {
  if (base.vertex_count == 0) throw Error(ErrorKind::InvalidGraph, "base graph has no vertices");
  if (base.fiber_rank == 0) throw Error(ErrorKind::InvalidGraph, "fiber rank must be positive");
  if (base.grading && base.grading->positive + base.grading->negative != base.fiber_rank) {
    throw Error(ErrorKind::InvalidGraph, "grading does not split the fiber rank");
  }
  for (const auto& e : base.edges) {
    if (e.from >= base.vertex_count || e.to >= base.vertex_count) {
      throw Error(ErrorKind::InvalidGraph, "edge endpoint out of range");
    }
    if (!(e.length > 0.0) || !std::isfinite(e.length)) {
      throw Error(ErrorKind::InvalidGraph, "edge lengths must be positive and finite");
    }
  }
  std::vector<std::vector<Index>> adj(base.vertex_count);
  for (const auto& e : base.edges) {
    adj[e.from].push_back(e.to);
    adj[e.to].push_back(e.from);
  }
  std::vector<bool> seen(base.vertex_count, false);
  std::vector<Index> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const Index v = stack.back();
    stack.pop_back();
    for (Index w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  if (reached != base.vertex_count) throw Error(ErrorKind::DisconnectedBase, "base graph is not connected");
}

/// Voltage σ(e) on each base edge in its stored direction. If `backward` is
/// given it must equal σ(e)⁻¹ edge by edge.
struct VoltageAssignment {
  std::vector<Index> forward;
  std::optional<std::vector<Index>> backward;
};

struct LiftedEdge {
  Index from = 0;
  Index to = 0;
  double length = 0.0;
  std::size_t base_edge = 0;
};

/// Derived graph of a voltage graph. Vertex (g, v) has index g·|V| + v and the
/// deck group acts on the left: γ·(g, v) = (γg, v). A base edge v → w with
/// voltage σ lifts to (g, v) → (gσ, w) for every g.
class CoverGraph {
 public:
  CoverGraph(GroupPtr group, std::shared_ptr<const BaseGraph> base, std::vector<Index> voltages)
      : group_(std::move(group)), base_(std::move(base)), voltages_(std::move(voltages)) {
    const std::size_t n = vertex_count();
    adjacency_.resize(n);
    for (Index g = 0; g < group_->order(); ++g) {
      for (std::size_t e = 0; e < base_->edges.size(); ++e) {
        const auto& be = base_->edges[e];
        const Index x = vertex(g, be.from);
        const Index y = vertex(group_->mul(g, voltages_[e]), be.to);
        edges_.push_back({x, y, be.length, e});
        if (x != y) {
          adjacency_[x].push_back({y, be.length});
          adjacency_[y].push_back({x, be.length});
        }
      }
    }
    dist_.assign(n * n, kInfinity);
    for (Index s = 0; s < n; ++s) dijkstra(s);
    even_cover_radius_ = compute_even_cover_radius();
  }

  const GroupPtr& group() const noexcept { return group_; }
  const std::shared_ptr<const BaseGraph>& base() const noexcept { return base_; }
  const std::vector<Index>& voltages() const noexcept { return voltages_; }
  const std::vector<LiftedEdge>& edges() const noexcept { return edges_; }

  std::size_t base_vertex_count() const noexcept { return base_->vertex_count; }
  std::size_t fiber_rank() const noexcept { return base_->fiber_rank; }
  std::size_t vertex_count() const noexcept { return group_->order() * base_->vertex_count; }
  /// Dimension of the section space: |Γ|·|V|·r.
  std::size_t dimension() const noexcept { return vertex_count() * fiber_rank(); }

  Index vertex(Index g, Index v) const noexcept {
    return static_cast<Index>(g * base_->vertex_count + v);
  }
  Index sheet(Index x) const noexcept { return static_cast<Index>(x / base_->vertex_count); }
  Index base_vertex(Index x) const noexcept { return static_cast<Index>(x % base_->vertex_count); }
  Index deck(Index g, Index x) const noexcept { return vertex(group_->mul(g, sheet(x)), base_vertex(x)); }

  double dist(Index x, Index y) const noexcept { return dist_[x * vertex_count() + y]; }
  const std::vector<double>& distances() const noexcept { return dist_; }

  /// Largest radius at which metric balls are carried injectively by every
  /// deck translation: half the minimal deck displacement.
  double even_cover_radius() const noexcept { return even_cover_radius_; }

  double diameter() const {
    double d = 0.0;
    for (double x : dist_)
      if (std::isfinite(x)) d = std::max(d, x);
    return d;
  }

 private:
  struct Arc {
    Index to;
    double length;
  };

  void dijkstra(Index source) {
    const std::size_t n = vertex_count();
    double* row = dist_.data() + source * n;
    using Item = std::pair<double, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    row[source] = 0.0;
    heap.push({0.0, source});
    while (!heap.empty()) {
      auto [d, x] = heap.top();
      heap.pop();
      if (d > row[x]) continue;
      for (const Arc& a : adjacency_[x]) {
        const double nd = d + a.length;
        if (nd < row[a.to]) {
          row[a.to] = nd;
          heap.push({nd, a.to});
        }
      }
    }
  }

  double compute_even_cover_radius() const {
    double sys = kInfinity;
    for (Index g = 0; g < group_->order(); ++g) {
      if (g == group_->identity()) continue;
      for (Index v = 0; v < base_->vertex_count; ++v) {
        const Index x = vertex(group_->identity(), v);
        sys = std::min(sys, dist(x, deck(g, x)));
      }
    }
    return 0.5 * sys;
  }

  GroupPtr group_;
  std::shared_ptr<const BaseGraph> base_;
  std::vector<Index> voltages_;
  std::vector<LiftedEdge> edges_;
  std::vector<std::vector<Arc>> adjacency_;
  std::vector<double> dist_;
  double even_cover_radius_ = kInfinity;
};

using CoverPtr = std::shared_ptr<const CoverGraph>;

inline CoverPtr build_cover(std::shared_ptr<const BaseGraph> base, const VoltageAssignment& volt,
                            GroupPtr group) {
  validate_base_graph(*base);
  if (volt.forward.size() != base->edges.size()) {
    throw Error(ErrorKind::InconsistentVoltage, "one voltage per base edge is required");
  }
  for (Index s : volt.forward) {
    if (s >= group->order()) throw Error(ErrorKind::InconsistentVoltage, "voltage outside the group");
  }
  if (volt.backward) {
    if (volt.backward->size() != volt.forward.size()) {
      throw Error(ErrorKind::InconsistentVoltage, "reverse voltages missing");
    }
    for (std::size_t e = 0; e < volt.forward.size(); ++e) {
      if ((*volt.backward)[e] >= group->order() || (*volt.backward)[e] != group->inv(volt.forward[e])) {
        throw Error(ErrorKind::InconsistentVoltage,
                    "voltage on reversed edge " + std::to_string(e) + " is not the inverse");
      }
    }
  }
  return std::make_shared<const CoverGraph>(std::move(group), std::move(base), volt.forward);
}

/// M₂ = M₁/H together with the vertex map π(g, v) = ([g], v).
struct ProjectedCover {
  CoverPtr cover;
  std::vector<Index> pi;
};

inline ProjectedCover project_cover(const CoverGraph& m1, const QuotientData& q) {
  if (!(*m1.group() == *q.parent)) {
    throw Error(ErrorKind::GroupMismatch, "cover group is not the quotient's parent");
  }
  VoltageAssignment volt;
  for (Index s : m1.voltages()) volt.forward.push_back(q.proj[s]);
  ProjectedCover out{build_cover(m1.base(), volt, q.quotient_group), {}};
  out.pi.resize(m1.vertex_count());
  for (Index x = 0; x < m1.vertex_count(); ++x) {
    out.pi[x] = out.cover->vertex(q.proj[m1.sheet(x)], m1.base_vertex(x));
  }
  return out;
}

/// max over vertex pairs of |d₂(πx, πy) − min_h d₁(hx, y)|; zero when the
/// quotient metric identity holds exactly (infinite distances must agree).
inline double quotient_metric_defect(const CoverGraph& m1, const ProjectedCover& m2,
                                     const QuotientData& q) {
  double defect = 0.0;
  for (Index x = 0; x < m1.vertex_count(); ++x) {
    for (Index y = 0; y < m1.vertex_count(); ++y) {
      double best = kInfinity;
      for (Index h : q.kernel.members) best = std::min(best, m1.dist(m1.deck(h, x), y));
      const double d2 = m2.cover->dist(m2.pi[x], m2.pi[y]);
      if (std::isinf(best) || std::isinf(d2)) {
        if (std::isinf(best) != std::isinf(d2)) return kInfinity;
        continue;
      }
      defect = std::max(defect, std::abs(d2 - best));
    }
  }
  return defect;
}

/// Equivariant partition of unity {φ_i^g} on a cover, indexed by base vertex
/// i and group element g. Values are stored for every (i, g, x).
class Partition {
 public:
  Partition(CoverPtr cover, const std::vector<std::vector<double>>& identity_slice)
      : cover_(std::move(cover)), index_count_(identity_slice.size()) {
    const std::size_t n = cover_->vertex_count();
    const std::size_t order = cover_->group()->order();
    values_.assign(index_count_ * order * n, 0.0);
    for (std::size_t i = 0; i < index_count_; ++i)
      for (Index g = 0; g < order; ++g)
        for (Index x = 0; x < n; ++x)
          values_[(i * order + g) * n + cover_->deck(g, x)] = identity_slice[i][x];
  }

  const CoverPtr& cover() const noexcept { return cover_; }
  std::size_t index_count() const noexcept { return index_count_; }
  double operator()(std::size_t i, Index g, Index x) const noexcept {
    return values_[(i * cover_->group()->order() + g) * cover_->vertex_count() + x];
  }

  /// max_x |Σ_{i,g} φ_i^g(x) − 1|
  double sum_defect() const {
    double worst = 0.0;
    for (Index x = 0; x < cover_->vertex_count(); ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < index_count_; ++i)
        for (Index g = 0; g < cover_->group()->order(); ++g) s += (*this)(i, g, x);
      worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
  }

  /// max |φ_i^{g'g}(g'x) − φ_i^g(x)| over all indices.
  double equivariance_defect() const {
    const auto& grp = *cover_->group();
    double worst = 0.0;
    for (std::size_t i = 0; i < index_count_; ++i)
      for (Index gp = 0; gp < grp.order(); ++gp)
        for (Index g = 0; g < grp.order(); ++g)
          for (Index x = 0; x < cover_->vertex_count(); ++x)
            worst = std::max(worst, std::abs((*this)(i, grp.mul(gp, g), cover_->deck(gp, x)) -
                                             (*this)(i, g, x)));
    return worst;
  }

  std::vector<Index> support(std::size_t i, Index g) const {
    std::vector<Index> out;
    for (Index x = 0; x < cover_->vertex_count(); ++x)
      if ((*this)(i, g, x) != 0.0) out.push_back(x);
    return out;
  }

  /// Largest metric diameter of any support set.
  double max_support_diameter() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < index_count_; ++i) {
      const auto s = support(i, cover_->group()->identity());
      for (Index a : s)
        for (Index b : s) worst = std::max(worst, cover_->dist(a, b));
    }
    return worst;
  }

 private:
  CoverPtr cover_;
  std::size_t index_count_;
  std::vector<double> values_;
};

/// φ_v^g = indicator of the vertex (g, v).
inline Partition canonical_partition(const CoverPtr& cover) {
  const std::size_t nv = cover->base_vertex_count();
  std::vector<std::vector<double>> slice(nv, std::vector<double>(cover->vertex_count(), 0.0));
  for (Index v = 0; v < nv; ++v) slice[v][cover->vertex(cover->group()->identity(), v)] = 1.0;
  return Partition(cover, slice);
}

/// Random equivariant partition whose supports are balls of radius below
/// half the even-cover radius around (e, i), normalized to sum to one.
inline Partition random_partition(const CoverPtr& cover, std::uint64_t seed) {
  CounterRng rng(seed, 0x7061727469ULL);
  const std::size_t nv = cover->base_vertex_count();
  const std::size_t n = cover->vertex_count();
  const auto& grp = *cover->group();
  double radius = 0.49 * cover->even_cover_radius();
  if (!std::isfinite(radius)) radius = cover->base()->max_edge_length();

  std::vector<std::vector<double>> psi(nv, std::vector<double>(n, 0.0));
  for (Index i = 0; i < nv; ++i) {
    const Index center = cover->vertex(grp.identity(), i);
    for (Index x = 0; x < n; ++x) {
      if (x == center) {
        psi[i][x] = rng.uniform(0.5, 1.0);
      } else if (cover->dist(center, x) <= radius) {
        psi[i][x] = rng.uniform() < 0.5 ? 0.0 : rng.uniform(0.05, 1.0);
      }
    }
  }
  std::vector<double> total(n, 0.0);
  for (Index x = 0; x < n; ++x)
    for (Index i = 0; i < nv; ++i)
      for (Index g = 0; g < grp.order(); ++g) total[x] += psi[i][cover->deck(grp.inv(g), x)];
  // total is deck-invariant, so dividing keeps the slice equivariant.
  for (Index i = 0; i < nv; ++i)
    for (Index x = 0; x < n; ++x) psi[i][x] /= total[x];
  return Partition(cover, psi);
}

/// c : M₁ → [0, 1] with Σ_{h∈H} c(hx)² = 1.
struct CutoffFunction {
  std::vector<double> values;
};

/// Indicator of the sheets {(s, v) : s ∈ transversal}.
inline CutoffFunction transversal_cutoff(const CoverGraph& cover, const QuotientData& q,
                                         std::span<const Index> transversal) {
  if (!(*cover.group() == *q.parent)) throw Error(ErrorKind::GroupMismatch, "cover is not over Γ₁");
  if (!is_transversal(q, transversal)) throw Error(ErrorKind::ConfigError, "not a transversal");
  CutoffFunction c{std::vector<double>(cover.vertex_count(), 0.0)};
  for (Index s : transversal)
    for (Index v = 0; v < cover.base_vertex_count(); ++v) c.values[cover.vertex(s, v)] = 1.0;
  return c;
}

inline CutoffFunction transversal_cutoff(const CoverGraph& cover, const QuotientData& q) {
  return transversal_cutoff(cover, q, q.transversal);
}

/// c ≡ |H|^{-1/2}.
inline CutoffFunction uniform_cutoff(const CoverGraph& cover, const QuotientData& q) {
  return {std::vector<double>(cover.vertex_count(), 1.0 / std::sqrt(double(q.kernel_order())))};
}

inline double cutoff_defect(const CoverGraph& cover, const QuotientData& q, const CutoffFunction& c) {
  double worst = 0.0;
  for (Index x = 0; x < cover.vertex_count(); ++x) {
    double s = 0.0;
    for (Index h : q.kernel.members) {
      const double v = c.values[cover.deck(h, x)];
      s += v * v;
    }
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

/// All-pairs distance matrix as CSV, 17 significant digits.
inline void write_distances_csv(std::ostream& os, const CoverGraph& cover) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  os << "x,y,distance\n";
  for (Index x = 0; x < cover.vertex_count(); ++x)
    for (Index y = 0; y < cover.vertex_count(); ++y) {
      os << x << ',' << y << ',';
      const double d = cover.dist(x, y);
      if (std::isinf(d)) os << "inf"; else os << d;
      os << '\n';
    }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace equifold
