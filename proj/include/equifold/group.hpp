#pragma once

// Finite groups given by multiplication tables, normal subgroups, quotients
// and the group-algebra fold.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "equifold/error.hpp"

namespace equifold {

using Index = std::uint32_t;
using Complex = std::complex<double>;

/// A finite group stored as a dense Cayley table. Element 0 is the identity
/// for every group built by the constructors below.
class FiniteGroup {
 public:
  FiniteGroup() = default;

  /// Validates identity, inverses and associativity (exhaustive).
  FiniteGroup(std::size_t order, std::vector<Index> table) : order_(order), mul_(std::move(table)) {
    if (order_ == 0 || mul_.size() != order_ * order_) {
      throw Error(ErrorKind::ConfigError, "multiplication table has wrong size");
    }
    for (Index x : mul_) {
      if (x >= order_) throw Error(ErrorKind::ConfigError, "multiplication table entry out of range");
    }
    identity_ = static_cast<Index>(order_);
    for (Index e = 0; e < order_ && identity_ == order_; ++e) {
      bool ok = true;
      for (Index g = 0; g < order_ && ok; ++g) ok = mul(e, g) == g && mul(g, e) == g;
      if (ok) identity_ = e;
    }
    if (identity_ == order_) throw Error(ErrorKind::ConfigError, "table has no identity");
    inv_.assign(order_, static_cast<Index>(order_));
    for (Index g = 0; g < order_; ++g) {
      for (Index h = 0; h < order_; ++h) {
        if (mul(g, h) == identity_) {
          inv_[g] = h;
          break;
        }
      }
      if (inv_[g] == order_ || mul(inv_[g], g) != identity_) {
        throw Error(ErrorKind::ConfigError, "element without two-sided inverse");
      }
    }
    for (Index a = 0; a < order_; ++a)
      for (Index b = 0; b < order_; ++b)
        for (Index c = 0; c < order_; ++c)
          if (mul(mul(a, b), c) != mul(a, mul(b, c)))
            throw Error(ErrorKind::ConfigError, "table is not associative");
  }

  std::size_t order() const noexcept { return order_; }
  Index identity() const noexcept { return identity_; }
  Index mul(Index a, Index b) const noexcept { return mul_[a * order_ + b]; }
  Index inv(Index a) const noexcept { return inv_[a]; }
  std::span<const Index> table() const noexcept { return mul_; }

  bool operator==(const FiniteGroup& other) const noexcept {
    return order_ == other.order_ && mul_ == other.mul_;
  }

 private:
  std::size_t order_ = 0;
  std::vector<Index> mul_;
  std::vector<Index> inv_;
  Index identity_ = 0;
};

using GroupPtr = std::shared_ptr<const FiniteGroup>;

inline GroupPtr cyclic_group(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::ConfigError, "cyclic group of order 0");
  std::vector<Index> mul(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) mul[a * n + b] = static_cast<Index>((a + b) % n);
  return std::make_shared<const FiniteGroup>(n, std::move(mul));
}

/// Direct product; element (a, b) has index a * |B| + b.
inline GroupPtr product_group(const FiniteGroup& a, const FiniteGroup& b) {
  const std::size_t na = a.order(), nb = b.order(), n = na * nb;
  std::vector<Index> mul(n * n);
  for (Index a1 = 0; a1 < na; ++a1)
    for (Index b1 = 0; b1 < nb; ++b1)
      for (Index a2 = 0; a2 < na; ++a2)
        for (Index b2 = 0; b2 < nb; ++b2)
          mul[(a1 * nb + b1) * n + (a2 * nb + b2)] =
              static_cast<Index>(a.mul(a1, a2) * nb + b.mul(b1, b2));
  return std::make_shared<const FiniteGroup>(n, std::move(mul));
}

using Permutation = std::vector<Index>;

/// Closure of permutation generators. Elements are numbered in breadth-first
/// order from the identity, applying generators in the order given; the
/// product a*b acts as "apply b, then a".
struct PermutationGroup {
  GroupPtr group;
  std::vector<Permutation> elements;
};

inline PermutationGroup permutation_group(const std::vector<Permutation>& generators,
                                          std::size_t max_order = 256) {
  std::size_t degree = 0;
  for (const auto& g : generators) degree = std::max(degree, g.size());
  for (const auto& g : generators) {
    if (g.size() != degree) throw Error(ErrorKind::ConfigError, "generators have different degrees");
    std::vector<bool> seen(degree, false);
    for (Index x : g) {
      if (x >= degree || seen[x]) throw Error(ErrorKind::ConfigError, "generator is not a permutation");
      seen[x] = true;
    }
  }
  auto compose = [degree](const Permutation& a, const Permutation& b) {
    Permutation c(degree);
    for (std::size_t i = 0; i < degree; ++i) c[i] = a[b[i]];
    return c;
  };
  Permutation id(degree);
  for (std::size_t i = 0; i < degree; ++i) id[i] = static_cast<Index>(i);

  std::vector<Permutation> elements{id};
  std::map<Permutation, Index> index{{id, 0}};
  for (std::size_t head = 0; head < elements.size(); ++head) {
    for (const auto& g : generators) {
      Permutation next = compose(elements[head], g);
      if (!index.contains(next)) {
        if (elements.size() >= max_order) {
          throw Error(ErrorKind::ConfigError, "permutation group exceeds the order cap");
        }
        index.emplace(next, static_cast<Index>(elements.size()));
        elements.push_back(std::move(next));
      }
    }
  }
  const std::size_t n = elements.size();
  std::vector<Index> mul(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) mul[a * n + b] = index.at(compose(elements[a], elements[b]));
  return {std::make_shared<const FiniteGroup>(n, std::move(mul)), std::move(elements)};
}

/// Sorted member list of a subgroup of `parent`.
struct Subgroup {
  GroupPtr parent;
  std::vector<Index> members;

  bool contains(Index g) const { return std::binary_search(members.begin(), members.end(), g); }
  std::size_t order() const noexcept { return members.size(); }
};

inline Subgroup subgroup_closure(const GroupPtr& group, std::span<const Index> generators) {
  std::vector<bool> in(group->order(), false);
  std::vector<Index> members{group->identity()};
  in[group->identity()] = true;
  for (Index g : generators) {
    if (g >= group->order()) throw Error(ErrorKind::ConfigError, "generator index out of range");
  }
  // Right-multiplying by generators suffices for a finite group.
  for (std::size_t head = 0; head < members.size(); ++head) {
    for (Index g : generators) {
      const Index next = group->mul(members[head], g);
      if (!in[next]) {
        in[next] = true;
        members.push_back(next);
      }
    }
  }
  std::sort(members.begin(), members.end());
  return {group, std::move(members)};
}

inline Subgroup subgroup_closure(const GroupPtr& group, std::initializer_list<Index> generators) {
  return subgroup_closure(group, std::span<const Index>(generators.begin(), generators.size()));
}

inline bool is_normal(const FiniteGroup& group, const Subgroup& sub) {
  for (Index g = 0; g < group.order(); ++g)
    for (Index h : sub.members)
      if (!sub.contains(group.mul(group.mul(g, h), group.inv(g)))) return false;
  return true;
}

/// Quotient Γ₁/H. Cosets are ordered by their least element index, and the
/// transversal picks that least element, so the identity coset is
/// represented by the identity whenever the identity has index 0.
struct QuotientData {
  GroupPtr parent;
  Subgroup kernel;
  std::vector<std::vector<Index>> cosets;
  std::vector<Index> proj;
  std::vector<Index> transversal;
  GroupPtr quotient_group;

  std::size_t kernel_order() const noexcept { return kernel.order(); }
};

inline QuotientData quotient(const GroupPtr& group, const Subgroup& sub) {
  if (!is_normal(*group, sub)) {
    throw Error(ErrorKind::NotNormal, "subgroup fails is_normal; cannot form the quotient");
  }
  const std::size_t n = group->order();
  QuotientData q;
  q.parent = group;
  q.kernel = sub;
  q.proj.assign(n, static_cast<Index>(n));
  for (Index g = 0; g < n; ++g) {
    if (q.proj[g] != n) continue;
    const auto c = static_cast<Index>(q.cosets.size());
    std::vector<Index> coset;
    for (Index h : sub.members) coset.push_back(group->mul(h, g));
    std::sort(coset.begin(), coset.end());
    for (Index x : coset) q.proj[x] = c;
    q.transversal.push_back(coset.front());
    q.cosets.push_back(std::move(coset));
  }
  const std::size_t m = q.cosets.size();
  std::vector<Index> mul(m * m);
  for (Index a = 0; a < m; ++a)
    for (Index b = 0; b < m; ++b)
      mul[a * m + b] = q.proj[group->mul(q.transversal[a], q.transversal[b])];
  q.quotient_group = std::make_shared<const FiniteGroup>(m, std::move(mul));
  return q;
}

/// True if `reps` contains exactly one element of every coset of q.
inline bool is_transversal(const QuotientData& q, std::span<const Index> reps) {
  if (reps.size() != q.cosets.size()) return false;
  std::vector<bool> hit(q.cosets.size(), false);
  for (Index g : reps) {
    if (g >= q.proj.size() || hit[q.proj[g]]) return false;
    hit[q.proj[g]] = true;
  }
  return true;
}

/// Transversal ordered by coset index (reps[c] lies in coset c).
inline std::vector<Index> ordered_transversal(const QuotientData& q, std::span<const Index> reps) {
  if (!is_transversal(q, reps)) throw Error(ErrorKind::ConfigError, "not a transversal");
  std::vector<Index> out(q.cosets.size());
  for (Index g : reps) out[q.proj[g]] = g;
  return out;
}

/// Image of a subgroup K ⊇ H of Γ₁ in Γ₁/H.
inline Subgroup image_subgroup(const QuotientData& q, const Subgroup& sub) {
  std::vector<Index> gens;
  for (Index g : sub.members) gens.push_back(q.proj[g]);
  return subgroup_closure(q.quotient_group, gens);
}

/// For H₁ ⊆ H₂ normal in Γ₁: the isomorphism (Γ₁/H₁)/(H₂/H₁) → Γ₁/H₂,
/// as an index map. Throws if the three quotients are not compatible.
inline std::vector<Index> tower_relabel_map(const QuotientData& q12, const QuotientData& q23,
                                            const QuotientData& q13) {
  if (!(*q12.parent == *q13.parent) || !(*q23.parent == *q12.quotient_group)) {
    throw Error(ErrorKind::GroupMismatch, "quotients do not form a tower");
  }
  const std::size_t m = q23.quotient_group->order();
  if (m != q13.quotient_group->order()) throw Error(ErrorKind::GroupMismatch, "tower orders differ");
  std::vector<Index> map(m, static_cast<Index>(m));
  for (Index g = 0; g < q12.parent->order(); ++g) {
    const Index a = q23.proj[q12.proj[g]];
    const Index b = q13.proj[g];
    if (map[a] != m && map[a] != b) throw Error(ErrorKind::GroupMismatch, "tower maps disagree");
    map[a] = b;
  }
  return map;
}

/// Correctly rounded sum (Shewchuk's partials, as in Python's math.fsum).
/// Coset sums use it so that folding does not depend on the order in which
/// coset members are visited; Ψ(K*) = Ψ(K)* then holds bit for bit.
class ExactSum {
 public:
  void add(double x) {
    std::size_t i = 0;
    for (double y : partials_) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
  }

  double value() const {
    if (partials_.empty()) return 0.0;
    std::size_t n = partials_.size() - 1;
    double hi = partials_[n], lo = 0.0;
    while (n > 0) {
      const double x = hi, y = partials_[--n];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    // Round-half-even correction across the remaining partials.
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0, x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

 private:
  std::vector<double> partials_;
};

inline Complex exact_sum(std::span<const Complex> terms) {
  ExactSum re, im;
  for (const Complex& z : terms) {
    re.add(z.real());
    im.add(z.imag());
  }
  return {re.value(), im.value()};
}

/// Element of the group algebra ℂΓ.
struct GroupAlgebraElement {
  GroupPtr group;
  std::vector<Complex> coeffs;

  static GroupAlgebraElement zero(const GroupPtr& g) { return {g, std::vector<Complex>(g->order())}; }

  static GroupAlgebraElement delta(const GroupPtr& g, Index x) {
    auto out = zero(g);
    out.coeffs.at(x) = 1.0;
    return out;
  }
};

inline GroupAlgebraElement operator*(const GroupAlgebraElement& x, const GroupAlgebraElement& y) {
  if (!(*x.group == *y.group)) throw Error(ErrorKind::GroupMismatch, "convolution across groups");
  const FiniteGroup& g = *x.group;
  auto out = GroupAlgebraElement::zero(x.group);
  for (Index a = 0; a < g.order(); ++a) {
    if (x.coeffs[a] == Complex{}) continue;
    for (Index b = 0; b < g.order(); ++b) out.coeffs[g.mul(a, b)] += x.coeffs[a] * y.coeffs[b];
  }
  return out;
}

inline GroupAlgebraElement operator+(GroupAlgebraElement x, const GroupAlgebraElement& y) {
  if (!(*x.group == *y.group)) throw Error(ErrorKind::GroupMismatch, "sum across groups");
  for (std::size_t i = 0; i < x.coeffs.size(); ++i) x.coeffs[i] += y.coeffs[i];
  return x;
}

/// x* = Σ conj(c_γ) γ⁻¹.
inline GroupAlgebraElement adjoint(const GroupAlgebraElement& x) {
  auto out = GroupAlgebraElement::zero(x.group);
  for (Index a = 0; a < x.group->order(); ++a) out.coeffs[x.group->inv(a)] = std::conj(x.coeffs[a]);
  return out;
}

/// α: ℂΓ₁ → ℂΓ₂, coefficient of [γ] is the sum over the coset Hγ.
inline GroupAlgebraElement algebra_fold(const GroupAlgebraElement& x, const QuotientData& q) {
  if (!(*x.group == *q.parent)) {
    throw Error(ErrorKind::GroupMismatch, "element is not over the quotient's parent group");
  }
  auto out = GroupAlgebraElement::zero(q.quotient_group);
  std::vector<Complex> terms;
  for (std::size_t c = 0; c < q.cosets.size(); ++c) {
    terms.clear();
    for (Index g : q.cosets[c]) terms.push_back(x.coeffs[g]);
    out.coeffs[c] = exact_sum(terms);
  }
  return out;
}

}  // namespace equifold
