#pragma once

// Property suites over a configured tower and report emission.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "equifold/cover.hpp"
#include "equifold/folding.hpp"
#include "equifold/group.hpp"
#include "equifold/invariants.hpp"
#include "equifold/io.hpp"
#include "equifold/kernel.hpp"
#include "equifold/rng.hpp"
#include "equifold/spectral.hpp"

namespace equifold {

struct ReportRecord {
  std::string suite;
  std::string check;
  std::string digest;
  double residual = 0.0;
  double bound = 0.0;
  bool pass = false;
  double wall_ms = 0.0;
  json detail = json::object();
};

struct RunReport {
  std::string tower;
  std::uint64_t seed = 0;
  std::vector<std::string> suites;
  std::vector<ReportRecord> records;
  std::vector<ProfilePoint> profile;

  bool all_pass() const {
    return std::all_of(records.begin(), records.end(), [](const auto& r) { return r.pass; });
  }
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << x;
  return os.str();
}

/// Records for one suite. Each check's residual is ≥ 0 and passes iff it is
/// at most the bound; lower-bound and inequality checks report their excess.
class SuiteContext {
 public:
  SuiteContext(const ExperimentConfig& config, const Tower& tower, std::string suite)
      : config(config), tower(tower), suite(std::move(suite)),
        rng(config.seed, fnv1a(this->suite)),
        base_digest(fnv1a(config.source.dump() + "|" + std::to_string(config.seed))) {}

  void add(std::string check, double residual, double bound, json detail = json::object()) {
    ReportRecord r;
    r.suite = suite;
    r.check = std::move(check);
    r.digest = hex64(fnv1a(suite + "/" + r.check, base_digest));
    r.residual = std::isnan(residual) ? kInfinity : std::max(0.0, residual);
    r.bound = bound;
    r.pass = r.residual <= bound;
    r.detail = std::move(detail);
    const auto now = std::chrono::steady_clock::now();
    r.wall_ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    records.push_back(std::move(r));
  }

  EquivariantKernel random1(double density = 1.0) { return random_kernel(tower.ctx.m1, rng, density); }
  EquivariantKernel random2(double density = 1.0) { return random_kernel(tower.ctx.m2, rng, density); }

  const ExperimentConfig& config;
  const Tower& tower;
  std::string suite;
  CounterRng rng;
  std::uint64_t base_digest;
  std::vector<ReportRecord> records;
  std::vector<ProfilePoint> profile;

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline std::string fmt_t(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

inline Vector random_section(std::size_t n, CounterRng& rng) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(rng.normal(), rng.normal());
  return v;
}

// ---------------------------------------------------------------------------

inline void suite_algebra(SuiteContext& s) {
  const auto& ctx = s.tower.ctx;
  const auto& q = ctx.q;
  const auto& g1 = *q.parent;
  const auto& g2 = *q.quotient_group;
  const double tol = s.config.tolerance("algebra");
  const int pairs = s.config.random_pairs;

  double proj_bad = 0;
  for (Index a = 0; a < g1.order(); ++a)
    for (Index b = 0; b < g1.order(); ++b)
      if (q.proj[g1.mul(a, b)] != g2.mul(q.proj[a], q.proj[b])) proj_bad += 1;
  s.add("projection_homomorphism", proj_bad, 0.0, {{"pairs", g1.order() * g1.order()}});

  double alg_mul = 0, alg_adj = 0;
  for (int i = 0; i < pairs; ++i) {
    auto x = GroupAlgebraElement::zero(q.parent), y = GroupAlgebraElement::zero(q.parent);
    for (auto& c : x.coeffs) c = Complex(s.rng.normal(), s.rng.normal());
    for (auto& c : y.coeffs) c = Complex(s.rng.normal(), s.rng.normal());
    const auto lhs = algebra_fold(x * y, q), rhs = algebra_fold(x, q) * algebra_fold(y, q);
    const auto la = algebra_fold(adjoint(x), q), ra = adjoint(algebra_fold(x, q));
    for (std::size_t k = 0; k < lhs.coeffs.size(); ++k) {
      alg_mul = std::max(alg_mul, std::abs(lhs.coeffs[k] - rhs.coeffs[k]));
      alg_adj = std::max(alg_adj, std::abs(la.coeffs[k] - ra.coeffs[k]));
    }
  }
  s.add("group_algebra_fold_multiplicative", alg_mul, tol, {{"pairs", pairs}});
  s.add("group_algebra_fold_adjoint", alg_adj, 0.0, {{"pairs", pairs}});

  double dense_mul = 0, dense_adj = 0, equiv = 0, triangle = 0, phi = 0, norm_gap = 0;
  for (int i = 0; i < pairs; ++i) {
    const double density = i % 2 == 0 ? 1.0 : 0.3;
    const auto k = s.random1(density), kp = s.random1(density);
    const auto kk = compose(k, kp);
    const Matrix dk = assemble(k);
    dense_mul = std::max(dense_mul, (assemble(kk) - dk * assemble(kp)).cwiseAbs().maxCoeff());
    dense_adj = std::max(dense_adj, (assemble(adjoint(k)) - dk.adjoint()).cwiseAbs().maxCoeff());
    equiv = std::max(equiv, equivariance_defect(dk, *ctx.m1));
    triangle = std::max(triangle, propagation(kk, 0.0) - propagation(k, 0.0) - propagation(kp, 0.0));
    const auto lhs = phi_transform(kk), rhs = phi_transform(k) * phi_transform(kp);
    for (std::size_t c = 0; c < lhs.coeffs.size(); ++c)
      phi = std::max(phi, (lhs.coeffs[c] - rhs.coeffs[c]).cwiseAbs().maxCoeff());
    if (i < 10) {
      const Eigen::BDCSVD<Matrix> svd(regular_representation(phi_transform(k)));
      norm_gap = std::max(norm_gap, std::abs(svd.singularValues()(0) - operator_norm(k)) / operator_norm(k));
    }
  }
  s.add("kernel_compose_matches_dense", dense_mul, tol);
  s.add("kernel_adjoint_matches_dense", dense_adj, 0.0);
  s.add("kernel_equivariance", equiv, 0.0);
  s.add("propagation_triangle", triangle, 0.0);
  s.add("phi_multiplicative", phi, tol);
  s.add("regular_representation_norm", norm_gap, tol);

  double deck = 0;
  const auto& m1 = *ctx.m1;
  for (Index g = 0; g < g1.order(); ++g)
    for (Index x = 0; x < m1.vertex_count(); ++x) {
      if (g != g1.identity() && m1.deck(g, x) == x) deck = kInfinity;
      for (Index y = 0; y < m1.vertex_count(); ++y)
        deck = std::max(deck, std::abs(m1.dist(m1.deck(g, x), m1.deck(g, y)) - m1.dist(x, y)));
    }
  s.add("deck_action_free_isometric", deck, 0.0);
  s.add("quotient_metric", quotient_metric_defect(m1, {ctx.m2, ctx.pi}, q), tol);
}

inline void suite_folding(SuiteContext& s) {
  const auto& ctx = s.tower.ctx;
  const double tol = s.config.tolerance("folding");
  const int pairs = s.config.random_pairs;
  const double h = double(ctx.kernel_order());
  const json seed = s.config.seed;

  double hom = 0, adj = 0, mono = 0, contract = 0, max_in = 0, max_out = 0;
  for (int i = 0; i < pairs; ++i) {
    const double density = std::vector<double>{1.0, 0.5, 0.2, 0.05}[i % 4];
    const auto k = s.random1(density), kp = s.random1(density);
    const auto fk = fold_kernel(k, ctx), fkp = fold_kernel(kp, ctx);
    hom = std::max(hom, max_abs_diff(fold_kernel(compose(k, kp), ctx), compose(fk, fkp)));
    adj = std::max(adj, max_abs_diff(fold_kernel(adjoint(k), ctx), adjoint(fk)));
    for (const auto* kk : {&k, &kp}) {
      const double pin = propagation(*kk, s.config.tau);
      const double pout = propagation(fold_kernel(*kk, ctx), h * s.config.tau);
      mono = std::max(mono, pout - pin);
      max_in = std::max(max_in, pin);
      max_out = std::max(max_out, pout);
    }
    if (i < 20) contract = std::max(contract, operator_norm(fk) - operator_norm(k));
  }
  // Operators from the configured base operator as well.
  for (const auto& k : {s.tower.d1, compose(s.tower.d1, s.tower.d1)}) {
    const double pin = propagation(k, s.config.tau);
    const double pout = propagation(fold_kernel(k, ctx), h * s.config.tau);
    mono = std::max(mono, pout - pin);
  }
  s.add("homomorphism", hom, tol, {{"op", "compose"}, {"seed", seed}, {"pairs", pairs}});
  s.add("adjoint_exact", adj, 0.0, {{"op", "adjoint"}, {"seed", seed}, {"pairs", pairs}});
  s.add("propagation_monotone", mono, 0.0,
        {{"op", "propagation"}, {"seed", seed}, {"prop_in", max_in}, {"prop_out", max_out}, {"tau", s.config.tau}});
  s.add("norm_contractive", contract, tol * 10.0, {{"op", "norm"}, {"seed", seed}});

  double surj = 0;
  for (int i = 0; i < pairs; ++i) {
    const auto k2 = s.random2();
    surj = std::max(surj, max_abs_diff(fold_kernel(unfold_kernel(k2, ctx), ctx), k2));
  }
  s.add("surjectivity", surj, 0.0, {{"op", "unfold"}, {"seed", seed}, {"count", pairs}});

  // Second transversal: the largest element of each coset.
  std::vector<Index> alt;
  for (const auto& coset : ctx.q.cosets) alt.push_back(coset.back());
  const std::vector<std::vector<Index>> transversals{ctx.q.transversal, alt};
  std::vector<Partition> partitions{canonical_partition(ctx.m1),
                                    random_partition(ctx.m1, s.rng.next_u64()),
                                    random_partition(ctx.m1, s.rng.next_u64())};

  double part_res = 0, point_res = 0, point_spread = 0, inv_res = 0, pin = 0, pout = 0;
  for (int i = 0; i < 8; ++i) {
    const auto k = s.random1(i % 2 == 0 ? 1.0 : 0.3);
    const auto fk = fold_kernel(k, ctx);
    pin = std::max(pin, propagation(k, s.config.tau));
    pout = std::max(pout, propagation(fk, h * s.config.tau));
    for (const auto& p : partitions)
      for (const auto& tr : transversals) part_res = std::max(part_res, max_abs_diff(fold_via_partition(k, ctx, p, tr), fk));

    const Vector u = random_section(ctx.m2->dimension(), s.rng);
    const Vector expected = apply_kernel(fk, u);
    const auto r = Eigen::Index(ctx.m1->fiber_rank());
    for (const auto& p : partitions)
      for (Index x = 0; x < ctx.m2->vertex_count(); ++x) {
        const auto pf = fold_pointwise(k, ctx, p, u, x);
        point_res = std::max(point_res, (pf.value - expected.segment(x * r, r)).cwiseAbs().maxCoeff());
        point_spread = std::max(point_spread, pf.lift_spread);
      }

    const Vector lifted = lift_section(ctx, u);
    for (const auto& c : {transversal_cutoff(*ctx.m1, ctx.q), uniform_cutoff(*ctx.m1, ctx.q)})
      for (const auto& p : partitions) {
        const auto inv = fold_invariant_action(k, ctx, p, lifted, c);
        inv_res = std::max(inv_res, (inv.identified - expected).cwiseAbs().maxCoeff());
        inv_res = std::max(inv_res, h_invariance_defect(ctx, inv.section));
      }
  }
  s.add("partition_formula", part_res, tol,
        {{"op", "partition"}, {"seed", seed}, {"partitions", partitions.size()}, {"transversals", 2},
         {"prop_in", pin}, {"prop_out", pout}});
  s.add("pointwise_formula", std::max(point_res, point_spread), tol,
        {{"op", "pointwise"}, {"seed", seed}, {"lift_spread", point_spread}});
  s.add("invariant_section_formula", inv_res, tol, {{"op", "invariant_sections"}, {"seed", seed}, {"cutoffs", 2}});

  // Tower composition through Γ₁ → Γ₁/H → Γ₁/Γ₁.
  double comp = 0;
  {
    std::vector<Index> all(ctx.q.parent->order());
    for (Index g = 0; g < all.size(); ++g) all[g] = g;
    const auto top = subgroup_closure(ctx.q.parent, all);
    const auto q13 = quotient(ctx.q.parent, top);
    const auto q23 = quotient(ctx.q.quotient_group, image_subgroup(ctx.q, top));
    const auto ctx23 = make_fold_context(ctx.m2, q23);
    const auto ctx13 = make_fold_context(ctx.m1, q13);
    const auto map = tower_relabel_map(ctx.q, q23, q13);
    for (int i = 0; i < 20; ++i) {
      const auto k = s.random1();
      const auto two = relabel_kernel(fold_kernel(fold_kernel(k, ctx), ctx23), ctx13.m2, map);
      comp = std::max(comp, max_abs_diff(two, fold_kernel(k, ctx13)));
    }
  }
  s.add("tower_composition", comp, tol, {{"op", "two_step_fold"}, {"seed", seed}});
}

inline void suite_wave(SuiteContext& s) {
  const auto& ctx = s.tower.ctx;
  const double tol = s.config.tolerance("wave");
  const auto dec1 = eigendecompose(s.tower.d1), dec2 = eigendecompose(s.tower.d2);

  double unit = 0;
  for (double t : s.config.wave_grid) {
    const auto u1 = wave_operator(dec1, t), u2 = wave_operator(dec2, t);
    s.add("functoriality/t=" + fmt_t(t), max_abs_diff(fold_kernel(u1, ctx), u2), tol, {{"t", t}});
    unit = std::max({unit, unitarity_defect(u1), unitarity_defect(u2)});
  }
  s.add("unitarity", unit, 1e-11);

  double group_law = 0;
  for (double a : s.config.wave_grid)
    for (double b : s.config.wave_grid)
      group_law = std::max(group_law, max_abs_diff(compose(wave_operator(dec1, a), wave_operator(dec1, b)),
                                                   wave_operator(dec1, a + b)));
  s.add("group_law", group_law, 1e-11);

  const double t_oracle = 0.7;
  s.add("rk4_oracle", max_abs_diff(wave_operator(dec1, t_oracle), wave_operator_rk4(s.tower.d1, t_oracle)), 1e-8,
        {{"t", t_oracle}});

  std::vector<double> grid{0.0};
  for (double t : s.config.wave_grid) grid.push_back(t);
  std::sort(grid.begin(), grid.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  const auto profile = epsilon_propagation_profile(s.tower.d1, grid, s.config.profile_tau);
  const auto speed = propagation_speed(s.tower.d1);
  double monotone = 0, excess = 0;
  json points = json::array();
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (i > 0) monotone = std::max(monotone, profile[i - 1].prop - profile[i].prop);
    const double bound = profile[i].t == 0.0 ? 0.0 : speed.speed * std::abs(profile[i].t) + speed.slack;
    excess = std::max(excess, profile[i].prop - bound);
    points.push_back({{"t", profile[i].t}, {"prop", profile[i].prop}, {"bound", bound}});
  }
  s.profile = profile;
  s.add("profile_monotone", monotone, 0.0, {{"tau", s.config.profile_tau}});
  s.add("profile_speed_bound", excess, 0.0,
        {{"tau", s.config.profile_tau}, {"speed", speed.speed}, {"slack", speed.slack}, {"points", points}});
}

inline void suite_funcalc(SuiteContext& s) {
  const auto& ctx = s.tower.ctx;
  const double tol = s.config.tolerance("funcalc");
  const auto dec1 = eigendecompose(s.tower.d1), dec2 = eigendecompose(s.tower.d2);

  std::vector<ScalarFunction> fs{gaussian_function(), chi_default_function()};
  const auto fam = fejer_normalizing_family();
  for (double t : s.config.fejer_grid) fs.push_back(fam.member(t));
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const auto& f = fs[i];
    const std::string id = f.name == "fejer" ? "fejer/t=" + fmt_t(s.config.fejer_grid[i - 2]) : f.name;
    s.add("functoriality/" + id, max_abs_diff(fold_kernel(apply_function(dec1, f.eval), ctx), apply_function(dec2, f.eval)),
          tol);
  }

  const bool contained = spectrum_contained(dec2.eigenvalues, dec1.eigenvalues, 1e-10);
  double dist = 0;
  for (Eigen::Index i = 0; i < dec2.eigenvalues.size(); ++i)
    dist = std::max(dist, (dec1.eigenvalues.array() - dec2.eigenvalues(i)).abs().minCoeff());
  s.add("spectral_containment", contained ? dist : kInfinity, 1e-10);

  // Homomorphism and spectral mapping on random Hermitian kernels.
  const std::vector<ScalarFunction> pool{polynomial_function({0.5, -1.0, 0.25, 0.125, -0.0625}),
                                         polynomial_function({0.0, 1.0}), gaussian_function(),
                                         chi_default_function()};
  double hom = 0, mapping = 0;
  for (int i = 0; i < 10; ++i) {
    auto k = random_hermitian_kernel(ctx.m1, s.rng);
    k *= Complex(2.0 / operator_norm(k));
    const auto dec = eigendecompose(k);
    for (std::size_t a = 0; a < pool.size(); ++a)
      for (std::size_t b = a; b < pool.size(); ++b) {
        const auto& f = pool[a];
        const auto& g = pool[b];
        const auto fg = apply_function(dec, [&](double x) { return f(x) * g(x); });
        hom = std::max(hom, max_abs_diff(fg, compose(apply_function(dec, f.eval), apply_function(dec, g.eval))));
      }
    for (const auto& f : pool) {
      const Eigen::SelfAdjointEigenSolver<Matrix> es(assemble(apply_function(dec, f.eval)), Eigen::EigenvaluesOnly);
      Eigen::VectorXd mapped = dec.eigenvalues.unaryExpr([&](double x) { return f(x); });
      std::sort(mapped.begin(), mapped.end());
      mapping = std::max(mapping, (es.eigenvalues() - mapped).cwiseAbs().maxCoeff());
    }
  }
  s.add("homomorphism", hom, 1e-11);
  s.add("spectral_mapping", mapping, 1e-11);

  // Fourier inversion of the Gaussian.
  const auto gauss = gaussian_function();
  const auto inv = fourier_inversion_apply(dec1, gauss, QuadratureSpec{8.0, 2048});
  s.add("fourier_inversion", max_abs_diff(inv.kernel, apply_function(dec1, gauss.eval)), 1e-6,
        {{"t_max", 8.0}, {"nodes", 2048}, {"richardson_estimate", inv.richardson_estimate},
         {"tail_bound", inv.tail_bound}});
  const auto audit = fourier_convergence_audit(dec1, gauss, 8.0);
  json res = json::array();
  for (const auto& [n, r] : audit.residuals) res.push_back({n, r});
  s.add("fourier_convergence_order", 3.5 - audit.observed_order, 0.0,
        {{"observed_order", audit.observed_order}, {"residuals", res}});

  // Dominated convergence: Taylor truncations of the Gaussian.
  const double norm = operator_norm(s.tower.d1);
  const auto exact = apply_function(dec1, gauss.eval);
  double dominated = 0;
  for (int n = 2; n <= 24; n += 2) {
    std::vector<double> c(n + 1, 0.0);
    double fact = 1.0;
    for (int k = 0; 2 * k <= n; ++k) {
      if (k > 0) fact *= k;
      c[2 * k] = (k % 2 == 0 ? 1.0 : -1.0) / (std::pow(2.0, k) * fact);
    }
    const auto p = polynomial_function(c);
    double sup = 0;
    for (int i = 0; i <= 4000; ++i) {
      const double x = -norm + 2.0 * norm * i / 4000.0;
      sup = std::max(sup, std::abs(p(x) - gauss(x)));
    }
    for (Eigen::Index i = 0; i < dec1.eigenvalues.size(); ++i)
      sup = std::max(sup, std::abs(p(dec1.eigenvalues(i)) - gauss(dec1.eigenvalues(i))));
    dominated = std::max(dominated, operator_norm(apply_function(dec1, p.eval) - exact) - sup);
  }
  s.add("dominated_convergence", dominated, 1e-12);

  // The normalizing family.
  double over = 0;
  for (double t : {0.01, 0.1, 1.0, 10.0, 100.0})
    for (int i = -4000; i <= 4000; ++i) {
      const double x = 50.0 * i / 4000.0;
      over = std::max(over, std::abs(fam.member(t)(x)) - 1.0);
    }
  s.add("fejer_bounded", over, 0.0);
  double sign_gap = 0;
  const auto f001 = fam.member(0.01);
  for (int i = 0; i <= 20000; ++i) {
    const double x = 0.5 + 99.5 * i / 20000.0;
    sign_gap = std::max({sign_gap, std::abs(f001(x) - 1.0), std::abs(f001(-x) + 1.0)});
  }
  s.add("fejer_sign_limit", sign_gap, 0.05, {{"t", 0.01}, {"epsilon", 0.5}});
  double lambda_bad = 0;
  double prev = kInfinity;
  for (double t : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4}) {
    const double l = fam.member(t).bandwidth;
    lambda_bad = std::max(lambda_bad, l - prev + (l == prev ? 1.0 : 0.0));
    prev = l;
  }
  lambda_bad = std::max(lambda_bad, fam.member(1e8).bandwidth - 1e-6);
  s.add("fejer_bandwidth_decreasing", lambda_bad, 0.0);
}

inline void suite_index(SuiteContext& s) {
  const auto& ctx = s.tower.ctx;
  const double tol = s.config.tolerance("index");
  const auto& d1 = s.tower.d1;
  const auto dec1 = eigendecompose(d1);
  const bool graded = bool(ctx.m1->base()->grading);

  for (const auto& chi : {chi_default_function(), fejer_function(1.0)}) {
    const auto r = check_index_functoriality(s.config.base_operator, ctx, chi, tol);
    s.add("functoriality/" + chi.name, r.residual, tol, {{"graded", graded}});
  }

  // Representative invariants.
  const auto chi = chi_default_function();
  const auto rep = index_representative(dec1, d1, chi);
  const auto rep_sign = index_representative(dec1, d1, sign_function());
  if (graded) {
    const auto one = EquivariantKernel::identity(ctx.m1);
    const auto x = apply_function(dec1, chi.eval);
    const double rhs = operator_norm(one - compose(x, x));
    s.add("representative_defect", idempotency_defect_norm(rep.idempotent) - 32.0 * rhs, 1e-11,
          {{"constant", 32}, {"one_minus_chi_squared", rhs}});
    s.add("sign_representative_idempotent", max_abs_entry(compose(rep_sign.idempotent, rep_sign.idempotent) - rep_sign.idempotent),
          1e-11);
  } else {
    s.add("representative_defect", unitarity_defect(rep.matrix), 1e-11);
    s.add("sign_representative_trivial",
          max_abs_diff(rep_sign.matrix, EquivariantKernel::identity(ctx.m1)), 1e-11);
  }

  // Independence of the normalizing function, as a Lipschitz-type bound.
  {
    const auto other = fejer_function(1.0);
    const auto rep2 = index_representative(dec1, d1, other);
    double sup = 0;
    for (Eigen::Index i = 0; i < dec1.eigenvalues.size(); ++i)
      sup = std::max(sup, std::abs(chi(dec1.eigenvalues(i)) - other(dec1.eigenvalues(i))));
    const double constant = graded ? 32.0 : std::numbers::pi;
    const double lhs = operator_norm(rep.matrix - rep2.matrix);
    s.add("normalizing_independence", lhs - constant * sup, 1e-11,
          {{"difference", lhs}, {"sup_chi_gap", sup}, {"constant", constant}});
  }

  // ∂₀ on random data.
  double idem = 0, trace = 0;
  for (int i = 0; i < 5; ++i) {
    auto u = s.random1();
    auto v = s.random1();
    u *= Complex(0.5 / operator_norm(u));
    v *= Complex(0.5 / operator_norm(v));
    idem = std::max(idem, idempotency_defect(boundary_idempotent(u, v).p));
    // V = U⁻¹ with U = 1 + small.
    const auto uu = EquivariantKernel::identity(ctx.m1) + u;
    const Matrix inv = assemble(uu).inverse();
    const auto vv = compress(inv, ctx.m1, 1e-10);
    const Matrix p = assemble(boundary_idempotent(uu, vv).p);
    trace = std::max(trace, std::abs(p.trace() - double(ctx.m1->dimension())));
  }
  s.add("boundary_idempotent_idempotency", idem, 1e-11);
  s.add("boundary_idempotent_trace", trace, 1e-11);

  // ∂₁ on an exact idempotent and on a Hermitian perturbation.
  const auto proj = apply_function(dec1, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
  const auto e = boundary_exponential(proj);
  s.add("boundary_exponential_exact", max_abs_diff(e, EquivariantKernel::identity(ctx.m1)), 1e-12);
  auto pert = random_hermitian_kernel(ctx.m1, s.rng);
  pert *= Complex(1e-3 / operator_norm(pert));
  const auto ep = boundary_exponential(proj + pert);
  s.add("boundary_exponential_unitary", unitarity_defect(ep), 1e-11,
        {{"distance_to_identity", operator_norm(ep - EquivariantKernel::identity(ctx.m1))}});
}

inline void suite_rho(SuiteContext& s) {
  const auto& ctx = s.tower.ctx;
  const double tol = s.config.tolerance("rho");
  const auto fam = fejer_normalizing_family();
  const auto r = check_rho_functoriality(s.config.base_operator, ctx, fam, s.config.rho_grid, s.config.gap_floor, tol);
  for (std::size_t i = 0; i < r.t.size(); ++i) s.add("functoriality/t=" + fmt_t(r.t[i]), r.residuals[i], tol, {{"t", r.t[i]}});
  s.add("trivial_at_zero", std::max(r.trivial_defect_m1, r.trivial_defect_m2), 1e-11,
        {{"m1", r.trivial_defect_m1}, {"m2", r.trivial_defect_m2}});

  for (const auto* path : {&r.path1, &r.path2}) {
    const std::string which = path == &r.path1 ? "m1" : "m2";
    double excess = 0, rising = 0;
    json points = json::array();
    for (std::size_t i = 0; i < path->samples.size(); ++i) {
      const auto& sm = path->samples[i];
      const double bound = sm.lambda * path->speed.speed + path->speed.slack;
      excess = std::max(excess, sm.prop - bound);
      if (i > 1) rising = std::max(rising, sm.prop - path->samples[i - 1].prop);
      points.push_back({{"t", sm.t}, {"prop", sm.prop}, {"bound", bound}});
    }
    s.add("propagation_bound/" + which, excess, 0.0,
          {{"tau", 1e-9}, {"speed", path->speed.speed}, {"slack", path->speed.slack}, {"points", points}});
    s.add("propagation_tail_nonincreasing/" + which, rising, 0.0);
  }
  s.add("gap_containment", r.path1.gap - r.path2.gap, 1e-10, {{"gap_m1", r.path1.gap}, {"gap_m2", r.path2.gap}});
}

inline std::size_t thread_cap() {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("EQUIFOLD_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) cap = std::min<std::size_t>(cap, std::size_t(v));
  }
  return cap;
}

}  // namespace detail

using SuiteFunction = std::function<void(detail::SuiteContext&)>;

inline const std::map<std::string, SuiteFunction>& suite_table() {
  static const std::map<std::string, SuiteFunction> table{
      {"algebra", detail::suite_algebra}, {"folding", detail::suite_folding}, {"wave", detail::suite_wave},
      {"funcalc", detail::suite_funcalc}, {"index", detail::suite_index},     {"rho", detail::suite_rho}};
  return table;
}

/// Runs the configured suites, concurrently up to EQUIFOLD_THREADS, and
/// returns records sorted by (suite, check).
inline RunReport run_suites(const ExperimentConfig& config) {
  const Tower tower = build_tower(config);
  RunReport report;
  report.tower = config.name;
  report.seed = config.seed;
  report.suites = config.suites;
  std::sort(report.suites.begin(), report.suites.end());
  report.suites.erase(std::unique(report.suites.begin(), report.suites.end()), report.suites.end());

  std::vector<std::unique_ptr<detail::SuiteContext>> contexts;
  for (const auto& name : report.suites) contexts.push_back(std::make_unique<detail::SuiteContext>(config, tower, name));
  std::vector<std::exception_ptr> errors(contexts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < contexts.size();) {
      try {
        suite_table().at(contexts[i]->suite)(*contexts[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min(detail::thread_cap(), contexts.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (auto& c : contexts) {
    for (auto& r : c->records) report.records.push_back(std::move(r));
    if (!c->profile.empty()) report.profile = c->profile;
  }
  std::stable_sort(report.records.begin(), report.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.suite, a.check) < std::tie(b.suite, b.check);
  });
  return report;
}

inline json record_to_json(const ReportRecord& r, const std::string& tower, bool timings) {
  json j{{"type", "check"},   {"suite", r.suite},       {"check", r.check}, {"tower", tower},
         {"digest", r.digest}, {"residual", r.residual}, {"bound", r.bound}, {"pass", r.pass}};
  if (!r.detail.empty()) j["detail"] = r.detail;
  if (timings) j["wall_ms"] = r.wall_ms;
  return j;
}

/// JSON lines: a header naming the generator and seed, then one line per check.
inline void write_jsonl(std::ostream& os, const RunReport& report, bool timings = false) {
  os << json{{"type", "header"},
             {"tower", report.tower},
             {"rng", CounterRng::kAlgorithm},
             {"seed", report.seed},
             {"suites", report.suites}}
            .dump()
     << '\n';
  for (const auto& r : report.records) os << record_to_json(r, report.tower, timings).dump() << '\n';
}

inline void write_summary_csv(std::ostream& os, const RunReport& report) {
  os << "suite,checks,passed,failed,max_residual\n";
  for (const auto& suite : report.suites) {
    std::size_t total = 0, passed = 0;
    double worst = 0.0;
    for (const auto& r : report.records) {
      if (r.suite != suite) continue;
      ++total;
      passed += r.pass;
      worst = std::max(worst, r.residual);
    }
    os << suite << ',' << total << ',' << passed << ',' << (total - passed) << ',' << std::setprecision(6) << worst
       << '\n';
  }
}

inline void write_profile_csv(std::ostream& os, const RunReport& report) {
  os << "t,prop,residual\n" << std::setprecision(17);
  for (const auto& p : report.profile) os << p.t << ',' << p.prop << ',' << p.residual << '\n';
}

/// Human-readable tower summary; one eigensolve on each cover.
inline void describe(std::ostream& os, const ExperimentConfig& config) {
  const Tower t = build_tower(config);
  const auto& ctx = t.ctx;
  os << "tower: " << config.name << '\n'
     << "base: |V| = " << config.base.vertex_count << ", edges = " << config.base.edges.size()
     << ", fiber rank = " << config.base.fiber_rank
     << (config.base.grading ? ", graded " + std::to_string(config.base.grading->positive) + "+" +
                                   std::to_string(config.base.grading->negative)
                             : std::string(", ungraded"))
     << '\n'
     << "groups: |Γ₁| = " << t.group->order() << ", |H| = " << ctx.kernel_order()
     << ", |Γ₂| = " << ctx.q.quotient_group->order() << '\n'
     << "covers: |M₁| = " << ctx.m1->vertex_count() << ", |M₂| = " << ctx.m2->vertex_count()
     << ", |N| = " << config.base.vertex_count << '\n';
  for (const auto& [name, cover, d] : {std::tuple{"M₁", ctx.m1, &t.d1}, std::tuple{"M₂", ctx.m2, &t.d2}}) {
    os << name << ": dim = " << cover->dimension() << ", diameter = " << cover->diameter()
       << ", even_cover_radius = " << cover->even_cover_radius() << ", gap = " << spectral_gap(*d)
       << ", norm = " << operator_norm(*d) << '\n';
  }
}

}  // namespace equifold
