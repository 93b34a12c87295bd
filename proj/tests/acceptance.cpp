// Acceptance run: every built-in tower through every suite, then one verdict
// line per criterion. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "equifold/harness.hpp"

using namespace equifold;

namespace {

struct Criterion {
  int id;
  std::string title;
  std::vector<std::string> prefixes;  // suite/check prefixes that make up the criterion
};

bool matches(const ReportRecord& r, const std::string& prefix) {
  const std::string key = r.suite + "/" + r.check;
  return key.rfind(prefix, 0) == 0;
}

// Two-step fold through a proper intermediate quotient: Z/8 ⊃ {0,4} ⊂ {0,2,4,6}.
double three_level_tower_residual() {
  auto z8 = cyclic_group(8);
  auto base = std::make_shared<BaseGraph>();
  base->vertex_count = 3;
  base->fiber_rank = 2;
  base->edges = {{0, 1, 1.0}, {1, 2, 2.0}, {2, 0, 1.5}, {0, 0, 0.5}};
  auto m1 = build_cover(base, VoltageAssignment{{1, 0, 2, 3}, {}}, z8);
  const auto q12 = quotient(z8, subgroup_closure(z8, {4}));
  const auto q13 = quotient(z8, subgroup_closure(z8, {2}));
  const auto q23 = quotient(q12.quotient_group, image_subgroup(q12, subgroup_closure(z8, {2})));
  const auto ctx12 = make_fold_context(m1, q12);
  const auto ctx23 = make_fold_context(ctx12.m2, q23);
  const auto ctx13 = make_fold_context(m1, q13);
  const auto map = tower_relabel_map(q12, q23, q13);
  CounterRng rng(20240611);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto k = random_kernel(m1, rng, i % 2 == 0 ? 1.0 : 0.3);
    const auto two = relabel_kernel(fold_kernel(fold_kernel(k, ctx12), ctx23), ctx13.m2, map);
    worst = std::max(worst, max_abs_diff(two, fold_kernel(k, ctx13)));
  }
  return worst;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "folding homomorphism and exact adjoint", {"folding/homomorphism", "folding/adjoint_exact"}},
      {2, "kernel, partition, pointwise and invariant-section folds agree",
       {"folding/partition_formula", "folding/pointwise_formula", "folding/invariant_section_formula"}},
      {3, "propagation monotone under folding", {"folding/propagation_monotone"}},
      {4, "surjectivity via unfolding", {"folding/surjectivity"}},
      {5, "wave operator functoriality, unitarity, group law, RK4 oracle",
       {"wave/functoriality/", "wave/unitarity", "wave/group_law", "wave/rk4_oracle"}},
      {6, "functional calculus functoriality and spectral containment",
       {"funcalc/functoriality/", "funcalc/spectral_containment"}},
      {7, "Fourier inversion of the Gaussian and convergence order",
       {"funcalc/fourier_inversion", "funcalc/fourier_convergence_order"}},
      {8, "index functoriality, boundary idempotent, boundary exponential",
       {"index/functoriality/", "index/boundary_idempotent_idempotency", "index/boundary_exponential_exact"}},
      {9, "rho path functoriality, trivial start, propagation bound and tail",
       {"rho/functoriality/", "rho/trivial_at_zero", "rho/propagation_bound/", "rho/propagation_tail_nonincreasing/"}},
      {10, "normalizing family bounded, sign limit, shrinking band radius",
       {"funcalc/fejer_bounded", "funcalc/fejer_sign_limit", "funcalc/fejer_bandwidth_decreasing"}},
      {11, "tower composition of folds", {"folding/tower_composition"}},
  };

  std::vector<RunReport> reports;
  bool timing_ok = true;
  for (const auto& name : builtin_tower_names()) {
    const auto start = std::chrono::steady_clock::now();
    reports.push_back(run_suites(builtin_config(name)));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "tower " << name << ": " << reports.back().records.size() << " checks in " << secs << " s\n";
    timing_ok &= secs <= 60.0;
  }

  const double extra_tower = three_level_tower_residual();
  int failed = 0;
  for (const auto& c : criteria) {
    std::vector<std::string> failures;
    std::size_t count = 0;
    for (const auto& report : reports)
      for (const auto& r : report.records) {
        bool hit = false;
        for (const auto& p : c.prefixes) hit |= matches(r, p);
        if (!hit) continue;
        ++count;
        if (!r.pass) {
          std::ostringstream os;
          os << report.tower << ":" << r.suite << "/" << r.check << " residual=" << r.residual << " bound=" << r.bound;
          failures.push_back(os.str());
        }
      }
    if (c.id == 11 && !(extra_tower < 1e-12)) {
      std::ostringstream os;
      os << "Z/8 three-level tower residual=" << extra_tower;
      failures.push_back(os.str());
    }
    const bool pass = count > 0 && failures.empty();
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " (" << count << " checks";
    if (c.id == 11) std::cout << ", three-level tower " << extra_tower;
    std::cout << ")\n";
    for (const auto& f : failures) std::cout << "    " << f << '\n';
  }
  if (!timing_ok) {
    std::cout << "FAIL run time: a tower exceeded 60 s\n";
    ++failed;
  }
  return failed == 0 ? 0 : 1;
}
