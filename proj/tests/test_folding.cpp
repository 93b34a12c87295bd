#include <gtest/gtest.h>

#include "equifold/folding.hpp"
#include "test_support.hpp"

using namespace equifold;

namespace {

double max_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

Vector random_vector(Eigen::Index n, CounterRng& rng) {
  Vector v(n);
  for (auto& x : v) x = Complex(rng.normal(), rng.normal());
  return v;
}

}  // namespace

TEST(Fold, MatchesDenseOracle) {
  fixture::S3Dipole s;
  CounterRng rng(10);
  const auto k = random_kernel(s.m1, rng);
  const Matrix expected = oracle::dense_fold(oracle::dense_kernel(k), s.ctx);
  EXPECT_LT(max_diff(assemble(fold_kernel(k, s.ctx)), expected), 1e-13);
}

TEST(Fold, DeltaKernelsFoldToCosetDeltas) {
  fixture::Z4Triangle z;
  for (Index g = 0; g < 4; ++g) {
    EquivariantKernel k(z.m1);
    k.coefficient(g).setIdentity();
    const auto f = fold_kernel(k, z.ctx);
    for (Index c = 0; c < 2; ++c)
      EXPECT_EQ(f.coefficient(c).cwiseAbs().maxCoeff(), c == z.q.proj[g] ? 1.0 : 0.0);
  }
}

TEST(Fold, TrivialSubgroupIsIdentityAndWholeGroupSumsEverything) {
  fixture::Z4Triangle z;
  CounterRng rng(11);
  const auto k = random_kernel(z.m1, rng);

  auto ctx_e = make_fold_context(z.m1, quotient(z.group, subgroup_closure(z.group, {})));
  const auto same = fold_kernel(k, ctx_e);
  for (Index g = 0; g < 4; ++g) EXPECT_EQ(same.coefficient(g), k.coefficient(g));

  auto ctx_all = make_fold_context(z.m1, quotient(z.group, subgroup_closure(z.group, {1})));
  const auto total = fold_kernel(k, ctx_all);
  Matrix sum = Matrix::Zero(3, 3);
  for (Index g = 0; g < 4; ++g) sum += k.coefficient(g);
  EXPECT_LT(max_diff(total.coefficient(0), sum), 1e-14);
}

TEST(Fold, HomomorphismAndExactAdjoint) {
  for (int which = 0; which < 2; ++which) {
    fixture::Z4Triangle z;
    fixture::S3Dipole s;
    const FoldContext& ctx = which == 0 ? z.ctx : s.ctx;
    CounterRng rng(12 + which);
    for (int i = 0; i < 20; ++i) {
      const auto a = random_kernel(ctx.m1, rng), b = random_kernel(ctx.m1, rng);
      const auto fa = fold_kernel(a, ctx), fb = fold_kernel(b, ctx);
      EXPECT_LT(max_abs_diff(fold_kernel(a * b, ctx), fa * fb), 1e-12);
      EXPECT_LT(max_abs_diff(fold_kernel(a + b, ctx), fa + fb), 1e-14);
      EXPECT_TRUE(exactly_equal(fold_kernel(adjoint(a), ctx), adjoint(fa)));
    }
  }
}

TEST(Fold, NormContractiveAndPropagationMonotone) {
  fixture::Z4Triangle z;
  CounterRng rng(14);
  for (int i = 0; i < 10; ++i) {
    const auto k = random_kernel(z.m1, rng, 0.3);
    EXPECT_LE(operator_norm(fold_kernel(k, z.ctx)), operator_norm(k) * (1 + 1e-12));
    EXPECT_LE(propagation(fold_kernel(k, z.ctx)), propagation(k));
  }
}

TEST(Fold, UnfoldIsRightInverse) {
  fixture::S3Dipole s;
  CounterRng rng(15);
  const auto k2 = random_kernel(s.ctx.m2, rng);
  EXPECT_TRUE(exactly_equal(fold_kernel(unfold_kernel(k2, s.ctx), s.ctx), k2));
  std::vector<Index> other{s.q.cosets[0].back(), s.q.cosets[1].back()};
  EXPECT_TRUE(exactly_equal(fold_kernel(unfold_kernel(k2, s.ctx, other), s.ctx), k2));
}

TEST(Fold, PartitionFormulaAgrees) {
  fixture::Z4Triangle z;
  CounterRng rng(16);
  const auto k = random_kernel(z.m1, rng);
  const auto direct = fold_kernel(k, z.ctx);
  EXPECT_LT(max_abs_diff(fold_via_partition(k, z.ctx, canonical_partition(z.m1)), direct), 1e-12);
  std::vector<Index> largest{2, 3};
  for (std::uint64_t seed : {1u, 2u}) {
    const auto part = random_partition(z.m1, seed);
    EXPECT_LT(max_abs_diff(fold_via_partition(k, z.ctx, part), direct), 1e-12);
    EXPECT_LT(max_abs_diff(fold_via_partition(k, z.ctx, part, largest), direct), 1e-12);
  }
}

TEST(Fold, CoarsePartitionRejected) {
  fixture::Z4Triangle z;
  // One bump spread over the whole identity sheet's neighbourhood.
  std::vector<std::vector<double>> slice(1, std::vector<double>(12, 0.0));
  for (Index v = 0; v < 3; ++v) slice[0][z.m1->vertex(0, v)] = 1.0;
  Partition coarse(z.m1, slice);
  CounterRng rng(17);
  try {
    fold_via_partition(random_kernel(z.m1, rng), z.ctx, coarse);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PartitionTooCoarse);
  }
}

TEST(Fold, PointwiseFormulaIsLiftIndependent) {
  fixture::S3Dipole s;
  CounterRng rng(18);
  const auto k = random_kernel(s.m1, rng);
  const Matrix folded = assemble(fold_kernel(k, s.ctx));
  const Vector u = random_vector(folded.cols(), rng);
  const Vector expected = folded * u;
  const auto part = random_partition(s.m1, 3);
  for (Index x = 0; x < s.ctx.m2->vertex_count(); ++x) {
    const auto pw = fold_pointwise(k, s.ctx, part, u, x);
    EXPECT_LT(pw.lift_spread, 1e-12);
    EXPECT_LT((pw.value - expected.segment(x * 2, 2)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Fold, InvariantSectionFormula) {
  fixture::Z4Triangle z;
  CounterRng rng(19);
  const auto k = random_kernel(z.m1, rng);
  const Matrix folded = assemble(fold_kernel(k, z.ctx));
  const Vector u = random_vector(folded.cols(), rng);
  const Vector s = lift_section(z.ctx, u);
  EXPECT_EQ(h_invariance_defect(z.ctx, s), 0.0);
  for (const auto& c : {transversal_cutoff(*z.m1, z.q), uniform_cutoff(*z.m1, z.q)}) {
    EXPECT_LT((identify_invariant_section(z.ctx, s, c) - u).cwiseAbs().maxCoeff(), 1e-15);
    const auto inv = fold_invariant_action(k, z.ctx, random_partition(z.m1, 4), s, c);
    EXPECT_LT(h_invariance_defect(z.ctx, inv.section), 1e-12);
    EXPECT_LT((inv.identified - folded * u).cwiseAbs().maxCoeff(), 1e-12);
  }
  Vector bad = s;
  bad(0) += 1.0;
  EXPECT_THROW(fold_invariant_action(k, z.ctx, canonical_partition(z.m1), bad, transversal_cutoff(*z.m1, z.q)),
               Error);
}

TEST(Fold, TwoStepTowerComposes) {
  // Z/8 ⊃ {0,4} ⊂ {0,2,4,6}: folding by {0,4} and then by the image of
  // {0,2,4,6} equals folding by {0,2,4,6} directly.
  auto z8 = cyclic_group(8);
  auto m1 = build_cover(fixture::cycle(3, {1.0, 2.0, 1.5}), fixture::one_voltage(3, 1), z8);
  auto q12 = quotient(z8, subgroup_closure(z8, {4}));
  auto q13 = quotient(z8, subgroup_closure(z8, {2}));
  auto ctx12 = make_fold_context(m1, q12);
  auto q23 = quotient(q12.quotient_group, image_subgroup(q12, subgroup_closure(z8, {2})));
  auto ctx23 = make_fold_context(ctx12.m2, q23);
  auto ctx13 = make_fold_context(m1, q13);
  const auto map = tower_relabel_map(q12, q23, q13);

  CounterRng rng(20);
  const auto k = random_kernel(m1, rng);
  const auto two_step = relabel_kernel(fold_kernel(fold_kernel(k, ctx12), ctx23), ctx13.m2, map);
  EXPECT_LT(max_abs_diff(two_step, fold_kernel(k, ctx13)), 1e-13);
}

TEST(Fold, PathAuditKeepsPropagation) {
  fixture::Z4Triangle z;
  const auto a = lift_base_operator(fixture::adjacency(*z.base), z.m1);
  std::vector<PathSample> path{{0.0, EquivariantKernel::identity(z.m1)}, {1.0, a}, {2.0, a * a}};
  const auto folded = fold_path(path, z.ctx);
  ASSERT_EQ(folded.samples.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_LE(folded.audit[i].prop_out, folded.audit[i].prop_in);
    EXPECT_TRUE(exactly_equal(folded.samples[i].kernel, fold_kernel(path[i].kernel, z.ctx)));
  }
}

TEST(Fold, WrongCoverRejected) {
  fixture::Z4Triangle z;
  fixture::S3Dipole s;
  CounterRng rng(21);
  EXPECT_THROW(fold_kernel(random_kernel(s.m1, rng), z.ctx), Error);
}
