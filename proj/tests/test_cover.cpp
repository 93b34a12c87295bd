#include <gtest/gtest.h>

#include <algorithm>
#include <queue>

#include "equifold/cover.hpp"
#include "test_support.hpp"

using namespace equifold;

namespace {

// Hop distances by breadth-first search on the lifted edge list.
std::vector<std::vector<int>> hop_distances(const CoverGraph& c) {
  const auto n = c.vertex_count();
  std::vector<std::vector<Index>> adj(n);
  for (const auto& e : c.edges()) {
    adj[e.from].push_back(e.to);
    adj[e.to].push_back(e.from);
  }
  std::vector<std::vector<int>> d(n, std::vector<int>(n, -1));
  for (Index s = 0; s < n; ++s) {
    std::queue<Index> q;
    q.push(s);
    d[s][s] = 0;
    while (!q.empty()) {
      const Index x = q.front();
      q.pop();
      for (Index y : adj[x])
        if (d[s][y] < 0) {
          d[s][y] = d[s][x] + 1;
          q.push(y);
        }
    }
  }
  return d;
}

}  // namespace

TEST(Cover, TriangleWithZ2VoltageIsHexagon) {
  auto c = build_cover(fixture::cycle(3), fixture::one_voltage(3, 1), cyclic_group(2));
  ASSERT_EQ(c->vertex_count(), 6u);
  const auto hops = hop_distances(*c);
  for (Index x = 0; x < 6; ++x) {
    int neighbours = 0;
    for (Index y = 0; y < 6; ++y) {
      EXPECT_DOUBLE_EQ(c->dist(x, y), double(hops[x][y]));
      if (hops[x][y] == 1) ++neighbours;
    }
    EXPECT_EQ(neighbours, 2);
  }
  EXPECT_DOUBLE_EQ(c->diameter(), 3.0);
  // Sheets of the same base vertex sit antipodally on the hexagon.
  EXPECT_DOUBLE_EQ(c->dist(c->vertex(0, 0), c->vertex(1, 0)), 3.0);
  EXPECT_DOUBLE_EQ(c->even_cover_radius(), 1.5);
}

TEST(Cover, TrivialGroupReproducesBase) {
  auto base = fixture::cycle(4, {1.0, 2.0, 0.5, 3.0});
  auto c = build_cover(base, fixture::one_voltage(4, 0), cyclic_group(1));
  EXPECT_EQ(c->vertex_count(), 4u);
  EXPECT_DOUBLE_EQ(c->dist(0, 2), 3.0);
  EXPECT_DOUBLE_EQ(c->dist(1, 3), 2.5);
  EXPECT_DOUBLE_EQ(c->dist(0, 3), 3.0);
  EXPECT_TRUE(std::isinf(c->even_cover_radius()));
}

TEST(Cover, IdentityVoltagesGiveDisjointCopies) {
  auto c = build_cover(fixture::cycle(3), fixture::one_voltage(3, 0), cyclic_group(3));
  for (Index x = 0; x < c->vertex_count(); ++x)
    for (Index y = 0; y < c->vertex_count(); ++y)
      EXPECT_EQ(std::isinf(c->dist(x, y)), c->sheet(x) != c->sheet(y));
  EXPECT_TRUE(std::isinf(c->even_cover_radius()));
}

TEST(Cover, DeckActionIsFreeIsometry) {
  fixture::S3Dipole s;
  const auto& c = *s.m1;
  for (Index g = 0; g < 6; ++g)
    for (Index x = 0; x < c.vertex_count(); ++x) {
      if (g != 0) {
        EXPECT_NE(c.deck(g, x), x);
      }
      for (Index y = 0; y < c.vertex_count(); ++y) EXPECT_EQ(c.dist(c.deck(g, x), c.deck(g, y)), c.dist(x, y));
    }
}

TEST(Cover, Errors) {
  auto base = fixture::cycle(3);
  auto z4 = cyclic_group(4);
  VoltageAssignment bad{{1, 0, 0}, std::vector<Index>{1, 0, 0}};
  try {
    build_cover(base, bad, z4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InconsistentVoltage);
  }
  VoltageAssignment good{{1, 0, 0}, std::vector<Index>{3, 0, 0}};
  EXPECT_NO_THROW(build_cover(base, good, z4));

  auto split = std::make_shared<BaseGraph>();
  split->vertex_count = 3;
  split->edges = {{0, 1, 1.0}};
  try {
    build_cover(split, fixture::one_voltage(1, 0), z4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DisconnectedBase);
  }

  auto neg = fixture::cycle(3, {1.0, -1.0, 1.0});
  EXPECT_THROW(build_cover(neg, fixture::one_voltage(3, 0), z4), Error);
}

TEST(ProjectCover, QuotientMetricIdentity) {
  fixture::Z4Triangle z;
  const auto m2 = project_cover(*z.m1, z.q);
  EXPECT_EQ(m2.cover->vertex_count(), 6u);
  EXPECT_EQ(quotient_metric_defect(*z.m1, m2, z.q), 0.0);

  // Independent check: min over H of d₁(hx, y) against d₂.
  for (Index x = 0; x < 12; ++x)
    for (Index y = 0; y < 12; ++y) {
      const double best = std::min(z.m1->dist(x, y), z.m1->dist(z.m1->deck(2, x), y));
      EXPECT_DOUBLE_EQ(m2.cover->dist(m2.pi[x], m2.pi[y]), best);
    }

  fixture::S3Dipole s;
  EXPECT_EQ(quotient_metric_defect(*s.m1, project_cover(*s.m1, s.q), s.q), 0.0);
}

TEST(ProjectCover, TrivialAndWholeSubgroup) {
  fixture::Z4Triangle z;
  auto qe = quotient(z.group, subgroup_closure(z.group, {}));
  const auto same = project_cover(*z.m1, qe);
  for (Index x = 0; x < 12; ++x) {
    EXPECT_EQ(same.pi[x], x);
    for (Index y = 0; y < 12; ++y) EXPECT_EQ(same.cover->dist(x, y), z.m1->dist(x, y));
  }

  auto qall = quotient(z.group, subgroup_closure(z.group, {1}));
  const auto base = project_cover(*z.m1, qall);
  EXPECT_EQ(base.cover->vertex_count(), 3u);
  EXPECT_DOUBLE_EQ(base.cover->dist(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(base.cover->dist(1, 2), 1.5);
  EXPECT_DOUBLE_EQ(base.cover->dist(0, 2), 0.75);
}

TEST(Partition, CanonicalAndRandom) {
  fixture::Z4Triangle z;
  const auto canon = canonical_partition(z.m1);
  EXPECT_EQ(canon.sum_defect(), 0.0);
  EXPECT_EQ(canon.equivariance_defect(), 0.0);
  EXPECT_EQ(canon.max_support_diameter(), 0.0);

  const auto a = random_partition(z.m1, 5), b = random_partition(z.m1, 5);
  EXPECT_LT(a.sum_defect(), 1e-14);
  EXPECT_LT(a.equivariance_defect(), 1e-15);
  EXPECT_LT(a.max_support_diameter(), 2.0 * z.m1->even_cover_radius());
  bool differs = false;
  for (std::size_t i = 0; i < a.index_count(); ++i)
    for (Index g = 0; g < 4; ++g)
      for (Index x = 0; x < 12; ++x) {
        EXPECT_EQ(a(i, g, x), b(i, g, x));
        EXPECT_GE(a(i, g, x), 0.0);
      }
  for (std::uint64_t seed = 6; seed < 16 && !differs; ++seed) {
    const auto c = random_partition(z.m1, seed);
    for (std::size_t i = 0; i < a.index_count(); ++i)
      for (Index x = 0; x < 12; ++x) differs |= a(i, 0, x) != c(i, 0, x);
  }
  EXPECT_TRUE(differs);
}

TEST(Cutoff, TransversalAndUniform) {
  fixture::Z4Triangle z;
  const auto t = transversal_cutoff(*z.m1, z.q);
  EXPECT_EQ(cutoff_defect(*z.m1, z.q, t), 0.0);
  for (Index x = 0; x < 12; ++x) EXPECT_EQ(t.values[x], z.m1->sheet(x) < 2 ? 1.0 : 0.0);
  EXPECT_LT(cutoff_defect(*z.m1, z.q, uniform_cutoff(*z.m1, z.q)), 1e-15);

  std::vector<Index> bad{0, 2};
  EXPECT_THROW(transversal_cutoff(*z.m1, z.q, bad), Error);
}

TEST(Cover, DistanceCsv) {
  auto c = build_cover(fixture::cycle(3), fixture::one_voltage(3, 0), cyclic_group(2));
  std::ostringstream os;
  write_distances_csv(os, *c);
  const auto s = os.str();
  EXPECT_EQ(s.rfind("x,y,distance\n", 0), 0u);
  EXPECT_NE(s.find("0,3,inf\n"), std::string::npos);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 37);
}
