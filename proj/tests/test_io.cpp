#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "equifold/io.hpp"
#include "test_support.hpp"

using namespace equifold;

namespace {

json minimal_config() {
  return json::parse(R"({
    "name": "tiny",
    "group": {"cyclic": 4},
    "normal_subgroup": [2],
    "base_graph": {"vertices": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0], [2, 0, 1.0]]},
    "voltages": [1, 0, 0],
    "base_operator": {"vertex_blocks": [[[0.5]], [[0]], [[-0.5]]], "edge_blocks": [[[1]], [[[1, 0.5]]], [[1]]]},
    "suites": ["algebra"],
    "seed": 9
  })");
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::ConfigError;
}

}  // namespace

TEST(Config, ParsesMinimal) {
  const auto c = config_from_json(minimal_config());
  EXPECT_EQ(c.name, "tiny");
  EXPECT_EQ(c.base.vertex_count, 3u);
  EXPECT_EQ(c.base.edges.size(), 3u);
  EXPECT_EQ(c.voltages.forward, (std::vector<Index>{1, 0, 0}));
  EXPECT_EQ(c.suites, (std::vector<std::string>{"algebra"}));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.base_operator.edge_blocks[1](0, 0), Complex(1.0, 0.5));
  EXPECT_EQ(c.tolerance("algebra"), 1e-12);
  EXPECT_EQ(c.tolerance("wave"), 1e-10);
  const auto t = build_tower(c);
  EXPECT_EQ(t.ctx.m1->vertex_count(), 12u);
  EXPECT_EQ(t.ctx.m2->vertex_count(), 6u);
}

TEST(Config, GroupSpecs) {
  EXPECT_EQ(group_from_json(json{{"cyclic", 5}})->order(), 5u);
  EXPECT_EQ(group_from_json(json::parse(R"({"product": [{"cyclic": 2}, {"cyclic": 3}]})"))->order(), 6u);
  EXPECT_EQ(group_from_json(json::parse(R"({"permutation_generators": [[1, 0, 2], [1, 2, 0]]})"))->order(), 6u);
  EXPECT_EQ(kind_of([] { group_from_json(json{{"dihedral", 4}}); }), ErrorKind::ConfigError);
}

TEST(Config, Errors) {
  auto j = minimal_config();
  j.erase("voltages");
  EXPECT_EQ(kind_of([&] { config_from_json(j); }), ErrorKind::ConfigError);

  j = minimal_config();
  j["suites"] = json::array({"nonsense"});
  EXPECT_EQ(kind_of([&] { config_from_json(j); }), ErrorKind::ConfigError);

  j = minimal_config();
  j["tolerances"] = {{"wave", -1.0}};
  EXPECT_EQ(kind_of([&] { config_from_json(j); }), ErrorKind::ConfigError);

  j = minimal_config();
  j["voltages"] = {1, 0};
  EXPECT_EQ(kind_of([&] { build_tower(config_from_json(j)); }), ErrorKind::ConfigError);

  j = minimal_config();
  j["base_operator"]["vertex_blocks"][0] = json::parse(R"([[[0, 1]]])");
  EXPECT_EQ(kind_of([&] { build_tower(config_from_json(j)); }), ErrorKind::ConfigError);

  EXPECT_EQ(kind_of([] { load_config("/nonexistent/config.json"); }), ErrorKind::ConfigError);
}

TEST(Config, NonNormalSubgroupNamesCheck) {
  auto j = minimal_config();
  j["group"] = json::parse(R"({"permutation_generators": [[1, 0, 2], [1, 2, 0]]})");
  j["normal_subgroup"] = json::array({1});
  try {
    build_tower(config_from_json(j));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    EXPECT_NE(std::string(e.what()).find("is_normal"), std::string::npos);
  }
}

TEST(Config, BuiltinsLoadAndMatchShippedFiles) {
  const auto names = builtin_tower_names();
  ASSERT_EQ(names.size(), 3u);
  for (const auto& name : names) {
    const auto c = load_config("builtin:" + name);
    EXPECT_EQ(c.name, name);
    EXPECT_NO_THROW(build_tower(c));
    const auto path = std::filesystem::path(EQUIFOLD_SOURCE_DIR) / "configs" / (name + ".json");
    std::ifstream in(path);
    ASSERT_TRUE(in) << path;
    EXPECT_EQ(json::parse(in), c.source) << name;
  }
}

TEST(Config, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "equifold_io_test.json";
  {
    std::ofstream out(path);
    out << minimal_config().dump(2);
  }
  const auto c = load_config(path.string());
  EXPECT_EQ(c.source, minimal_config());
  std::filesystem::remove(path);
}

TEST(KernelJson, RoundTripIsExact) {
  fixture::S3Dipole s;
  CounterRng rng(50);
  const auto k = random_kernel(s.m1, rng, 0.5);
  const auto text = kernel_to_json(k).dump();
  EXPECT_TRUE(exactly_equal(kernel_from_json(json::parse(text), s.m1), k));
}

TEST(KernelJson, CoverMismatch) {
  fixture::S3Dipole s;
  fixture::Z4Triangle z;
  CounterRng rng(51);
  const auto j = kernel_to_json(random_kernel(z.m1, rng));
  EXPECT_EQ(kind_of([&] { kernel_from_json(j, s.m1); }), ErrorKind::CoverMismatch);
  auto broken = j;
  broken["entries"][0][0] = 99;
  EXPECT_EQ(kind_of([&] { kernel_from_json(broken, z.m1); }), ErrorKind::CoverMismatch);
}
