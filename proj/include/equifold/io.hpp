#pragma once

// JSON configuration, built-in towers and kernel serialization.

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "equifold/cover.hpp"
#include "equifold/error.hpp"
#include "equifold/folding.hpp"
#include "equifold/group.hpp"
#include "equifold/kernel.hpp"

namespace equifold {

using json = nlohmann::json;

inline const std::vector<std::string>& all_suites() {
  static const std::vector<std::string> suites{"algebra", "folding", "wave", "funcalc", "index", "rho"};
  return suites;
}

struct ExperimentConfig {
  std::string name = "custom";
  json group_spec;
  std::vector<Index> normal_subgroup;
  BaseGraph base;
  VoltageAssignment voltages;
  BaseOperator base_operator;
  std::vector<std::string> suites = all_suites();
  std::uint64_t seed = 1;
  std::map<std::string, double> tolerances;
  std::vector<double> wave_grid{0.1, 0.5, 1.0, 2.0, 5.0};
  std::vector<double> rho_grid{0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
  std::vector<double> fejer_grid{0.01, 0.1, 1.0};
  double tau = 1e-12;
  double profile_tau = 1e-9;
  double gap_floor = 0.1;
  int random_pairs = 100;
  json source;

  double tolerance(const std::string& suite) const {
    if (auto it = tolerances.find(suite); it != tolerances.end()) return it->second;
    return (suite == "algebra" || suite == "folding") ? 1e-12 : 1e-10;
  }
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

inline Complex parse_complex(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  config_error("matrix entries must be numbers or [re, im] pairs");
}

inline Matrix parse_block(const json& j, std::size_t r) {
  if (!j.is_array() || j.size() != r) config_error("block must have " + std::to_string(r) + " rows");
  Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < r; ++i) {
    if (!j[i].is_array() || j[i].size() != r) config_error("block rows must have " + std::to_string(r) + " entries");
    for (std::size_t k = 0; k < r; ++k) m(Eigen::Index(i), Eigen::Index(k)) = parse_complex(j[i][k]);
  }
  return m;
}

inline json block_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(json::array({m(i, k).real(), m(i, k).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// {"cyclic": n} | {"product": [spec, spec]} | {"permutation_generators": [[...], ...]}
inline GroupPtr group_from_json(const json& spec, std::size_t max_order = 256) {
  if (!spec.is_object()) detail::config_error("group spec must be an object");
  GroupPtr g;
  if (spec.contains("cyclic")) {
    g = cyclic_group(spec.at("cyclic").get<std::size_t>());
  } else if (spec.contains("product")) {
    const auto& parts = spec.at("product");
    if (!parts.is_array() || parts.size() != 2) detail::config_error("product needs exactly two factors");
    g = product_group(*group_from_json(parts[0], max_order), *group_from_json(parts[1], max_order));
  } else if (spec.contains("permutation_generators")) {
    g = permutation_group(spec.at("permutation_generators").get<std::vector<Permutation>>(), max_order).group;
  } else {
    detail::config_error("group spec needs one of cyclic, product, permutation_generators");
  }
  if (g->order() > max_order) detail::config_error("group order exceeds the cap of " + std::to_string(max_order));
  return g;
}

inline ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig c;
    c.source = j;
    c.name = j.value("name", std::string("custom"));
    c.group_spec = j.at("group");
    c.normal_subgroup = j.value("normal_subgroup", std::vector<Index>{});

    const auto& bg = j.at("base_graph");
    c.base.vertex_count = bg.at("vertices").get<std::size_t>();
    c.base.fiber_rank = bg.value("fiber_rank", std::size_t{1});
    if (bg.contains("grading")) {
      const auto split = bg.at("grading").get<std::vector<std::size_t>>();
      if (split.size() != 2) detail::config_error("grading must be [r_plus, r_minus]");
      c.base.grading = Grading{split[0], split[1]};
    }
    for (const auto& e : bg.at("edges")) {
      if (!e.is_array() || e.size() != 3) detail::config_error("edges are [from, to, length]");
      c.base.edges.push_back({e[0].get<Index>(), e[1].get<Index>(), e[2].get<double>()});
    }
    c.voltages.forward = j.at("voltages").get<std::vector<Index>>();
    if (j.contains("reverse_voltages")) c.voltages.backward = j.at("reverse_voltages").get<std::vector<Index>>();

    const auto& op = j.at("base_operator");
    for (const auto& b : op.at("vertex_blocks")) c.base_operator.vertex_blocks.push_back(detail::parse_block(b, c.base.fiber_rank));
    for (const auto& b : op.at("edge_blocks")) c.base_operator.edge_blocks.push_back(detail::parse_block(b, c.base.fiber_rank));

    if (j.contains("suites")) {
      c.suites.clear();
      for (const auto& s : j.at("suites")) {
        const auto name = s.get<std::string>();
        if (std::find(all_suites().begin(), all_suites().end(), name) == all_suites().end()) {
          detail::config_error("unknown suite " + name);
        }
        c.suites.push_back(name);
      }
    }
    c.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("tolerances")) {
      for (const auto& [k, v] : j.at("tolerances").items()) {
        const double t = v.get<double>();
        if (!(t > 0.0)) detail::config_error("tolerance for " + k + " must be positive");
        c.tolerances[k] = t;
      }
    }
    if (j.contains("grids")) {
      const auto& g = j.at("grids");
      c.wave_grid = g.value("wave", c.wave_grid);
      c.rho_grid = g.value("rho", c.rho_grid);
      c.fejer_grid = g.value("fejer", c.fejer_grid);
    }
    if (j.contains("thresholds")) {
      const auto& t = j.at("thresholds");
      c.tau = t.value("tau", c.tau);
      c.profile_tau = t.value("profile_tau", c.profile_tau);
      c.gap_floor = t.value("gap_floor", c.gap_floor);
    }
    c.random_pairs = j.value("random_pairs", c.random_pairs);
    if (c.tau < 0.0 || c.profile_tau < 0.0) detail::config_error("thresholds must be non-negative");
    if (c.random_pairs <= 0) detail::config_error("random_pairs must be positive");
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
}

// ---------------------------------------------------------------------------
// Built-in towers.

inline const std::map<std::string, std::string>& builtin_tower_sources() {
  static const std::map<std::string, std::string> towers{
      {"z4_mod_z2_triangle", R"({
  "name": "z4_mod_z2_triangle",
  "group": {"cyclic": 4},
  "normal_subgroup": [2],
  "base_graph": {"vertices": 3, "fiber_rank": 1,
                 "edges": [[0, 1, 1.0], [1, 2, 1.5], [2, 0, 0.75]]},
  "voltages": [1, 0, 0],
  "base_operator": {
    "vertex_blocks": [[[1.5]], [[-1.25]], [[2.0]]],
    "edge_blocks": [[[[0.5, 0.25]]], [[[0.375, 0.0]]], [[[0.0, -0.5]]]]
  },
  "seed": 20240601
})"},
      {"z6_mod_z2_square_graded", R"({
  "name": "z6_mod_z2_square_graded",
  "group": {"cyclic": 6},
  "normal_subgroup": [3],
  "base_graph": {"vertices": 4, "fiber_rank": 2, "grading": [1, 1],
                 "edges": [[0, 1, 1.0], [1, 2, 1.0], [2, 3, 0.5], [3, 0, 1.5]]},
  "voltages": [1, 0, 0, 0],
  "base_operator": {
    "vertex_blocks": [
      [[0, 1.5], [1.5, 0]],
      [[0, [1.25, -0.5]], [[1.25, 0.5], 0]],
      [[0, -1.75], [-1.75, 0]],
      [[0, [0.0, 1.5]], [[0.0, -1.5], 0]]
    ],
    "edge_blocks": [
      [[0, 0.5], [[0.25, 0.25], 0]],
      [[0, [0.0, -0.375]], [0.5, 0]],
      [[0, 0.25], [-0.5, 0]],
      [[0, [0.375, 0.125]], [0.25, 0]]
    ]
  },
  "seed": 20240602
})"},
      {"s3_mod_a3_dipole", R"({
  "name": "s3_mod_a3_dipole",
  "group": {"permutation_generators": [[1, 0, 2], [1, 2, 0]]},
  "normal_subgroup": [2],
  "base_graph": {"vertices": 2, "fiber_rank": 2,
                 "edges": [[0, 1, 1.0], [0, 1, 1.5], [0, 0, 2.0]]},
  "voltages": [1, 2, 2],
  "base_operator": {
    "vertex_blocks": [
      [[1.75, [0.0, 0.5]], [[0.0, -0.5], -1.5]],
      [[-2.0, 0.25], [0.25, 1.25]]
    ],
    "edge_blocks": [
      [[0.25, [0.0, 0.125]], [-0.125, 0.375]],
      [[[0.125, 0.25], 0.0], [0.25, -0.25]],
      [[0.0, 0.25], [[0.125, 0.0], 0.0]]
    ]
  },
  "seed": 20240603
})"},
  };
  return towers;
}

inline std::vector<std::string> builtin_tower_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : builtin_tower_sources()) names.push_back(k);
  return names;
}

inline ExperimentConfig builtin_config(const std::string& name) {
  const auto& towers = builtin_tower_sources();
  auto it = towers.find(name);
  if (it == towers.end()) throw Error(ErrorKind::ConfigError, "unknown built-in tower " + name);
  return config_from_json(json::parse(it->second));
}

/// Reads a config file, or a built-in tower when `path` names one and no such
/// file exists.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    const std::string name = path.starts_with("builtin:") ? path.substr(8) : path;
    if (builtin_tower_sources().contains(name)) return builtin_config(name);
    throw Error(ErrorKind::ConfigError, "cannot open config " + path);
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

/// The tower M₁ → M₂ → N described by a config.
struct Tower {
  GroupPtr group;
  Subgroup kernel;
  FoldContext ctx;
  EquivariantKernel d1;
  EquivariantKernel d2;
};

inline Tower build_tower(const ExperimentConfig& c) {
  Tower t;
  t.group = group_from_json(c.group_spec);
  t.kernel = subgroup_closure(t.group, c.normal_subgroup);
  if (!is_normal(*t.group, t.kernel)) {
    throw Error(ErrorKind::ConfigError, "normal_subgroup fails is_normal: generated subgroup is not normal");
  }
  auto base = std::make_shared<const BaseGraph>(c.base);
  try {
    auto m1 = build_cover(base, c.voltages, t.group);
    t.ctx = make_fold_context(m1, quotient(t.group, t.kernel));
    t.d1 = lift_base_operator(c.base_operator, t.ctx.m1);
    t.d2 = lift_base_operator(c.base_operator, t.ctx.m2);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    throw Error(ErrorKind::ConfigError, e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Kernel serialization: entries [g, v, w, r×r block of (re, im) pairs].

inline json kernel_to_json(const EquivariantKernel& k) {
  json entries = json::array();
  const auto nv = k.cover()->base_vertex_count();
  for (Index g = 0; g < k.group().order(); ++g)
    for (Index v = 0; v < nv; ++v)
      for (Index w = 0; w < nv; ++w) {
        const Matrix b = k.block(g, v, w);
        if (b.isZero(0.0)) continue;
        entries.push_back(json::array({g, v, w, detail::block_to_json(b)}));
      }
  return {{"group_order", k.group().order()},
          {"base_vertices", nv},
          {"fiber_rank", k.fiber_rank()},
          {"entries", std::move(entries)}};
}

inline EquivariantKernel kernel_from_json(const json& j, const CoverPtr& cover) {
  try {
    if (j.at("group_order").get<std::size_t>() != cover->group()->order() ||
        j.at("base_vertices").get<std::size_t>() != cover->base_vertex_count() ||
        j.at("fiber_rank").get<std::size_t>() != cover->fiber_rank()) {
      throw Error(ErrorKind::CoverMismatch, "serialized kernel does not match the cover");
    }
    EquivariantKernel k(cover);
    for (const auto& e : j.at("entries")) {
      const auto g = e.at(0).get<Index>(), v = e.at(1).get<Index>(), w = e.at(2).get<Index>();
      if (g >= cover->group()->order() || v >= cover->base_vertex_count() || w >= cover->base_vertex_count()) {
        throw Error(ErrorKind::CoverMismatch, "serialized entry out of range");
      }
      k.block(g, v, w) = detail::parse_block(e.at(3), cover->fiber_rank());
    }
    return k;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
}

}  // namespace equifold
