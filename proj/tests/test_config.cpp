#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ffprep/config.hpp"
#include "oracles.hpp"

using namespace ffprep;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(FFPREP_SOURCE_DIR) / "configs";

ExperimentConfig parse(const std::string& text) { return parse_config(text, std::filesystem::temp_directory_path()); }

}  // namespace

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"thermal_ising2.yaml", "sweep_2qubit.yaml", "cluster_tfi3.yaml", "mcmc_ising3.yaml",
                           "peps_chain6.yaml"}) {
    EXPECT_NO_THROW(load_config(kConfigs / name)) << name;
  }
}

TEST(Config, ThermalChainFields) {
  const auto cfg = load_config(kConfigs / "thermal_ising2.yaml");
  EXPECT_EQ(cfg.mode, ModelMode::thermal);
  EXPECT_EQ(cfg.seed, 7u);
  ASSERT_TRUE(cfg.lattice.has_value());
  EXPECT_EQ(cfg.lattice->n_vertices(), 4);
  EXPECT_TRUE(cfg.lattice->has_ancillas());
  ASSERT_EQ(cfg.h_ops.size(), 1u);
  EXPECT_LE((cfg.h_ops[0].matrix - pauli_string("ZZ")).norm(), 0.0);
  EXPECT_EQ(cfg.interpolation, Interpolation::thermal);
  EXPECT_EQ(cfg.schedule.kind(), ScheduleKind::gevrey);
  EXPECT_EQ(cfg.out_dir, "out/thermal_ising2");
  const ModelSpec spec = build_model(cfg);
  EXPECT_TRUE(spec.is_thermal());
}

TEST(Config, HashCoversTextAndSeed) {
  const std::string text = "seed: 5\nmodel:\n  mode: classical\n  beta: 0.5\n  energies: [0, 1]\n";
  const auto a = parse(text);
  EXPECT_EQ(a.hash, fnv1a64(text + "\nseed=5"));
  EXPECT_EQ(parse(text).hash, a.hash);
  const auto b = parse_config(text, ".", 6);
  EXPECT_EQ(b.seed, 6u);
  EXPECT_NE(b.hash, a.hash);
  EXPECT_NE(parse(text + "# comment\n").hash, a.hash);
}

TEST(Config, MatrixInteractionsAndExplicitLattice) {
  const auto cfg = parse(R"(
lattice:
  kind: explicit
  vertices: 4
  edges: [[0, 1], [1, 2], [2, 3]]
  supports: [[0, 2]]
  pairs: [[0, 1], [2, 3]]
  interaction_length: 2
  roles: [system, ancilla, system, ancilla]
model:
  mode: thermal
  beta: 0.3
  interaction:
    matrix: [[1, 0, 0, 0], [0, -1, [0, 1], 0], [0, [0, -1], -1, 0], [0, 0, 0, 1]]
)");
  ASSERT_TRUE(cfg.lattice.has_value());
  EXPECT_EQ(cfg.lattice->interaction_length(), 2);
  EXPECT_EQ(cfg.h_ops[0].matrix(1, 2), cplx(0, 1));
  EXPECT_EQ(cfg.h_ops[0].matrix(2, 1), cplx(0, -1));
}

TEST(Config, ClassicalIsingEnergies) {
  const auto cfg = load_config(kConfigs / "mcmc_ising3.yaml");
  EXPECT_EQ(cfg.mode, ModelMode::classical);
  EXPECT_EQ(cfg.classical_sites, 3);
  IsingModel ising{3, {0.2, 0.0, -0.1}, {{0, 1, 1.0}, {1, 2, 1.0}}};
  EXPECT_LE((cfg.energies - ising.energies()).norm(), 1e-15);
  EXPECT_EQ(cfg.beta, 0.5);
  EXPECT_THROW(build_model(cfg), InvalidInput);
}

TEST(Config, PepsRandomQIsSeeded) {
  const auto a = load_config(kConfigs / "peps_chain6.yaml");
  const auto b = load_config(kConfigs / "peps_chain6.yaml");
  const auto c = load_config(kConfigs / "peps_chain6.yaml", 12);
  ASSERT_EQ(a.q_ops.size(), b.q_ops.size());
  EXPECT_TRUE(a.q_ops[0].matrix == b.q_ops[0].matrix);
  EXPECT_FALSE(a.q_ops[0].matrix == c.q_ops[0].matrix);
  EXPECT_EQ(a.run.radius, 2);
  const PathSpec path = build_path(a);
  EXPECT_EQ(path.localization_radius, 2);
  EXPECT_GE(build_model(a).q0, 0.5 - 1e-12);
}

TEST(Config, TableScheduleResolvesRelativeToConfig) {
  const auto dir = std::filesystem::temp_directory_path() / "ffprep_cfg_table";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "sched.csv") << "0,0\n1,1\n";
  const std::string text = "model:\n  mode: classical\n  beta: 0\n  energies: [0, 1]\nschedule:\n  kind: table\n  path: sched.csv\n";
  const auto cfg = parse_config(text, dir);
  EXPECT_EQ(cfg.schedule.kind(), ScheduleKind::table);
  EXPECT_THROW(parse(text), InvalidInput);
}

TEST(Config, SchemaErrors) {
  const std::vector<std::string> bad = {
      "model: [1, 2",                                                 // not YAML
      "- 1\n- 2\n",                                                   // not a mapping
      "seed: 1\n",                                                    // no model
      "model:\n  mode: classical\n  beta: 0\n  energies: [0, 1]\nbogus: 1\n",  // unknown key
      "model:\n  mode: quantum\n",                                    // unknown mode
      "model:\n  mode: classical\n  beta: -1\n  energies: [0, 1]\n",  // negative beta
      "model:\n  mode: classical\n  beta: 0\n  energies: [0, 1, 2]\n",  // not a power of 2
      "lattice:\n  kind: chain\n  sites: 2\nmodel:\n  mode: thermal\n  beta: 1\n",  // no interaction
      "lattice:\n  kind: chain\n  sites: 2\nmodel:\n  mode: thermal\n  beta: 1\n  interaction:\n    pauli: {ZZZ: 1}\n",
      "lattice:\n  kind: chain\n  sites: 2\nmodel:\n  mode: thermal\n  beta: 1\n  interaction:\n    pauli: {ZZ: 1}\n"
      "run:\n  taus: [10, 5]\n",
      "lattice:\n  kind: chain\n  sites: 8\nmodel:\n  mode: thermal\n  beta: 1\n  interaction:\n    pauli: {ZZ: 1}\n",
      "lattice:\n  kind: hexagon\nmodel:\n  mode: peps\n  q: identity\n",
      "lattice:\n  kind: chain\n  sites: 2\nmodel:\n  mode: thermal\n  beta: 1\n  interaction:\n    pauli: {ZZ: 1}\n"
      "  interpolation: thermal\n  ordering: [0, 0]\n",
  };
  for (const auto& text : bad) EXPECT_THROW(parse(text), InvalidInput) << text;
  EXPECT_THROW(load_config("/nonexistent/config.yaml"), InvalidInput);
}
