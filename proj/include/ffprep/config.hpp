#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ffprep/lattice.hpp"
#include "ffprep/linop.hpp"
#include "ffprep/model.hpp"
#include "ffprep/parent.hpp"
#include "ffprep/schedule.hpp"

namespace ffprep {

enum class ModelMode { thermal, peps, classical };

struct RunConfig {
  std::vector<double> taus;
  /// Empty means the full radius (every pair).
  std::optional<int> radius;
  double steps_per_time = 40.0;
  int min_steps = 200;
  std::vector<int> r{1, 2};
  std::vector<double> betas;
  double tau = 40.0;
  int steps = 2000;
  bool override_certificate = false;
  /// cluster: also run the high-temperature preparation at the largest r.
  bool prepare = true;
  double penalty = 10.0;
};

/// Parsed and validated experiment description.
struct ExperimentConfig {
  std::uint64_t hash = 0;
  std::uint64_t seed = 0;
  ModelMode mode = ModelMode::thermal;
  std::optional<Lattice> lattice;

  /// thermal: one term per support, in the user's units (not normalized).
  double beta = 0.0;
  std::vector<LocalOperator> h_ops;
  /// peps: one positive operator per support.
  std::vector<LocalOperator> q_ops;
  /// classical: diagonal energies over d^n configurations.
  RealVector energies;
  int classical_sites = 0;
  int classical_dim = 2;

  Schedule schedule = Schedule::gevrey(1.0);
  std::vector<int> ordering;
  Interpolation interpolation = Interpolation::linear;
  RunConfig run;
  std::filesystem::path out_dir = "out";
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Parses YAML text. Relative paths inside (schedule tables) resolve against
/// `base_dir`. Throws InvalidInput on any schema violation.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              std::optional<std::uint64_t> seed_override = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

/// Thermal (commuting) or PEPS model of the config.
ModelSpec build_model(const ExperimentConfig& cfg);
PathSpec build_path(const ExperimentConfig& cfg);

}  // namespace ffprep
