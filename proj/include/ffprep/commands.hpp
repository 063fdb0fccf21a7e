#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ffprep/config.hpp"

namespace ffprep {

struct CommandContext {
  ExperimentConfig config;
  std::filesystem::path out_dir;
  int threads = 1;
  bool verbose = false;
};

struct CommandResult {
  /// Summary printed to stdout and written as <command>.json.
  nlohmann::json summary;
  std::vector<std::filesystem::path> files;
  int exit_code = 0;
};

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitRefused = 4;

/// %.17g; the caller decides how to print non-finite values.
std::string format_double(double x);

/// Throws NumericalError when any number in `j` is NaN or infinite.
void require_finite(const nlohmann::json& j, const std::string& what);

/// Target norm checks, frustration-freeness, reduced density and (thermal mode)
/// trace distance to the Gibbs state.
CommandResult cmd_state(const CommandContext& ctx);
/// Error-vs-runtime sweep; exits with kExitRefused when a row is uncertified.
CommandResult cmd_sweep(const CommandContext& ctx);
/// Cluster inventory, truncation certificates, gap-vs-beta table and an
/// optional high-temperature preparation run.
CommandResult cmd_cluster(const CommandContext& ctx);
/// Spectra of the Metropolis generator and its quantum Hamiltonian.
CommandResult cmd_mcmc(const CommandContext& ctx);

/// Dispatches by name, maps exceptions to exit codes and writes the error JSON
/// to `err`. The summary goes to `out` on success.
int run_command(const std::string& name, const CommandContext& ctx, std::ostream& out, std::ostream& err);

/// Machine-readable error document.
nlohmann::json error_json(const std::string& kind, const std::string& message, int exit_code);

}  // namespace ffprep
