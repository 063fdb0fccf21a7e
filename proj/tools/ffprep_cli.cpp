#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ffprep/commands.hpp"
#include "ffprep/config.hpp"

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frustration-free state preparation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool verbose = false;
  app.add_option("--config", config_path, "Experiment config (YAML)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (overrides FFPREP_OUT and the config)");
  app.add_option("--seed", seed, "Seed (overrides the config)");
  app.add_option("--threads", threads, "Worker threads (overrides FFPREP_THREADS)")->check(CLI::PositiveNumber);
  app.add_flag("--verbose", verbose, "Progress on stderr");

  for (const char* name : {"state", "sweep", "cluster", "mcmc"}) {
    app.add_subcommand(name)->fallthrough();
  }
  app.get_subcommand("state")->description("Target state checks and Gibbs comparison");
  app.get_subcommand("sweep")->description("Error against runtime sweep");
  app.get_subcommand("cluster")->description("Cluster expansion, certificates and gap table");
  app.get_subcommand("mcmc")->description("Metropolis generator against its quantum Hamiltonian");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << ffprep::error_json("usage", e.what(), ffprep::kExitConfig).dump() << '\n';
    return ffprep::kExitConfig;
  }

  ffprep::CommandContext ctx;
  ctx.verbose = verbose;
  try {
    ctx.config = ffprep::load_config(config_path, seed);
    if (!threads) {
      if (const auto t = env("FFPREP_THREADS")) threads = std::stoi(*t);
    }
    ctx.threads = threads.value_or(1);
    if (ctx.threads < 1) throw ffprep::InvalidInput("threads must be >= 1");
  } catch (const ffprep::InvalidInput& e) {
    std::cerr << ffprep::error_json("config", e.what(), ffprep::kExitConfig).dump() << '\n';
    return ffprep::kExitConfig;
  } catch (const std::logic_error& e) {  // std::stoi
    std::cerr << ffprep::error_json("config", std::string("FFPREP_THREADS: ") + e.what(), ffprep::kExitConfig).dump()
              << '\n';
    return ffprep::kExitConfig;
  }
  if (!out_dir) out_dir = env("FFPREP_OUT");
  ctx.out_dir = out_dir ? std::filesystem::path(*out_dir) : ctx.config.out_dir;

  const std::string command = app.get_subcommands().front()->get_name();
  return ffprep::run_command(command, ctx, std::cout, std::cerr);
}
