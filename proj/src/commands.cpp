#include "ffprep/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "ffprep/cluster.hpp"
#include "ffprep/evolve.hpp"
#include "ffprep/model.hpp"
#include "ffprep/parent.hpp"

namespace ffprep {

namespace {

using nlohmann::json;

constexpr std::size_t kDenseSpectrumDim = 1024;
constexpr double kExactFrameDim = 4096.0;

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json num_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string csv_cell(double x) { return std::isfinite(x) ? format_double(x) : std::string(); }

json header(const CommandContext& ctx, const std::string& command) {
  return {{"command", command}, {"config_hash", hash_hex(ctx.config.hash)}, {"seed", ctx.config.seed}};
}

void log(const CommandContext& ctx, const std::string& msg) {
  if (ctx.verbose) std::clog << "[ffprep] " << msg << '\n';
}

std::filesystem::path write_file(const CommandContext& ctx, const std::string& name, const std::string& body) {
  std::filesystem::create_directories(ctx.out_dir);
  const auto path = ctx.out_dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("failed writing " + path.string());
  log(ctx, "wrote " + path.string());
  return path;
}

void finish(const CommandContext& ctx, const std::string& name, CommandResult& result) {
  require_finite(result.summary, name);
  result.files.push_back(write_file(ctx, name + ".json", result.summary.dump(2) + "\n"));
}

std::string omega_label(const std::vector<int>& omega) {
  std::string s;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(omega[i]);
  }
  return s;
}

json certificate_json(const TruncationCertificate& c, double beta) {
  return {{"anchor", c.anchor},
          {"beta", beta},
          {"r", c.r},
          {"eta", c.eta},
          {"y", c.y},
          {"bound", num_or_null(c.bound)},
          {"measured", c.measured ? json(*c.measured) : json(nullptr)},
          {"valid", c.valid}};
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void require_finite(const nlohmann::json& j, const std::string& what) {
  if (j.is_number_float() && !std::isfinite(j.get<double>())) {
    throw NumericalError(what + ": non-finite value in output");
  }
  if (j.is_structured()) {
    for (const auto& v : j) require_finite(v, what);
  }
}

nlohmann::json error_json(const std::string& kind, const std::string& message, int exit_code) {
  return {{"error", {{"kind", kind}, {"message", message}}}, {"exit_code", exit_code}};
}

CommandResult cmd_state(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  if (cfg.mode == ModelMode::classical) throw InvalidInput("state needs a thermal or peps config");
  const ModelSpec model = build_model(cfg);
  const Lattice& lat = model.lattice;
  log(ctx, "building target state");

  Vector raw = entangled_pairs_state(lat);
  for (const auto& q : model.q_ops) raw = apply_local(q, lat, raw);
  const Vector phi = target_state(model);

  CommandResult result;
  json& j = result.summary;
  j = header(ctx, "state");
  j["dim"] = lat.hilbert_dim();
  j["q0"] = model.q0;
  j["unnormalized_norm"] = raw.norm();
  j["norm_error"] = std::abs(phi.norm() - 1.0);

  if (lat.hilbert_dim() <= kDenseSpectrumDim) {
    const SpectralReport rep = spectral_report(parent_hamiltonian(model), phi);
    j["ground_energy"] = rep.ground_energy;
    j["gap"] = rep.gap;
    j["ff_residual"] = rep.ff_residual;
    j["degenerate"] = rep.degenerate;
  } else {
    // Matrix-free residual only; no spectrum above the dense limit.
    const PathSpec path = make_path(model, Schedule::linear(), Interpolation::linear);
    const OperatorSum full = localized_terms(path, path.n_segments() - 1, 1.0, lat.diameter() + 1);
    j["ff_residual_unscaled"] = full.apply(phi).norm();
  }

  if (lat.has_ancillas()) {
    const Matrix rho = trace_ancillas(phi, lat);
    const auto n = rho.rows();
    j["reduced_trace"] = rho.trace().real();
    j["reduced_dim"] = n;
    const double mixed = 0.5 * trace_norm(rho - Matrix::Identity(n, n) / static_cast<double>(n));
    j["maximally_mixed_distance"] = mixed;
    j["maximally_mixed"] = mixed <= 1e-10;
    result.files.push_back(write_file(ctx, "reduced_density.json", matrix_to_json(rho).dump() + "\n"));
    if (model.thermal) {
      const Matrix gibbs = gibbs_density(lat, model.thermal->h_ops, model.thermal->beta);
      j["beta"] = cfg.beta;
      j["h_scale"] = model.thermal->h_scale;
      j["trace_distance"] = 0.5 * trace_norm(rho - gibbs);
    }
  }
  finish(ctx, "state", result);
  return result;
}

CommandResult cmd_sweep(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  if (cfg.mode == ModelMode::classical) throw InvalidInput("sweep needs a thermal or peps config");
  if (cfg.run.taus.empty()) throw InvalidInput("run.taus must be nonempty");
  const PathSpec path = build_path(cfg);
  const int radius = cfg.run.radius.value_or(path.lattice().diameter() + 1);
  log(ctx, "sweeping " + std::to_string(cfg.run.taus.size()) + " runtimes");
  const SweepTable table = error_vs_runtime_sweep(path, cfg.run.taus, radius, cfg.run.steps_per_time,
                                                  cfg.run.min_steps, ctx.threads);

  CommandResult result;
  std::string csv = "tau,error,bound_estimate,min_gap,norm_drift,certified\n";
  json rows = json::array();
  bool all_certified = true;
  for (const auto& r : table.rows) {
    if (!std::isfinite(r.tau) || !std::isfinite(r.error) || !std::isfinite(r.norm_drift)) {
      throw NumericalError("sweep: non-finite value in output");
    }
    csv += format_double(r.tau) + ',' + format_double(r.error) + ',' + csv_cell(r.bound_estimate) + ',' +
           csv_cell(r.min_gap) + ',' + format_double(r.norm_drift) + ',' + (r.certified ? "1" : "0") + '\n';
    rows.push_back({{"tau", r.tau},
                    {"error", r.error},
                    {"bound_estimate", num_or_null(r.bound_estimate)},
                    {"min_gap", num_or_null(r.min_gap)},
                    {"norm_drift", r.norm_drift},
                    {"certified", r.certified},
                    {"reliable", r.reliable}});
    all_certified = all_certified && r.certified;
  }
  result.files.push_back(write_file(ctx, "sweep.csv", csv));

  json constants = json::array();
  for (std::size_t n = 0; n < table.constants.size(); ++n) {
    const auto& c = table.constants[n];
    constants.push_back({{"segment", n},
                         {"K_estimate", c.K},
                         {"c_estimate", c.c},
                         {"derivative_norms", c.derivative_norms}});
  }
  json gaps = json::array();
  for (double g : table.segment_gaps) gaps.push_back(num_or_null(g));

  json& j = result.summary;
  j = header(ctx, "sweep");
  j["radius"] = radius;
  j["rows"] = rows;
  j["constants"] = constants;
  j["segment_gaps"] = gaps;
  j["monotone"] = table.monotone;
  j["decay_slope"] = table.decay_slope;
  j["certified"] = all_certified;
  finish(ctx, "sweep", result);
  result.exit_code = all_certified ? kExitOk : kExitRefused;
  return result;
}

CommandResult cmd_cluster(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  if (cfg.mode != ModelMode::thermal || !cfg.lattice) {
    throw InvalidInput("cluster needs a thermal config with interactions");
  }
  const Lattice& lat = *cfg.lattice;
  const ThermalTerms tt = normalize_interactions(lat, cfg.h_ops, cfg.beta);
  const bool exact_fits = lat.hilbert_dim_unchecked() <= kExactFrameDim;
  const bool dense_fits = lat.hilbert_dim_unchecked() <= static_cast<double>(kDenseSpectrumDim);

  std::vector<int> rs = cfg.run.r;
  std::sort(rs.begin(), rs.end());
  rs.erase(std::unique(rs.begin(), rs.end()), rs.end());

  CommandResult result;
  json& j = result.summary;
  j = header(ctx, "cluster");
  j["beta"] = cfg.beta;
  j["beta_normalized"] = tt.beta;
  j["h_scale"] = tt.h_scale;
  j["growth_constant"] = growth_constant(lat);

  std::string inventory = "r,anchor,omega,size,inside_lambda,norm,lemma_bound\n";
  json certs = json::array();
  double outside_max = 0.0;
  double nonempty_max = 0.0;
  bool lemma_holds = true;
  for (int r : rs) {
    log(ctx, "truncating at r = " + std::to_string(r));
    const TruncatedParent tp = truncated_parent(lat, tt.beta, r, tt.h_ops, exact_fits);
    for (const auto& t : tp.inventory) {
      const auto& lambda = lat.supports_touching(t.anchor);
      const bool inside = std::all_of(t.omega.members.begin(), t.omega.members.end(), [&](int m) {
        return std::binary_search(lambda.begin(), lambda.end(), m);
      });
      const int size = static_cast<int>(t.omega.members.size());
      const double lemma = norm_lemma_bound(tt.beta, size);
      if (!inside) outside_max = std::max(outside_max, t.norm);
      if (size > 0) nonempty_max = std::max(nonempty_max, t.norm);
      lemma_holds = lemma_holds && t.norm <= lemma * (1.0 + 1e-12) + 1e-14;
      inventory += std::to_string(r) + ',' + std::to_string(t.anchor) + ',' + omega_label(t.omega.members) + ',' +
                   std::to_string(size) + ',' + (inside ? "1" : "0") + ',' + format_double(t.norm) + ',' +
                   csv_cell(lemma) + '\n';
    }
    for (const auto& c : tp.certificates) certs.push_back(certificate_json(c, tt.beta));
  }
  result.files.push_back(write_file(ctx, "cluster_inventory.csv", inventory));
  j["certificates"] = certs;
  j["max_norm_outside_lambda"] = outside_max;
  j["max_norm_nonempty"] = nonempty_max;
  j["norm_lemma_holds"] = lemma_holds;

  if (dense_fits) {
    std::vector<double> betas = cfg.run.betas.empty() ? std::vector<double>{cfg.beta} : cfg.run.betas;
    for (double& b : betas) b /= tt.h_scale;
    const auto gap_rows = verify_noncommuting_gap(lat, tt.h_ops, betas);
    std::string csv = "beta,gap,ground_energy,inequality_min,holds\n";
    json rows = json::array();
    for (const auto& g : gap_rows) {
      const double user_beta = g.beta * tt.h_scale;
      csv += format_double(user_beta) + ',' + format_double(g.gap) + ',' + format_double(g.ground_energy) + ',' +
             format_double(g.inequality_min) + ',' + (g.holds ? "1" : "0") + '\n';
      rows.push_back({{"beta", user_beta},
                      {"gap", g.gap},
                      {"ground_energy", g.ground_energy},
                      {"inequality_min", g.inequality_min},
                      {"holds", g.holds}});
    }
    result.files.push_back(write_file(ctx, "gap_vs_beta.csv", csv));
    j["gap_vs_beta"] = rows;
  } else {
    j["gap_vs_beta"] = nullptr;
  }

  if (cfg.run.prepare && dense_fits && !rs.empty()) {
    HighTempOptions opts;
    opts.schedule = cfg.schedule;
    opts.steps = cfg.run.steps;
    opts.override_certificate = cfg.run.override_certificate;
    try {
      log(ctx, "preparing at r = " + std::to_string(rs.back()));
      const EvolutionResult run = high_temp_prepare(lat, tt.beta, rs.back(), cfg.run.tau, tt.h_ops, opts);
      j["preparation"] = {{"r", rs.back()},
                          {"tau", cfg.run.tau},
                          {"adiabatic_error", run.adiabatic_error},
                          {"infidelity", 1.0 - std::norm(run.overlap)},
                          {"norm_drift", run.norm_drift},
                          {"certified", run.certified}};
    } catch (const CertificationRefused& e) {
      j["preparation"] = {{"skipped", e.what()}};
    }
  }
  finish(ctx, "cluster", result);
  return result;
}

CommandResult cmd_mcmc(const CommandContext& ctx) {
  const auto& cfg = ctx.config;
  if (cfg.mode != ModelMode::classical) throw InvalidInput("mcmc needs a classical config");
  const GeneratorMatrix s = metropolis_generator(cfg.energies, cfg.classical_sites, cfg.classical_dim, cfg.beta);

  // S is similar to a symmetric matrix, so its spectrum is real.
  Eigen::EigenSolver<RealMatrix> es(s.matrix, false);
  if (es.info() != Eigen::Success) throw NumericalError("mcmc: eigensolver failed on the generator");
  const Eigen::VectorXcd ev = es.eigenvalues();
  std::vector<double> spec_s(static_cast<std::size_t>(ev.size()));
  double imag_max = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    spec_s[static_cast<std::size_t>(i)] = ev(i).real();
    imag_max = std::max(imag_max, std::abs(ev(i).imag()));
  }
  std::sort(spec_s.begin(), spec_s.end(), std::greater<>());

  const GlobalOperator g = mc_hamiltonian(s);
  const EigenSystem eg = eig_hermitian(g);
  std::vector<double> spec_g(eg.values.data(), eg.values.data() + eg.values.size());
  double mismatch = 0.0;
  for (std::size_t i = 0; i < spec_g.size(); ++i) mismatch = std::max(mismatch, std::abs(spec_g[i] + spec_s[i]));

  const Vector expected = mc_ground_state(cfg.energies, cfg.beta);
  const double fidelity = std::norm(eg.vectors.col(0).dot(expected));

  CommandResult result;
  json& j = result.summary;
  j = header(ctx, "mcmc");
  j["beta"] = cfg.beta;
  j["sites"] = cfg.classical_sites;
  j["spectrum_S"] = spec_s;
  j["spectrum_G"] = spec_g;
  j["spectrum_S_max_imag"] = imag_max;
  j["mismatch"] = mismatch;
  j["fidelity"] = fidelity;
  j["stochastic_gap"] = stochastic_gap(s);
  j["gap_G"] = spec_g.size() > 1 ? spec_g[1] - spec_g[0] : 0.0;
  j["detailed_balance_violation"] = detailed_balance_violation(s);

  const auto dim = static_cast<std::size_t>(cfg.energies.size());
  if (dim * dim <= kMaxHilbertDim) {
    const EigenSystem ep = eig_hermitian(purified_mc_hamiltonian(s, cfg.run.penalty));
    double purified = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      purified = std::max(purified, std::abs(ep.values(static_cast<Eigen::Index>(i)) - spec_g[i]));
    }
    j["purified_mismatch"] = purified;
  }
  finish(ctx, "mcmc", result);
  return result;
}

int run_command(const std::string& name, const CommandContext& ctx, std::ostream& out, std::ostream& err) {
  try {
    CommandResult result;
    if (name == "state") {
      result = cmd_state(ctx);
    } else if (name == "sweep") {
      result = cmd_sweep(ctx);
    } else if (name == "cluster") {
      result = cmd_cluster(ctx);
    } else if (name == "mcmc") {
      result = cmd_mcmc(ctx);
    } else {
      throw InvalidInput("unknown command '" + name + "'");
    }
    out << result.summary.dump(2) << '\n';
    if (result.exit_code == kExitRefused) {
      err << error_json("certification", "one or more results are uncertified", kExitRefused).dump() << '\n';
    }
    return result.exit_code;
  } catch (const InvalidInput& e) {
    err << error_json("config", e.what(), kExitConfig).dump() << '\n';
    return kExitConfig;
  } catch (const CertificationRefused& e) {
    err << error_json("certification", e.what(), kExitRefused).dump() << '\n';
    return kExitRefused;
  } catch (const NumericalError& e) {
    err << error_json("numerical", e.what(), kExitNumerical).dump() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << error_json("internal", e.what(), 1).dump() << '\n';
    return 1;
  }
}

}  // namespace ffprep
