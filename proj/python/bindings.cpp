#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>

#include "ffprep/cluster.hpp"
#include "ffprep/commands.hpp"
#include "ffprep/config.hpp"
#include "ffprep/evolve.hpp"
#include "ffprep/model.hpp"
#include "ffprep/parent.hpp"

namespace py = pybind11;
using namespace ffprep;

namespace {

/// One operator per lattice support, in support order.
std::vector<LocalOperator> per_support(const Lattice& lat, const std::vector<Matrix>& mats) {
  if (static_cast<int>(mats.size()) != lat.n_supports()) {
    throw InvalidInput("expected one operator per support");
  }
  std::vector<LocalOperator> out;
  for (std::size_t i = 0; i < mats.size(); ++i) out.push_back({lat.supports()[i], mats[i]});
  return out;
}

std::vector<Matrix> matrices(const std::vector<LocalOperator>& ops) {
  std::vector<Matrix> out;
  for (const auto& op : ops) out.push_back(op.matrix);
  return out;
}

Schedule schedule_from(const std::string& kind, double alpha) {
  if (kind == "gevrey") return Schedule::gevrey(alpha);
  if (kind == "linear") return Schedule::linear();
  throw InvalidInput("schedule must be 'gevrey' or 'linear'");
}

Interpolation interpolation_from(const std::string& kind) {
  if (kind == "linear") return Interpolation::linear;
  if (kind == "thermal") return Interpolation::thermal;
  throw InvalidInput("interpolation must be 'linear' or 'thermal'");
}

py::dict evolution_dict(const EvolutionResult& r) {
  py::dict d;
  d["final_state"] = r.final_state;
  d["adiabatic_error"] = r.adiabatic_error;
  d["overlap"] = r.overlap;
  d["norm_drift"] = r.norm_drift;
  d["certified"] = r.certified;
  py::list gaps;
  for (const auto& s : r.segments) gaps.append(s.min_gap);
  d["segment_min_gaps"] = gaps;
  return d;
}

std::string run_named(const std::string& name, const std::filesystem::path& config,
                      const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed, int threads) {
  CommandContext ctx;
  ctx.config = load_config(config, seed);
  ctx.out_dir = out_dir;
  if (threads < 1) throw InvalidInput("threads must be >= 1");
  ctx.threads = threads;
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
  return result.summary.dump();
}

}  // namespace

PYBIND11_MODULE(_ffprep, m) {
  m.doc() = "Frustration-free adiabatic state preparation on small lattices";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<CertificationRefused>(m, "CertificationRefused", PyExc_RuntimeError);

  py::class_<Lattice>(m, "Lattice")
      .def_property_readonly("n_vertices", &Lattice::n_vertices)
      .def_property_readonly("local_dim", &Lattice::local_dim)
      .def_property_readonly("supports", &Lattice::supports)
      .def_property_readonly("pairs", &Lattice::pairs)
      .def_property_readonly("names", &Lattice::names)
      .def_property_readonly("diameter", &Lattice::diameter)
      .def("distance", &Lattice::distance)
      .def("__repr__", [](const Lattice& l) {
        return "<Lattice vertices=" + std::to_string(l.n_vertices()) + " supports=" + std::to_string(l.n_supports()) +
               " pairs=" + std::to_string(l.n_pairs()) + ">";
      });

  m.def("chain", &build_chain, py::arg("n_sites"), py::arg("local_dim") = 2, py::arg("thermal") = true,
        "Thermal chain (system plus ancilla per site) or PEPS chain of nodes.");
  m.def("thermal_grid", &build_thermal_grid, py::arg("rows"), py::arg("cols"), py::arg("local_dim") = 2);

  py::class_<ModelSpec>(m, "Model")
      .def_property_readonly("lattice", [](const ModelSpec& s) { return s.lattice; })
      .def_property_readonly("q0", [](const ModelSpec& s) { return s.q0; })
      .def_property_readonly("q_ops", [](const ModelSpec& s) { return matrices(s.q_ops); })
      .def_property_readonly("is_thermal", &ModelSpec::is_thermal)
      .def("target_state", [](const ModelSpec& s) { return target_state(s); })
      .def("parent_hamiltonian", [](const ModelSpec& s) { return parent_hamiltonian(s).matrix; });

  m.def(
      "thermal_model",
      [](const Lattice& lat, const std::vector<Matrix>& h, double beta) {
        return make_thermal_model(lat, per_support(lat, h), beta);
      },
      py::arg("lattice"), py::arg("h"), py::arg("beta"));
  m.def(
      "model",
      [](const Lattice& lat, const std::vector<Matrix>& q) { return make_model(lat, per_support(lat, q)); },
      py::arg("lattice"), py::arg("q"), "Model from commuting operators with 0 < Q <= I.");

  m.def("pauli", [](const std::string& labels) { return pauli_string(labels); }, py::arg("labels"));
  m.def("trace_ancillas", &trace_ancillas, py::arg("state"), py::arg("lattice"));
  m.def(
      "gibbs_density",
      [](const Lattice& lat, const std::vector<Matrix>& h, double beta) {
        return gibbs_density(lat, per_support(lat, h), beta);
      },
      py::arg("lattice"), py::arg("h"), py::arg("beta"));
  m.def("trace_norm", &trace_norm, py::arg("m"));

  m.def("gevrey_f", &gevrey_f, py::arg("alpha"), py::arg("s"));
  m.def(
      "theorem1_bound",
      [](double K, double c, double alpha, double Delta, double tau) {
        return theorem1_bound({K, c, alpha, Delta, tau});
      },
      py::arg("K"), py::arg("c"), py::arg("alpha"), py::arg("Delta"), py::arg("tau"));

  m.def(
      "integrate",
      [](const DenseGenerator& h, const Vector& psi0, double t_final, int steps, const std::string& stepper) {
        if (stepper != "magnus4" && stepper != "midpoint") throw InvalidInput("stepper must be magnus4 or midpoint");
        return integrate(h, psi0, t_final, steps, stepper == "magnus4" ? Stepper::magnus4 : Stepper::midpoint);
      },
      py::arg("h"), py::arg("psi0"), py::arg("t_final"), py::arg("steps"), py::arg("stepper") = "magnus4",
      "Propagate i dpsi/dt = H(t) psi with a callable H returning a Hermitian matrix.");

  m.def(
      "run_sequential",
      [](const ModelSpec& model, double tau, const std::string& schedule, double alpha,
         const std::string& interpolation, std::optional<int> radius, int steps) {
        const PathSpec path = make_path(model, schedule_from(schedule, alpha), interpolation_from(interpolation));
        RunOptions opts;
        opts.steps_per_segment = steps;
        py::gil_scoped_release release;
        return run_sequential(path, tau, radius.value_or(model.lattice.diameter() + 1), opts);
      },
      py::arg("model"), py::arg("tau"), py::arg("schedule") = "gevrey", py::arg("alpha") = 1.0,
      py::arg("interpolation") = "linear", py::arg("radius") = py::none(), py::arg("steps") = 200);
  py::class_<EvolutionResult>(m, "EvolutionResult")
      .def("as_dict", &evolution_dict)
      .def_property_readonly("final_state", [](const EvolutionResult& r) { return r.final_state; })
      .def_property_readonly("adiabatic_error", [](const EvolutionResult& r) { return r.adiabatic_error; })
      .def_property_readonly("norm_drift", [](const EvolutionResult& r) { return r.norm_drift; })
      .def_property_readonly("certified", [](const EvolutionResult& r) { return r.certified; });

  m.def(
      "mobius_hat",
      [](const std::map<std::vector<int>, double>& f, std::vector<int> omega) {
        std::sort(omega.begin(), omega.end());
        return mobius_hat(f, omega);
      },
      py::arg("f"), py::arg("omega"));
  m.def(
      "mobius_check",
      [](const std::map<std::vector<int>, double>& f, std::vector<int> omega) {
        std::sort(omega.begin(), omega.end());
        return mobius_check(f, omega);
      },
      py::arg("f"), py::arg("omega"));
  m.def("norm_lemma_bound", &norm_lemma_bound, py::arg("beta"), py::arg("size"));
  m.def("growth_constant", &growth_constant, py::arg("lattice"));

  m.def(
      "high_temp_prepare",
      [](const Lattice& lat, const std::vector<Matrix>& h, double beta, int r, double tau, bool override_certificate,
         int steps) {
        HighTempOptions opts;
        opts.override_certificate = override_certificate;
        opts.steps = steps;
        const auto ops = per_support(lat, h);
        py::gil_scoped_release release;
        return high_temp_prepare(lat, beta, r, tau, ops, opts);
      },
      py::arg("lattice"), py::arg("h"), py::arg("beta"), py::arg("r"), py::arg("tau"),
      py::arg("override_certificate") = false, py::arg("steps") = 2000);

  m.def(
      "ising_energies",
      [](int n, const std::vector<double>& fields, const std::vector<std::tuple<int, int, double>>& couplings) {
        return IsingModel{n, fields, couplings}.energies();
      },
      py::arg("n_sites"), py::arg("fields"), py::arg("couplings"));
  m.def(
      "metropolis_generator",
      [](const RealVector& energies, int n_sites, double beta) {
        return metropolis_generator(energies, n_sites, 2, beta).matrix;
      },
      py::arg("energies"), py::arg("n_sites"), py::arg("beta"), "Columns are source states: S[y, x] = rate x -> y.");
  m.def(
      "mc_hamiltonian",
      [](const RealVector& energies, int n_sites, double beta) {
        return mc_hamiltonian(metropolis_generator(energies, n_sites, 2, beta)).matrix;
      },
      py::arg("energies"), py::arg("n_sites"), py::arg("beta"));
  m.def("mc_ground_state", &mc_ground_state, py::arg("energies"), py::arg("beta"));

  m.def("config_hash", [](const std::filesystem::path& p, std::optional<std::uint64_t> seed) {
    return load_config(p, seed).hash;
  }, py::arg("config"), py::arg("seed") = py::none());
  m.def("_run_command", &run_named, py::arg("name"), py::arg("config"), py::arg("out_dir"),
        py::arg("seed") = py::none(), py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>());
}
