#include "ffprep/config.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace ffprep {

namespace {

void allow_keys(const YAML::Node& node, const std::string& where, std::initializer_list<std::string_view> keys) {
  if (!node.IsMap()) throw InvalidInput(where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw InvalidInput(where + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
T get(const YAML::Node& node, const std::string& key, const std::string& where) {
  const YAML::Node v = node[key];
  if (!v) throw InvalidInput(where + ": missing required key '" + key + "'");
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw InvalidInput(where + ": key '" + key + "' has the wrong type");
  }
}

template <class T>
T get_or(const YAML::Node& node, const std::string& key, T fallback, const std::string& where) {
  if (!node[key]) return fallback;
  return get<T>(node, key, where);
}

cplx parse_entry(const YAML::Node& e, const std::string& where) {
  if (e.IsScalar()) return {e.as<double>(), 0.0};
  if (e.IsSequence() && e.size() == 2) return {e[0].as<double>(), e[1].as<double>()};
  throw InvalidInput(where + ": matrix entries must be numbers or [re, im] pairs");
}

Matrix parse_matrix(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence() || node.size() == 0) throw InvalidInput(where + ": matrix must be a list of rows");
  const auto rows = static_cast<Eigen::Index>(node.size());
  Matrix m(rows, rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const YAML::Node row = node[static_cast<std::size_t>(i)];
    if (!row.IsSequence() || static_cast<Eigen::Index>(row.size()) != rows) {
      throw InvalidInput(where + ": matrix must be square");
    }
    for (Eigen::Index j = 0; j < rows; ++j) m(i, j) = parse_entry(row[static_cast<std::size_t>(j)], where);
  }
  return m;
}

LocalOperator parse_operator(const YAML::Node& node, const VertexSet& support, int d, const std::string& where) {
  allow_keys(node, where, {"pauli", "matrix"});
  if (node["pauli"] && node["matrix"]) throw InvalidInput(where + ": give either 'pauli' or 'matrix'");
  const auto dim = static_cast<Eigen::Index>(ipow(d, static_cast<int>(support.size())));
  Matrix m = Matrix::Zero(dim, dim);
  if (node["pauli"]) {
    if (d != 2) throw InvalidInput(where + ": Pauli strings require local_dim 2");
    const YAML::Node p = node["pauli"];
    if (!p.IsMap()) throw InvalidInput(where + ": 'pauli' must map strings to coefficients");
    for (const auto& kv : p) {
      const auto label = kv.first.as<std::string>();
      if (label.size() != support.size()) {
        throw InvalidInput(where + ": Pauli string '" + label + "' does not match the support size");
      }
      try {
        m += kv.second.as<double>() * pauli_string(label);
      } catch (const YAML::Exception&) {
        throw InvalidInput(where + ": Pauli coefficient must be a number");
      }
    }
  } else if (node["matrix"]) {
    m = parse_matrix(node["matrix"], where);
  } else {
    throw InvalidInput(where + ": operator needs 'pauli' or 'matrix'");
  }
  LocalOperator op{support, m};
  op.validate(d);
  return op;
}

std::vector<int> int_list(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) throw InvalidInput(where + ": expected a list of integers");
  try {
    return node.as<std::vector<int>>();
  } catch (const YAML::Exception&) {
    throw InvalidInput(where + ": expected a list of integers");
  }
}

std::vector<double> double_list(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) throw InvalidInput(where + ": expected a list of numbers");
  try {
    return node.as<std::vector<double>>();
  } catch (const YAML::Exception&) {
    throw InvalidInput(where + ": expected a list of numbers");
  }
}

Lattice parse_lattice(const YAML::Node& node, ModelMode mode) {
  const std::string where = "lattice";
  allow_keys(node, where,
             {"kind", "sites", "rows", "cols", "local_dim", "thermal", "onsite", "vertices", "edges", "supports",
              "pairs", "interaction_length", "roles"});
  const auto kind = get<std::string>(node, "kind", where);
  const int d = get_or<int>(node, "local_dim", 2, where);
  Lattice lat = [&]() {
    if (kind == "chain") {
      const bool thermal = get_or<bool>(node, "thermal", mode != ModelMode::peps, where);
      return build_chain(get<int>(node, "sites", where), d, thermal);
    }
    if (kind == "grid") return build_thermal_grid(get<int>(node, "rows", where), get<int>(node, "cols", where), d);
    if (kind == "explicit") {
      Lattice::Description desc;
      desc.n_vertices = get<int>(node, "vertices", where);
      desc.local_dim = d;
      desc.interaction_length = get_or<int>(node, "interaction_length", 1, where);
      auto pairs_of = [&](const char* key) {
        std::vector<std::array<Vertex, 2>> out;
        if (!node[key]) return out;
        for (const auto& e : node[key]) {
          const auto v = int_list(e, where + "." + key);
          if (v.size() != 2) throw InvalidInput(where + "." + key + ": entries must have two vertices");
          out.push_back({v[0], v[1]});
        }
        return out;
      };
      desc.edges = pairs_of("edges");
      for (const auto& p : pairs_of("pairs")) desc.pairs.push_back({std::min(p[0], p[1]), std::max(p[0], p[1])});
      if (node["supports"]) {
        for (const auto& s : node["supports"]) {
          auto v = int_list(s, where + ".supports");
          std::sort(v.begin(), v.end());
          desc.supports.push_back(v);
        }
      }
      if (node["roles"]) {
        for (const auto& r : node["roles"]) {
          const auto role = r.as<std::string>();
          if (role == "system") {
            desc.roles.push_back(VertexRole::system);
          } else if (role == "ancilla") {
            desc.roles.push_back(VertexRole::ancilla);
          } else if (role == "plain") {
            desc.roles.push_back(VertexRole::plain);
          } else {
            throw InvalidInput(where + ".roles: unknown role '" + role + "'");
          }
        }
      }
      return Lattice(std::move(desc));
    }
    throw InvalidInput(where + ": unknown kind '" + kind + "'");
  }();
  if (node["onsite"]) {
    const auto vs = int_list(node["onsite"], where + ".onsite");
    lat = with_onsite_supports(lat, vs);
  }
  lat.hilbert_dim();
  return lat;
}

Schedule parse_schedule(const YAML::Node& node, const std::filesystem::path& base_dir) {
  const std::string where = "schedule";
  if (!node) return Schedule::gevrey(1.0);
  allow_keys(node, where, {"kind", "alpha", "path"});
  const auto kind = get<std::string>(node, "kind", where);
  if (kind == "gevrey") return Schedule::gevrey(get_or<double>(node, "alpha", 1.0, where));
  if (kind == "linear") return Schedule::linear();
  if (kind == "table") {
    std::filesystem::path p = get<std::string>(node, "path", where);
    if (p.is_relative()) p = base_dir / p;
    return load_schedule_csv(p);
  }
  throw InvalidInput(where + ": unknown kind '" + kind + "'");
}

RunConfig parse_run(const YAML::Node& node) {
  const std::string where = "run";
  RunConfig run;
  if (!node) return run;
  allow_keys(node, where,
             {"taus", "radius", "steps_per_time", "min_steps", "r", "betas", "tau", "steps", "override_certificate",
              "prepare", "penalty"});
  if (node["taus"]) run.taus = double_list(node["taus"], where + ".taus");
  if (node["radius"]) {
    const YAML::Node r = node["radius"];
    if (r.IsScalar() && r.as<std::string>() == "full") {
      run.radius.reset();
    } else {
      run.radius = get<int>(node, "radius", where);
      if (*run.radius < 0) throw InvalidInput(where + ".radius must be >= 0");
    }
  }
  run.steps_per_time = get_or<double>(node, "steps_per_time", run.steps_per_time, where);
  run.min_steps = get_or<int>(node, "min_steps", run.min_steps, where);
  if (node["r"]) run.r = int_list(node["r"], where + ".r");
  if (node["betas"]) run.betas = double_list(node["betas"], where + ".betas");
  run.tau = get_or<double>(node, "tau", run.tau, where);
  run.steps = get_or<int>(node, "steps", run.steps, where);
  run.override_certificate = get_or<bool>(node, "override_certificate", false, where);
  run.prepare = get_or<bool>(node, "prepare", true, where);
  run.penalty = get_or<double>(node, "penalty", run.penalty, where);
  if (!(run.steps_per_time > 0.0) || run.min_steps < 1 || run.steps < 1) {
    throw InvalidInput(where + ": step counts must be positive");
  }
  for (std::size_t i = 1; i < run.taus.size(); ++i) {
    if (!(run.taus[i] > run.taus[i - 1])) throw InvalidInput(where + ".taus must be ascending");
  }
  for (double t : run.taus) {
    if (!(t > 0.0)) throw InvalidInput(where + ".taus must be > 0");
  }
  for (int r : run.r) {
    if (r < 0) throw InvalidInput(where + ".r entries must be >= 0");
  }
  for (double b : run.betas) {
    if (!(b >= 0.0)) throw InvalidInput(where + ".betas must be >= 0");
  }
  return run;
}

void parse_model(const YAML::Node& node, ExperimentConfig& cfg) {
  const std::string where = "model";
  allow_keys(node, where,
             {"mode", "beta", "interaction", "interactions", "q", "ising", "energies", "local_dim", "ordering",
              "interpolation"});
  const auto mode = get<std::string>(node, "mode", where);
  if (mode == "thermal") {
    cfg.mode = ModelMode::thermal;
  } else if (mode == "peps") {
    cfg.mode = ModelMode::peps;
  } else if (mode == "classical") {
    cfg.mode = ModelMode::classical;
  } else {
    throw InvalidInput(where + ": unknown mode '" + mode + "'");
  }
}

void parse_model_body(const YAML::Node& node, ExperimentConfig& cfg) {
  const std::string where = "model";
  if (cfg.mode == ModelMode::classical) {
    cfg.classical_dim = get_or<int>(node, "local_dim", 2, where);
    cfg.beta = get_or<double>(node, "beta", 0.0, where);
    if (!(cfg.beta >= 0.0)) throw InvalidInput(where + ".beta must be >= 0");
    if (node["ising"]) {
      const YAML::Node is = node["ising"];
      allow_keys(is, where + ".ising", {"sites", "fields", "couplings"});
      IsingModel m;
      m.n_sites = get<int>(is, "sites", where + ".ising");
      if (m.n_sites < 1) throw InvalidInput(where + ".ising.sites must be >= 1");
      if (cfg.classical_dim != 2) throw InvalidInput(where + ": Ising form requires local_dim 2");
      if (is["fields"]) m.fields = double_list(is["fields"], where + ".ising.fields");
      if (is["couplings"]) {
        for (const auto& c : is["couplings"]) {
          if (!c.IsSequence() || c.size() != 3) throw InvalidInput(where + ".ising.couplings: use [i, j, J]");
          m.couplings.emplace_back(c[0].as<int>(), c[1].as<int>(), c[2].as<double>());
        }
      }
      if (static_cast<double>(ipow(2, m.n_sites)) > static_cast<double>(kMaxHilbertDim)) {
        throw InvalidInput("classical configuration space exceeds the dimension guard");
      }
      cfg.classical_sites = m.n_sites;
      cfg.energies = m.energies();
    } else if (node["energies"]) {
      const auto e = double_list(node["energies"], where + ".energies");
      cfg.energies = Eigen::Map<const RealVector>(e.data(), static_cast<Eigen::Index>(e.size()));
      int n = 0;
      std::size_t size = 1;
      while (size < e.size()) {
        size *= static_cast<std::size_t>(cfg.classical_dim);
        ++n;
      }
      if (size != e.size() || e.empty()) throw InvalidInput(where + ".energies: length must be a power of local_dim");
      cfg.classical_sites = std::max(n, 1);
      if (e.size() == 1) throw InvalidInput(where + ".energies: need at least one site");
    } else {
      throw InvalidInput(where + ": classical mode needs 'ising' or 'energies'");
    }
    return;
  }

  if (!cfg.lattice) throw InvalidInput("lattice section is required for this mode");
  const Lattice& lat = *cfg.lattice;
  const int d = lat.local_dim();
  if (cfg.mode == ModelMode::thermal) {
    cfg.beta = get<double>(node, "beta", where);
    if (!(cfg.beta >= 0.0)) throw InvalidInput(where + ".beta must be >= 0");
    if (node["interaction"] && node["interactions"]) {
      throw InvalidInput(where + ": give either 'interaction' or 'interactions'");
    }
    if (node["interaction"]) {
      for (int i = 0; i < lat.n_supports(); ++i) {
        cfg.h_ops.push_back(parse_operator(node["interaction"], lat.supports()[static_cast<std::size_t>(i)], d,
                                           where + ".interaction"));
      }
    } else if (node["interactions"]) {
      const YAML::Node list = node["interactions"];
      if (!list.IsSequence() || static_cast<int>(list.size()) != lat.n_supports()) {
        throw InvalidInput(where + ".interactions: need one entry per support");
      }
      for (int i = 0; i < lat.n_supports(); ++i) {
        cfg.h_ops.push_back(parse_operator(list[static_cast<std::size_t>(i)],
                                           lat.supports()[static_cast<std::size_t>(i)], d,
                                           where + ".interactions[" + std::to_string(i) + "]"));
      }
    } else {
      throw InvalidInput(where + ": thermal mode needs 'interaction' or 'interactions'");
    }
  } else {
    const YAML::Node q = node["q"];
    if (!q) throw InvalidInput(where + ": peps mode needs 'q'");
    if (q.IsScalar() && q.as<std::string>() == "identity") {
      for (const auto& s : lat.supports()) {
        const auto dim = static_cast<Eigen::Index>(ipow(d, static_cast<int>(s.size())));
        cfg.q_ops.push_back({s, Matrix::Identity(dim, dim)});
      }
    } else if (q.IsMap()) {
      allow_keys(q, where + ".q", {"random"});
      const YAML::Node r = q["random"];
      if (!r) throw InvalidInput(where + ".q: expected 'random', 'identity' or a list");
      allow_keys(r, where + ".q.random", {"min_eig"});
      const double min_eig = get_or<double>(r, "min_eig", 0.3, where + ".q.random");
      std::mt19937_64 rng(cfg.seed);
      for (const auto& s : lat.supports()) cfg.q_ops.push_back(random_q(s, d, min_eig, rng));
    } else if (q.IsSequence()) {
      if (static_cast<int>(q.size()) != lat.n_supports()) throw InvalidInput(where + ".q: need one entry per support");
      for (int i = 0; i < lat.n_supports(); ++i) {
        cfg.q_ops.push_back(parse_operator(q[static_cast<std::size_t>(i)], lat.supports()[static_cast<std::size_t>(i)],
                                           d, where + ".q[" + std::to_string(i) + "]"));
      }
    } else {
      throw InvalidInput(where + ".q: expected 'random', 'identity' or a list");
    }
  }

  if (node["ordering"]) {
    cfg.ordering = int_list(node["ordering"], where + ".ordering");
    std::vector<int> sorted = cfg.ordering;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < static_cast<int>(sorted.size()); ++i) {
      if (sorted[static_cast<std::size_t>(i)] != i) throw InvalidInput(where + ".ordering is not a permutation");
    }
    if (static_cast<int>(sorted.size()) != lat.n_supports()) {
      throw InvalidInput(where + ".ordering must list every support once");
    }
  } else {
    cfg.ordering.resize(static_cast<std::size_t>(lat.n_supports()));
    std::iota(cfg.ordering.begin(), cfg.ordering.end(), 0);
  }
  const auto interp = get_or<std::string>(node, "interpolation",
                                          cfg.mode == ModelMode::thermal ? "thermal" : "linear", where);
  if (interp == "thermal") {
    if (cfg.mode != ModelMode::thermal) throw InvalidInput(where + ": thermal interpolation needs thermal mode");
    cfg.interpolation = Interpolation::thermal;
  } else if (interp == "linear") {
    cfg.interpolation = Interpolation::linear;
  } else {
    throw InvalidInput(where + ": unknown interpolation '" + interp + "'");
  }
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              std::optional<std::uint64_t> seed_override) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw InvalidInput(std::string("config is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw InvalidInput("config: top level must be a mapping");
  allow_keys(root, "config", {"seed", "lattice", "model", "schedule", "run", "output"});

  ExperimentConfig cfg;
  try {
    cfg.seed = seed_override.value_or(get_or<std::uint64_t>(root, "seed", 0, "config"));
    if (!root["model"]) throw InvalidInput("config: missing required section 'model'");
    parse_model(root["model"], cfg);
    if (root["lattice"]) cfg.lattice = parse_lattice(root["lattice"], cfg.mode);
    parse_model_body(root["model"], cfg);
    cfg.schedule = parse_schedule(root["schedule"], base_dir);
    cfg.run = parse_run(root["run"]);
    if (root["output"]) {
      allow_keys(root["output"], "output", {"dir"});
      cfg.out_dir = get_or<std::string>(root["output"], "dir", "out", "output");
    }
  } catch (const YAML::Exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  cfg.hash = fnv1a64(text + "\nseed=" + std::to_string(cfg.seed));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path(), seed_override);
}

ModelSpec build_model(const ExperimentConfig& cfg) {
  if (!cfg.lattice) throw InvalidInput("this command needs a lattice");
  if (cfg.mode == ModelMode::thermal) return make_thermal_model(*cfg.lattice, cfg.h_ops, cfg.beta);
  if (cfg.mode == ModelMode::peps) return make_model(*cfg.lattice, cfg.q_ops);
  throw InvalidInput("classical configs have no quantum model");
}

PathSpec build_path(const ExperimentConfig& cfg) {
  PathSpec path = make_path(build_model(cfg), cfg.schedule, cfg.interpolation, cfg.ordering);
  if (cfg.run.radius) path.localization_radius = *cfg.run.radius;
  path.validate();
  return path;
}

}  // namespace ffprep
