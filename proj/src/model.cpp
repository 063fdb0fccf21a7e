#include "ffprep/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ffprep {

namespace {

constexpr double kCommuteTol = 1e-10;
constexpr double kUpperTol = 1e-12;

bool overlaps(const VertexSet& a, const VertexSet& b) {
  return std::any_of(a.begin(), a.end(), [&](Vertex v) {
    return std::binary_search(b.begin(), b.end(), v);
  });
}

// digit of vertex v (lattice order, last vertex fastest) in a global index
std::vector<int> digits_of(std::size_t index, int n, int d) {
  std::vector<int> digits(static_cast<std::size_t>(n));
  for (int v = n - 1; v >= 0; --v) {
    digits[static_cast<std::size_t>(v)] = static_cast<int>(index % static_cast<std::size_t>(d));
    index /= static_cast<std::size_t>(d);
  }
  return digits;
}

}  // namespace

void check_commuting(const Lattice& lat, std::span<const LocalOperator> ops) {
  for (std::size_t i = 0; i < ops.size(); ++i) {
    for (std::size_t j = i + 1; j < ops.size(); ++j) {
      if (!overlaps(ops[i].support, ops[j].support)) continue;
      VertexSet frame = ops[i].support;
      frame.insert(frame.end(), ops[j].support.begin(), ops[j].support.end());
      std::sort(frame.begin(), frame.end());
      frame.erase(std::unique(frame.begin(), frame.end()), frame.end());
      const Matrix a = widen(ops[i], frame, lat.local_dim());
      const Matrix b = widen(ops[j], frame, lat.local_dim());
      const double scale = std::max(1.0, a.cwiseAbs().maxCoeff() * b.cwiseAbs().maxCoeff());
      if ((a * b - b * a).cwiseAbs().maxCoeff() > kCommuteTol * scale) {
        throw InvalidInput("operators on supports " + std::to_string(i) + " and " +
                           std::to_string(j) + " do not commute");
      }
    }
  }
}

LocalOperator random_q(const VertexSet& support, int local_dim, double min_eig, std::mt19937_64& rng) {
  if (!(min_eig > 0.0 && min_eig <= 1.0)) throw InvalidInput("random_q: min_eig must be in (0,1]");
  const auto dim = static_cast<Eigen::Index>(ipow(local_dim, static_cast<int>(support.size())));
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(min_eig, 1.0);
  Matrix z(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) z(i, j) = cplx(normal(rng), normal(rng));
  }
  const Matrix u = Eigen::HouseholderQR<Matrix>(z).householderQ();
  RealVector eig(dim);
  for (Eigen::Index i = 0; i < dim; ++i) eig(i) = uniform(rng);
  Matrix q = u * eig.cast<cplx>().asDiagonal() * u.adjoint();
  q = (q + q.adjoint()) / 2.0;
  return {support, std::move(q)};
}

ModelSpec make_model(Lattice lattice, std::vector<LocalOperator> q_ops) {
  if (q_ops.size() != lattice.supports().size()) {
    throw InvalidInput("need exactly one Q operator per interaction support");
  }
  double q0 = 1.0;
  for (std::size_t i = 0; i < q_ops.size(); ++i) {
    auto& q = q_ops[i];
    if (q.support != lattice.supports()[i]) {
      throw InvalidInput("Q operator " + std::to_string(i) + " is not on support " +
                         std::to_string(i));
    }
    q.validate(lattice.local_dim());
    if (!is_hermitian(q.matrix)) throw InvalidInput("Q operator is not Hermitian");
    const auto es = eig_hermitian(q.matrix);
    if (es.values(0) <= 0.0) throw InvalidInput("Q operator is not strictly positive");
    if (es.values(es.values.size() - 1) > 1.0 + kUpperTol) {
      throw InvalidInput("Q operator exceeds the identity (largest eigenvalue " +
                         std::to_string(es.values(es.values.size() - 1)) + ")");
    }
    q0 = std::min(q0, es.values(0));
  }
  check_commuting(lattice, q_ops);
  return ModelSpec{std::move(lattice), std::move(q_ops), q0, std::nullopt};
}

LocalOperator thermal_q(const LocalOperator& h, double beta) {
  const auto es = eig_hermitian(h.matrix);
  const double shift = es.values(0);
  Vector diag(es.values.size());
  for (Eigen::Index i = 0; i < diag.size(); ++i) diag(i) = std::exp(-0.5 * beta * (es.values(i) - shift));
  return {h.support, es.vectors * diag.asDiagonal() * es.vectors.adjoint()};
}

ThermalTerms normalize_interactions(const Lattice& lattice, std::vector<LocalOperator> h_ops, double beta) {
  if (beta < 0.0) throw InvalidInput("beta must be >= 0");
  if (h_ops.size() != lattice.supports().size()) {
    throw InvalidInput("need exactly one local Hamiltonian term per interaction support");
  }
  double max_norm = 0.0;
  for (std::size_t i = 0; i < h_ops.size(); ++i) {
    h_ops[i].validate(lattice.local_dim());
    if (h_ops[i].support != lattice.supports()[i]) {
      throw InvalidInput("h operator " + std::to_string(i) + " is not on support " +
                         std::to_string(i));
    }
    if (!is_hermitian(h_ops[i].matrix)) throw InvalidInput("h operator is not Hermitian");
    max_norm = std::max(max_norm, operator_norm(h_ops[i].matrix));
  }
  ThermalTerms terms;
  terms.h_scale = 1.0;
  if (max_norm >= 1.0) terms.h_scale = 0.999 / max_norm;
  terms.beta = beta / terms.h_scale;
  for (auto& h : h_ops) h.matrix *= terms.h_scale;
  terms.h_ops = std::move(h_ops);
  return terms;
}

ModelSpec make_thermal_model(Lattice lattice, std::vector<LocalOperator> h_ops, double beta) {
  ThermalTerms terms = normalize_interactions(lattice, std::move(h_ops), beta);
  check_commuting(lattice, terms.h_ops);
  std::vector<LocalOperator> q_ops;
  for (const auto& h : terms.h_ops) q_ops.push_back(thermal_q(h, terms.beta));
  ModelSpec spec = make_model(std::move(lattice), std::move(q_ops));
  spec.thermal = std::move(terms);
  return spec;
}

Vector entangled_pairs_state(const Lattice& lat) {
  const std::size_t dim = lat.hilbert_dim();
  const int n = lat.n_vertices();
  const int d = lat.local_dim();
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
  std::size_t count = 0;
  for (std::size_t idx = 0; idx < dim; ++idx) {
    const auto digits = digits_of(idx, n, d);
    const bool matched = std::all_of(lat.pairs().begin(), lat.pairs().end(), [&](const VertexPair& p) {
      return digits[static_cast<std::size_t>(p[0])] == digits[static_cast<std::size_t>(p[1])];
    });
    if (matched) {
      v(static_cast<Eigen::Index>(idx)) = 1.0;
      ++count;
    }
  }
  return v / std::sqrt(static_cast<double>(count));
}

Vector target_state(const Lattice& lat, std::span<const LocalOperator> q_ops) {
  Vector v = entangled_pairs_state(lat);
  for (const auto& q : q_ops) v = apply_local(q, lat, v);
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalError("target state has zero norm");
  return v / norm;
}

Vector target_state(const ModelSpec& spec) { return target_state(spec.lattice, spec.q_ops); }

Matrix reduced_density(const Vector& state, const Lattice& lat, std::span<const Vertex> keep) {
  const int n = lat.n_vertices();
  const int d = lat.local_dim();
  const std::size_t dim = lat.hilbert_dim();
  if (static_cast<std::size_t>(state.size()) != dim) throw InvalidInput("state dimension mismatch");
  std::vector<bool> kept(static_cast<std::size_t>(n), false);
  for (Vertex v : keep) {
    lat.check_vertex(v);
    kept[static_cast<std::size_t>(v)] = true;
  }
  const auto k_dim = static_cast<Eigen::Index>(ipow(d, static_cast<int>(keep.size())));
  const auto t_dim = static_cast<Eigen::Index>(dim) / k_dim;
  Matrix psi = Matrix::Zero(k_dim, t_dim);
  for (std::size_t idx = 0; idx < dim; ++idx) {
    const auto digits = digits_of(idx, n, d);
    Eigen::Index ki = 0;
    Eigen::Index ti = 0;
    for (int v = 0; v < n; ++v) {
      if (kept[static_cast<std::size_t>(v)]) {
        ki = ki * d + digits[static_cast<std::size_t>(v)];
      } else {
        ti = ti * d + digits[static_cast<std::size_t>(v)];
      }
    }
    psi(ki, ti) = state(static_cast<Eigen::Index>(idx));
  }
  return psi * psi.adjoint();
}

Matrix trace_ancillas(const Vector& state, const Lattice& lat) {
  if (!lat.has_ancillas()) throw InvalidInput("lattice has no ancilla vertices to trace out");
  const auto sys = lat.system_vertices();
  return reduced_density(state, lat, sys);
}

Matrix system_hamiltonian(const Lattice& lat, std::span<const LocalOperator> h_ops) {
  const auto sys = lat.system_vertices();
  const auto dim = static_cast<Eigen::Index>(ipow(lat.local_dim(), static_cast<int>(sys.size())));
  if (static_cast<std::size_t>(dim) > kMaxHilbertDim) throw InvalidInput("system too large");
  Matrix h = Matrix::Zero(dim, dim);
  for (const auto& term : h_ops) h += widen(term, sys, lat.local_dim());
  return h;
}

Matrix gibbs_density(const Lattice& lat, std::span<const LocalOperator> h_ops, double beta) {
  const Matrix h = system_hamiltonian(lat, h_ops);
  // shift by the ground energy for a stable exponential
  const auto es = eig_hermitian(h);
  Vector w(es.values.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = std::exp(-beta * (es.values(i) - es.values(0)));
  const Matrix rho = es.vectors * w.asDiagonal() * es.vectors.adjoint();
  return rho / rho.trace().real();
}

Vector purify_classical(const Vector& amplitudes, int n_sites, int local_dim) {
  const std::size_t dim = ipow(local_dim, n_sites);
  if (static_cast<std::size_t>(amplitudes.size()) != dim) {
    throw InvalidInput("purify_classical: amplitude vector has wrong dimension");
  }
  Vector out = Vector::Zero(static_cast<Eigen::Index>(dim * dim));
  for (std::size_t x = 0; x < dim; ++x) {
    const auto digits = digits_of(x, n_sites, local_dim);
    std::size_t idx = 0;
    for (int digit : digits) {
      idx = idx * static_cast<std::size_t>(local_dim) + static_cast<std::size_t>(digit);
      idx = idx * static_cast<std::size_t>(local_dim) + static_cast<std::size_t>(digit);
    }
    out(static_cast<Eigen::Index>(idx)) = amplitudes(static_cast<Eigen::Index>(x));
  }
  return out;
}

RealVector IsingModel::energies() const {
  if (n_sites < 1) throw InvalidInput("Ising model needs at least one site");
  if (!fields.empty() && static_cast<int>(fields.size()) != n_sites) {
    throw InvalidInput("Ising fields must list every site");
  }
  const std::size_t dim = ipow(2, n_sites);
  RealVector e = RealVector::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t x = 0; x < dim; ++x) {
    const auto digits = digits_of(x, n_sites, 2);
    auto z = [&](int i) { return digits.at(static_cast<std::size_t>(i)) == 0 ? 1.0 : -1.0; };
    double energy = 0.0;
    for (std::size_t i = 0; i < fields.size(); ++i) energy += fields[i] * z(static_cast<int>(i));
    for (const auto& [i, j, coupling] : couplings) {
      if (i < 0 || j < 0 || i >= n_sites || j >= n_sites || i == j) {
        throw InvalidInput("Ising coupling references an invalid site");
      }
      energy += coupling * z(i) * z(j);
    }
    e(static_cast<Eigen::Index>(x)) = energy;
  }
  return e;
}

GeneratorMatrix metropolis_generator(const RealVector& energies, int n_sites, int local_dim,
                                     double beta) {
  const std::size_t dim = ipow(local_dim, n_sites);
  if (static_cast<std::size_t>(energies.size()) != dim) {
    throw InvalidInput("energy table must cover all d^n configurations");
  }
  const auto n = static_cast<Eigen::Index>(dim);
  RealMatrix s = RealMatrix::Zero(n, n);
  for (std::size_t x = 0; x < dim; ++x) {
    const auto digits = digits_of(x, n_sites, local_dim);
    for (int site = 0; site < n_sites; ++site) {
      const std::size_t stride = ipow(local_dim, n_sites - 1 - site);
      const int cur = digits[static_cast<std::size_t>(site)];
      for (int val = 0; val < local_dim; ++val) {
        if (val == cur) continue;
        const std::size_t y = x + static_cast<std::size_t>(val - cur) * stride;
        const double delta = energies(static_cast<Eigen::Index>(y)) - energies(static_cast<Eigen::Index>(x));
        const double rate = std::min(1.0, std::exp(-beta * delta));
        s(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) += rate;
      }
    }
  }
  for (Eigen::Index x = 0; x < n; ++x) s(x, x) = -s.col(x).sum();
  return {std::move(s), beta, energies, n_sites, local_dim};
}

double detailed_balance_violation(const GeneratorMatrix& s) {
  const auto n = s.matrix.rows();
  const double e0 = s.energies.minCoeff();
  RealVector pi(n);
  for (Eigen::Index x = 0; x < n; ++x) pi(x) = std::exp(-s.beta * (s.energies(x) - e0));
  pi /= pi.sum();
  const double scale = std::max(1e-300, s.matrix.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (Eigen::Index x = 0; x < n; ++x) {
    for (Eigen::Index y = 0; y < n; ++y) {
      worst = std::max(worst, std::abs(s.matrix(x, y) * pi(y) - s.matrix(y, x) * pi(x)));
    }
  }
  return worst / scale;
}

GlobalOperator mc_hamiltonian(const GeneratorMatrix& s) {
  if (detailed_balance_violation(s) > 1e-12) {
    throw NumericalError("generator violates detailed balance");
  }
  const auto n = s.matrix.rows();
  // exp(βE_x/2) S_xy exp(-βE_y/2) = exp(β(E_x - E_y)/2) S_xy
  Matrix g(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    for (Eigen::Index y = 0; y < n; ++y) {
      g(x, y) = -std::exp(0.5 * s.beta * (s.energies(x) - s.energies(y))) * s.matrix(x, y);
    }
  }
  const bool herm = is_hermitian(g);
  if (!herm) throw NumericalError("similarity-transformed generator is not Hermitian");
  return {(g + g.adjoint()) / 2.0, true};
}

double stochastic_gap(const GeneratorMatrix& s) {
  Eigen::EigenSolver<RealMatrix> solver(s.matrix, false);
  std::vector<double> mags;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    mags.push_back(std::abs(solver.eigenvalues()(i)));
  }
  std::sort(mags.begin(), mags.end());
  return mags.size() > 1 ? mags[1] : 0.0;
}

Vector mc_ground_state(const RealVector& energies, double beta) {
  const double e0 = energies.minCoeff();
  Vector v(energies.size());
  for (Eigen::Index x = 0; x < v.size(); ++x) v(x) = std::exp(-0.5 * beta * (energies(x) - e0));
  return v / v.norm();
}

Matrix purified_mc_hamiltonian(const GeneratorMatrix& s, double penalty) {
  const Matrix g = mc_hamiltonian(s).matrix;
  const auto n = g.rows();
  const Eigen::Index doubled = n * n;
  Matrix iso = Matrix::Zero(doubled, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    Vector e = Vector::Zero(n);
    e(x) = 1.0;
    iso.col(x) = purify_classical(e, s.n_sites, s.local_dim);
  }
  const Matrix proj = iso * iso.adjoint();
  return iso * g * iso.adjoint() + penalty * (Matrix::Identity(doubled, doubled) - proj);
}

}  // namespace ffprep
