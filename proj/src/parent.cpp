#include "ffprep/parent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ffprep {

void PathSpec::validate() const {
  const int n = model.lattice.n_supports();
  if (static_cast<int>(ordering.size()) != n) throw InvalidInput("ordering must list every support");
  std::vector<int> sorted = ordering;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < n; ++i) {
    if (sorted[static_cast<std::size_t>(i)] != i) throw InvalidInput("ordering is not a permutation");
  }
  if (!(chi > 0.0)) throw InvalidInput("chi must be > 0");
  if (localization_radius < 0) throw InvalidInput("localization radius must be >= 0");
  if (interpolation == Interpolation::thermal && !model.is_thermal()) {
    throw InvalidInput("thermal interpolation requires a thermal model");
  }
}

PathSpec make_path(ModelSpec model, Schedule schedule, Interpolation interpolation,
                   std::vector<int> ordering) {
  if (ordering.empty()) {
    ordering.resize(static_cast<std::size_t>(model.lattice.n_supports()));
    std::iota(ordering.begin(), ordering.end(), 0);
  }
  const int radius = model.lattice.diameter() + 1;
  PathSpec path{std::move(model), std::move(ordering), std::move(schedule), 1.0, radius, interpolation};
  path.validate();
  return path;
}

LocalOperator interpolated_q(const ModelSpec& model, int support, double u,
                             Interpolation interpolation) {
  if (support < 0 || support >= model.lattice.n_supports()) {
    throw InvalidInput("support index out of range");
  }
  const auto& q = model.q_ops[static_cast<std::size_t>(support)];
  if (u == 0.0) return {q.support, Matrix::Identity(q.matrix.rows(), q.matrix.cols())};
  if (interpolation == Interpolation::thermal) {
    if (!model.is_thermal()) throw InvalidInput("thermal interpolation requires a thermal model");
    return thermal_q(model.thermal->h_ops[static_cast<std::size_t>(support)], model.thermal->beta * u);
  }
  if (u == 1.0) return q;
  return {q.support, (1.0 - u) * Matrix::Identity(q.matrix.rows(), q.matrix.cols()) + u * q.matrix};
}

LocalOperator path_A(const PathSpec& path, int n, int m, double s) {
  const int count = path.n_segments();
  if (n < 0 || n >= count || m < 0 || m >= count) throw InvalidInput("path index out of range");
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidInput("path parameter s outside [0,1]");
  const int support = path.ordering[static_cast<std::size_t>(m)];
  if (m < n) return interpolated_q(path.model, support, 1.0, path.interpolation);
  if (m > n) return interpolated_q(path.model, support, 0.0, path.interpolation);
  return interpolated_q(path.model, support, path.schedule(s), path.interpolation);
}

std::vector<LocalOperator> path_q_set(const PathSpec& path, int n, double s) {
  std::vector<LocalOperator> out(static_cast<std::size_t>(path.n_segments()));
  for (int m = 0; m < path.n_segments(); ++m) {
    out[static_cast<std::size_t>(path.ordering[static_cast<std::size_t>(m)])] = path_A(path, n, m, s);
  }
  return out;
}

std::vector<LocalOperator> block_q_set(const PathSpec& path, int first, int last, double s) {
  const int count = path.n_segments();
  if (first < 0 || last >= count || first > last) throw InvalidInput("block range out of range");
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidInput("path parameter s outside [0,1]");
  const double u = path.schedule(s);
  std::vector<LocalOperator> out(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) {
    const int support = path.ordering[static_cast<std::size_t>(m)];
    const double um = m < first ? 1.0 : (m > last ? 0.0 : u);
    out[static_cast<std::size_t>(support)] = interpolated_q(path.model, support, um, path.interpolation);
  }
  return out;
}

LocalOperator parent_term_local(const Lattice& lat, int mu,
                                std::span<const LocalOperator> q_by_support) {
  if (mu < 0 || mu >= lat.n_pairs()) throw InvalidInput("pair index out of range");
  if (static_cast<int>(q_by_support.size()) != lat.n_supports()) {
    throw InvalidInput("need one Q operator per support");
  }
  const auto& touching = lat.supports_touching(mu);
  VertexSet frame = vertices_of(lat, touching);
  const auto& pair = lat.pairs()[static_cast<std::size_t>(mu)];
  frame.insert(frame.end(), pair.begin(), pair.end());
  std::sort(frame.begin(), frame.end());
  frame.erase(std::unique(frame.begin(), frame.end()), frame.end());

  const int d = lat.local_dim();
  const auto dim = static_cast<Eigen::Index>(ipow(d, static_cast<int>(frame.size())));
  Matrix inv = Matrix::Identity(dim, dim);
  for (int lam : touching) {
    const auto& q = q_by_support[static_cast<std::size_t>(lam)];
    if (q.support != lat.supports()[static_cast<std::size_t>(lam)]) {
      throw InvalidInput("Q operator placed on the wrong support");
    }
    inv = inv * widen({q.support, inverse_pd(q.matrix)}, frame, d);
  }
  const Matrix proj = widen({VertexSet{pair[0], pair[1]}, pair_projector(d)}, frame, d);
  Matrix g = inv * proj * inv;
  g = (g + g.adjoint()) / 2.0;
  return {std::move(frame), std::move(g)};
}

GlobalOperator parent_term(const Lattice& lat, int mu, std::span<const LocalOperator> q_by_support) {
  return embed(parent_term_local(lat, mu, q_by_support), lat);
}

GlobalOperator parent_hamiltonian(const Lattice& lat, std::span<const LocalOperator> q_by_support) {
  std::vector<LocalOperator> terms;
  for (int mu = 0; mu < lat.n_pairs(); ++mu) terms.push_back(parent_term_local(lat, mu, q_by_support));
  return OperatorSum(lat, std::move(terms)).to_global(lat);
}

GlobalOperator parent_hamiltonian(const ModelSpec& model) {
  return parent_hamiltonian(model.lattice, model.q_ops);
}

OperatorSum sequential_terms(const PathSpec& path, int n, double s) {
  const auto qs = path_q_set(path, n, s);
  const auto& lat = path.lattice();
  std::vector<LocalOperator> terms;
  for (int mu = 0; mu < lat.n_pairs(); ++mu) terms.push_back(parent_term_local(lat, mu, qs));
  return OperatorSum(lat, std::move(terms));
}

GlobalOperator sequential_hamiltonian(const PathSpec& path, int n, double s) {
  return sequential_terms(path, n, s).to_global(path.lattice());
}

std::vector<int> localized_pairs(const Lattice& lat, int support, int radius) {
  if (radius < 0) throw InvalidInput("radius must be >= 0");
  const auto& lam = lat.supports().at(static_cast<std::size_t>(support));
  std::vector<int> out;
  for (int mu = 0; mu < lat.n_pairs(); ++mu) {
    const auto& pair = lat.pairs()[static_cast<std::size_t>(mu)];
    if (radius >= lat.diameter() && radius > 0) {
      out.push_back(mu);
    } else if (lat.set_distance(pair, lam) < radius) {
      out.push_back(mu);
    }
  }
  return out;
}

OperatorSum localized_terms(const PathSpec& path, int n, double s, int radius) {
  if (n < 0 || n >= path.n_segments()) throw InvalidInput("segment index out of range");
  const auto qs = path_q_set(path, n, s);
  const auto& lat = path.lattice();
  std::vector<LocalOperator> terms;
  for (int mu : localized_pairs(lat, path.ordering[static_cast<std::size_t>(n)], radius)) {
    terms.push_back(parent_term_local(lat, mu, qs));
  }
  return OperatorSum(lat, std::move(terms));
}

GlobalOperator localized_hamiltonian(const PathSpec& path, int n, double s, int radius) {
  return localized_terms(path, n, s, radius).to_global(path.lattice());
}

int radius_from_chi(double chi, double alpha, int n_terms, double eps) {
  if (!(chi > 0.0) || !(alpha > 0.0) || n_terms < 1 || !(eps > 0.0)) {
    throw InvalidInput("radius_from_chi: invalid arguments");
  }
  const double l = std::log(static_cast<double>(n_terms) / eps);
  if (l <= 0.0) return 0;
  return static_cast<int>(std::ceil(chi * std::pow(l, 1.0 + alpha)));
}

double spectral_gap(const GlobalOperator& g) {
  const auto es = eig_hermitian(g);
  if (es.values.size() < 2) return 0.0;
  return es.values(1) - es.values(0);
}

SpectralReport spectral_report(const GlobalOperator& g, const Vector& target) {
  const auto es = eig_hermitian(g);
  SpectralReport r;
  r.ground_energy = es.values(0);
  r.gap = es.values.size() > 1 ? es.values(1) - es.values(0) : 0.0;
  r.ground_state = es.vectors.col(0);
  r.ff_residual = (g.matrix * target).norm();
  r.degenerate = r.gap < kDegenerateGap;
  return r;
}

GapRelaxationReport verify_gap_relaxation(const PathSpec& path, int n, std::span<const double> s_grid,
                                          double delta0, double q0, double tol) {
  GapRelaxationReport rep;
  rep.segment = n;
  rep.delta0 = delta0;
  rep.q0 = q0;
  rep.gap_at_zero = spectral_gap(sequential_hamiltonian(path, n, 0.0));
  if (rep.gap_at_zero < delta0 - tol) {
    throw InvalidInput("G_n(0) has gap " + std::to_string(rep.gap_at_zero) + " below delta0");
  }
  const double bound = q0 * q0 * delta0;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (double s : s_grid) {
    const double gap = spectral_gap(sequential_hamiltonian(path, n, s));
    const double margin = gap - bound;
    rep.rows.push_back({s, gap, margin});
    rep.min_margin = std::min(rep.min_margin, margin);
    if (margin < -tol && rep.holds) {
      rep.holds = false;
      rep.first_violation = s;
    }
  }
  return rep;
}

}  // namespace ffprep
