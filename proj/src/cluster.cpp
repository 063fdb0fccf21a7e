#include "ffprep/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "ffprep/model.hpp"
#include "ffprep/parent.hpp"

namespace ffprep {

namespace {

// largest frame (in states) on which exact non-local terms are formed
constexpr std::size_t kMaxExactFrameDim = std::size_t{1} << 12;

std::vector<int> all_supports(const Lattice& lat) {
  std::vector<int> out(static_cast<std::size_t>(lat.n_supports()));
  for (int i = 0; i < lat.n_supports(); ++i) out[static_cast<std::size_t>(i)] = i;
  return out;
}

void check_anchor(const Lattice& lat, int anchor) {
  if (anchor < 0 || anchor >= lat.n_pairs()) throw InvalidInput("anchor pair out of range");
}

SubsetKey canonical(std::span<const int> omega, const Lattice& lat) {
  SubsetKey key(omega.begin(), omega.end());
  std::sort(key.begin(), key.end());
  if (std::adjacent_find(key.begin(), key.end()) != key.end()) throw InvalidInput("Ω has repeated supports");
  for (int l : key) {
    if (l < 0 || l >= lat.n_supports()) throw InvalidInput("Ω references an unknown support");
  }
  return key;
}

Matrix widen_to(const LocalOperator& op, const VertexSet& frame, int d) {
  if (op.support == frame) return op.matrix;
  return widen(op, frame, d);
}

// Check-transform of f_μ over the subsets of `omega`, with f memoized per anchor.
LocalOperator checked_term(const Lattice& lat, int anchor, const SubsetKey& omega, double beta,
                           std::span<const LocalOperator> h_ops, SubsetMap<LocalOperator>& memo) {
  const int d = lat.local_dim();
  const VertexSet frame = cluster_frame(lat, anchor, omega);
  SubsetMap<Matrix> values;
  for (const auto& theta : subsets_of(omega)) {
    auto it = memo.find(theta);
    if (it == memo.end()) it = memo.emplace(theta, cluster_f(lat, anchor, theta, beta, h_ops)).first;
    values.emplace(theta, widen_to(it->second, frame, d));
  }
  return {frame, mobius_check(values, omega)};
}

}  // namespace

std::vector<SubsetKey> subsets_of(const SubsetKey& omega) {
  if (omega.size() > 30) throw InvalidInput("subsets_of: ground set too large");
  const std::uint64_t count = std::uint64_t{1} << omega.size();
  std::vector<SubsetKey> out;
  out.reserve(count);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    SubsetKey s;
    for (std::size_t i = 0; i < omega.size(); ++i) {
      if (mask & (std::uint64_t{1} << i)) s.push_back(omega[i]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void check_interactions(const Lattice& lat, std::span<const LocalOperator> h_ops) {
  if (static_cast<int>(h_ops.size()) != lat.n_supports()) {
    throw InvalidInput("need exactly one local Hamiltonian term per interaction support");
  }
  for (std::size_t i = 0; i < h_ops.size(); ++i) {
    h_ops[i].validate(lat.local_dim());
    if (h_ops[i].support != lat.supports()[i]) throw InvalidInput("h operator placed on the wrong support");
    if (!is_hermitian(h_ops[i].matrix)) throw InvalidInput("h operator is not Hermitian");
    if (operator_norm(h_ops[i].matrix) > 1.0 + 1e-12) {
      throw InvalidInput("h operator norm exceeds 1; normalize the interactions first");
    }
  }
}

VertexSet cluster_frame(const Lattice& lat, int anchor, std::span<const int> omega) {
  check_anchor(lat, anchor);
  VertexSet frame = vertices_of(lat, omega);
  const auto& pair = lat.pairs()[static_cast<std::size_t>(anchor)];
  frame.insert(frame.end(), pair.begin(), pair.end());
  std::sort(frame.begin(), frame.end());
  frame.erase(std::unique(frame.begin(), frame.end()), frame.end());
  return frame;
}

LocalOperator cluster_f(const Lattice& lat, int anchor, std::span<const int> omega, double beta,
                        std::span<const LocalOperator> h_ops) {
  if (!(beta >= 0.0)) throw InvalidInput("beta must be >= 0");
  const SubsetKey key = canonical(omega, lat);
  const VertexSet frame = cluster_frame(lat, anchor, key);
  const int d = lat.local_dim();
  const auto dim = static_cast<Eigen::Index>(ipow(d, static_cast<int>(frame.size())));
  const auto& pair = lat.pairs()[static_cast<std::size_t>(anchor)];
  const Matrix p = widen({VertexSet{pair[0], pair[1]}, pair_projector(d)}, frame, d);
  if (key.empty() || beta == 0.0) return {frame, p};
  Matrix h = Matrix::Zero(dim, dim);
  for (int l : key) h += widen(h_ops[static_cast<std::size_t>(l)], frame, d);
  const Matrix half = herm_exp(h, cplx(beta / 2.0, 0.0));
  const Matrix full = herm_exp(h, cplx(-beta, 0.0));
  Matrix f = half * p * full * p * half;
  f = (f + f.adjoint()) / 2.0;
  return {frame, std::move(f)};
}

GlobalOperator cluster_f_global(const Lattice& lat, int anchor, std::span<const int> omega, double beta,
                                std::span<const LocalOperator> h_ops) {
  return embed(cluster_f(lat, anchor, omega, beta, h_ops), lat);
}

ClusterTerm cluster_term(const Lattice& lat, int anchor, std::span<const int> omega, double beta,
                         std::span<const LocalOperator> h_ops) {
  check_interactions(lat, h_ops);
  const SubsetKey key = canonical(omega, lat);
  SubsetMap<LocalOperator> memo;
  ClusterTerm term;
  term.anchor = anchor;
  term.omega = {key, key.empty() || anchored_connected(lat, anchor, key)};
  term.op = checked_term(lat, anchor, key, beta, h_ops, memo);
  term.beta = beta;
  term.norm = operator_norm(term.op.matrix);
  return term;
}

double norm_lemma_bound(double beta, int size) { return std::pow(std::expm1(4.0 * beta), size); }

double growth_constant(const Lattice& lat) {
  double eta = 0.0;
  for (int mu = 0; mu < lat.n_pairs(); ++mu) {
    std::vector<int> counts(static_cast<std::size_t>(lat.n_supports()) + 1, 0);
    for (const auto& es : connected_edge_sets(lat, mu, lat.n_supports())) ++counts[static_cast<std::size_t>(es.size())];
    for (int m = 1; m <= lat.n_supports(); ++m) {
      const int c = counts[static_cast<std::size_t>(m)];
      if (c > 0) eta = std::max(eta, std::log(static_cast<double>(c)) / m);
    }
  }
  return eta;
}

bool TruncatedParent::valid() const {
  return std::all_of(certificates.begin(), certificates.end(), [](const auto& c) { return c.valid; });
}

TruncatedParent truncated_parent(const Lattice& lat, double beta, int r, std::span<const LocalOperator> h_ops,
                                 bool measure) {
  check_interactions(lat, h_ops);
  if (!(beta >= 0.0)) throw InvalidInput("beta must be >= 0");
  if (r < 0) throw InvalidInput("truncation size r must be >= 0");
  const int d = lat.local_dim();
  const double eta = growth_constant(lat);
  const double y = std::exp(eta) * std::expm1(4.0 * beta);

  TruncatedParent out;
  for (int mu = 0; mu < lat.n_pairs(); ++mu) {
    SubsetMap<LocalOperator> memo;
    std::vector<LocalOperator> pieces;
    pieces.push_back(cluster_f(lat, mu, {}, beta, h_ops));
    for (const auto& es : connected_edge_sets(lat, mu, r)) {
      LocalOperator op = checked_term(lat, mu, es.members, beta, h_ops, memo);
      ClusterTerm term{mu, {es.members, true}, op, beta, operator_norm(op.matrix)};
      pieces.push_back(std::move(op));
      out.inventory.push_back(std::move(term));
    }
    VertexSet frame;
    for (const auto& p : pieces) frame.insert(frame.end(), p.support.begin(), p.support.end());
    std::sort(frame.begin(), frame.end());
    frame.erase(std::unique(frame.begin(), frame.end()), frame.end());
    const auto dim = static_cast<Eigen::Index>(ipow(d, static_cast<int>(frame.size())));
    Matrix g = Matrix::Zero(dim, dim);
    for (const auto& p : pieces) g += widen_to(p, frame, d);
    g = (g + g.adjoint()) / 2.0;

    TruncationCertificate cert;
    cert.anchor = mu;
    cert.r = r;
    cert.eta = eta;
    cert.y = y;
    cert.valid = y < 1.0;
    cert.bound = cert.valid ? std::pow(y, r) / (1.0 - y) : std::numeric_limits<double>::infinity();
    if (measure) {
      const LocalOperator exact = exact_noncommuting_term(lat, mu, beta, h_ops);
      VertexSet both = exact.support;
      both.insert(both.end(), frame.begin(), frame.end());
      std::sort(both.begin(), both.end());
      both.erase(std::unique(both.begin(), both.end()), both.end());
      cert.measured = operator_norm(widen_to(exact, both, d) - widen({frame, g}, both, d));
    }
    out.certificates.push_back(cert);
    out.terms.push_back({std::move(frame), std::move(g)});
  }
  return out;
}

GlobalOperator truncated_global(const Lattice& lat, const TruncatedParent& tp) {
  return OperatorSum(lat, tp.terms).to_global(lat);
}

LocalOperator exact_noncommuting_term(const Lattice& lat, int anchor, double beta,
                                      std::span<const LocalOperator> h_ops) {
  check_interactions(lat, h_ops);
  const auto everything = all_supports(lat);
  const VertexSet frame = cluster_frame(lat, anchor, everything);
  if (static_cast<double>(ipow(lat.local_dim(), static_cast<int>(frame.size()))) >
      static_cast<double>(kMaxExactFrameDim)) {
    throw InvalidInput("exact non-local term exceeds the dimension guard");
  }
  return cluster_f(lat, anchor, everything, beta, h_ops);
}

GlobalOperator exact_noncommuting_parent(const Lattice& lat, double beta, std::span<const LocalOperator> h_ops) {
  lat.hilbert_dim();
  std::vector<LocalOperator> terms;
  for (int mu = 0; mu < lat.n_pairs(); ++mu) terms.push_back(exact_noncommuting_term(lat, mu, beta, h_ops));
  return OperatorSum(lat, std::move(terms)).to_global(lat);
}

Vector purified_gibbs_state(const Lattice& lat, std::span<const LocalOperator> h_ops, double beta) {
  if (!(beta >= 0.0)) throw InvalidInput("beta must be >= 0");
  if (static_cast<int>(h_ops.size()) != lat.n_supports()) {
    throw InvalidInput("need exactly one local Hamiltonian term per interaction support");
  }
  const Vector pairs = entangled_pairs_state(lat);
  if (h_ops.empty() || beta == 0.0) return pairs;
  const VertexSet frame = vertices_of(lat, all_supports(lat));
  const int d = lat.local_dim();
  const auto dim = static_cast<Eigen::Index>(ipow(d, static_cast<int>(frame.size())));
  Matrix h = Matrix::Zero(dim, dim);
  for (const auto& op : h_ops) h += widen(op, frame, d);
  Vector psi = apply_local({frame, herm_exp(h, cplx(-beta / 2.0, 0.0))}, lat, pairs);
  const double nrm = psi.norm();
  if (!(nrm > 0.0)) throw NumericalError("purified Gibbs state has zero norm");
  return psi / nrm;
}

EvolutionResult high_temp_prepare(const Lattice& lat, double beta, int r, double tau,
                                  std::span<const LocalOperator> h_ops, const HighTempOptions& options) {
  check_interactions(lat, h_ops);
  if (!(beta >= 0.0) || !(tau >= 0.0)) throw InvalidInput("beta and tau must be >= 0");
  if (options.steps < 1 || options.gap_samples < 0) throw InvalidInput("invalid high-temperature run options");
  const bool valid = truncated_parent(lat, beta, r, h_ops, false).valid();
  if (!valid && !options.override_certificate) {
    throw CertificationRefused("truncation certificate invalid (y >= 1) at this beta");
  }
  auto g_at = [&](double s) {
    const double b = beta * options.schedule(std::clamp(s, 0.0, 1.0));
    return truncated_global(lat, truncated_parent(lat, b, r, h_ops, false)).matrix;
  };

  EvolutionResult result;
  SegmentDiagnostics diag;
  diag.positions = {0};
  diag.tau = tau;
  diag.steps = options.steps;
  const Vector psi0 = entangled_pairs_state(lat);
  Vector psi = evolve_dense_path(g_at, psi0, tau, options.steps);
  diag.norm_drift = std::abs(psi.norm() - 1.0);
  diag.min_gap = std::numeric_limits<double>::quiet_NaN();
  if (options.gap_samples > 0) {
    double gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < options.gap_samples; ++k) {
      const double s = options.gap_samples == 1 ? 0.5 : static_cast<double>(k) / (options.gap_samples - 1);
      gap = std::min(gap, spectral_gap({g_at(s), true}));
    }
    diag.min_gap = gap;
    diag.gap_checked = true;
    diag.degenerate = gap < kDegenerateGap;
  }
  result.norm_drift = diag.norm_drift;
  result.certified = valid && diag.gap_checked && !diag.degenerate;
  result.segments.push_back(diag);

  const Vector target = purified_gibbs_state(lat, h_ops, beta);
  result.overlap = target.dot(psi);
  result.adiabatic_error = adiabatic_error(psi, target);
  result.final_state = std::move(psi);
  return result;
}

std::vector<NoncommutingGapRow> verify_noncommuting_gap(const Lattice& lat, std::span<const LocalOperator> h_ops,
                                                        std::span<const double> beta_grid) {
  std::vector<NoncommutingGapRow> rows;
  for (double beta : beta_grid) {
    const GlobalOperator g = exact_noncommuting_parent(lat, beta, h_ops);
    const auto es = eig_hermitian(g);
    NoncommutingGapRow row;
    row.beta = beta;
    row.ground_energy = es.values(0);
    row.gap = es.values.size() > 1 ? es.values(1) - es.values(0) : 0.0;
    const Matrix ineq = g.matrix * g.matrix - row.gap * g.matrix;
    row.inequality_min = eig_hermitian(Matrix((ineq + ineq.adjoint()) / 2.0)).values(0);
    row.holds = row.inequality_min >= -1e-9;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ffprep
