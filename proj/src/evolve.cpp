#include "ffprep/evolve.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "ffprep/model.hpp"

namespace ffprep {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
// Gauss-Legendre nodes on [0,1]
constexpr double kGauss1 = 0.5 - kSqrt3 / 6.0;
constexpr double kGauss2 = 0.5 + kSqrt3 / 6.0;
// above this dimension gaps are measured by Lanczos instead of dense eig
constexpr std::size_t kDenseGapDim = 256;
// largest dimension for which the sweep assembles dense paths
constexpr std::size_t kDenseBoundDim = 1024;

Matrix checked_sample(const DenseGenerator& h, double t, Eigen::Index dim) {
  Matrix m = h(t);
  if (m.rows() != dim || m.cols() != dim) throw InvalidInput("Hamiltonian sample has the wrong dimension");
  if (!m.allFinite()) throw NumericalError("Hamiltonian sample contains NaN or Inf");
  if (!is_hermitian(m)) throw InvalidInput("Hamiltonian sample is not Hermitian");
  return m;
}

Vector apply_exp(const Matrix& heff, const Vector& psi) {
  const auto es = eig_hermitian(heff);
  Vector phases(es.values.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) phases(i) = std::exp(cplx(0.0, -es.values(i)));
  return es.vectors * phases.cwiseProduct(es.vectors.adjoint() * psi);
}

void check_finite(const Vector& v) {
  if (!v.allFinite()) throw NumericalError("state vector contains NaN or Inf");
}

// exp(-i t T) e_0 for a real symmetric tridiagonal T.
Vector tridiag_exp_e0(const RealVector& alpha, const RealVector& beta, int m, double t) {
  RealMatrix tm = RealMatrix::Zero(m, m);
  for (int i = 0; i < m; ++i) tm(i, i) = alpha(i);
  for (int i = 0; i + 1 < m; ++i) tm(i, i + 1) = tm(i + 1, i) = beta(i);
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(tm);
  Vector coeff(m);
  for (int i = 0; i < m; ++i) coeff(i) = std::exp(cplx(0.0, -t * es.eigenvalues()(i))) * es.eigenvectors()(0, i);
  return es.eigenvectors().cast<cplx>() * coeff;
}

bool krylov_step(const std::function<Vector(const Vector&)>& a, const Vector& v, double t, double tol,
                 int max_krylov, Vector& out) {
  const double nrm = v.norm();
  if (nrm == 0.0 || t == 0.0) {
    out = v;
    return true;
  }
  const auto n = v.size();
  const int cap = static_cast<int>(std::min<Eigen::Index>(max_krylov, n));
  Matrix basis(n, cap);
  RealVector alpha(cap);
  RealVector beta(cap);
  basis.col(0) = v / nrm;
  for (int j = 0; j < cap; ++j) {
    Vector w = a(basis.col(j));
    double diag = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      const Vector c = basis.leftCols(j + 1).adjoint() * w;
      w -= basis.leftCols(j + 1) * c;
      diag += c(j).real();
    }
    alpha(j) = diag;
    const double b = w.norm();
    const int m = j + 1;
    const Vector y = tridiag_exp_e0(alpha, beta, m, t);
    const double scale = std::max(1.0, alpha.head(m).cwiseAbs().maxCoeff());
    const bool invariant = b <= 1e-14 * scale;
    if (invariant || m == n || b * std::abs(y(m - 1)) < tol) {
      out = nrm * (basis.leftCols(m) * y);
      return true;
    }
    if (m < cap) {
      beta(j) = b;
      basis.col(m) = w / b;
    }
  }
  return false;
}

Vector expm_krylov_rec(const std::function<Vector(const Vector&)>& a, const Vector& v, double t, double tol,
                       int max_krylov, int depth) {
  Vector out;
  if (krylov_step(a, v, t, tol, max_krylov, out)) return out;
  if (depth >= 24) throw NumericalError("Krylov exponential did not converge");
  const Vector half = expm_krylov_rec(a, v, t / 2.0, tol / 2.0, max_krylov, depth + 1);
  return expm_krylov_rec(a, half, t / 2.0, tol / 2.0, max_krylov, depth + 1);
}

OperatorSum terms_for(const Lattice& lat, const std::vector<LocalOperator>& qs, std::span<const int> pairs) {
  std::vector<LocalOperator> terms;
  terms.reserve(pairs.size());
  for (int mu : pairs) terms.push_back(parent_term_local(lat, mu, qs));
  return OperatorSum(lat, std::move(terms));
}

std::vector<int> all_pairs(const Lattice& lat) {
  std::vector<int> out(static_cast<std::size_t>(lat.n_pairs()));
  for (int i = 0; i < lat.n_pairs(); ++i) out[static_cast<std::size_t>(i)] = i;
  return out;
}

double measure_gap(const Lattice& lat, const OperatorSum& full, const Vector& ground) {
  if (full.dim() <= kDenseGapDim) return spectral_gap(full.to_global(lat));
  return restricted_gap(full, ground);
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2) return 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

double clamp01(double s) { return std::clamp(s, 0.0, 1.0); }

// Vector-valued derivative on a uniform grid: 4th-order central in the bulk,
// 2nd-order near and at the ends.
std::vector<Vector> grid_derivative(const std::vector<Vector>& x, double h) {
  const std::size_t n = x.size();
  std::vector<Vector> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= 2 && i + 2 < n) {
      d[i] = (-x[i + 2] + 8.0 * x[i + 1] - 8.0 * x[i - 1] + x[i - 2]) / (12.0 * h);
    } else if (i >= 1 && i + 1 < n) {
      d[i] = (x[i + 1] - x[i - 1]) / (2.0 * h);
    } else if (i == 0) {
      d[i] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * h);
    } else {
      d[i] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * h);
    }
  }
  return d;
}

std::vector<cplx> cumulative_trapezoid(const std::vector<cplx>& f, double h) {
  std::vector<cplx> out(f.size(), cplx(0.0, 0.0));
  for (std::size_t i = 1; i < f.size(); ++i) out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
  return out;
}

}  // namespace

Vector integrate(const DenseGenerator& h, const Vector& psi0, double t_final, int steps, Stepper stepper) {
  if (steps < 1) throw InvalidInput("integrate: steps must be >= 1");
  if (!(t_final >= 0.0)) throw InvalidInput("integrate: t_final must be >= 0");
  check_finite(psi0);
  if (t_final == 0.0) return psi0;
  const double dt = t_final / steps;
  const Eigen::Index dim = psi0.size();
  Vector psi = psi0;
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    Matrix heff;
    if (stepper == Stepper::magnus4) {
      const Matrix h1 = checked_sample(h, t + kGauss1 * dt, dim);
      const Matrix h2 = checked_sample(h, t + kGauss2 * dt, dim);
      heff = 0.5 * dt * (h1 + h2) - cplx(0.0, kSqrt3 / 12.0 * dt * dt) * (h2 * h1 - h1 * h2);
    } else {
      heff = dt * checked_sample(h, t + 0.5 * dt, dim);
    }
    psi = apply_exp(heff, psi);
    check_finite(psi);
  }
  return psi;
}

Vector expm_krylov(const std::function<Vector(const Vector&)>& a, const Vector& v, double t, double tol,
                   int max_krylov) {
  if (max_krylov < 2) throw InvalidInput("expm_krylov: max_krylov must be >= 2");
  return expm_krylov_rec(a, v, t, tol, max_krylov, 0);
}

Vector integrate_terms(const TermGenerator& h, const Vector& psi0, double t_final, int steps) {
  if (steps < 1) throw InvalidInput("integrate_terms: steps must be >= 1");
  if (!(t_final >= 0.0)) throw InvalidInput("integrate_terms: t_final must be >= 0");
  check_finite(psi0);
  if (t_final == 0.0) return psi0;
  const double dt = t_final / steps;
  const cplx corr(0.0, kSqrt3 / 12.0 * dt * dt);
  Vector psi = psi0;
  for (int k = 0; k < steps; ++k) {
    const double t = k * dt;
    const OperatorSum h1 = h(t + kGauss1 * dt);
    const OperatorSum h2 = h(t + kGauss2 * dt);
    if (h1.empty() && h2.empty()) continue;
    auto heff = [&](const Vector& v) -> Vector {
      const Vector a1 = h1.apply(v);
      const Vector a2 = h2.apply(v);
      return 0.5 * dt * (a1 + a2) - corr * (h2.apply(a1) - h1.apply(a2));
    };
    psi = expm_krylov(heff, psi, 1.0);
    check_finite(psi);
  }
  return psi;
}

double adiabatic_error(const Vector& psi, const Vector& phi) {
  if (psi.size() != phi.size()) throw InvalidInput("adiabatic_error: dimension mismatch");
  const double overlap = std::abs(phi.dot(psi));
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * overlap));
}

double restricted_gap(const OperatorSum& g, const Vector& ground, int max_krylov) {
  const auto n = ground.size();
  if (n < 2) return 0.0;
  const Vector u = ground.normalized();
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(normal(rng), normal(rng));
  v -= u * u.dot(v);
  v.normalize();

  const int cap = static_cast<int>(std::min<Eigen::Index>(max_krylov, n - 1));
  Matrix basis(n, cap);
  RealVector alpha(cap);
  RealVector beta(cap);
  basis.col(0) = v;
  double last = std::numeric_limits<double>::infinity();
  int stable = 0;
  for (int j = 0; j < cap; ++j) {
    Vector w = g.apply(basis.col(j));
    w -= u * u.dot(w);
    double diag = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      const Vector c = basis.leftCols(j + 1).adjoint() * w;
      w -= basis.leftCols(j + 1) * c;
      w -= u * u.dot(w);
      diag += c(j).real();
    }
    alpha(j) = diag;
    const int m = j + 1;
    RealMatrix tm = RealMatrix::Zero(m, m);
    for (int i = 0; i < m; ++i) tm(i, i) = alpha(i);
    for (int i = 0; i + 1 < m; ++i) tm(i, i + 1) = tm(i + 1, i) = beta(i);
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(tm);
    const double lowest = es.eigenvalues()(0);
    const double b = w.norm();
    const double residual = b * std::abs(es.eigenvectors()(m - 1, 0));
    stable = std::abs(lowest - last) < 1e-12 * std::max(1.0, std::abs(lowest)) ? stable + 1 : 0;
    last = lowest;
    if (residual < 1e-10 || stable >= 3 || b < 1e-14 || m == cap) return lowest;
    beta(j) = b;
    basis.col(m) = w / b;
  }
  return last;
}

std::vector<VertexSet> segment_supports(const PathSpec& path, int radius) {
  std::vector<VertexSet> out;
  for (int n = 0; n < path.n_segments(); ++n) out.push_back(localized_terms(path, n, 0.5, radius).support());
  return out;
}

namespace {

EvolutionResult run_blocks(const PathSpec& path, const std::vector<std::vector<int>>& blocks, double tau,
                           int radius, const RunOptions& options) {
  path.validate();
  if (!(tau >= 0.0)) throw InvalidInput("runtime must be >= 0");
  if (options.steps_per_segment < 1) throw InvalidInput("steps per segment must be >= 1");
  if (options.gap_samples < 0) throw InvalidInput("gap samples must be >= 0");
  const Lattice& lat = path.lattice();
  const auto everything = all_pairs(lat);

  EvolutionResult result;
  Vector psi = entangled_pairs_state(lat);
  for (const auto& block : blocks) {
    const int first = block.front();
    const int last = block.back();

    std::vector<int> pairs;
    std::vector<VertexSet> member_support;
    for (int n : block) {
      const auto mine = localized_pairs(lat, path.ordering[static_cast<std::size_t>(n)], radius);
      VertexSet sup;
      for (int mu : mine) {
        const auto term = parent_term_local(lat, mu, path_q_set(path, n, 0.0));
        sup.insert(sup.end(), term.support.begin(), term.support.end());
      }
      std::sort(sup.begin(), sup.end());
      sup.erase(std::unique(sup.begin(), sup.end()), sup.end());
      for (const auto& other : member_support) {
        std::vector<Vertex> common;
        std::set_intersection(sup.begin(), sup.end(), other.begin(), other.end(), std::back_inserter(common));
        if (!common.empty()) throw InvalidInput("grouped segments have overlapping supports");
      }
      member_support.push_back(std::move(sup));
      pairs.insert(pairs.end(), mine.begin(), mine.end());
    }

    TermGenerator gen = [&](double t) {
      const double s = tau > 0.0 ? clamp01(t / tau) : 0.0;
      return terms_for(lat, block_q_set(path, first, last, s), pairs);
    };

    SegmentDiagnostics diag;
    diag.positions = block;
    diag.tau = tau;
    diag.steps = options.steps_per_segment;
    const double norm_before = psi.norm();
    psi = integrate_terms(gen, psi, tau, options.steps_per_segment);
    diag.norm_drift = std::abs(psi.norm() - norm_before);

    diag.min_gap = std::numeric_limits<double>::quiet_NaN();
    if (options.gap_samples > 0) {
      double gap = std::numeric_limits<double>::infinity();
      for (int k = 0; k < options.gap_samples; ++k) {
        const double s = options.gap_samples == 1 ? 0.5 : static_cast<double>(k) / (options.gap_samples - 1);
        const auto qs = block_q_set(path, first, last, s);
        gap = std::min(gap, measure_gap(lat, terms_for(lat, qs, everything), target_state(lat, qs)));
      }
      diag.min_gap = gap;
      diag.gap_checked = true;
      diag.degenerate = gap < kDegenerateGap;
    }
    result.norm_drift = std::max(result.norm_drift, diag.norm_drift);
    result.certified = result.certified && diag.gap_checked && !diag.degenerate;
    result.segments.push_back(std::move(diag));
  }

  const Vector target = target_state(path.model);
  result.overlap = target.dot(psi);
  result.adiabatic_error = adiabatic_error(psi, target);
  result.final_state = std::move(psi);
  return result;
}

}  // namespace

EvolutionResult run_sequential(const PathSpec& path, double tau_n, int radius, const RunOptions& options) {
  std::vector<std::vector<int>> blocks;
  for (int n = 0; n < path.n_segments(); ++n) blocks.push_back({n});
  return run_blocks(path, blocks, tau_n, radius, options);
}

EvolutionResult run_grouped(const PathSpec& path, const std::vector<std::vector<int>>& groups, double tau,
                            int radius, const RunOptions& options) {
  int next = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw InvalidInput("empty group");
    for (int n : g) {
      if (n != next) throw InvalidInput("groups must list the ordering positions consecutively");
      ++next;
    }
  }
  if (next != path.n_segments()) throw InvalidInput("groups do not cover every segment");
  return run_blocks(path, groups, tau, radius, options);
}

LocalizationTable compare_localization(const PathSpec& path, int n, double tau, std::span<const int> radii,
                                       int steps) {
  path.validate();
  if (n < 0 || n >= path.n_segments()) throw InvalidInput("segment index out of range");
  if (!std::is_sorted(radii.begin(), radii.end())) throw InvalidInput("radii must be ascending");
  const Lattice& lat = path.lattice();
  const Vector psi0 = target_state(lat, path_q_set(path, n, 0.0));

  auto evolve_at = [&](int radius) {
    TermGenerator gen = [&](double t) {
      const double s = tau > 0.0 ? clamp01(t / tau) : 0.0;
      return localized_terms(path, n, s, radius);
    };
    return integrate_terms(gen, psi0, tau, steps);
  };

  const int diameter = lat.diameter();
  const Vector full = evolve_at(diameter + 1);
  LocalizationTable table;
  table.segment = n;
  table.tau = tau;
  std::vector<double> xs;
  std::vector<double> ys;
  for (int r : radii) {
    const double dist = (evolve_at(r) - full).norm();
    if (!table.rows.empty() && dist > table.rows.back().distance + 2e-10) table.monotone = false;
    table.rows.push_back({r, dist});
    if (dist > 1e-13 && r < diameter) {
      xs.push_back(r);
      ys.push_back(std::log(dist));
    }
  }
  table.log_slope = least_squares_slope(xs, ys);
  return table;
}

double theorem1_bound(const AdiabaticBound& b) {
  if (!(b.K > 0.0 && b.c > 0.0 && b.alpha > 0.0 && b.Delta > 0.0 && b.tau > 0.0)) {
    throw InvalidInput("theorem1_bound: all constants must be positive");
  }
  constexpr double e = std::numbers::e;
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  const double prefactor = 8.0 * b.c * e * (b.K / b.Delta) * std::pow(4.0 * pi2 / 3.0, 3);
  const double inner = b.tau * std::pow(b.Delta, 3) / (4.0 * e * b.c * b.c * b.K * b.K) *
                       std::pow(3.0 / (4.0 * pi2), 5);
  return prefactor * std::exp(-std::pow(inner, 1.0 / (1.0 + b.alpha)));
}

GevreyEstimate estimate_gevrey_constants(const DenseGenerator& g, double alpha, int grid, double h) {
  if (!(alpha > 0.0) || grid < 2 || !(h > 0.0 && h < 0.1)) {
    throw InvalidInput("estimate_gevrey_constants: invalid arguments");
  }
  GevreyEstimate est;
  for (int i = 0; i < grid; ++i) {
    const double s = 2.0 * h + (1.0 - 4.0 * h) * i / (grid - 1);
    for (int k = 1; k <= 4; ++k) {
      Matrix acc;
      double binom = 1.0;
      for (int j = 0; j <= k; ++j) {
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        const Matrix sample = g(s + (0.5 * k - j) * h);
        if (j == 0) acc = Matrix::Zero(sample.rows(), sample.cols());
        acc += sign * binom * sample;
        binom = binom * (k - j) / (j + 1);
      }
      const double norm = operator_norm(acc) / std::pow(h, k);
      auto& slot = est.derivative_norms[static_cast<std::size_t>(k - 1)];
      slot = std::max(slot, norm);
    }
  }
  std::array<double, 4> a{};
  for (int k = 1; k <= 4; ++k) {
    a[static_cast<std::size_t>(k - 1)] =
        est.derivative_norms[static_cast<std::size_t>(k - 1)] * (k + 1) * (k + 1) / std::pow(std::tgamma(k + 1.0), 1.0 + alpha);
  }
  if (a[0] <= 0.0) return est;
  double c = 1e-12;
  for (int k = 2; k <= 4; ++k) c = std::max(c, std::pow(a[static_cast<std::size_t>(k - 1)] / a[0], 1.0 / (k - 1)));
  double k_const = 0.0;
  for (int k = 1; k <= 4; ++k) k_const = std::max(k_const, a[static_cast<std::size_t>(k - 1)] / std::pow(c, k));
  est.c = c;
  est.K = k_const;
  return est;
}

namespace {

// Sum of the segment-n terms that depend on s, on the union of their vertices.
// Every other term is constant, so this has the same s-derivatives as G̃_n(s).
DenseGenerator varying_part(const PathSpec& path, int n) {
  const Lattice& lat = path.lattice();
  const int lambda = path.ordering[static_cast<std::size_t>(n)];
  std::vector<int> pairs;
  for (int mu = 0; mu < lat.n_pairs(); ++mu) {
    const auto& touching = lat.supports_touching(mu);
    if (std::find(touching.begin(), touching.end(), lambda) != touching.end()) pairs.push_back(mu);
  }
  return [&path, n, pairs](double s) {
    const auto qs = path_q_set(path, n, clamp01(s));
    std::vector<LocalOperator> terms;
    VertexSet frame;
    for (int mu : pairs) {
      terms.push_back(parent_term_local(path.lattice(), mu, qs));
      VertexSet merged;
      std::set_union(frame.begin(), frame.end(), terms.back().support.begin(), terms.back().support.end(),
                     std::back_inserter(merged));
      frame = std::move(merged);
    }
    const auto dim = static_cast<Eigen::Index>(ipow(path.lattice().local_dim(), static_cast<int>(frame.size())));
    Matrix out = Matrix::Zero(dim, dim);
    for (const auto& t : terms) out += widen(t, frame, path.lattice().local_dim());
    return out;
  };
}

}  // namespace

SweepTable error_vs_runtime_sweep(const PathSpec& path, std::span<const double> taus, int radius,
                                  double steps_per_time, int min_steps, int threads) {
  path.validate();
  if (taus.empty()) throw InvalidInput("sweep needs at least one runtime");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0.0)) throw InvalidInput("sweep runtimes must be > 0");
    if (i > 0 && !(taus[i] > taus[i - 1])) throw InvalidInput("sweep runtimes must be ascending");
  }
  const Lattice& lat = path.lattice();
  const bool gevrey = path.schedule.kind() == ScheduleKind::gevrey;
  const double alpha = gevrey ? path.schedule.alpha() : 1.0;
  const bool dense = static_cast<double>(lat.hilbert_dim()) <= static_cast<double>(kDenseBoundDim);

  SweepTable table;
  if (dense) {
    for (int n = 0; n < path.n_segments(); ++n) {
      table.constants.push_back(estimate_gevrey_constants(varying_part(path, n), alpha));
      double gap = std::numeric_limits<double>::infinity();
      for (int k = 0; k <= 20; ++k) {
        const double s = k / 20.0;
        const Vector ground = target_state(lat, path_q_set(path, n, s));
        gap = std::min(gap, measure_gap(lat, sequential_terms(path, n, s), ground));
      }
      table.segment_gaps.push_back(gap);
    }
  }

  std::vector<EvolutionResult> runs(taus.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < taus.size(); i = next++) {
      RunOptions opt;
      opt.steps_per_segment = std::max(min_steps, static_cast<int>(std::ceil(steps_per_time * taus[i])));
      opt.gap_samples = dense ? 0 : 3;
      runs[i] = run_sequential(path, taus[i], radius, opt);
    }
  };
  const int workers = std::clamp(threads, 1, static_cast<int>(taus.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < taus.size(); ++i) {
    SweepRow row;
    row.tau = taus[i];
    row.error = runs[i].adiabatic_error;
    row.norm_drift = runs[i].norm_drift;
    row.reliable = row.error > kNoiseFloor;
    if (dense) {
      row.min_gap = *std::min_element(table.segment_gaps.begin(), table.segment_gaps.end());
      row.certified = row.min_gap >= kDegenerateGap;
      row.bound_estimate = 0.0;
      if (!gevrey) row.bound_estimate = std::numeric_limits<double>::quiet_NaN();
      for (std::size_t n = 0; n < table.constants.size() && gevrey; ++n) {
        const auto& c = table.constants[n];
        if (c.K > 0.0 && table.segment_gaps[n] >= kDegenerateGap) {
          row.bound_estimate += theorem1_bound({c.K, c.c, alpha, table.segment_gaps[n], taus[i]});
        } else if (c.K > 0.0) {
          row.bound_estimate = std::numeric_limits<double>::quiet_NaN();
        }
      }
    } else {
      row.min_gap = std::numeric_limits<double>::infinity();
      for (const auto& seg : runs[i].segments) row.min_gap = std::min(row.min_gap, seg.min_gap);
      row.certified = runs[i].certified;
      row.bound_estimate = std::numeric_limits<double>::quiet_NaN();
    }
    if (!table.rows.empty() && row.error > table.rows.back().error + kNoiseFloor) table.monotone = false;
    table.rows.push_back(row);
  }

  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = table.rows.size() / 2; i < table.rows.size(); ++i) {
    if (!table.rows[i].reliable) continue;
    xs.push_back(std::pow(table.rows[i].tau, 1.0 / (1.0 + alpha)));
    ys.push_back(std::log(table.rows[i].error));
  }
  table.decay_slope = least_squares_slope(xs, ys);
  return table;
}

std::vector<ExpansionTerm> adiabatic_expansion(const DenseGenerator& g, std::span<const double> s_grid, int M,
                                               std::optional<double> kernel_tol, double min_gap) {
  if (M < 0 || M > 3) throw InvalidInput("expansion order M must be in [0,3]");
  const std::size_t n = s_grid.size();
  if (n < 5) throw InvalidInput("expansion grid needs at least 5 points");
  const double h = (s_grid.back() - s_grid.front()) / static_cast<double>(n - 1);
  if (!(h > 0.0)) throw InvalidInput("expansion grid must be increasing");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(s_grid[i] - (s_grid.front() + h * static_cast<double>(i))) > 1e-9 * std::max(1.0, h)) {
      throw InvalidInput("expansion grid must be uniform");
    }
  }

  std::vector<Vector> phi(n);
  std::vector<Matrix> pinv(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix gi = g(s_grid[i]);
    const auto es = eig_hermitian(gi);
    if (es.values.size() < 2) throw InvalidInput("expansion needs dimension >= 2");
    if (es.values(1) - es.values(0) < min_gap) {
      throw CertificationRefused("gap below threshold at s = " + std::to_string(s_grid[i]));
    }
    if (std::abs(es.values(0)) > 1e-8 * std::max(1.0, es.values.cwiseAbs().maxCoeff())) {
      throw InvalidInput("expansion requires ground energy 0");
    }
    phi[i] = es.vectors.col(0);
    if (i > 0) {
      const cplx ov = phi[i - 1].dot(phi[i]);
      phi[i] *= std::conj(ov) / std::abs(ov);
    }
    pinv[i] = pseudo_inverse(gi, kernel_tol);
  }
  // project out the residual Berry connection: enforce <φ|φ̇> = 0
  {
    const auto d = grid_derivative(phi, h);
    std::vector<cplx> conn(n);
    for (std::size_t i = 0; i < n; ++i) conn[i] = cplx(phi[i].dot(d[i]).imag(), 0.0);
    const auto gamma = cumulative_trapezoid(conn, h);
    for (std::size_t i = 0; i < n; ++i) phi[i] *= std::exp(cplx(0.0, -gamma[i].real()));
  }
  const auto phi_dot = grid_derivative(phi, h);

  std::vector<ExpansionTerm> terms;
  terms.push_back({0, phi, std::vector<cplx>(n, cplx(1.0, 0.0))});
  for (int j = 1; j <= M; ++j) {
    const auto prev_dot = grid_derivative(terms.back().phi, h);
    std::vector<cplx> integrand(n);
    for (std::size_t i = 0; i < n; ++i) integrand[i] = phi_dot[i].dot(pinv[i] * prev_dot[i]);
    auto varphi = cumulative_trapezoid(integrand, h);
    for (auto& v : varphi) v *= cplx(0.0, 1.0);
    std::vector<Vector> phij(n);
    for (std::size_t i = 0; i < n; ++i) phij[i] = varphi[i] * phi[i] + cplx(0.0, 1.0) * (pinv[i] * prev_dot[i]);
    terms.push_back({j, std::move(phij), std::move(varphi)});
  }
  return terms;
}

Vector expansion_state(const std::vector<ExpansionTerm>& terms, double eps, std::size_t index) {
  if (terms.empty()) throw InvalidInput("no expansion terms");
  Vector out = terms.front().phi.at(index);
  double power = 1.0;
  for (std::size_t j = 1; j < terms.size(); ++j) {
    power *= eps;
    out += power * terms[j].phi.at(index);
  }
  return out;
}

Vector evolve_dense_path(const DenseGenerator& g, const Vector& psi0, double tau, int steps) {
  if (!(tau >= 0.0)) throw InvalidInput("runtime must be >= 0");
  if (tau == 0.0) return psi0;
  return integrate([&](double t) { return g(clamp01(t / tau)); }, psi0, tau, steps);
}

}  // namespace ffprep
