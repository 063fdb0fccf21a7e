#pragma once

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ffprep/linop.hpp"
#include "ffprep/parent.hpp"

namespace ffprep {

/// Dense Hamiltonian sample H(t).
using DenseGenerator = std::function<Matrix(double)>;
/// Matrix-free Hamiltonian sample H(t), as a sum of local terms.
using TermGenerator = std::function<OperatorSum(double)>;

enum class Stepper {
  magnus4,   // two Gauss points with the commutator correction; order 4
  midpoint,  // exp(-i h H(t + h/2)); order 2
};

/// Propagates i dψ/dt = H(t) ψ from t = 0 to t_final with `steps` equal steps.
/// Every step applies an exact exponential, so the scheme is unitary.
/// Throws InvalidInput on a non-Hermitian sample, NumericalError on NaN.
Vector integrate(const DenseGenerator& h, const Vector& psi0, double t_final, int steps,
                 Stepper stepper = Stepper::magnus4);

/// exp(-i t A) v by Lanczos with full reorthogonalization. The step is split
/// when `max_krylov` vectors do not reach the tolerance.
Vector expm_krylov(const std::function<Vector(const Vector&)>& a, const Vector& v, double t,
                   double tol = 1e-13, int max_krylov = 40);

/// Matrix-free Magnus-4 propagation with Krylov exponentials.
Vector integrate_terms(const TermGenerator& h, const Vector& psi0, double t_final, int steps);

/// sqrt(2 - 2 |<φ|ψ>|), i.e. min over θ of ||ψ - e^{iθ} φ|| for unit vectors.
double adiabatic_error(const Vector& psi, const Vector& phi);

/// Smallest eigenvalue of `g` on the orthogonal complement of `ground`, by
/// Lanczos. Equals the spectral gap when `ground` is a zero-energy ground state.
double restricted_gap(const OperatorSum& g, const Vector& ground, int max_krylov = 300);

struct SegmentDiagnostics {
  std::vector<int> positions;  // ordering positions switched on in this segment
  double tau = 0.0;
  int steps = 0;
  /// Smallest gap of the full G̃ over the sampled s; NaN when not sampled.
  double min_gap = 0.0;
  bool gap_checked = false;
  bool degenerate = false;
  double norm_drift = 0.0;
};

struct EvolutionResult {
  Vector final_state;
  double adiabatic_error = 0.0;
  cplx overlap{0.0, 0.0};
  std::vector<SegmentDiagnostics> segments;
  double norm_drift = 0.0;
  /// False when a degenerate gap was seen or no gap could be checked.
  bool certified = true;
};

struct RunOptions {
  int steps_per_segment = 200;
  /// s-samples per segment at which the full G̃ gap is computed (0 disables).
  int gap_samples = 3;
};

/// Segment n evolves under the localized G_n(s) at the given radius for time
/// tau_n, starting from ⊗|φ+>. Gaps are always measured on the full G̃_n(s).
EvolutionResult run_sequential(const PathSpec& path, double tau_n, int radius,
                               const RunOptions& options = {});

/// Supports touched by each segment's localized Hamiltonian, in ordering order.
std::vector<VertexSet> segment_supports(const PathSpec& path, int radius);

/// Each group (consecutive ordering positions) evolves at once under the sum of
/// its members' localized Hamiltonians. Throws InvalidInput when the groups do
/// not cover the ordering in order or when member supports overlap.
EvolutionResult run_grouped(const PathSpec& path, const std::vector<std::vector<int>>& groups,
                            double tau, int radius, const RunOptions& options = {});

struct LocalizationRow {
  int radius = 0;
  double distance = 0.0;
};

struct LocalizationTable {
  int segment = 0;
  double tau = 0.0;
  std::vector<LocalizationRow> rows;
  bool monotone = true;
  /// Least-squares slope of log(distance) against radius over rows with a
  /// distance above 1e-13 and radius below the diameter; 0 when undefined.
  double log_slope = 0.0;
};

/// ||ψ̃(τ) - ψ(τ)|| between evolution under G̃_n and under G_n at each radius.
LocalizationTable compare_localization(const PathSpec& path, int n, double tau,
                                       std::span<const int> radii, int steps);

struct AdiabaticBound {
  double K = 1.0;
  double c = 1.0;
  double alpha = 1.0;
  double Delta = 1.0;
  double tau = 1.0;
};

/// 8ce(K/Δ)(4π²/3)³ exp{-(τΔ³/(4ec²K²) (3/(4π²))⁵)^{1/(1+α)}}.
double theorem1_bound(const AdiabaticBound& b);

struct GevreyEstimate {
  double K = 0.0;
  double c = 0.0;
  /// max_s ||G^{(k)}(s)|| for k = 1..4 (index k-1).
  std::array<double, 4> derivative_norms{};
};

/// Estimates K and c with ||G^{(k)}|| <= K c^k (k!)^{1+α} / (k+1)^2 for
/// k = 1..4 from central differences on an s-grid. An estimate, not a bound.
GevreyEstimate estimate_gevrey_constants(const DenseGenerator& g, double alpha, int grid = 101,
                                         double h = 2e-3);

struct SweepRow {
  double tau = 0.0;
  double error = 0.0;
  double bound_estimate = 0.0;
  double min_gap = 0.0;
  double norm_drift = 0.0;
  bool certified = true;
  /// False when the error is below the 1e-9 integrator noise floor.
  bool reliable = true;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  /// Per-segment constants behind bound_estimate (estimates, not certified).
  std::vector<GevreyEstimate> constants;
  std::vector<double> segment_gaps;
  bool monotone = true;
  /// Slope of log(error) against τ^{1/(1+α)} over the reliable second half.
  double decay_slope = 0.0;
};

inline constexpr double kNoiseFloor = 1e-9;

/// Runs run_sequential for each τ (per segment) with steps = ceil(steps_per_time * τ),
/// at least `min_steps`. Independent runs use up to `threads` workers.
/// bound_estimate sums the per-segment bound with estimated K, c and the dense
/// minimum gap; it is NaN for non-Gevrey schedules or lattices above 1024 states.
SweepTable error_vs_runtime_sweep(const PathSpec& path, std::span<const double> taus, int radius,
                                  double steps_per_time = 40.0, int min_steps = 200,
                                  int threads = 1);

struct ExpansionTerm {
  int j = 0;
  std::vector<Vector> phi;   // φ_j(s) on the grid
  std::vector<cplx> varphi;  // scalar φ_j(s) on the grid
};

/// Adiabatic expansion terms j = 0..M on a uniform grid for a dense path G(s)
/// with zero ground energy. φ_0 is the gauge-fixed ground state. Throws
/// CertificationRefused when the gap drops below `min_gap` on the grid.
std::vector<ExpansionTerm> adiabatic_expansion(const DenseGenerator& g, std::span<const double> s_grid,
                                               int M, std::optional<double> kernel_tol = std::nullopt,
                                               double min_gap = 1e-6);

/// Σ_{j=0}^{M} ε^j φ_j at grid index `index` (M = terms.size() - 1).
Vector expansion_state(const std::vector<ExpansionTerm>& terms, double eps, std::size_t index);

/// Evolution of i ε dψ/ds = G(s) ψ on [0,1], i.e. τ = 1/ε.
Vector evolve_dense_path(const DenseGenerator& g, const Vector& psi0, double tau, int steps);

}  // namespace ffprep
