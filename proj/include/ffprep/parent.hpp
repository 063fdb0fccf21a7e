#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ffprep/linop.hpp"
#include "ffprep/model.hpp"
#include "ffprep/schedule.hpp"

namespace ffprep {

enum class Interpolation {
  linear,   // Q(u) = (1-u) I + u Q
  thermal,  // Q(u) = exp(-β u (h - e_min) / 2)
};

/// Sequential path through the Q operators of a model. Segment n (0-based)
/// switches on the support `ordering[n]` while earlier supports sit at Q(1)
/// and later ones at the identity.
struct PathSpec {
  ModelSpec model;
  std::vector<int> ordering;
  Schedule schedule = Schedule::linear();
  /// Localization control; only used through radius_from_chi.
  double chi = 1.0;
  /// Pairs μ with d(μ, λ_n) < radius are kept; radius >= diameter keeps all.
  int localization_radius = 0;
  Interpolation interpolation = Interpolation::linear;

  int n_segments() const { return static_cast<int>(ordering.size()); }
  const Lattice& lattice() const { return model.lattice; }
  void validate() const;
};

/// Path with identity ordering and full localization radius.
PathSpec make_path(ModelSpec model, Schedule schedule, Interpolation interpolation,
                   std::vector<int> ordering = {});

/// Q_λ(u) for u in [0,1] (no schedule applied).
LocalOperator interpolated_q(const ModelSpec& model, int support, double u,
                             Interpolation interpolation);

/// A_{n,m}(s): Q(1) for m < n, Q(schedule(s)) for m = n, identity for m > n,
/// where m indexes positions in the ordering.
LocalOperator path_A(const PathSpec& path, int n, int m, double s);

/// All A_{n,m}(s), re-indexed by support (entry λ is the operator on support λ).
std::vector<LocalOperator> path_q_set(const PathSpec& path, int n, double s);

/// Q set while the consecutive positions first..last are switched on together:
/// Q(1) before `first`, Q(schedule(s)) inside, identity after `last`.
std::vector<LocalOperator> block_q_set(const PathSpec& path, int first, int last, double s);

/// (∏_{λ∈Λ_μ} Q_λ^{-1}) P_μ (∏_{λ∈Λ_μ} Q_λ^{-1}) on the vertices of Λ_μ ∪ μ.
/// `q_by_support` holds one operator per lattice support.
LocalOperator parent_term_local(const Lattice& lat, int mu,
                                std::span<const LocalOperator> q_by_support);
GlobalOperator parent_term(const Lattice& lat, int mu, std::span<const LocalOperator> q_by_support);

/// Σ_μ G_μ.
GlobalOperator parent_hamiltonian(const Lattice& lat, std::span<const LocalOperator> q_by_support);
GlobalOperator parent_hamiltonian(const ModelSpec& model);

/// Local terms G_{n,μ}(s) for every pair μ.
OperatorSum sequential_terms(const PathSpec& path, int n, double s);
GlobalOperator sequential_hamiltonian(const PathSpec& path, int n, double s);

/// Pairs μ kept at the given radius around support `support`.
std::vector<int> localized_pairs(const Lattice& lat, int support, int radius);

OperatorSum localized_terms(const PathSpec& path, int n, double s, int radius);
GlobalOperator localized_hamiltonian(const PathSpec& path, int n, double s, int radius);

/// ceil(chi * log^{1+alpha}(N / eps)).
int radius_from_chi(double chi, double alpha, int n_terms, double eps);

struct SpectralReport {
  double ground_energy = 0.0;
  double gap = 0.0;
  Vector ground_state;
  double ff_residual = 0.0;
  bool degenerate = false;
};

inline constexpr double kDegenerateGap = 1e-9;

SpectralReport spectral_report(const GlobalOperator& g, const Vector& target);

/// Lowest two eigenvalues' difference.
double spectral_gap(const GlobalOperator& g);

struct GapRelaxationRow {
  double s = 0.0;
  double gap = 0.0;
  double margin = 0.0;  // gap - q0^2 * delta0
};

struct GapRelaxationReport {
  int segment = 0;
  double delta0 = 0.0;
  double q0 = 0.0;
  double gap_at_zero = 0.0;
  std::vector<GapRelaxationRow> rows;
  bool holds = true;
  std::optional<double> first_violation;
  double min_margin = 0.0;
};

/// Checks gap(G̃_n(s)) >= q0^2 * delta0 - tol on every s of the grid.
/// Throws InvalidInput when G̃_n(0) itself has a gap below delta0 - tol.
GapRelaxationReport verify_gap_relaxation(const PathSpec& path, int n, std::span<const double> s_grid,
                                          double delta0, double q0, double tol = 1e-9);

}  // namespace ffprep
