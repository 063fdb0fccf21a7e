#pragma once

#include <optional>
#include <random>
#include <span>
#include <tuple>
#include <vector>

#include "ffprep/lattice.hpp"
#include "ffprep/linop.hpp"
#include "ffprep/types.hpp"

namespace ffprep {

/// Local Hamiltonian data behind a thermal model. `h_ops` are rescaled so
/// that every ||h_λ|| < 1; `beta` is adjusted inversely so beta*h is unchanged.
struct ThermalTerms {
  double beta = 0.0;
  std::vector<LocalOperator> h_ops;
  /// Factor applied to the user's h_λ (1 when no rescaling was needed).
  double h_scale = 1.0;
};

/// Target-state description: one positive operator Q_λ per lattice support,
/// index-aligned with `lattice.supports()`.
struct ModelSpec {
  Lattice lattice;
  std::vector<LocalOperator> q_ops;
  /// Largest q0 with Q_λ >= q0 * I for every λ.
  double q0 = 1.0;
  std::optional<ThermalTerms> thermal;

  bool is_thermal() const { return thermal.has_value(); }
};

/// Random Hermitian operator on `support` with eigenvalues uniform in
/// [min_eig, 1] and a Haar-like random eigenbasis.
LocalOperator random_q(const VertexSet& support, int local_dim, double min_eig, std::mt19937_64& rng);

/// Validates I >= Q_λ > 0 and pairwise commutation; computes q0.
ModelSpec make_model(Lattice lattice, std::vector<LocalOperator> q_ops);

/// Validates one Hermitian h_λ per support and rescales so every ||h_λ|| < 1,
/// dividing beta by the same factor. Commutation is not required.
ThermalTerms normalize_interactions(const Lattice& lattice, std::vector<LocalOperator> h_ops, double beta);

/// Q_λ = exp(-beta (h_λ - e_min(h_λ)) / 2). The shift by the smallest
/// eigenvalue keeps Q_λ <= I without changing the normalized target state.
ModelSpec make_thermal_model(Lattice lattice, std::vector<LocalOperator> h_ops, double beta);

LocalOperator thermal_q(const LocalOperator& h, double beta);

/// Throws InvalidInput when two operators on overlapping supports fail to
/// commute (entrywise tolerance 1e-10 relative to their scale).
void check_commuting(const Lattice& lat, std::span<const LocalOperator> ops);

/// Normalized ⊗_μ |φ+>_μ.
Vector entangled_pairs_state(const Lattice& lat);

/// Normalized ∏ Q ⊗_μ |φ+>_μ for an arbitrary commuting positive set.
Vector target_state(const Lattice& lat, std::span<const LocalOperator> q_ops);
Vector target_state(const ModelSpec& spec);

/// Reduced density matrix on `keep` (sorted vertices), basis in `keep` order.
Matrix reduced_density(const Vector& state, const Lattice& lat, std::span<const Vertex> keep);

/// Trace out every ancilla vertex. Throws InvalidInput when the lattice has none.
Matrix trace_ancillas(const Vector& state, const Lattice& lat);

/// Σ_λ h_λ on the system vertices (system-vertex order).
Matrix system_hamiltonian(const Lattice& lat, std::span<const LocalOperator> h_ops);

/// exp(-beta H) / Z on the system vertices, by dense exponentiation.
Matrix gibbs_density(const Lattice& lat, std::span<const LocalOperator> h_ops, double beta);

/// Maps Σ_x c_x |x> to Σ_x c_x |x x> with sites interleaved as (s0, a0, s1, a1, ...).
Vector purify_classical(const Vector& amplitudes, int n_sites, int local_dim);

/// Classical Ising energy E(x) = Σ h_i z_i + Σ J_ij z_i z_j with z = +1 for
/// digit 0 and -1 for digit 1.
struct IsingModel {
  int n_sites = 1;
  std::vector<double> fields;
  std::vector<std::tuple<int, int, double>> couplings;

  RealVector energies() const;
};

/// Continuous-time single-site-update Metropolis generator. Column convention:
/// matrix(y, x) is the rate x -> y, so columns sum to zero and dp/dt = S p.
struct GeneratorMatrix {
  RealMatrix matrix;
  double beta = 0.0;
  RealVector energies;
  int n_sites = 1;
  int local_dim = 2;
};

/// rate(x -> y) = min(1, exp(-beta (E_y - E_x))) for configurations that
/// differ at exactly one site.
GeneratorMatrix metropolis_generator(const RealVector& energies, int n_sites, int local_dim,
                                     double beta);

/// Largest violation |S_xy π_y - S_yx π_x| relative to max |S| with π ∝ exp(-βE).
double detailed_balance_violation(const GeneratorMatrix& s);

/// G = -exp(βH/2) S exp(-βH/2). Throws NumericalError on broken detailed balance.
GlobalOperator mc_hamiltonian(const GeneratorMatrix& s);

/// Second-smallest eigenvalue magnitude of -S.
double stochastic_gap(const GeneratorMatrix& s);

/// Normalized exp(-βH/2)|+>^{⊗n}.
Vector mc_ground_state(const RealVector& energies, double beta);

/// V G V^† + penalty (I - V V^†) on the doubled space, where V|x> = |x x>.
/// Its spectrum on the range of V equals the spectrum of G.
Matrix purified_mc_hamiltonian(const GeneratorMatrix& s, double penalty);

}  // namespace ffprep
