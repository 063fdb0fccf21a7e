#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ffprep/evolve.hpp"
#include "ffprep/lattice.hpp"
#include "ffprep/linop.hpp"
#include "ffprep/schedule.hpp"

namespace ffprep {

/// Sorted list of ground-set elements.
using SubsetKey = std::vector<int>;
template <class Value>
using SubsetMap = std::map<SubsetKey, Value>;

/// All subsets of `omega`, in binary-counter order of the element positions.
std::vector<SubsetKey> subsets_of(const SubsetKey& omega);

namespace detail {
template <class Value>
Value signed_subset_sum(const SubsetMap<Value>& f, const SubsetKey& omega, bool alternate) {
  if (omega.size() > 30) throw InvalidInput("Mobius transform: ground set too large");
  std::optional<Value> acc;
  for (const auto& theta : subsets_of(omega)) {
    const auto it = f.find(theta);
    if (it == f.end()) throw InvalidInput("Mobius transform: f is missing a subset");
    const bool negative = alternate && ((omega.size() - theta.size()) % 2 == 1);
    if (!acc) {
      acc = negative ? Value(-1.0 * it->second) : it->second;
    } else if (negative) {
      *acc = *acc - it->second;
    } else {
      *acc = *acc + it->second;
    }
  }
  return *acc;
}
}  // namespace detail

/// Σ_{Θ⊆Ω} f(Θ).
template <class Value>
Value mobius_hat(const SubsetMap<Value>& f, const SubsetKey& omega) {
  return detail::signed_subset_sum(f, omega, false);
}

/// Σ_{Θ⊆Ω} (-1)^{|Ω∖Θ|} f(Θ).
template <class Value>
Value mobius_check(const SubsetMap<Value>& f, const SubsetKey& omega) {
  return detail::signed_subset_sum(f, omega, true);
}

/// Validates one Hermitian h_λ per support with ||h_λ|| <= 1 (see
/// normalize_interactions for rescaling).
void check_interactions(const Lattice& lat, std::span<const LocalOperator> h_ops);

/// Vertices of Ω together with the pair μ.
VertexSet cluster_frame(const Lattice& lat, int anchor, std::span<const int> omega);

/// f_μ(Ω) = e^{βH_Ω/2} P_μ e^{-βH_Ω} P_μ e^{βH_Ω/2} on cluster_frame, where β
/// is the Gibbs inverse temperature; f_μ(Λ) is the non-local parent term.
LocalOperator cluster_f(const Lattice& lat, int anchor, std::span<const int> omega, double beta,
                        std::span<const LocalOperator> h_ops);
GlobalOperator cluster_f_global(const Lattice& lat, int anchor, std::span<const int> omega, double beta,
                                std::span<const LocalOperator> h_ops);

struct ClusterTerm {
  int anchor = 0;
  EdgeSet omega;  // `connected` holds the anchored-connectivity of Ω
  LocalOperator op;
  double beta = 0.0;
  double norm = 0.0;
};

/// Möbius check of f_μ over the subsets of Ω.
ClusterTerm cluster_term(const Lattice& lat, int anchor, std::span<const int> omega, double beta,
                         std::span<const LocalOperator> h_ops);

/// (e^{4β} - 1)^size.
double norm_lemma_bound(double beta, int size);

/// max over anchors μ and sizes M of log(#anchored connected Ω with |Ω| = M) / M.
double growth_constant(const Lattice& lat);

struct TruncationCertificate {
  int anchor = 0;
  int r = 0;
  double eta = 0.0;
  double y = 0.0;
  /// y^r / (1 - y); +inf when y >= 1.
  double bound = 0.0;
  std::optional<double> measured;
  bool valid = false;
};

struct TruncatedParent {
  /// G^r_μ per anchor: Σ over anchored connected Ω with |Ω| <= r (and Ω = ∅).
  std::vector<LocalOperator> terms;
  std::vector<TruncationCertificate> certificates;
  /// Every cluster term that entered the sum.
  std::vector<ClusterTerm> inventory;

  bool valid() const;
};

/// Builds G^r. With `measure`, compares each G^r_μ against the exact non-local
/// term (requires the frame of all supports plus μ to fit 2^12 states).
TruncatedParent truncated_parent(const Lattice& lat, double beta, int r, std::span<const LocalOperator> h_ops,
                                 bool measure = true);
GlobalOperator truncated_global(const Lattice& lat, const TruncatedParent& tp);

/// e^{βH/2} P_μ e^{-βH} P_μ e^{βH/2} on the support vertices plus μ.
LocalOperator exact_noncommuting_term(const Lattice& lat, int anchor, double beta,
                                      std::span<const LocalOperator> h_ops);
GlobalOperator exact_noncommuting_parent(const Lattice& lat, double beta, std::span<const LocalOperator> h_ops);

/// Normalized (e^{-βH/2} ⊗ I)⊗_μ|φ+>.
Vector purified_gibbs_state(const Lattice& lat, std::span<const LocalOperator> h_ops, double beta);

struct HighTempOptions {
  Schedule schedule = Schedule::gevrey(1.0);
  int steps = 2000;
  int gap_samples = 11;
  /// Run even when the truncation certificate is invalid (result uncertified).
  bool override_certificate = false;
};

/// Adiabatic run along G^r(β f(s)) from Σ P_μ to G^r(β), starting in ⊗|φ+>;
/// error and overlap are against the exact purified Gibbs state.
EvolutionResult high_temp_prepare(const Lattice& lat, double beta, int r, double tau,
                                  std::span<const LocalOperator> h_ops, const HighTempOptions& options = {});

struct NoncommutingGapRow {
  double beta = 0.0;
  double gap = 0.0;
  double ground_energy = 0.0;
  /// Smallest eigenvalue of G² - gap·G.
  double inequality_min = 0.0;
  bool holds = true;
};

std::vector<NoncommutingGapRow> verify_noncommuting_gap(const Lattice& lat, std::span<const LocalOperator> h_ops,
                                                        std::span<const double> beta_grid);

}  // namespace ffprep
