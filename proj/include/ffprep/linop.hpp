#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ffprep/lattice.hpp"
#include "ffprep/types.hpp"

namespace ffprep {

/// Dense operator acting on the tensor product of the vertices in `support`
/// (sorted). Basis order is lexicographic in the support order with the last
/// vertex varying fastest.
struct LocalOperator {
  VertexSet support;
  Matrix matrix;

  /// Throws InvalidInput unless matrix is d^|support| square and support sorted.
  void validate(int local_dim) const;
};

/// Dense operator on the full lattice Hilbert space (same basis convention,
/// over all vertices in lattice order).
struct GlobalOperator {
  Matrix matrix;
  bool hermitian = false;

  Eigen::Index dim() const { return matrix.rows(); }
};

struct EigenSystem {
  RealVector values;  // ascending
  Matrix vectors;     // columns
};

std::size_t ipow(int base, int exp);

Matrix kron(const Matrix& a, const Matrix& b);

/// Product state Σ_i |ii> on a pair (unnormalized), dimension d^2.
Vector phi_plus(int local_dim);

/// Projector onto the complement of |φ+> on a pair.
Matrix pair_projector(int local_dim);

/// Tensor product of single-qubit Paulis, e.g. "ZZ", "XI". Qubits only.
Matrix pauli_string(std::string_view labels);

/// Re-express `op` on the larger sorted support `target` (identity elsewhere).
Matrix widen(const LocalOperator& op, std::span<const Vertex> target, int local_dim);

/// Tensor with identity on the complement, in lattice vertex order.
GlobalOperator embed(const LocalOperator& op, const Lattice& lat);

/// Matrix-free application of a local operator to a state on the full lattice.
Vector apply_local(const LocalOperator& op, const Lattice& lat, const Vector& state);

/// Gather/scatter tables that let a local matrix act on a global state vector.
class SupportIndex {
 public:
  SupportIndex(std::span<const Vertex> support, int n_vertices, int local_dim);

  /// out += M * in on the support (M is k x k, k = d^|support|).
  void apply_add(const Matrix& m, const Vector& in, Vector& out) const;

 private:
  std::vector<std::size_t> bases_;    // global offset of each complement configuration
  std::vector<std::size_t> offsets_;  // global offset of each local configuration
};

/// Sum of local operators on one lattice; keeps gather tables per term so the
/// sum can act on vectors without forming a dense matrix.
class OperatorSum {
 public:
  OperatorSum() = default;
  OperatorSum(const Lattice& lat, std::vector<LocalOperator> terms);

  const std::vector<LocalOperator>& terms() const { return terms_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return terms_.empty(); }

  /// Sorted union of the term supports.
  VertexSet support() const;

  Vector apply(const Vector& v) const;
  GlobalOperator to_global(const Lattice& lat) const;

 private:
  std::vector<LocalOperator> terms_;
  std::vector<SupportIndex> index_;
  std::size_t dim_ = 0;
};

bool is_hermitian(const Matrix& m, double tol = 1e-10);

/// Eigenvalues ascending with orthonormal eigenvectors. Rejects non-Hermitian input.
EigenSystem eig_hermitian(const Matrix& m);
EigenSystem eig_hermitian(const GlobalOperator& op);

/// exp(scalar * op) for Hermitian op via eigendecomposition.
Matrix herm_exp(const Matrix& op, cplx scalar);
GlobalOperator herm_exp(const GlobalOperator& op, cplx scalar);

/// Inverse of a positive-definite Hermitian matrix through its eigenvalues.
Matrix inverse_pd(const Matrix& op);

/// Moore-Penrose inverse of a PSD Hermitian matrix. Eigenvalues below
/// `kernel_tol` (default 1e-10 * ||op||) are treated as kernel; eigenvalues
/// below -kernel_tol throw NumericalError.
Matrix pseudo_inverse(const Matrix& op, std::optional<double> kernel_tol = std::nullopt);
GlobalOperator pseudo_inverse(const GlobalOperator& op,
                              std::optional<double> kernel_tol = std::nullopt);

/// Largest singular value, from the eigenvalues of A^† A.
double operator_norm(const Matrix& m);
/// Sum of singular values.
double trace_norm(const Matrix& m);

/// Row-major, re/im interleaved: {"rows": r, "cols": c, "data": [re, im, ...]}.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace ffprep
