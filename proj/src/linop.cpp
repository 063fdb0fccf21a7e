#include "ffprep/linop.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ffprep {

namespace {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

std::vector<std::size_t> slot_strides(int n_slots, int local_dim) {
  std::vector<std::size_t> stride(static_cast<std::size_t>(n_slots));
  std::size_t s = 1;
  for (int i = n_slots - 1; i >= 0; --i) {
    stride[static_cast<std::size_t>(i)] = s;
    s *= static_cast<std::size_t>(local_dim);
  }
  return stride;
}

// Offsets of all digit configurations over the given slots (last slot fastest).
std::vector<std::size_t> enumerate_offsets(const std::vector<std::size_t>& slot_stride,
                                           int local_dim) {
  std::vector<std::size_t> out{0};
  for (std::size_t stride : slot_stride) {
    std::vector<std::size_t> next;
    next.reserve(out.size() * static_cast<std::size_t>(local_dim));
    for (std::size_t base : out) {
      for (int digit = 0; digit < local_dim; ++digit) {
        next.push_back(base + static_cast<std::size_t>(digit) * stride);
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<int> positions_in(std::span<const Vertex> support, std::span<const Vertex> target) {
  std::vector<int> pos;
  for (Vertex v : support) {
    auto it = std::lower_bound(target.begin(), target.end(), v);
    if (it == target.end() || *it != v) {
      throw InvalidInput("operator support is not contained in the target support");
    }
    pos.push_back(static_cast<int>(it - target.begin()));
  }
  return pos;
}

}  // namespace

std::size_t ipow(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

void LocalOperator::validate(int local_dim) const {
  if (!std::is_sorted(support.begin(), support.end()) ||
      std::adjacent_find(support.begin(), support.end()) != support.end()) {
    throw InvalidInput("local operator support must be sorted and duplicate-free");
  }
  const auto k = static_cast<Eigen::Index>(ipow(local_dim, static_cast<int>(support.size())));
  if (matrix.rows() != k || matrix.cols() != k) {
    throw InvalidInput("local operator dimension " + std::to_string(matrix.rows()) + "x" +
                       std::to_string(matrix.cols()) + " does not match d^|support| = " +
                       std::to_string(k));
  }
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Vector phi_plus(int local_dim) {
  Vector v = Vector::Zero(local_dim * local_dim);
  for (int i = 0; i < local_dim; ++i) v(i * local_dim + i) = 1.0;
  return v;
}

Matrix pair_projector(int local_dim) {
  const Vector p = phi_plus(local_dim);
  return Matrix::Identity(p.size(), p.size()) - p * p.adjoint() / static_cast<double>(local_dim);
}

Matrix pauli_string(std::string_view labels) {
  Matrix out = Matrix::Identity(1, 1);
  for (char c : labels) {
    Matrix p(2, 2);
    switch (c) {
      case 'I': p << 1, 0, 0, 1; break;
      case 'X': p << 0, 1, 1, 0; break;
      case 'Y': p << 0, cplx(0, -1), cplx(0, 1), 0; break;
      case 'Z': p << 1, 0, 0, -1; break;
      default: throw InvalidInput(std::string("unknown Pauli label '") + c + "'");
    }
    out = kron(out, p);
  }
  return out;
}

SupportIndex::SupportIndex(std::span<const Vertex> support, int n_vertices, int local_dim) {
  const auto stride = slot_strides(n_vertices, local_dim);
  std::vector<std::size_t> inside;
  std::vector<std::size_t> outside;
  for (int v = 0; v < n_vertices; ++v) {
    const bool in = std::find(support.begin(), support.end(), v) != support.end();
    (in ? inside : outside).push_back(stride[static_cast<std::size_t>(v)]);
  }
  if (inside.size() != support.size()) throw InvalidInput("support vertex out of range");
  offsets_ = enumerate_offsets(inside, local_dim);
  bases_ = enumerate_offsets(outside, local_dim);
}

void SupportIndex::apply_add(const Matrix& m, const Vector& in, Vector& out) const {
  const auto k = static_cast<Eigen::Index>(offsets_.size());
  const auto nb = static_cast<Eigen::Index>(bases_.size());
  Matrix gathered(k, nb);
  for (Eigen::Index b = 0; b < nb; ++b) {
    const std::size_t base = bases_[static_cast<std::size_t>(b)];
    for (Eigen::Index l = 0; l < k; ++l) {
      gathered(l, b) = in(static_cast<Eigen::Index>(base + offsets_[static_cast<std::size_t>(l)]));
    }
  }
  const Matrix result = m * gathered;
  for (Eigen::Index b = 0; b < nb; ++b) {
    const std::size_t base = bases_[static_cast<std::size_t>(b)];
    for (Eigen::Index l = 0; l < k; ++l) {
      out(static_cast<Eigen::Index>(base + offsets_[static_cast<std::size_t>(l)])) += result(l, b);
    }
  }
}

Matrix widen(const LocalOperator& op, std::span<const Vertex> target, int local_dim) {
  op.validate(local_dim);
  const auto pos = positions_in(op.support, target);
  const int n = static_cast<int>(target.size());
  const auto stride = slot_strides(n, local_dim);
  std::vector<std::size_t> inside;
  std::vector<std::size_t> outside;
  for (int slot = 0; slot < n; ++slot) {
    const bool in = std::find(pos.begin(), pos.end(), slot) != pos.end();
    (in ? inside : outside).push_back(stride[static_cast<std::size_t>(slot)]);
  }
  const auto offsets = enumerate_offsets(inside, local_dim);
  const auto bases = enumerate_offsets(outside, local_dim);
  const auto dim = static_cast<Eigen::Index>(ipow(local_dim, n));
  Matrix out = Matrix::Zero(dim, dim);
  for (std::size_t b : bases) {
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      for (std::size_t j = 0; j < offsets.size(); ++j) {
        out(static_cast<Eigen::Index>(b + offsets[i]), static_cast<Eigen::Index>(b + offsets[j])) =
            op.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
  return out;
}

GlobalOperator embed(const LocalOperator& op, const Lattice& lat) {
  lat.hilbert_dim();
  VertexSet all(static_cast<std::size_t>(lat.n_vertices()));
  for (int v = 0; v < lat.n_vertices(); ++v) all[static_cast<std::size_t>(v)] = v;
  GlobalOperator g{widen(op, all, lat.local_dim()), false};
  g.hermitian = is_hermitian(g.matrix);
  return g;
}

Vector apply_local(const LocalOperator& op, const Lattice& lat, const Vector& state) {
  op.validate(lat.local_dim());
  if (static_cast<std::size_t>(state.size()) != lat.hilbert_dim()) {
    throw InvalidInput("state dimension does not match the lattice");
  }
  Vector out = Vector::Zero(state.size());
  SupportIndex(op.support, lat.n_vertices(), lat.local_dim()).apply_add(op.matrix, state, out);
  return out;
}

OperatorSum::OperatorSum(const Lattice& lat, std::vector<LocalOperator> terms)
    : terms_(std::move(terms)), dim_(lat.hilbert_dim()) {
  index_.reserve(terms_.size());
  for (const auto& t : terms_) {
    t.validate(lat.local_dim());
    index_.emplace_back(t.support, lat.n_vertices(), lat.local_dim());
  }
}

VertexSet OperatorSum::support() const {
  VertexSet out;
  for (const auto& t : terms_) out.insert(out.end(), t.support.begin(), t.support.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Vector OperatorSum::apply(const Vector& v) const {
  Vector out = Vector::Zero(v.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) index_[i].apply_add(terms_[i].matrix, v, out);
  return out;
}

GlobalOperator OperatorSum::to_global(const Lattice& lat) const {
  const auto dim = static_cast<Eigen::Index>(lat.hilbert_dim());
  GlobalOperator g{Matrix::Zero(dim, dim), true};
  for (const auto& t : terms_) g.matrix += embed(t, lat).matrix;
  g.hermitian = is_hermitian(g.matrix);
  return g;
}

bool is_hermitian(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, max_abs(m));
  return max_abs(m - m.adjoint()) <= tol * scale;
}

EigenSystem eig_hermitian(const Matrix& m) {
  if (!is_hermitian(m)) throw NumericalError("eig_hermitian: input is not Hermitian");
  const Matrix sym = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("eig_hermitian: solver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

EigenSystem eig_hermitian(const GlobalOperator& op) { return eig_hermitian(op.matrix); }

Matrix herm_exp(const Matrix& op, cplx scalar) {
  const auto es = eig_hermitian(op);
  Vector diag(es.values.size());
  for (Eigen::Index i = 0; i < diag.size(); ++i) diag(i) = std::exp(scalar * es.values(i));
  return es.vectors * diag.asDiagonal() * es.vectors.adjoint();
}

GlobalOperator herm_exp(const GlobalOperator& op, cplx scalar) {
  Matrix e = herm_exp(op.matrix, scalar);
  const bool herm = is_hermitian(e);
  return {std::move(e), herm};
}

Matrix inverse_pd(const Matrix& op) {
  const auto es = eig_hermitian(op);
  // Eigenvalues within rounding of zero count as singular.
  if (es.values.size() > 0 && es.values(0) <= 1e-13 * es.values.cwiseAbs().maxCoeff()) {
    throw NumericalError("inverse_pd: operator is not positive definite");
  }
  return es.vectors * es.values.cwiseInverse().cast<cplx>().asDiagonal() * es.vectors.adjoint();
}

Matrix pseudo_inverse(const Matrix& op, std::optional<double> kernel_tol) {
  const auto es = eig_hermitian(op);
  const double norm = es.values.size() ? es.values.cwiseAbs().maxCoeff() : 0.0;
  const double tol = kernel_tol.value_or(1e-10 * norm);
  Vector diag(es.values.size());
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    const double ev = es.values(i);
    if (ev < -tol) throw NumericalError("pseudo_inverse: operator has a negative eigenvalue");
    diag(i) = ev < tol ? 0.0 : 1.0 / ev;
  }
  return es.vectors * diag.asDiagonal() * es.vectors.adjoint();
}

GlobalOperator pseudo_inverse(const GlobalOperator& op, std::optional<double> kernel_tol) {
  return {pseudo_inverse(op.matrix, kernel_tol), true};
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<Matrix> solver((gram + gram.adjoint()) / 2.0,
                                               Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

double trace_norm(const Matrix& m) {
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      data.push_back(m(i, j).real());
      data.push_back(m(i, j).imag());
    }
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != 2 * rows * cols) {
    throw InvalidInput("matrix json: data length does not match rows*cols*2");
  }
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index jj = 0; jj < cols; ++jj) {
      m(i, jj) = cplx(data[k].get<double>(), data[k + 1].get<double>());
      k += 2;
    }
  }
  return m;
}

}  // namespace ffprep
