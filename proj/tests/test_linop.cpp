#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "ffprep/linop.hpp"
#include "oracles.hpp"

using namespace ffprep;

namespace {

Lattice plain_chain(int n) {
  // n plain vertices paired (0,1), (2,3), ...
  Lattice::Description d;
  d.n_vertices = n;
  for (int v = 0; v + 1 < n; ++v) d.edges.push_back({v, v + 1});
  for (int v = 0; v + 1 < n; v += 2) d.pairs.push_back({v, v + 1});
  return Lattice(std::move(d));
}

Matrix random_matrix(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  return a;
}

Matrix random_psd_with_kernel(int n, int kernel, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(random_matrix(n, rng));
  const Matrix u = qr.householderQ();
  RealVector ev(n);
  std::uniform_real_distribution<double> w(0.5, 2.0);
  for (int i = 0; i < n; ++i) ev(i) = i < kernel ? 0.0 : w(rng);
  const Matrix m = u * ev.cast<cplx>().asDiagonal() * u.adjoint();
  return (m + m.adjoint()) / 2.0;
}

}  // namespace

TEST(Embed, IdentityAndSingleSitePauli) {
  const Lattice lat = plain_chain(4);
  const GlobalOperator id = embed({{1, 2}, Matrix::Identity(4, 4)}, lat);
  EXPECT_LE((id.matrix - Matrix::Identity(16, 16)).norm(), 0.0);

  const Lattice two = plain_chain(2);
  const GlobalOperator z = embed({{0}, pauli_string("Z")}, two);
  Matrix want = Matrix::Zero(4, 4);
  want.diagonal() << 1, 1, -1, -1;
  EXPECT_LE((z.matrix - want).norm(), 0.0);
}

TEST(Embed, MatchesEntrywiseOracleAndIsMultiplicative) {
  std::mt19937_64 rng(1);
  const Lattice lat = plain_chain(4);
  const Matrix a = random_matrix(4, rng);
  const Matrix b = random_matrix(2, rng);
  const LocalOperator la{{0, 2}, a};
  const LocalOperator lb{{3}, b};
  EXPECT_LE((embed(la, lat).matrix - oracle::embed(a, {0, 2}, 4, 2)).norm(), 1e-14);
  EXPECT_LE((embed(lb, lat).matrix - oracle::embed(b, {3}, 4, 2)).norm(), 1e-14);
  // embed(A) embed(B) = embed(A ⊗ B) on the union {0, 2, 3}
  const Matrix product = embed(la, lat).matrix * embed(lb, lat).matrix;
  EXPECT_LE((product - embed({{0, 2, 3}, kron(a, b)}, lat).matrix).norm(), 1e-12);
}

TEST(Embed, PreservesOperatorNorm) {
  std::mt19937_64 rng(2);
  const Lattice lat = plain_chain(4);
  const Matrix h = oracle::random_hermitian(4, rng);
  EXPECT_NEAR(operator_norm(embed({{1, 3}, h}, lat).matrix), operator_norm(h), 1e-12);
  EXPECT_NEAR(operator_norm(h), oracle::op_norm(h), 1e-12);
}

TEST(Embed, CommutationOnOverlapIsInherited) {
  std::mt19937_64 rng(3);
  const Lattice lat = plain_chain(4);
  // Functions of one Hermitian matrix commute; random pairs do not.
  const Matrix h = oracle::random_hermitian(4, rng);
  const Matrix a = herm_exp(h, 0.3);
  const Matrix b = h * h;
  const GlobalOperator ea = embed({{1, 2}, a}, lat);
  const GlobalOperator eb = embed({{1, 2}, b}, lat);
  EXPECT_LE((ea.matrix * eb.matrix - eb.matrix * ea.matrix).norm(), 1e-10);
  const GlobalOperator ec = embed({{1, 2}, oracle::random_hermitian(4, rng)}, lat);
  EXPECT_GT((ea.matrix * ec.matrix - ec.matrix * ea.matrix).norm(), 1e-3);
}

TEST(Embed, RejectsMismatchedOperators) {
  const Lattice lat = plain_chain(2);
  EXPECT_THROW(embed({{0}, Matrix::Identity(4, 4)}, lat), InvalidInput);
  EXPECT_THROW(embed({{1, 0}, Matrix::Identity(4, 4)}, lat), InvalidInput);
  EXPECT_THROW(embed({{0, 5}, Matrix::Identity(4, 4)}, lat), InvalidInput);
}

TEST(ApplyLocal, MatchesDenseEmbedding) {
  std::mt19937_64 rng(4);
  const Lattice lat = plain_chain(6);
  const Matrix a = random_matrix(4, rng);
  Vector psi(64);
  for (auto& x : psi) x = cplx(std::normal_distribution<double>()(rng), 0.0);
  const LocalOperator op{{1, 4}, a};
  EXPECT_LE((apply_local(op, lat, psi) - oracle::embed(a, {1, 4}, 6, 2) * psi).norm(), 1e-12);
  OperatorSum sum(lat, {op, {{2}, pauli_string("X")}});
  EXPECT_LE((sum.apply(psi) - sum.to_global(lat).matrix * psi).norm(), 1e-12);
  EXPECT_EQ(sum.support(), (VertexSet{1, 2, 4}));
}

TEST(EigHermitian, Examples) {
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, 1, 2;
  const auto es = eig_hermitian(d);
  EXPECT_NEAR(es.values(0), 1.0, 1e-15);
  EXPECT_NEAR(es.values(1), 2.0, 1e-15);
  EXPECT_NEAR(es.values(2), 3.0, 1e-15);

  const auto ex = eig_hermitian(pauli_string("X"));
  EXPECT_NEAR(ex.values(0), -1.0, 1e-15);
  EXPECT_NEAR(ex.values(1), 1.0, 1e-15);
  Vector minus(2);
  minus << 1.0, -1.0;
  EXPECT_NEAR(std::abs(ex.vectors.col(0).dot(minus / std::sqrt(2.0))), 1.0, 1e-14);
}

TEST(EigHermitian, ReconstructionAndResiduals) {
  std::mt19937_64 rng(5);
  const Matrix h = oracle::random_hermitian(8, rng);
  const auto es = eig_hermitian(h);
  const Matrix rebuilt = es.vectors * es.values.cast<cplx>().asDiagonal() * es.vectors.adjoint();
  EXPECT_LE((rebuilt - h).norm(), 1e-9);
  for (Eigen::Index k = 0; k < 8; ++k) {
    EXPECT_LE((h * es.vectors.col(k) - es.values(k) * es.vectors.col(k)).norm(), 1e-9 * operator_norm(h));
    if (k > 0) EXPECT_LE(es.values(k - 1), es.values(k));
  }
  EXPECT_THROW(eig_hermitian(random_matrix(3, rng)), NumericalError);
}

TEST(HermExp, Examples) {
  std::mt19937_64 rng(6);
  const Matrix h = oracle::random_hermitian(4, rng);
  EXPECT_LE((herm_exp(h, 0.0) - Matrix::Identity(4, 4)).norm(), 1e-14);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1.0;
  Matrix want = Matrix::Zero(2, 2);
  want(0, 0) = -1.0;
  want(1, 1) = 1.0;
  EXPECT_LE((herm_exp(d, cplx(0.0, std::numbers::pi)) - want).norm(), 1e-15);
}

TEST(HermExp, IsingMatchesTaylorSeries) {
  const Matrix h = pauli_string("ZZ") + 0.3 * (pauli_string("XI") + pauli_string("IX"));
  const Matrix e = herm_exp(h, -0.5);
  const Matrix t = oracle::taylor_exp(-0.5 * h);
  EXPECT_LE((e - t).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(operator_norm(e), oracle::op_norm(t), 1e-10);
}

TEST(HermExp, GroupProperty) {
  std::mt19937_64 rng(7);
  const Matrix h = oracle::random_hermitian(6, rng);
  for (cplx a : {cplx(0.3, 0.0), cplx(0.0, 1.7)}) {
    const cplx b(-0.8, 0.0);
    EXPECT_LE((herm_exp(h, a) * herm_exp(h, b) - herm_exp(h, a + b)).norm(), 1e-10);
  }
}

TEST(PseudoInverse, Examples) {
  Matrix d = Matrix::Zero(2, 2);
  d(1, 1) = 2.0;
  Matrix want = Matrix::Zero(2, 2);
  want(1, 1) = 0.5;
  EXPECT_LE((pseudo_inverse(d) - want).norm(), 1e-15);
  const Matrix p = pair_projector(2);
  EXPECT_LE((pseudo_inverse(p) - p).norm(), 1e-12);
}

TEST(PseudoInverse, MoorePenroseIdentities) {
  std::mt19937_64 rng(8);
  const Matrix a = random_psd_with_kernel(6, 2, rng);
  const Matrix pinv = pseudo_inverse(a);
  EXPECT_LE((a * pinv * a - a).norm(), 1e-9);
  EXPECT_LE((pinv * a * pinv - pinv).norm(), 1e-9);
  EXPECT_LE((a * pinv - (a * pinv).adjoint()).norm(), 1e-9);
  // pinv * a is the projector onto the range
  const Matrix proj = pinv * a;
  EXPECT_LE((proj * proj - proj).norm(), 1e-9);
  EXPECT_NEAR(proj.trace().real(), 4.0, 1e-9);
  Matrix neg = -Matrix::Identity(2, 2);
  EXPECT_THROW(pseudo_inverse(neg), NumericalError);
}

TEST(InversePd, MatchesLuInverse) {
  std::mt19937_64 rng(9);
  const Matrix a = random_psd_with_kernel(5, 0, rng);
  EXPECT_LE((inverse_pd(a) - a.inverse()).norm(), 1e-10);
  EXPECT_THROW(inverse_pd(random_psd_with_kernel(3, 1, rng)), NumericalError);
}

TEST(Norms, AgreeWithSvd) {
  std::mt19937_64 rng(10);
  const Matrix a = random_matrix(7, rng);
  EXPECT_NEAR(operator_norm(a), oracle::op_norm(a), 1e-10);
  EXPECT_NEAR(trace_norm(a), oracle::trace_norm(a), 1e-10);
}

TEST(PairProjector, AnnihilatesPhiPlus) {
  for (int d : {2, 3}) {
    const Matrix p = pair_projector(d);
    EXPECT_LE((p * phi_plus(d)).norm(), 1e-14);
    EXPECT_LE((p * p - p).norm(), 1e-14);
    EXPECT_NEAR(p.trace().real(), d * d - 1.0, 1e-14);
  }
}

TEST(PauliString, Products) {
  EXPECT_LE((pauli_string("XZ") - kron(pauli_string("X"), pauli_string("Z"))).norm(), 0.0);
  const Matrix y = pauli_string("Y");
  EXPECT_LE((y * y - Matrix::Identity(2, 2)).norm(), 1e-15);
  EXPECT_THROW(pauli_string("Q"), InvalidInput);
}

TEST(MatrixJson, RoundTripRowMajorInterleaved) {
  Matrix m(2, 2);
  m << cplx(1, 2), cplx(3, 4), cplx(5, 6), cplx(7, 8);
  const auto j = matrix_to_json(m);
  EXPECT_EQ(j["data"][2].get<double>(), 3.0);
  EXPECT_EQ(j["data"][3].get<double>(), 4.0);
  EXPECT_LE((matrix_from_json(j) - m).norm(), 0.0);
  EXPECT_THROW(matrix_from_json({{"rows", 2}, {"cols", 2}, {"data", {1.0}}}), InvalidInput);
}
