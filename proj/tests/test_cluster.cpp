#include <gtest/gtest.h>

#include <random>

#include "ffprep/cluster.hpp"
#include "ffprep/model.hpp"
#include "ffprep/parent.hpp"
#include "oracles.hpp"

using namespace ffprep;

namespace {

std::vector<LocalOperator> uniform_terms(const Lattice& lat, const Matrix& h) {
  std::vector<LocalOperator> out;
  for (const auto& s : lat.supports()) out.push_back({s, h});
  return out;
}

Matrix tfi_bond() { return 0.5 * pauli_string("ZZ") + 0.25 * (pauli_string("XI") + pauli_string("IX")); }

Matrix dense_h(const Lattice& lat, const std::vector<LocalOperator>& h_ops, const std::vector<int>& omega) {
  const std::size_t dim = oracle::pow_int(2, lat.n_vertices());
  Matrix h = Matrix::Zero(Eigen::Index(dim), Eigen::Index(dim));
  for (int l : omega) h += oracle::embed(h_ops[l].matrix, h_ops[l].support, lat.n_vertices(), 2);
  return h;
}

Matrix dense_pair_projector(const Lattice& lat, int mu) {
  const auto& p = lat.pairs()[static_cast<std::size_t>(mu)];
  return oracle::embed(pair_projector(2), {p[0], p[1]}, lat.n_vertices(), 2);
}

/// e^{βH/2} P e^{-βH} P e^{βH/2} from Taylor exponentials of the dense H_Ω.
Matrix dense_cluster_f(const Lattice& lat, const std::vector<LocalOperator>& h_ops, int mu,
                       const std::vector<int>& omega, double beta) {
  const Matrix h = dense_h(lat, h_ops, omega);
  const Matrix p = dense_pair_projector(lat, mu);
  const Matrix half = oracle::taylor_exp(beta / 2.0 * h);
  return half * p * oracle::taylor_exp(-beta * h) * p * half;
}

std::vector<std::vector<int>> all_subsets(int n) {
  std::vector<std::vector<int>> out;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) s.push_back(i);
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(Mobius, HatExamples) {
  const Matrix x = pauli_string("X");
  SubsetMap<Matrix> f;
  for (const auto& s : subsets_of({3, 7})) f[s] = x;
  EXPECT_LE((mobius_hat(f, {3, 7}) - 4.0 * x).norm(), 0.0);
  EXPECT_LE((mobius_hat(f, {}) - x).norm(), 0.0);
  EXPECT_LE(mobius_check(f, {3, 7}).norm(), 0.0);
  EXPECT_LE((mobius_check(f, {}) - x).norm(), 0.0);
  SubsetMap<Matrix> missing;
  missing[{}] = x;
  EXPECT_THROW(mobius_hat(missing, {1}), InvalidInput);
}

TEST(Mobius, HatMatchesExplicitSum) {
  std::mt19937_64 rng(41);
  SubsetMap<Matrix> f;
  for (const auto& s : all_subsets(3)) f[s] = oracle::random_hermitian(2, rng);
  const Matrix want = f[{}] + f[{0}] + f[{1}] + f[{2}] + f[{0, 1}] + f[{0, 2}] + f[{1, 2}] + f[{0, 1, 2}];
  EXPECT_LE((mobius_hat(f, {0, 1, 2}) - want).norm(), 1e-14);
  const Matrix alt = f[{0, 1, 2}] - f[{0, 1}] - f[{0, 2}] - f[{1, 2}] + f[{0}] + f[{1}] + f[{2}] - f[{}];
  EXPECT_LE((mobius_check(f, {0, 1, 2}) - alt).norm(), 1e-14);
}

TEST(Mobius, RoundTripOnFourElementGroundSet) {
  std::mt19937_64 rng(42);
  SubsetMap<Matrix> f;
  for (const auto& s : all_subsets(4)) f[s] = oracle::random_hermitian(3, rng);
  SubsetMap<Matrix> hat, check;
  for (const auto& s : all_subsets(4)) {
    hat[s] = mobius_hat(f, s);
    check[s] = mobius_check(f, s);
  }
  for (const auto& s : all_subsets(4)) {
    EXPECT_LE((mobius_check(hat, s) - f[s]).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((mobius_hat(check, s) - f[s]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ClusterF, EmptySetAndZeroBetaGivePairProjector) {
  const Lattice lat = build_chain(3, 2, true);
  const auto h = uniform_terms(lat, tfi_bond());
  for (int mu = 0; mu < lat.n_pairs(); ++mu) {
    EXPECT_LE((cluster_f_global(lat, mu, {}, 0.4, h).matrix - dense_pair_projector(lat, mu)).norm(), 1e-14);
    const std::vector<int> all = {0, 1};
    EXPECT_LE((cluster_f_global(lat, mu, all, 0.0, h).matrix - dense_pair_projector(lat, mu)).norm(), 1e-14);
  }
}

TEST(ClusterF, MatchesDenseEvaluation) {
  const Lattice lat = build_chain(3, 2, true);
  const auto h = uniform_terms(lat, tfi_bond());
  const std::vector<int> all = {0, 1};
  for (int mu = 0; mu < lat.n_pairs(); ++mu) {
    const Matrix got = cluster_f_global(lat, mu, all, 0.3, h).matrix;
    EXPECT_LE((got - dense_cluster_f(lat, h, mu, all, 0.3)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ClusterTerm, VanishesOffConnectedAnchoredSets) {
  const Lattice lat = build_chain(4, 2, true);
  const auto h = uniform_terms(lat, tfi_bond());
  // Pair 0 sits on vertex 0; support 2 = {4, 6} is far from it.
  const std::vector<int> unanchored = {2};
  const std::vector<int> disconnected = {0, 2};
  EXPECT_LE(cluster_term(lat, 0, unanchored, 0.3, h).norm, 1e-11);
  EXPECT_LE(cluster_term(lat, 0, disconnected, 0.3, h).norm, 1e-11);
  EXPECT_FALSE(cluster_term(lat, 0, disconnected, 0.3, h).omega.connected);
  const std::vector<int> connected = {0, 1};
  EXPECT_TRUE(cluster_term(lat, 0, connected, 0.3, h).omega.connected);
  EXPECT_GT(cluster_term(lat, 0, connected, 0.3, h).norm, 1e-6);
}

TEST(ClusterTerm, CommutingModelVanishesAwayFromPair) {
  const Lattice lat = build_chain(4, 2, true);
  const auto h = uniform_terms(lat, 0.7 * pauli_string("ZZ") + 0.2 * pauli_string("ZI"));
  // Support 1 = {2, 4} does not touch pair 0 = (0, 1).
  for (const std::vector<int>& omega : {std::vector<int>{1}, std::vector<int>{0, 1}, std::vector<int>{1, 2}}) {
    EXPECT_LE(cluster_term(lat, 0, omega, 0.5, h).norm, 1e-14);
  }
}

TEST(ClusterTerm, NormLemmaOnEveryEnumeratedSet) {
  const Lattice lat = build_chain(4, 2, true);
  const auto h = uniform_terms(lat, tfi_bond());
  for (double beta : {0.05, 0.1, 0.2}) {
    for (int mu = 0; mu < lat.n_pairs(); ++mu) {
      for (const auto& omega : all_subsets(lat.n_supports())) {
        if (omega.empty()) continue;
        const auto t = cluster_term(lat, mu, omega, beta, h);
        EXPECT_LE(t.norm, norm_lemma_bound(beta, static_cast<int>(omega.size())) + 1e-9);
        if (!t.omega.connected) EXPECT_LE(t.norm, 1e-10);
      }
    }
  }
}

TEST(ClusterTerm, FullSumReconstructsNonlocalTerm) {
  const Lattice lat = build_chain(4, 2, true);
  const auto h = uniform_terms(lat, tfi_bond());
  for (int mu = 0; mu < lat.n_pairs(); ++mu) {
    Matrix sum = Matrix::Zero(256, 256);
    for (const auto& omega : all_subsets(lat.n_supports())) sum += embed(cluster_term(lat, mu, omega, 0.2, h).op, lat).matrix;
    const Matrix exact = embed(exact_noncommuting_term(lat, mu, 0.2, h), lat).matrix;
    EXPECT_LE((sum - exact).cwiseAbs().maxCoeff(), 1e-10);
    const std::vector<int> all = {0, 1, 2};
    EXPECT_LE((exact - dense_cluster_f(lat, h, mu, all, 0.2)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(GrowthConstant, ChainValuesAndBruteForce) {
  EXPECT_EQ(growth_constant(build_chain(2, 2, true)), 0.0);
  EXPECT_NEAR(growth_constant(build_chain(3, 2, true)), std::log(2.0), 1e-15);
  for (const auto& lat : {build_chain(5, 2, true), build_thermal_grid(2, 3, 2)}) {
    double eta = 0.0;
    for (int mu = 0; mu < lat.n_pairs(); ++mu) {
      std::map<std::size_t, int> count;
      for (const auto& s : oracle::brute_anchored_sets(lat, mu, lat.n_supports())) ++count[s.size()];
      for (const auto& [m, c] : count) eta = std::max(eta, std::log(static_cast<double>(c)) / static_cast<double>(m));
    }
    EXPECT_NEAR(growth_constant(lat), eta, 1e-12);
  }
}

TEST(Truncation, FullRadiusIsExact) {
  const Lattice lat = build_chain(3, 2, true);
  const auto h = uniform_terms(lat, tfi_bond());
  const auto tp = truncated_parent(lat, 0.2, lat.n_supports(), h);
  EXPECT_LE((truncated_global(lat, tp).matrix - exact_noncommuting_parent(lat, 0.2, h).matrix).cwiseAbs().maxCoeff(),
            1e-10);
  for (const auto& c : tp.certificates) {
    ASSERT_TRUE(c.measured.has_value());
    EXPECT_LE(*c.measured, 1e-10);
  }
}

TEST(Truncation, ErrorDecreasesWithRAndRespectsCertificate) {
  const Lattice lat = build_chain(3, 2, true);
  const auto h = uniform_terms(lat, tfi_bond());
  const double beta = 0.1;
  const auto t1 = truncated_parent(lat, beta, 1, h);
  const auto t2 = truncated_parent(lat, beta, 2, h);
  const double eta = growth_constant(lat);
  const double y = std::exp(eta) * std::expm1(4.0 * beta);
  ASSERT_LT(y, 1.0);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < t1.certificates.size(); ++i) {
    const auto& c1 = t1.certificates[i];
    const auto& c2 = t2.certificates[i];
    EXPECT_NEAR(c1.y, y, 1e-14);
    EXPECT_NEAR(c1.bound, y / (1 - y), 1e-12);
    EXPECT_NEAR(c2.bound, y * y / (1 - y), 1e-12);
    EXPECT_TRUE(c1.valid);
    EXPECT_LE(*c1.measured, c1.bound + 1e-9);
    EXPECT_LE(*c2.measured, c2.bound + 1e-9);
    m1 = std::max(m1, *c1.measured);
    m2 = std::max(m2, *c2.measured);
  }
  EXPECT_LT(m2, m1);
  EXPECT_TRUE(t1.valid());
}

TEST(Truncation, LargeBetaInvalidatesCertificate) {
  const Lattice lat = build_chain(3, 2, true);
  const auto tp = truncated_parent(lat, 0.5, 1, uniform_terms(lat, tfi_bond()));
  EXPECT_FALSE(tp.valid());
  EXPECT_TRUE(std::isinf(tp.certificates[0].bound));
}

TEST(Truncation, CommutingModelIsExactAtSupportClusters) {
  const Lattice lat = build_chain(4, 2, true);
  const auto h = uniform_terms(lat, 0.7 * pauli_string("ZZ") + 0.2 * pauli_string("ZI"));
  const double beta = 0.4;
  // Every Λ_μ on a chain has at most two supports.
  const auto tp = truncated_parent(lat, beta, 2, h);
  for (const auto& c : tp.certificates) EXPECT_LE(*c.measured, 1e-12);
  // Same kernel as the commuting parent Hamiltonian of the thermal model.
  const ModelSpec spec = make_thermal_model(lat, h, beta);
  const Vector target = target_state(spec);
  EXPECT_LE((truncated_global(lat, tp).matrix * target).norm(), 1e-10);
  EXPECT_LE((parent_hamiltonian(spec).matrix * target).norm(), 1e-10);
  EXPECT_LE((purified_gibbs_state(lat, h, beta) - target).norm(), 1e-10);
}

TEST(ExactParent, InfiniteTemperatureAndFrustrationFreeness) {
  const Lattice lat = build_chain(3, 2, true);
  const auto h = uniform_terms(lat, tfi_bond());
  Matrix sum_p = Matrix::Zero(64, 64);
  for (int mu = 0; mu < lat.n_pairs(); ++mu) sum_p += dense_pair_projector(lat, mu);
  EXPECT_LE((exact_noncommuting_parent(lat, 0.0, h).matrix - sum_p).norm(), 1e-14);
  const GlobalOperator g = exact_noncommuting_parent(lat, 0.2, h);
  const Vector gibbs = purified_gibbs_state(lat, h, 0.2);
  EXPECT_LE((g.matrix * gibbs).norm(), 1e-9);
  EXPECT_GT(spectral_gap(g), 0.1);
  // The purification reduces to e^{-βH}/Z.
  const Matrix rho = oracle::partial_trace(gibbs, lat.n_vertices(), 2, {0, 2, 4});
  const Matrix h_sys = 0.5 * (pauli_string("ZZI") + pauli_string("IZZ")) +
                       0.25 * (pauli_string("XII") + 2.0 * pauli_string("IXI") + pauli_string("IIX"));
  Matrix want = oracle::taylor_exp(-0.2 * h_sys);
  want /= want.trace();
  EXPECT_LE(oracle::trace_norm(rho - want), 1e-10);
}

TEST(NoncommutingGap, ScanAndOperatorInequality) {
  const Lattice lat = build_chain(3, 2, true);
  const auto h = uniform_terms(lat, tfi_bond());
  const std::vector<double> grid = {0.0, 0.05, 0.1, 0.15, 0.2};
  const auto rows = verify_noncommuting_gap(lat, h, grid);
  ASSERT_EQ(rows.size(), grid.size());
  EXPECT_NEAR(rows[0].gap, 1.0, 1e-12);
  for (const auto& row : rows) {
    EXPECT_GE(row.gap, 0.5);
    EXPECT_TRUE(row.holds);
    EXPECT_GE(row.inequality_min, -1e-9);
  }
  // Continuity under refinement.
  const std::vector<double> fine = {0.1, 0.1 + 1e-4};
  const auto r2 = verify_noncommuting_gap(lat, h, fine);
  EXPECT_LE(std::abs(r2[1].gap - r2[0].gap), 1e-3);
}

TEST(HighTemp, ZeroBetaIsImmediate) {
  const Lattice lat = build_chain(2, 2, true);
  const auto h = uniform_terms(lat, tfi_bond());
  HighTempOptions opts;
  opts.steps = 50;
  const auto r = high_temp_prepare(lat, 0.0, 1, 1.0, h, opts);
  // The error metric is a square root, so compare infidelities.
  EXPECT_LE(1.0 - std::norm(r.overlap), 1e-12);
}

TEST(HighTemp, TransverseFieldIsingPreparation) {
  const Lattice lat = build_chain(3, 2, true);
  const auto h = uniform_terms(lat, tfi_bond());
  HighTempOptions opts;
  opts.override_certificate = true;
  const auto r = high_temp_prepare(lat, 0.15, 2, 40.0, h, opts);
  EXPECT_LE(1.0 - std::norm(r.overlap), 1e-2);
  EXPECT_LE(r.norm_drift, 1e-9);
  opts.override_certificate = false;
  EXPECT_THROW(high_temp_prepare(lat, 0.15, 2, 40.0, h, opts), CertificationRefused);
}

TEST(HighTemp, CommutingModelMatchesSequentialQuality) {
  const Lattice lat = build_chain(2, 2, true);
  const auto h = uniform_terms(lat, 0.8 * pauli_string("ZZ"));
  const double beta = 0.1;
  HighTempOptions opts;
  opts.steps = 1500;
  const auto ht = high_temp_prepare(lat, beta, 1, 30.0, h, opts);
  const ModelSpec spec = make_thermal_model(lat, h, beta);
  RunOptions ro;
  ro.steps_per_segment = 1500;
  const auto seq = run_sequential(make_path(spec, Schedule::gevrey(1.0), Interpolation::thermal), 30.0,
                                  lat.diameter() + 1, ro);
  EXPECT_LE(ht.adiabatic_error, 1e-3);
  EXPECT_LE(seq.adiabatic_error, 1e-3);
}
