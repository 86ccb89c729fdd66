#include "taumax/maxiact.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "taumax/analytic.hpp"

using taumax::BasisSeries;
using taumax::BasisSet;
using taumax::Custom;
using taumax::MaxIactResult;
using taumax::Matrix;
using taumax::PhaseHermite;
using taumax::PhasePoint;
using taumax::PotentialModel;
using taumax::ReplicaPair;
using taumax::Rng;
using taumax::SimParams;
using taumax::SimulateOptions;
using taumax::StepperKind;
using taumax::Trajectory;

namespace {

constexpr double kTauHe1 = 8.00068625410636;     // slowest mode, gamma=2, dt=0.5
constexpr double kBlock2Max = 5.253631087998;    // degree-2 phase block supremum
constexpr double kTau2Q = 0.802158678723213;     // paired-branch value for q
constexpr double kSibQQ = 0.919698602928606;     // E[q_sib * q'_sib]

SimParams ou_params(std::size_t n, std::uint64_t seed = 515) {
  SimParams p;
  p.gamma = 2.0;
  p.dt = 0.5;
  p.seed = seed;
  p.n_steps = n;
  p.burn_in = 1000;
  return p;
}

Trajectory ou_traj(std::size_t n, std::uint64_t stream) {
  SimulateOptions opt;
  opt.stepper = StepperKind::OuExact;
  opt.stream = stream;
  auto model = PotentialModel::quadratic(Matrix::identity(1));
  return taumax::simulate(model, ou_params(n), opt);
}

ReplicaPair ou_pair(std::size_t n, std::uint64_t stream) {
  SimulateOptions opt;
  opt.stepper = StepperKind::OuExact;
  opt.stream = stream;
  auto model = PotentialModel::quadratic(Matrix::identity(1));
  return taumax::simulate_replica(model, ou_params(n), opt);
}

BasisSeries ou_series(std::size_t n, std::uint64_t stream, const taumax::BasisDescriptor& b) {
  return taumax::evaluate_series(BasisSet::build(b), ou_traj(n, stream));
}

BasisSet q_basis() {
  return BasisSet::build(Custom{1, {{"q", [](const PhasePoint& z) { return z.q[0]; }}}});
}

// Assemble a centered series from raw columns.
BasisSeries make_series(std::vector<std::vector<double>> cols) {
  BasisSeries s;
  s.m = cols.size();
  s.n = cols[0].size();
  s.means.assign(s.m, 0.0);
  s.degenerate.assign(s.m, false);
  for (std::size_t j = 0; j < s.m; ++j) {
    double mean = 0.0;
    for (double v : cols[j]) mean += v;
    mean /= double(s.n);
    s.means[j] = mean;
    for (auto& v : cols[j]) v -= mean;
  }
  s.values.resize(s.n * s.m);
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t j = 0; j < s.m; ++j) s.values[i * s.m + j] = cols[j][i];
  return s;
}

struct Spread {
  double mean = 0.0, sd = 0.0;
};

Spread spread(const std::vector<double>& xs) {
  Spread sp;
  for (double x : xs) sp.mean += x;
  sp.mean /= double(xs.size());
  for (double x : xs) sp.sd += (x - sp.mean) * (x - sp.mean);
  sp.sd = std::sqrt(sp.sd / double(xs.size() - 1));
  return sp;
}

double quad_form(const Matrix& a, const std::vector<double>& x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) acc += x[i] * a(i, j) * x[j];
  return acc;
}

}  // namespace

TEST(EstimateMatrices, ScalarMatchesAcor) {
  auto s = ou_series(50000, 9, taumax::Hermite1D{1});
  std::vector<double> col(s.n);
  for (std::size_t i = 0; i < s.n; ++i) col[i] = s.value(i, 0);
  auto est = taumax::acor_tau(col);
  auto [d, c0] = taumax::estimate_matrices(s, est.reducs);
  EXPECT_NEAR(d(0, 0), est.d_hat, 1e-12 * std::abs(est.d_hat));
  EXPECT_NEAR(c0(0, 0), est.c0_hat, 1e-12 * est.c0_hat);
  EXPECT_NEAR(d(0, 0) / c0(0, 0), est.tau, 1e-12 * est.tau);
}

TEST(EstimateMatrices, SymmetricOutput) {
  auto s = ou_series(50000, 11, PhaseHermite{2});
  auto [d, c0] = taumax::estimate_matrices(s, 2);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_DOUBLE_EQ(d(i, j), d(j, i));
      EXPECT_DOUBLE_EQ(c0(i, j), c0(j, i));
    }
}

TEST(Algorithm1, SingleColumnEqualsAcor) {
  auto s = ou_series(50000, 9, taumax::Hermite1D{1});
  std::vector<double> col(s.n);
  for (std::size_t i = 0; i < s.n; ++i) col[i] = s.value(i, 0);
  auto est = taumax::acor_tau(col);
  auto res = taumax::tau_max_algorithm1(s);
  EXPECT_NEAR(res.tau_max, est.tau, 1e-12 * est.tau);
  EXPECT_EQ(res.reducs_used, est.reducs);
  EXPECT_EQ(res.effective_rank, 1u);
  EXPECT_FALSE(res.retried);
  EXPECT_NEAR(res.c0(0, 0) * res.x[0] * res.x[0], 1.0, 1e-9);
}

TEST(Algorithm1, NormalizationAndSpectrumShape) {
  auto s = ou_series(100000, 3, PhaseHermite{2});
  auto res = taumax::tau_max_algorithm1(s);
  ASSERT_EQ(res.effective_rank, 3u);
  ASSERT_EQ(res.spectrum.size(), 3u);
  EXPECT_NEAR(quad_form(res.c0, res.x), 1.0, 1e-9);
  EXPECT_DOUBLE_EQ(res.tau_max, res.spectrum[0]);
  EXPECT_GE(res.spectrum[0], res.spectrum[1]);
  EXPECT_GE(res.spectrum[1], res.spectrum[2]);
}

// With a full-rank metric the top eigenvalue dominates every coordinate
// Rayleigh quotient exactly.
TEST(Algorithm1, DominatesColumnRatios) {
  auto s = ou_series(100000, 3, PhaseHermite{2});
  auto res = taumax::tau_max_algorithm1(s);
  ASSERT_EQ(res.effective_rank, 3u);
  for (std::size_t j = 0; j < 3; ++j)
    EXPECT_GE(res.tau_max + 1e-9, res.d(j, j) / res.c0(j, j));
}

TEST(Algorithm1, DominatesPerColumnAcorLoose) {
  auto s = ou_series(200000, 5, PhaseHermite{2});
  auto res = taumax::tau_max_algorithm1(s);
  double worst = 0.0;
  for (std::size_t j = 0; j < s.m; ++j) {
    std::vector<double> col(s.n);
    for (std::size_t i = 0; i < s.n; ++i) col[i] = s.value(i, j);
    worst = std::max(worst, taumax::acor_tau(col).tau);
  }
  EXPECT_GE(res.tau_max, 0.8 * worst);
}

TEST(Algorithm1, DegreeOnePhaseBlockMatchesAnalytic) {
  std::vector<double> taus;
  for (std::uint64_t c = 0; c < 8; ++c)
    taus.push_back(taumax::tau_max_algorithm1(ou_series(200000, c, PhaseHermite{1})).tau_max);
  auto sp = spread(taus);
  EXPECT_NEAR(sp.mean, kTauHe1, 3.0 * sp.sd / std::sqrt(8.0));
}

TEST(Algorithm1, DegreeTwoPhaseBlockMatchesAnalytic) {
  std::vector<double> taus;
  for (std::uint64_t c = 0; c < 8; ++c)
    taus.push_back(taumax::tau_max_algorithm1(ou_series(200000, c, PhaseHermite{2})).tau_max);
  auto sp = spread(taus);
  EXPECT_NEAR(sp.mean, kBlock2Max, 3.0 * sp.sd / std::sqrt(8.0));
}

// Monomials of total degree <= 2 span both phase blocks; the supremum is
// the slower of the two.
TEST(Algorithm1, DegreeTwoMonomialSpanMatchesAnalytic) {
  std::vector<double> taus;
  for (std::uint64_t c = 0; c < 8; ++c) {
    auto res = taumax::tau_max_algorithm1(ou_series(200000, c, taumax::Monomials{1, 2, false}));
    EXPECT_EQ(res.effective_rank, 5u);
    taus.push_back(res.tau_max);
  }
  auto sp = spread(taus);
  EXPECT_NEAR(sp.mean, kTauHe1, 3.0 * sp.sd / std::sqrt(8.0));
}

TEST(Algorithm2, AgreesWithAlgorithm1) {
  std::vector<double> t2s, diffs;
  for (std::uint64_t c = 0; c < 8; ++c) {
    auto s = ou_series(200000, c, PhaseHermite{2});
    auto a1 = taumax::tau_max_algorithm1(s);
    auto a2 = taumax::tau_max_algorithm2(s);
    t2s.push_back(a2.tau_max);
    diffs.push_back(a1.tau_max - a2.tau_max);

    int max_col_reducs = 0;
    for (std::size_t j = 0; j < s.m; ++j) {
      std::vector<double> col(s.n);
      for (std::size_t i = 0; i < s.n; ++i) col[i] = s.value(i, j);
      max_col_reducs = std::max(max_col_reducs, taumax::acor_tau(col).reducs);
    }
    EXPECT_LE(a2.reducs_used, max_col_reducs);
  }
  auto sp = spread(t2s);
  EXPECT_NEAR(sp.mean, kBlock2Max, 3.0 * sp.sd / std::sqrt(8.0));
  auto dsp = spread(diffs);
  EXPECT_LE(std::abs(dsp.mean), std::max(3.0 * dsp.sd / std::sqrt(8.0), 0.05 * kBlock2Max));
}

// The supremum over a span is invariant under an invertible recombination
// of the basis when the same reduction count is used.
TEST(Algorithm1, BasisChangeInvariance) {
  auto s = ou_series(100000, 6, PhaseHermite{2});
  const double r_mat[3][3] = {{1.0, 1.0, 0.0}, {0.0, 1.0, 1.0}, {1.0, 0.0, 2.0}};
  std::vector<std::vector<double>> cols(3, std::vector<double>(s.n));
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < s.n; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < 3; ++k) acc += r_mat[j][k] * s.value(i, k);
      cols[j][i] = acc;
    }
  auto s2 = make_series(std::move(cols));

  const int reducs = 3;
  auto [d1, c1] = taumax::estimate_matrices(s, reducs);
  auto [d2, c2] = taumax::estimate_matrices(s2, reducs);
  auto e1 = taumax::gen_eig_regularized(d1, c1, 1e-14);
  auto e2 = taumax::gen_eig_regularized(d2, c2, 1e-14);
  ASSERT_EQ(e1.rank, 3u);
  ASSERT_EQ(e2.rank, 3u);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(e1.values[i], e2.values[i], 1e-8 * std::max(1.0, std::abs(e1.values[i])));
}

TEST(Algorithm1, DuplicateColumnHandledByRank) {
  auto grab = [](const PhasePoint& z) { return z.q[0]; };
  auto basis = BasisSet::build(Custom{1, {{"q", grab}, {"q_dup", grab}}});
  auto series = taumax::evaluate_series(basis, ou_traj(200000, 4));
  auto res = taumax::tau_max_algorithm1(series);
  EXPECT_EQ(res.effective_rank, 1u);
  ASSERT_EQ(res.spectrum.size(), 1u);
  EXPECT_NEAR(res.tau_max, kTauHe1, 0.12 * kTauHe1);
  EXPECT_NEAR(quad_form(res.c0, res.x), 1.0, 1e-9);
}

TEST(Algorithm1, AllConstantColumnsThrow) {
  auto basis = BasisSet::build(Custom{1, {{"one", [](const PhasePoint&) { return 1.0; }}}});
  auto series = taumax::evaluate_series(basis, ou_traj(2000, 0));
  EXPECT_THROW(taumax::tau_max_algorithm1(series), taumax::DegenerateBasis);
  EXPECT_THROW(taumax::tau_max_algorithm2(series), taumax::DegenerateBasis);
}

// Differenced noise has a windowed numerator that fluctuates around zero;
// paired with a slow column it forces the shared reduction count high and
// exercises the retry-and-flag path without ever throwing.
TEST(Algorithm1, RetryScanOnDifferencedNoise) {
  int touched = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t n = 1024;
    auto slow = oracles::ar1_series(0.9, n, seed);
    Rng rng(seed, 1);
    std::vector<double> noise(n + 1);
    for (auto& x : noise) x = rng.normal();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = noise[i + 1] - noise[i];
    auto s = make_series({slow, diff});
    auto res = taumax::tau_max_algorithm1(s);
    EXPECT_TRUE(std::isfinite(res.tau_max));
    if (res.retried || res.spectrum_nonpositive) ++touched;
  }
  EXPECT_GT(touched, 0);
}

TEST(Tau2, IidChainGivesOne) {
  const std::size_t n = 100000;
  ReplicaPair pair;
  for (auto* t : {&pair.main, &pair.replica}) {
    t->dim = 1;
    t->length = n;
    t->qdata.resize(n);
    t->pdata.assign(n, 0.0);
  }
  Rng a(77), b(78);
  for (std::size_t i = 0; i < n; ++i) {
    pair.main.qdata[i] = a.normal();
    pair.replica.qdata[i] = b.normal();
  }
  auto est = taumax::tau2_from_replicas(pair, [](const PhasePoint& z) { return z.q[0]; });
  EXPECT_NEAR(est.tau2, 1.0, 0.03);
  EXPECT_NEAR(est.ttv, 0.0, 0.02);
  EXPECT_FALSE(est.contraction_violated);
}

TEST(Tau2, MatchesAnalyticOnExactChain) {
  std::vector<double> taus, sibs;
  for (std::uint64_t c = 0; c < 8; ++c) {
    auto pair = ou_pair(200000, c);
    auto est = taumax::tau2_from_replicas(pair, [](const PhasePoint& z) { return z.q[0]; });
    EXPECT_FALSE(est.contraction_violated);
    taus.push_back(est.tau2);
    sibs.push_back(est.ttv);
  }
  auto tsp = spread(taus);
  EXPECT_NEAR(tsp.mean, kTau2Q, 3.0 * tsp.sd / std::sqrt(8.0));
  auto ssp = spread(sibs);
  EXPECT_NEAR(ssp.mean, kSibQQ, 3.0 * ssp.sd / std::sqrt(8.0));
}

TEST(Tau2, CoefficientPathMatchesFunctionPath) {
  auto pair = ou_pair(50000, 12);
  auto via_fn = taumax::tau2_from_replicas(pair, [](const PhasePoint& z) { return z.q[0]; });
  auto via_coeff = taumax::tau2_from_replicas(pair, q_basis(), {1.0});
  EXPECT_NEAR(via_fn.tau2, via_coeff.tau2, 1e-12 * std::abs(via_fn.tau2));
  EXPECT_NEAR(via_fn.ttv, via_coeff.ttv, 1e-12);
}

TEST(Tau2, ContractionViolationFlagged) {
  const std::size_t n = 20000;
  ReplicaPair pair;
  for (auto* t : {&pair.main, &pair.replica}) {
    t->dim = 1;
    t->length = n;
    t->qdata.resize(n);
    t->pdata.assign(n, 0.0);
  }
  Rng a(5);
  for (std::size_t i = 0; i < n; ++i) {
    pair.main.qdata[i] = a.normal();
    pair.replica.qdata[i] = 2.0 * pair.main.qdata[i];
  }
  auto est = taumax::tau2_from_replicas(pair, [](const PhasePoint& z) { return z.q[0]; });
  EXPECT_TRUE(est.contraction_violated);
}

TEST(Tau2, DegenerateObservableThrows) {
  ReplicaPair pair;
  for (auto* t : {&pair.main, &pair.replica}) {
    t->dim = 1;
    t->length = 10;
    t->qdata.assign(10, 3.0);
    t->pdata.assign(10, 0.0);
  }
  EXPECT_THROW(taumax::tau2_from_replicas(pair, [](const PhasePoint& z) { return z.q[0]; }),
               taumax::DenominatorNonPositive);
}

TEST(Tau2Max, SingleColumnMatchesScalarEstimate) {
  auto pair = ou_pair(50000, 12);
  auto basis = q_basis();
  auto res = taumax::tau2_max_over_basis(pair, basis);
  auto est = taumax::tau2_from_replicas(pair, basis, {1.0});
  EXPECT_NEAR(res.tau_max, est.tau2, 1e-12 * std::abs(est.tau2));
  EXPECT_EQ(res.reducs_used, 0);
  EXPECT_EQ(res.effective_rank, 1u);
}

// On the exact chain the paired-branch eigenproblem has the same worst
// case as the windowed one.
TEST(Tau2Max, DegreeTwoPhaseBlockMatchesAnalytic) {
  std::vector<double> taus;
  for (std::uint64_t c = 0; c < 8; ++c) {
    auto pair = ou_pair(200000, c);
    auto res = taumax::tau2_max_over_basis(pair, BasisSet::build(PhaseHermite{2}));
    EXPECT_NEAR(quad_form(res.c0, res.x), 1.0, 1e-9);
    taus.push_back(res.tau_max);
  }
  auto sp = spread(taus);
  EXPECT_NEAR(sp.mean, kBlock2Max, 3.0 * sp.sd / std::sqrt(8.0));
}

TEST(GammaStar, UnitCovarianceOnExactChain) {
  EXPECT_NEAR(taumax::gamma_star(ou_traj(200000, 1)), 1.0, 0.03);
}

TEST(GammaStar, MassAndTemperatureWiring) {
  const std::size_t n = 50000;
  Trajectory traj;
  traj.dim = 2;
  traj.length = n;
  traj.qdata.resize(2 * n);
  traj.pdata.assign(2 * n, 0.0);
  Rng rng(31);
  for (std::size_t i = 0; i < n; ++i) {
    traj.qdata[2 * i] = 2.0 * rng.normal();
    traj.qdata[2 * i + 1] = rng.normal();
  }
  EXPECT_NEAR(taumax::gamma_star(traj), 0.5, 0.01);
  EXPECT_NEAR(taumax::gamma_star(traj, Matrix::diag({0.25, 1.0})), 1.0, 0.03);
  EXPECT_NEAR(taumax::gamma_star(traj, Matrix::identity(2), 4.0), 0.25, 0.01);
}

TEST(GammaStar, Errors) {
  Trajectory shorttraj;
  shorttraj.dim = 1;
  shorttraj.length = 999;
  shorttraj.qdata.assign(999, 0.0);
  shorttraj.pdata.assign(999, 0.0);
  EXPECT_THROW(taumax::gamma_star(shorttraj), taumax::TooShort);

  Trajectory flat;
  flat.dim = 1;
  flat.length = 2000;
  flat.qdata.assign(2000, 1.0);
  flat.pdata.assign(2000, 0.0);
  EXPECT_THROW(taumax::gamma_star(flat), taumax::DegenerateCovariance);
}
