#include "taumax/iact.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "taumax/analytic.hpp"
#include "taumax/preobs.hpp"

using taumax::AcorParams;
using taumax::BasisSet;
using taumax::Hermite1D;
using taumax::PotentialModel;
using taumax::Rng;
using taumax::SimParams;
using taumax::SimulateOptions;
using taumax::StepperKind;

namespace {

std::vector<double> centered_normals(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> s(n);
  double mean = 0.0;
  for (auto& x : s) {
    x = rng.normal();
    mean += x;
  }
  mean /= double(n);
  for (auto& x : s) x -= mean;
  return s;
}

taumax::BasisSeries ou_hermite_series(std::size_t n, std::uint64_t stream, int max_degree) {
  SimParams p;
  p.gamma = 2.0;
  p.dt = 0.5;
  p.seed = 515;
  p.n_steps = n;
  p.burn_in = 1000;
  SimulateOptions opt;
  opt.stepper = StepperKind::OuExact;
  opt.stream = stream;
  auto model = PotentialModel::quadratic(taumax::Matrix::identity(1));
  auto traj = taumax::simulate(model, p, opt);
  return taumax::evaluate_series(BasisSet::build(Hermite1D{max_degree}), traj);
}

std::vector<double> column(const taumax::BasisSeries& s, std::size_t j) {
  std::vector<double> out(s.n);
  for (std::size_t i = 0; i < s.n; ++i) out[i] = s.value(i, j);
  return out;
}

}  // namespace

TEST(CrossCov, HandValues) {
  std::vector<double> a = {1.0, -1.0, 1.0, -1.0};
  EXPECT_DOUBLE_EQ(taumax::cross_cov(a, a, 0), 1.0);
  EXPECT_DOUBLE_EQ(taumax::cross_cov(a, a, 1), -1.0);
  EXPECT_DOUBLE_EQ(taumax::cross_cov(a, a, 3), -1.0);
  EXPECT_THROW(taumax::cross_cov(a, a, 4), taumax::LagTooLarge);
  std::vector<double> b = {1.0, 2.0};
  EXPECT_THROW(taumax::cross_cov(a, b, 0), std::invalid_argument);
}

TEST(CrossCov, IndependentSeriesDecorrelated) {
  const std::size_t n = 100000;
  auto a = centered_normals(n, 21);
  auto b = centered_normals(n, 22);
  EXPECT_LE(std::abs(taumax::cross_cov(a, b, 0)), 4.0 / std::sqrt(double(n)));
}

TEST(Reduce, PairSumsAndOddTail) {
  std::vector<double> s = {1.0, 2.0, 3.0, 4.0};
  auto r = taumax::reduce(s);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_DOUBLE_EQ(r[0], 3.0);
  EXPECT_DOUBLE_EQ(r[1], 7.0);
  auto r3 = taumax::reduce({1.0, 2.0, 3.0});
  ASSERT_EQ(r3.size(), 1u);
  EXPECT_DOUBLE_EQ(r3[0], 3.0);
  EXPECT_THROW(taumax::reduce({1.0}), taumax::TooShort);
}

TEST(Reduce, DoublesIidVariance) {
  const std::size_t n = 200000;
  auto s = centered_normals(n, 23);
  auto r = taumax::reduce(s);
  EXPECT_NEAR(taumax::cross_cov(r, r, 0), 2.0, 0.04);
}

TEST(AcorTau, WhiteNoiseIsOne) {
  const std::size_t n = 1000000;
  auto s = centered_normals(n, 31);
  auto est = taumax::acor_tau(s);
  EXPECT_NEAR(est.tau, 1.0, 0.05);
  EXPECT_EQ(est.reducs, 0);
  EXPECT_TRUE(est.window_converged);
  EXPECT_EQ(est.n_effective, n);
  EXPECT_NEAR(est.c0_hat, 1.0, 0.01);
}

TEST(AcorTau, Ar1ModerateCorrelation) {
  auto s = oracles::ar1_series(0.5, 1000000, 41);
  double mean = std::accumulate(s.begin(), s.end(), 0.0) / double(s.size());
  for (auto& x : s) x -= mean;
  auto est = taumax::acor_tau(s);
  EXPECT_NEAR(est.tau, 3.0, 0.15);
}

TEST(AcorTau, Ar1StrongCorrelationNeedsReductions) {
  const std::size_t n = 1000000;
  auto s = oracles::ar1_series(0.9, n, 42);
  double mean = std::accumulate(s.begin(), s.end(), 0.0) / double(s.size());
  for (auto& x : s) x -= mean;
  auto est = taumax::acor_tau(s);
  EXPECT_NEAR(est.tau, 19.0, 1.9);
  EXPECT_GE(est.reducs, 3);
  EXPECT_LE(est.reducs, 5);
  EXPECT_TRUE(est.window_converged);
  EXPECT_EQ(est.n_effective, n >> est.reducs);
}

TEST(AcorTau, ScaleEquivariant) {
  auto s = oracles::ar1_series(0.7, 200000, 43);
  double mean = std::accumulate(s.begin(), s.end(), 0.0) / double(s.size());
  for (auto& x : s) x -= mean;
  auto base = taumax::acor_tau(s);
  auto scaled = s;
  for (auto& x : scaled) x *= 128.0;  // exact in binary
  auto est = taumax::acor_tau(scaled);
  EXPECT_EQ(est.reducs, base.reducs);
  EXPECT_DOUBLE_EQ(est.tau, base.tau);
  EXPECT_DOUBLE_EQ(est.c0_hat, base.c0_hat * 128.0 * 128.0);
}

TEST(AcorTau, ForcedReductionsMatchAuto) {
  auto s = oracles::ar1_series(0.8, 400000, 44);
  double mean = std::accumulate(s.begin(), s.end(), 0.0) / double(s.size());
  for (auto& x : s) x -= mean;
  auto autoest = taumax::acor_tau(s);
  auto forced = taumax::acor_tau(s, autoest.reducs);
  EXPECT_DOUBLE_EQ(forced.tau, autoest.tau);
  EXPECT_DOUBLE_EQ(forced.d_hat, autoest.d_hat);
  EXPECT_EQ(forced.n_effective, autoest.n_effective);
  EXPECT_TRUE(forced.window_converged);
}

TEST(AcorTau, Errors) {
  std::vector<double> shortie(99, 0.5);
  EXPECT_THROW(taumax::acor_tau(shortie), taumax::TooShort);
  std::vector<double> flat(1000, 0.0);
  EXPECT_THROW(taumax::acor_tau(flat), taumax::DegenerateSeries);
  auto s = centered_normals(1000, 45);
  EXPECT_THROW(taumax::acor_tau(s, 20), taumax::TooShort);
  EXPECT_THROW(taumax::acor_tau(s, 7), taumax::TooShort);
  EXPECT_THROW(taumax::acor_tau(s, -1), std::invalid_argument);
}

TEST(CrossD, DiagonalMatchesAcorNumerator) {
  auto s = oracles::ar1_series(0.6, 100000, 46);
  double mean = std::accumulate(s.begin(), s.end(), 0.0) / double(s.size());
  for (auto& x : s) x -= mean;
  auto est = taumax::acor_tau(s);
  const double d = taumax::cross_D(s, s, est.reducs);
  EXPECT_NEAR(d, est.d_hat, 1e-12 * std::abs(est.d_hat));
  EXPECT_NEAR(d / est.c0_hat, est.tau, 1e-12);
}

TEST(CrossD, BilinearAndSymmetric) {
  auto a = centered_normals(5000, 47);
  auto b = oracles::ar1_series(0.4, 5000, 48);
  double mean = std::accumulate(b.begin(), b.end(), 0.0) / double(b.size());
  for (auto& x : b) x -= mean;

  const double dab = taumax::cross_D(a, b, 2);
  EXPECT_DOUBLE_EQ(taumax::cross_D(b, a, 2), dab);

  auto nega = a;
  for (auto& x : nega) x = -x;
  EXPECT_DOUBLE_EQ(taumax::cross_D(nega, b, 2), -dab);
  EXPECT_DOUBLE_EQ(taumax::cross_D(nega, a, 2), -taumax::cross_D(a, a, 2));

  auto b2 = b;
  for (auto& x : b2) x *= 2.0;
  EXPECT_DOUBLE_EQ(taumax::cross_D(a, b2, 2), 2.0 * dab);
}

TEST(CrossD, OrthogonalHermiteModesGiveZero) {
  // modes of different degree evolve in mutually orthogonal subspaces, so
  // the windowed cross numerator has zero mean; check over 8 chains
  const int chains = 8;
  std::vector<double> vals(chains);
  for (int c = 0; c < chains; ++c) {
    auto series = ou_hermite_series(100000, std::uint64_t(c), 2);
    auto a = column(series, 0);
    auto b = column(series, 1);
    const int r = std::max(taumax::acor_tau(a).reducs, taumax::acor_tau(b).reducs);
    vals[c] = taumax::cross_D(a, b, r);
  }
  double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / chains;
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= (chains - 1);
  EXPECT_LE(std::abs(mean), 4.0 * std::sqrt(var / chains));
}

TEST(AcorTau, MixedHermiteMatchesAnalyticValue) {
  // u proportional to He3/sqrt(3!) - He2/sqrt(2!) on the exact chain at
  // gamma=2, dt=0.5; the weighted-mode average gives tau(u)
  const double expected = taumax::tau_of_expansion(
      {0.0, -1.0 / std::sqrt(2.0), 1.0 / std::sqrt(6.0)}, 2.0, 0.5);
  EXPECT_NEAR(expected, 4.42779831527049, 1e-10);

  const int chains = 8;
  std::vector<double> taus(chains);
  for (int c = 0; c < chains; ++c) {
    auto series = ou_hermite_series(200000, 100 + std::uint64_t(c), 3);
    std::vector<double> u(series.n);
    for (std::size_t i = 0; i < series.n; ++i)
      u[i] = series.value(i, 2) / std::sqrt(6.0) - series.value(i, 1) / std::sqrt(2.0);
    taus[c] = taumax::acor_tau(u).tau;
  }
  double mean = std::accumulate(taus.begin(), taus.end(), 0.0) / chains;
  double var = 0.0;
  for (double t : taus) var += (t - mean) * (t - mean);
  var /= (chains - 1);
  const double stderr_mean = std::sqrt(var / chains);
  EXPECT_NEAR(mean, expected, 3.0 * stderr_mean);
}
