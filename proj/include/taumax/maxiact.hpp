#pragma once
// Worst-case IAcT over the span of a basis. Two routes: (1) windowed
// matrix estimates D and C0 from a single chain plus a generalized
// eigensolve, with the reduction count chosen per column; (2) a
// window-free estimator built from paired-branch chains, using lag-0,
// lag-1, and sibling-product moments. Also the damping heuristic derived
// from the sample position covariance.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "taumax/iact.hpp"
#include "taumax/numkit.hpp"
#include "taumax/preobs.hpp"
#include "taumax/propagate.hpp"

namespace taumax {

struct DegenerateBasis : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DenominatorNonPositive : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateCovariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MaxIactResult {
  double tau_max = 0.0;
  std::vector<double> x;  // maximizing coefficients, x' C0 x = 1
  Matrix d;
  Matrix c0;  // metric matrix of the eigenproblem (denominator matrix)
  std::vector<double> spectrum;  // descending, restricted to the retained subspace
  int reducs_used = 0;
  bool retried = false;
  std::size_t effective_rank = 0;
  bool spectrum_nonpositive = false;  // diagnostic: numerator not positive definite
};

struct Tau2Estimate {
  double v_var = 0.0;
  double lag1 = 0.0;
  double ttv = 0.0;
  double tau2 = 0.0;
  bool contraction_violated = false;  // sibling product exceeded the variance
};

// Generalized symmetric eigensolve of (a, b) after dropping near-null
// eigendirections of b (threshold rel_tol * trace(b)/m). Eigenvectors are
// mapped back to the full space and satisfy x' b x = 1.
struct RegularizedEig {
  std::vector<double> values;
  Matrix vectors;  // m x rank, one column per retained eigenpair
  std::size_t rank = 0;
};

inline RegularizedEig gen_eig_regularized(const Matrix& a, const Matrix& b,
                                          double rel_tol = 1e-10) {
  const std::size_t m = b.rows();
  double tr = 0.0;
  for (std::size_t i = 0; i < m; ++i) tr += b(i, i);
  if (!(tr > 0.0)) throw DegenerateBasis("metric matrix has non-positive trace");
  const double thresh = rel_tol * tr / double(m);

  EigResult eb = sym_eig(detail::symmetrized(b));
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < m; ++i)
    if (eb.values[i] >= thresh) keep.push_back(i);
  if (keep.empty()) throw DegenerateBasis("metric matrix has no usable eigendirections");
  const std::size_t r = keep.size();

  Matrix vk(m, r);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < m; ++i) vk(i, j) = eb.vectors(i, keep[j]);

  const Matrix asym = detail::symmetrized(a);
  Matrix ar(r, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      double acc = 0.0;
      for (std::size_t u = 0; u < m; ++u)
        for (std::size_t v = 0; v < m; ++v) acc += vk(u, i) * asym(u, v) * vk(v, j);
      ar(i, j) = acc;
    }
  Matrix br(r, r);
  for (std::size_t j = 0; j < r; ++j) br(j, j) = eb.values[keep[j]];

  EigResult ge = gen_sym_eig(ar, br);
  RegularizedEig out;
  out.values = ge.values;
  out.rank = r;
  out.vectors = Matrix(m, r);
  for (std::size_t j = 0; j < r; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t u = 0; u < r; ++u) acc += vk(i, u) * ge.vectors(u, j);
      out.vectors(i, j) = acc;
    }
  return out;
}

namespace detail {

inline std::vector<double> series_column(const BasisSeries& s, std::size_t j) {
  std::vector<double> out(s.n);
  for (std::size_t i = 0; i < s.n; ++i) out[i] = s.value(i, j);
  return out;
}

}  // namespace detail

// Windowed matrix estimates at a common reduction count: C0 is the lag-0
// covariance of the columns, D the symmetrized windowed numerator.
inline std::pair<Matrix, Matrix> estimate_matrices(const BasisSeries& s, int reducs,
                                                   const AcorParams& params = {}) {
  if (s.m < 1 || s.n < 1) throw std::invalid_argument("estimate_matrices: empty series");
  const std::size_t m = s.m;
  Matrix c0(m, m);
  for (std::size_t n = 0; n < s.n; ++n) {
    const double* row = s.values.data() + n * m;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j) c0(i, j) += row[i] * row[j];
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      c0(i, j) /= double(s.n);
      c0(j, i) = c0(i, j);
    }

  std::vector<std::vector<double>> red(m);
  for (std::size_t j = 0; j < m; ++j) {
    red[j] = detail::series_column(s, j);
    for (int r = 0; r < reducs; ++r) red[j] = reduce(red[j]);
  }
  const double scale = detail::pow2(reducs);
  Matrix d(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      const double dij = 0.5 *
                         (detail::windowed_sum(red[i], red[j], params.maxlag) +
                          detail::windowed_sum(red[j], red[i], params.maxlag)) /
                         scale;
      d(i, j) = d(j, i) = dij;
    }
  return {d, c0};
}

namespace detail {

struct ColumnScan {
  std::vector<IactEstimate> estimates;  // entries only for usable columns
  std::vector<std::size_t> usable;
};

inline ColumnScan scan_columns(const BasisSeries& s, const AcorParams& params) {
  ColumnScan scan;
  for (std::size_t j = 0; j < s.m; ++j) {
    if (s.degenerate[j]) continue;
    scan.estimates.push_back(acor_tau(series_column(s, j), std::nullopt, params));
    scan.usable.push_back(j);
  }
  if (scan.usable.empty())
    throw DegenerateBasis("all basis columns are constant along the trajectory");
  return scan;
}

inline MaxIactResult result_from_solve(const Matrix& d, const Matrix& c0,
                                       const RegularizedEig& eig, int reducs) {
  MaxIactResult res;
  res.tau_max = eig.values.front();
  res.spectrum = eig.values;
  res.x.resize(c0.rows());
  for (std::size_t i = 0; i < c0.rows(); ++i) res.x[i] = eig.vectors(i, 0);
  res.d = d;
  res.c0 = c0;
  res.reducs_used = reducs;
  res.effective_rank = eig.rank;
  res.spectrum_nonpositive = eig.values.back() <= 0.0;
  return res;
}

}  // namespace detail

// Route 1: common reducs = max over the per-column estimates; on a
// non-positive spectrum the solve is redone with one reduction fewer,
// repeatedly, stopping at zero (where the diagnostic flag stays set).
inline MaxIactResult tau_max_algorithm1(const BasisSeries& s, const AcorParams& params = {},
                                        double rel_tol = 1e-10) {
  auto scan = detail::scan_columns(s, params);
  int reducs = 0;
  for (const auto& est : scan.estimates) reducs = std::max(reducs, est.reducs);

  bool retried = false;
  for (;;) {
    auto [d, c0] = estimate_matrices(s, reducs, params);
    RegularizedEig eig = gen_eig_regularized(d, c0, rel_tol);
    if (eig.values.back() > 0.0 || reducs == 0) {
      MaxIactResult res = detail::result_from_solve(d, c0, eig, reducs);
      res.retried = retried;
      return res;
    }
    --reducs;
    retried = true;
  }
}

// Route 2: start from the reducs of the column with the largest estimated
// IAcT, solve, re-estimate on the maximizing combination, and repeat while
// the combination's own reduction count keeps decreasing.
inline MaxIactResult tau_max_algorithm2(const BasisSeries& s, const AcorParams& params = {},
                                        double rel_tol = 1e-10) {
  auto scan = detail::scan_columns(s, params);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scan.estimates.size(); ++i)
    if (scan.estimates[i].tau > scan.estimates[best].tau) best = i;
  int reducs = scan.estimates[best].reducs;

  bool iterated = false;
  for (;;) {
    auto [d, c0] = estimate_matrices(s, reducs, params);
    RegularizedEig eig = gen_eig_regularized(d, c0, rel_tol);
    MaxIactResult res = detail::result_from_solve(d, c0, eig, reducs);
    res.retried = iterated;

    std::vector<double> w(s.n, 0.0);
    for (std::size_t n = 0; n < s.n; ++n) {
      const double* row = s.values.data() + n * s.m;
      double acc = 0.0;
      for (std::size_t j = 0; j < s.m; ++j) acc += res.x[j] * row[j];
      w[n] = acc;
    }
    const IactEstimate west = acor_tau(w, std::nullopt, params);
    if (west.reducs < reducs) {
      reducs = west.reducs;
      iterated = true;
      continue;
    }
    return res;
  }
}

namespace detail {

inline Tau2Estimate tau2_from_centered(const std::vector<double>& a,
                                       const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n < 2 || b.size() != n) throw std::invalid_argument("tau2: need aligned series");
  double vv = 0.0, tt = 0.0, tt2 = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    vv += a[i] * a[i];
    const double prod = a[i] * b[i];
    tt += prod;
    tt2 += prod * prod;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) l1 += a[i] * a[i + 1];
  Tau2Estimate est;
  est.v_var = vv / double(n);
  est.ttv = tt / double(n);
  est.lag1 = l1 / double(n - 1);
  const double prod_var = tt2 / double(n) - est.ttv * est.ttv;
  est.contraction_violated =
      est.ttv > est.v_var + 4.0 * std::sqrt(std::max(prod_var, 0.0) / double(n));
  const double den = est.v_var - 2.0 * est.lag1 + est.ttv;
  if (!(den > 0.0))
    throw DenominatorNonPositive("tau2: denominator not positive; more data needed");
  est.tau2 = (est.v_var - est.ttv) / den;
  return est;
}

inline std::vector<double> centered_eval(const Trajectory& t,
                                         const std::function<double(const PhasePoint&)>& v) {
  std::vector<double> out(t.length);
  double mean = 0.0;
  for (std::size_t i = 0; i < t.length; ++i) {
    out[i] = v(t.state(i));
    mean += out[i];
  }
  mean /= double(t.length);
  for (auto& x : out) x -= mean;
  return out;
}

}  // namespace detail

// Window-free IAcT of a scalar observable from a paired-branch chain.
inline Tau2Estimate tau2_from_replicas(const ReplicaPair& pair,
                                       const std::function<double(const PhasePoint&)>& v) {
  if (pair.main.length != pair.replica.length)
    throw std::invalid_argument("tau2: replica not aligned with main chain");
  return detail::tau2_from_centered(detail::centered_eval(pair.main, v),
                                    detail::centered_eval(pair.replica, v));
}

inline Tau2Estimate tau2_from_replicas(const ReplicaPair& pair, const BasisSet& basis,
                                       const std::vector<double>& coeffs) {
  if (coeffs.size() != basis.size())
    throw std::invalid_argument("tau2: coefficient count must match basis size");
  auto combine = [&](const Trajectory& t) {
    BasisSeries s = evaluate_series(basis, t);
    std::vector<double> out(s.n, 0.0);
    for (std::size_t n = 0; n < s.n; ++n) {
      const double* row = s.values.data() + n * s.m;
      double acc = 0.0;
      for (std::size_t j = 0; j < s.m; ++j) acc += coeffs[j] * row[j];
      out[n] = acc;
    }
    return out;
  };
  if (pair.main.length != pair.replica.length)
    throw std::invalid_argument("tau2: replica not aligned with main chain");
  return detail::tau2_from_centered(combine(pair.main), combine(pair.replica));
}

// Worst case of the window-free estimator over a basis: maximize
// x'(V - W)x / x'(V - 2L + W)x with V the lag-0 covariance, L the
// symmetrized lag-1 covariance, and W the symmetrized sibling-product
// matrix. The returned c0 field holds the denominator (metric) matrix.
inline MaxIactResult tau2_max_over_basis(const ReplicaPair& pair, const BasisSet& basis,
                                         double rel_tol = 1e-10) {
  if (pair.main.length != pair.replica.length)
    throw std::invalid_argument("tau2: replica not aligned with main chain");
  const BasisSeries um = evaluate_series(basis, pair.main);
  const BasisSeries ur = evaluate_series(basis, pair.replica);
  const std::size_t m = um.m, n = um.n;
  if (n < 2) throw std::invalid_argument("tau2: need at least two samples");

  Matrix v(m, m), w0(m, m), lag(m, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* a = um.values.data() + i * m;
    const double* b = ur.values.data() + i * m;
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < m; ++c) {
        v(r, c) += a[r] * a[c];
        w0(r, c) += a[r] * b[c];
      }
    if (i + 1 < n) {
      const double* nxt = um.values.data() + (i + 1) * m;
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < m; ++c) lag(r, c) += a[r] * nxt[c];
    }
  }
  v = (1.0 / double(n)) * v;
  w0 = (1.0 / double(n)) * w0;
  lag = (1.0 / double(n - 1)) * lag;
  const Matrix w = detail::symmetrized(w0);
  const Matrix l = detail::symmetrized(lag);
  const Matrix num = v - w;
  Matrix den = v - l - l + w;

  RegularizedEig eig = gen_eig_regularized(num, den, rel_tol);
  MaxIactResult res = detail::result_from_solve(num, den, eig, 0);
  return res;
}

// Damping heuristic from the sample position covariance: the slowest
// effective frequency is 1/sqrt(beta * lambda_max(Cov[Q] M)), estimated
// through the symmetric product L' Cov L with L the Cholesky factor of M.
inline double gamma_star(const Trajectory& traj, const Matrix& mass = Matrix(),
                         double beta = 1.0) {
  if (traj.length < 1000) throw TooShort("gamma_star: need at least 1000 samples");
  if (!(beta > 0.0)) throw std::invalid_argument("gamma_star: beta must be positive");
  const std::size_t d = traj.dim;
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < traj.length; ++i)
    for (std::size_t c = 0; c < d; ++c) mean[c] += traj.q(i, c);
  for (auto& x : mean) x /= double(traj.length);
  Matrix cov(d, d);
  for (std::size_t i = 0; i < traj.length; ++i)
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = r; c < d; ++c)
        cov(r, c) += (traj.q(i, r) - mean[r]) * (traj.q(i, c) - mean[c]);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = r; c < d; ++c) {
      cov(r, c) /= double(traj.length);
      cov(c, r) = cov(r, c);
    }

  double lam;
  if (mass.rows() == 0) {
    lam = sym_eig(detail::symmetrized(cov)).values.front();
  } else {
    detail::require_symmetric(mass, "gamma_star mass");
    const Matrix lch = cholesky(mass);
    const Matrix prod = lch.transpose() * cov * lch;
    lam = sym_eig(detail::symmetrized(prod)).values.front();
  }
  if (!(lam > 0.0)) throw DegenerateCovariance("gamma_star: position covariance is degenerate");
  return 1.0 / std::sqrt(beta * lam);
}

}  // namespace taumax
