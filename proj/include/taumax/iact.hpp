#pragma once
// Scalar integrated autocorrelation time estimation by recursive pairwise
// reduction, plus the windowed cross-covariance building blocks used by the
// matrix estimators. A short-lag windowed sum estimates the asymptotic
// variance; when the implied tau is too large for the window, adjacent
// samples are summed pairwise and the procedure repeats on the half-length
// series. The final tau always refers to the variance of the original
// series, so the reduced-window numerator is rescaled by 2^reducs.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace taumax {

struct TooShort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LagTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateSeries : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AcorParams {
  int maxlag = 10;   // window length of the short-lag covariance sum
  int winmult = 5;   // a level is reliable once tau_level * winmult <= maxlag
  int minfac = 10;   // never reduce below minfac * maxlag samples
};

struct IactEstimate {
  double tau = 0.0;
  int reducs = 0;
  double d_hat = 0.0;   // windowed numerator rescaled to original units
  double c0_hat = 0.0;  // variance of the original series
  std::size_t n_effective = 0;  // length of the series at the final level
  bool window_converged = true;  // false when capped by series length
};

inline double cross_cov(const std::vector<double>& a, const std::vector<double>& b,
                        std::size_t lag) {
  if (a.size() != b.size()) throw std::invalid_argument("cross_cov: length mismatch");
  const std::size_t n = a.size();
  if (lag >= n) throw LagTooLarge("cross_cov: lag must be below the series length");
  double acc = 0.0;
  for (std::size_t i = 0; i + lag < n; ++i) acc += a[i] * b[i + lag];
  return acc / double(n - lag);
}

inline std::vector<double> reduce(const std::vector<double>& s) {
  if (s.size() < 2) throw TooShort("reduce: need at least two samples");
  std::vector<double> out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s[2 * i] + s[2 * i + 1];
  return out;
}

namespace detail {

// C(0) + 2 sum_{k=1..maxlag} C(k) on one level.
inline double windowed_sum(const std::vector<double>& a, const std::vector<double>& b,
                           int maxlag) {
  if (a.size() <= std::size_t(maxlag)) throw TooShort("windowed sum: series shorter than window");
  double d = cross_cov(a, b, 0);
  for (int k = 1; k <= maxlag; ++k) d += 2.0 * cross_cov(a, b, std::size_t(k));
  return d;
}

inline double pow2(int r) {
  double v = 1.0;
  for (int i = 0; i < r; ++i) v *= 2.0;
  return v;
}

}  // namespace detail

inline IactEstimate acor_tau(const std::vector<double>& s,
                             std::optional<int> forced_reducs = std::nullopt,
                             const AcorParams& params = {}) {
  const std::size_t n = s.size();
  if (n < std::size_t(params.minfac) * std::size_t(params.maxlag))
    throw TooShort("acor_tau: series shorter than minfac * maxlag");
  const double c0 = cross_cov(s, s, 0);
  if (c0 <= 0.0) throw DegenerateSeries("acor_tau: series has no variance");

  IactEstimate est;
  est.c0_hat = c0;
  std::vector<double> cur = s;

  if (forced_reducs) {
    if (*forced_reducs < 0) throw std::invalid_argument("acor_tau: negative reduction count");
    for (int r = 0; r < *forced_reducs; ++r) cur = reduce(cur);
    est.reducs = *forced_reducs;
    const double d = detail::windowed_sum(cur, cur, params.maxlag);
    est.window_converged = (d / cross_cov(cur, cur, 0)) * params.winmult <= params.maxlag;
    est.d_hat = d / detail::pow2(est.reducs);
  } else {
    for (;;) {
      const double d = detail::windowed_sum(cur, cur, params.maxlag);
      const double tau_level = d / cross_cov(cur, cur, 0);
      if (tau_level * params.winmult <= params.maxlag) {
        est.window_converged = true;
        est.d_hat = d / detail::pow2(est.reducs);
        break;
      }
      if (cur.size() / 2 < std::size_t(params.minfac) * std::size_t(params.maxlag)) {
        est.window_converged = false;
        est.d_hat = d / detail::pow2(est.reducs);
        break;
      }
      cur = reduce(cur);
      ++est.reducs;
    }
  }
  est.n_effective = cur.size();
  est.tau = est.d_hat / c0;
  return est;
}

// Symmetrized windowed cross sum after lockstep reduction of both series,
// rescaled to original units. Bilinear in (a, b) and symmetric under swap.
inline double cross_D(const std::vector<double>& a, const std::vector<double>& b, int reducs,
                      const AcorParams& params = {}) {
  if (a.size() != b.size()) throw std::invalid_argument("cross_D: length mismatch");
  if (reducs < 0) throw std::invalid_argument("cross_D: negative reduction count");
  std::vector<double> ra = a, rb = b;
  for (int r = 0; r < reducs; ++r) {
    ra = reduce(ra);
    rb = reduce(rb);
  }
  const double dab = detail::windowed_sum(ra, rb, params.maxlag);
  const double dba = detail::windowed_sum(rb, ra, params.maxlag);
  return 0.5 * (dab + dba) / detail::pow2(reducs);
}

}  // namespace taumax
