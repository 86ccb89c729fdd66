#pragma once
// Closed-form results for the damped harmonic model in dimensionless units:
// mode-coupling matrices, exact integrated autocorrelation times of Hermite
// modes, their leading small-step coefficients, and optimal-damping constants.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "taumax/numkit.hpp"

namespace taumax {

struct AllZero : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModeSpec {
  int k;         // Hermite block degree, >= 1
  double gamma;  // damping over frequency
  double dt;     // step times frequency
};

inline void validate(const ModeSpec& s) {
  if (s.k < 1) throw std::invalid_argument("ModeSpec: k must be >= 1");
  if (!(s.gamma > 0.0)) throw std::invalid_argument("ModeSpec: gamma must be positive");
  if (!(s.dt > 0.0)) throw std::invalid_argument("ModeSpec: dt must be positive");
}

// (k+1)x(k+1) mode-coupling matrix; row/column 1 is the pure position mode.
// The off-diagonal sign alternates with k, which is what makes the k=1 and
// k=2 inverses take their standard closed forms.
inline Matrix build_A(int k, double gamma) {
  if (k < 1) throw std::invalid_argument("build_A: k must be >= 1");
  const double sgn = (k % 2 == 1) ? 1.0 : -1.0;
  Matrix a(k + 1, k + 1);
  for (int i = 1; i <= k + 1; ++i) {
    a(i - 1, i - 1) = -(i - 1) * gamma;
    if (i <= k) {
      a(i - 1, i) = sgn * (k - i + 1);
      a(i, i - 1) = -sgn * i;
    }
  }
  return a;
}

// diag(k!0!, (k-1)!1!, ..., 0!k!): stationary covariance of the normalized
// degree-k Hermite block.
inline Matrix c_k0(int k) {
  if (k < 1) throw std::invalid_argument("c_k0: k must be >= 1");
  std::vector<double> f(k + 1, 1.0);
  for (int i = 1; i <= k; ++i) f[i] = f[i - 1] * i;
  std::vector<double> d(k + 1);
  for (int j = 0; j <= k; ++j) d[j] = f[k - j] * f[j];
  return Matrix::diag(d);
}

// Adjoint-generator matrix of the block: B_k = C_{k,0}^{-1} A_k^T C_{k,0}.
inline Matrix b_matrix(int k, double gamma) {
  Matrix c = c_k0(k);
  Matrix cinv = c;
  for (std::size_t i = 0; i < cinv.rows(); ++i) cinv(i, i) = 1.0 / cinv(i, i);
  return cinv * build_A(k, gamma).transpose() * c;
}

// Asymptotic-variance matrix of the degree-k block at step dt:
// D_k = C_{k,0} coth(-(dt/2) A_k^T). Its (1,1) entry over (C_{k,0})_{11}
// is tau of the pure degree-k mode.
inline Matrix d_matrix(int k, double gamma, double dt) {
  return c_k0(k) * mat_coth_apply(build_A(k, gamma).transpose() * (-dt / 2.0));
}

// Exact integrated autocorrelation time of the degree-k Hermite mode.
inline double tau_hermite(const ModeSpec& s) {
  validate(s);
  Matrix x = mat_coth_apply(build_A(s.k, s.gamma) * (-s.dt / 2.0));
  return x(0, 0);
}

// tau of a Hermite expansion: weights k! c_k^2 over modes k = 1, 2, ...
// coeffs[i] is the coefficient of mode i+1.
inline double tau_of_expansion(const std::vector<double>& coeffs, double gamma, double dt) {
  double num = 0.0, den = 0.0;
  double fact = 1.0;
  bool any = false;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    int k = static_cast<int>(i) + 1;
    fact *= k;
    if (coeffs[i] == 0.0) continue;
    any = true;
    double w = fact * coeffs[i] * coeffs[i];
    num += w * tau_hermite({k, gamma, dt});
    den += w;
  }
  if (!any) throw AllZero("tau_of_expansion: all coefficients are zero");
  return num / den;
}

// Leading coefficient of tau(mode k) in the small-step limit:
// T_k(gamma) = -2 (A_k^{-1})_{11}, via one linear solve.
inline double t_leading(int k, double gamma) {
  Matrix a = build_A(k, gamma);
  std::vector<double> e1(k + 1, 0.0);
  e1[0] = 1.0;
  std::vector<double> x = solve(a, e1);
  return -2.0 * x[0];
}

// Damping that minimizes the worst configurational tau, in units of the
// lowest frequency.
inline double optimal_gamma(double omega1) {
  if (!(omega1 > 0.0)) throw std::invalid_argument("optimal_gamma: omega1 must be positive");
  return omega1;
}

// Same for the phase-space criterion: sqrt(6)/2 times the lowest frequency.
inline constexpr double phase_criterion_factor = 1.2247448713915890;

inline double optimal_gamma_phase(double omega1) {
  if (!(omega1 > 0.0)) throw std::invalid_argument("optimal_gamma_phase: omega1 must be positive");
  return phase_criterion_factor * omega1;
}

// Largest tau over the whole degree-k block: top generalized eigenvalue of
// (sym(D_k), C_{k,0}).
inline double tau_max_block(int k, double gamma, double dt) {
  Matrix d = d_matrix(k, gamma, dt);
  Matrix s = detail::symmetrized(d);
  return gen_sym_eig(s, c_k0(k)).values[0];
}

}  // namespace taumax
