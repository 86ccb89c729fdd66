#pragma once
// Potential energy models and simulation parameters for Langevin sampling.
//
// Three model families:
//   quadratic    V(q) = q'Kq/2 with a symmetric stiffness K
//   quartic_wave V(q) = q^4/4 + sin(1+5q), one-dimensional
//   gauss3       mixture of three unit Gaussians at the vertices of an
//                equilateral triangle of circumradius d, V = -log(sum)
//
// Energies and analytic forces are exposed as free functions; the mixture
// energy is evaluated with a max-shifted log-sum-exp and its force as a
// softmax-weighted combination of the per-center restoring forces, so both
// stay finite for any separation and any point.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "taumax/numkit.hpp"

namespace taumax {

struct SimParams {
  double gamma = 1.0;
  double beta = 1.0;
  double dt = 0.01;
  Matrix mass;  // empty means identity
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;
  std::size_t n_steps = 1;
};

inline void validate(const SimParams& p) {
  if (!(p.gamma > 0.0)) throw std::invalid_argument("sim params: gamma must be positive");
  if (!(p.beta > 0.0)) throw std::invalid_argument("sim params: beta must be positive");
  if (!(p.dt > 0.0)) throw std::invalid_argument("sim params: dt must be positive");
  if (p.n_steps < 1) throw std::invalid_argument("sim params: n_steps must be at least 1");
  if (p.mass.rows() > 0) detail::require_symmetric(p.mass, "sim params: mass");
}

// Cholesky factor of the mass matrix at the model's dimension, identity if unset.
inline Matrix mass_chol(const SimParams& p, std::size_t dim) {
  if (p.mass.rows() == 0) return Matrix::identity(dim);
  if (p.mass.rows() != dim)
    throw std::invalid_argument("sim params: mass dimension does not match model");
  return cholesky(p.mass);
}

struct PhasePoint {
  std::vector<double> q;
  std::vector<double> p;
};

class PotentialModel {
 public:
  enum class Kind { Quadratic, QuarticWave, Gauss3 };

  static PotentialModel quadratic(Matrix stiffness) {
    detail::require_symmetric(stiffness, "quadratic stiffness");
    PotentialModel m;
    m.kind_ = Kind::Quadratic;
    m.dim_ = stiffness.rows();
    m.stiffness_ = std::move(stiffness);
    return m;
  }

  static PotentialModel quartic_wave() {
    PotentialModel m;
    m.kind_ = Kind::QuarticWave;
    m.dim_ = 1;
    return m;
  }

  static PotentialModel gauss3(double separation) {
    if (!(separation >= 0.0)) throw std::invalid_argument("gauss3: separation must be >= 0");
    PotentialModel m;
    m.kind_ = Kind::Gauss3;
    m.dim_ = 2;
    m.separation_ = separation;
    return m;
  }

  Kind kind() const { return kind_; }
  std::size_t dimension() const { return dim_; }

  const Matrix& stiffness() const {
    if (kind_ != Kind::Quadratic) throw std::logic_error("stiffness: not a quadratic model");
    return stiffness_;
  }

  double separation() const {
    if (kind_ != Kind::Gauss3) throw std::logic_error("separation: not a gauss3 model");
    return separation_;
  }

  // Centers of the three mixture components.
  std::vector<std::vector<double>> centers() const {
    const double d = separation();
    const double h = 0.8660254037844386;  // sqrt(3)/2
    return {{d, 0.0}, {-0.5 * d, h * d}, {-0.5 * d, -h * d}};
  }

 private:
  Kind kind_ = Kind::QuarticWave;
  std::size_t dim_ = 1;
  Matrix stiffness_;
  double separation_ = 0.0;
};

namespace detail {

inline void require_dim(const PotentialModel& m, const std::vector<double>& q) {
  if (q.size() != m.dimension()) throw std::invalid_argument("model: wrong position dimension");
}

}  // namespace detail

inline double energy(const PotentialModel& m, const std::vector<double>& q) {
  detail::require_dim(m, q);
  switch (m.kind()) {
    case PotentialModel::Kind::Quadratic: {
      const Matrix& k = m.stiffness();
      double v = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i)
        for (std::size_t j = 0; j < q.size(); ++j) v += q[i] * k(i, j) * q[j];
      return 0.5 * v;
    }
    case PotentialModel::Kind::QuarticWave: {
      const double x = q[0];
      return 0.25 * x * x * x * x + std::sin(1.0 + 5.0 * x);
    }
    case PotentialModel::Kind::Gauss3: {
      const auto cs = m.centers();
      double a[3];
      double amax = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < 3; ++i) {
        const double dx = q[0] - cs[i][0];
        const double dy = q[1] - cs[i][1];
        a[i] = -0.5 * (dx * dx + dy * dy);
        amax = std::max(amax, a[i]);
      }
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += std::exp(a[i] - amax);
      return -(amax + std::log(s));
    }
  }
  throw std::logic_error("energy: unknown model kind");
}

inline std::vector<double> force(const PotentialModel& m, const std::vector<double>& q) {
  detail::require_dim(m, q);
  switch (m.kind()) {
    case PotentialModel::Kind::Quadratic: {
      const Matrix& k = m.stiffness();
      std::vector<double> f(q.size(), 0.0);
      for (std::size_t i = 0; i < q.size(); ++i)
        for (std::size_t j = 0; j < q.size(); ++j) f[i] -= k(i, j) * q[j];
      return f;
    }
    case PotentialModel::Kind::QuarticWave: {
      const double x = q[0];
      return {-(x * x * x + 5.0 * std::cos(1.0 + 5.0 * x))};
    }
    case PotentialModel::Kind::Gauss3: {
      const auto cs = m.centers();
      double a[3];
      double amax = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < 3; ++i) {
        const double dx = q[0] - cs[i][0];
        const double dy = q[1] - cs[i][1];
        a[i] = -0.5 * (dx * dx + dy * dy);
        amax = std::max(amax, a[i]);
      }
      double w[3], s = 0.0;
      for (int i = 0; i < 3; ++i) {
        w[i] = std::exp(a[i] - amax);
        s += w[i];
      }
      std::vector<double> f(2, 0.0);
      for (int i = 0; i < 3; ++i) {
        const double wi = w[i] / s;
        f[0] -= wi * (q[0] - cs[i][0]);
        f[1] -= wi * (q[1] - cs[i][1]);
      }
      return f;
    }
  }
  throw std::logic_error("force: unknown model kind");
}

}  // namespace taumax
