#pragma once
// Basis (preobservable) construction and evaluation along trajectories.
// A basis is a row of scalar functions of the phase point; series
// evaluation produces the column-centered value matrix the estimators
// consume, with empirical means kept alongside.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "taumax/propagate.hpp"

namespace taumax {

struct EmptyBasis : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Probabilists' Hermite polynomial by the three-term recurrence
// He_{k+1}(x) = x He_k(x) - k He_{k-1}(x).
inline double hermite(int k, double x) {
  if (k < 0) throw std::invalid_argument("hermite: negative degree");
  double prev = 1.0, cur = x;
  if (k == 0) return prev;
  for (int j = 1; j < k; ++j) {
    double next = x * cur - j * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

// One-dimensional position basis He_1(q) .. He_max(q).
struct Hermite1D {
  int max_degree = 0;
};

// Phase-space products He_a(q) He_b(p) with a+b = degree, a descending.
struct PhaseHermite {
  int degree = 0;
};

// All monomials of total degree 1..max_degree in the position coordinates,
// or in positions and momenta when positions_only is false. Degree-0 is
// excluded. Ordered by total degree, then lexicographically with earlier
// coordinates' exponents descending first.
struct Monomials {
  std::size_t dimension = 1;
  int max_degree = 0;
  bool positions_only = true;
};

// Membership indicators of the three planar sectors around the triple-well
// centers: a = {|y| <= sqrt(3) x}, b = {y >= 0 and y >= sqrt(3) x},
// c = {y <= 0 and y <= -sqrt(3) x}. Boundary points go to the first match
// in the order a, b, c.
struct Indicators {};

struct BasisFunction {
  std::string name;
  std::function<double(const PhasePoint&)> fn;
};

struct Custom {
  std::size_t dimension = 1;
  std::vector<BasisFunction> functions;
};

using BasisDescriptor = std::variant<Hermite1D, PhaseHermite, Monomials, Indicators, Custom>;

class BasisSet {
 public:
  static BasisSet build(const BasisDescriptor& d);

  std::size_t size() const { return names_.size(); }
  std::size_t dimension() const { return dim_; }
  const std::string& name(std::size_t j) const { return names_[j]; }

  // Evaluate the basis row at one phase point.
  std::vector<double> evaluate(const PhasePoint& z) const {
    if (z.q.size() != dim_ || z.p.size() != dim_)
      throw std::invalid_argument("basis: wrong state dimension");
    std::vector<double> out(size());
    evaluate_raw(z.q.data(), z.p.data(), out.data());
    return out;
  }

  void evaluate_raw(const double* q, const double* p, double* out) const {
    switch (kind_) {
      case Kind::Hermite: {
        double prev = 1.0, cur = q[0];
        for (int j = 1; j <= degree_; ++j) {
          out[j - 1] = cur;
          double next = q[0] * cur - j * prev;
          prev = cur;
          cur = next;
        }
        return;
      }
      case Kind::Phase: {
        for (int i = 0; i <= degree_; ++i)
          out[i] = hermite(degree_ - i, q[0]) * hermite(i, p[0]);
        return;
      }
      case Kind::Mono: {
        const std::size_t nc = n_coords();
        static thread_local std::vector<double> pow_table;
        pow_table.resize(nc * (degree_ + 1));
        for (std::size_t c = 0; c < nc; ++c) {
          const double x = c < dim_ ? q[c] : p[c - dim_];
          double v = 1.0;
          for (int e = 0; e <= degree_; ++e) {
            pow_table[c * (degree_ + 1) + e] = v;
            v *= x;
          }
        }
        for (std::size_t j = 0; j < exps_.size(); ++j) {
          double v = 1.0;
          for (std::size_t c = 0; c < nc; ++c)
            v *= pow_table[c * (degree_ + 1) + exps_[j][c]];
          out[j] = v;
        }
        return;
      }
      case Kind::Sector: {
        const double s3 = 1.7320508075688772;
        const double x = q[0], y = q[1];
        out[0] = out[1] = out[2] = 0.0;
        if (std::abs(y) <= s3 * x)
          out[0] = 1.0;
        else if (y >= 0.0 && y >= s3 * x)
          out[1] = 1.0;
        else
          out[2] = 1.0;
        return;
      }
      case Kind::Free: {
        PhasePoint z;
        z.q.assign(q, q + dim_);
        z.p.assign(p, p + dim_);
        for (std::size_t j = 0; j < custom_.size(); ++j) out[j] = custom_[j].fn(z);
        return;
      }
    }
  }

 private:
  enum class Kind { Hermite, Phase, Mono, Sector, Free };

  std::size_t n_coords() const { return positions_only_ ? dim_ : 2 * dim_; }

  static std::string coord_name(std::size_t c, std::size_t dim) {
    const bool momentum = c >= dim;
    const std::size_t idx = momentum ? c - dim : c;
    std::string base = momentum ? "p" : "q";
    if (dim > 1) base += std::to_string(idx + 1);
    return base;
  }

  void enumerate_monomials() {
    const std::size_t nc = n_coords();
    std::vector<int> e(nc, 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t c, int left) {
      if (c + 1 == nc) {
        e[c] = left;
        exps_.push_back(e);
        return;
      }
      for (int v = left; v >= 0; --v) {
        e[c] = v;
        rec(c + 1, left - v);
      }
    };
    for (int g = 1; g <= degree_; ++g) rec(0, g);
    for (const auto& ex : exps_) {
      std::string nm;
      for (std::size_t c = 0; c < nc; ++c) {
        if (ex[c] == 0) continue;
        if (!nm.empty()) nm += "*";
        nm += coord_name(c, dim_);
        if (ex[c] > 1) nm += "^" + std::to_string(ex[c]);
      }
      names_.push_back(nm);
    }
  }

  Kind kind_ = Kind::Hermite;
  std::size_t dim_ = 1;
  int degree_ = 0;
  bool positions_only_ = true;
  std::vector<std::vector<int>> exps_;
  std::vector<BasisFunction> custom_;
  std::vector<std::string> names_;
};

inline BasisSet BasisSet::build(const BasisDescriptor& d) {
  BasisSet b;
  if (const auto* h = std::get_if<Hermite1D>(&d)) {
    if (h->max_degree < 1) throw EmptyBasis("hermite basis needs max_degree >= 1");
    b.kind_ = Kind::Hermite;
    b.dim_ = 1;
    b.degree_ = h->max_degree;
    for (int j = 1; j <= h->max_degree; ++j) b.names_.push_back("He" + std::to_string(j) + "(q)");
  } else if (const auto* ph = std::get_if<PhaseHermite>(&d)) {
    if (ph->degree < 1) throw EmptyBasis("phase hermite basis needs degree >= 1");
    b.kind_ = Kind::Phase;
    b.dim_ = 1;
    b.degree_ = ph->degree;
    for (int i = 0; i <= ph->degree; ++i)
      b.names_.push_back("He" + std::to_string(ph->degree - i) + "(q)He" + std::to_string(i) +
                         "(p)");
  } else if (const auto* mo = std::get_if<Monomials>(&d)) {
    if (mo->max_degree < 1) throw EmptyBasis("monomial basis needs max_degree >= 1");
    if (mo->dimension < 1) throw std::invalid_argument("monomial basis needs dimension >= 1");
    b.kind_ = Kind::Mono;
    b.dim_ = mo->dimension;
    b.degree_ = mo->max_degree;
    b.positions_only_ = mo->positions_only;
    b.enumerate_monomials();
  } else if (std::get_if<Indicators>(&d)) {
    b.kind_ = Kind::Sector;
    b.dim_ = 2;
    b.names_ = {"ind_A", "ind_B", "ind_C"};
  } else if (const auto* cu = std::get_if<Custom>(&d)) {
    if (cu->functions.empty()) throw EmptyBasis("custom basis needs at least one function");
    if (cu->dimension < 1) throw std::invalid_argument("custom basis needs dimension >= 1");
    b.kind_ = Kind::Free;
    b.dim_ = cu->dimension;
    b.custom_ = cu->functions;
    for (const auto& f : cu->functions) b.names_.push_back(f.name);
  }
  return b;
}

// Column-centered basis evaluations along a trajectory.
struct BasisSeries {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> values;  // n x m, row per sample, centered
  std::vector<double> means;   // empirical column means that were subtracted
  std::vector<std::uint8_t> degenerate;  // column was constant along the trajectory

  double value(std::size_t i, std::size_t j) const { return values[i * m + j]; }
};

inline BasisSeries evaluate_series(const BasisSet& basis, const Trajectory& traj) {
  if (basis.dimension() != traj.dim)
    throw std::invalid_argument("evaluate_series: basis and trajectory dimensions differ");
  BasisSeries s;
  s.n = traj.length;
  s.m = basis.size();
  s.values.resize(s.n * s.m);
  s.means.assign(s.m, 0.0);
  s.degenerate.assign(s.m, 0);
  for (std::size_t i = 0; i < s.n; ++i) {
    basis.evaluate_raw(traj.qdata.data() + i * traj.dim, traj.pdata.data() + i * traj.dim,
                       s.values.data() + i * s.m);
    for (std::size_t j = 0; j < s.m; ++j) s.means[j] += s.values[i * s.m + j];
  }
  for (std::size_t j = 0; j < s.m; ++j) s.means[j] /= double(s.n);
  std::vector<double> spread(s.m, 0.0);
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t j = 0; j < s.m; ++j) {
      double& v = s.values[i * s.m + j];
      v -= s.means[j];
      spread[j] = std::max(spread[j], std::abs(v));
    }
  for (std::size_t j = 0; j < s.m; ++j)
    if (spread[j] <= 1e-12 * std::max(1.0, std::abs(s.means[j]))) s.degenerate[j] = 1;
  return s;
}

}  // namespace taumax
