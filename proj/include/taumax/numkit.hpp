#pragma once
// Dense linear algebra for small matrices: Cholesky, LU solves, symmetric and
// generalized symmetric eigensolves, matrix exponential, matrix coth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace taumax {

struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Singular : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("Matrix: empty dimensions");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diag(const std::vector<double>& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  const std::vector<double>& data() const { return a_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
    return s;
  }

  double frob_norm() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
  }

  double inf_norm() const {  // max absolute row sum
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) r += std::abs((*this)(i, j));
      m = std::max(m, r);
    }
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
  }

  bool is_finite() const {
    for (double v : a_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  Matrix& operator+=(const Matrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("Matrix multiply: shape mismatch");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend std::vector<double> operator*(const Matrix& a, const std::vector<double>& x) {
    if (a.cols_ != x.size()) throw std::invalid_argument("Matrix-vector multiply: shape mismatch");
    std::vector<double> y(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

 private:
  void check_same(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument("Matrix op: shape mismatch");
  }

  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

namespace detail {

inline void require_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols()) throw std::invalid_argument(std::string(who) + ": matrix not square");
}

inline void require_symmetric(const Matrix& a, const char* who) {
  require_square(a, who);
  double scale = a.max_abs() + 1e-300;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-12 * scale)
        throw std::invalid_argument(std::string(who) + ": matrix not symmetric");
}

inline Matrix symmetrized(const Matrix& a) {
  Matrix s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

}  // namespace detail

inline Matrix cholesky(const Matrix& a) {
  detail::require_symmetric(a, "cholesky");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d))
      throw NotPositiveDefinite("cholesky: pivot " + std::to_string(j) + " not positive");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

// Solve a*x = b by LU with partial pivoting; b may have many columns.
inline Matrix solve(const Matrix& a, const Matrix& b) {
  detail::require_square(a, "solve");
  if (a.rows() != b.rows()) throw std::invalid_argument("solve: rhs shape mismatch");
  const std::size_t n = a.rows(), m = b.cols();
  Matrix lu = a;
  Matrix x = b;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
    // only a structurally zero pivot is fatal; ill-scaled but regular systems
    // must pass through (coth near large arguments produces such systems)
    if (std::abs(lu(p, k)) <= 1e-300) throw Singular("solve: matrix numerically singular");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(p, j), lu(k, j));
      for (std::size_t j = 0; j < m; ++j) std::swap(x(p, j), x(k, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      double f = lu(i, k) / lu(k, k);
      lu(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      for (std::size_t j = 0; j < m; ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (std::size_t kk = n; kk-- > 0;) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = x(kk, j);
      for (std::size_t i = kk + 1; i < n; ++i) s -= lu(kk, i) * x(i, j);
      x(kk, j) = s / lu(kk, kk);
    }
  }
  return x;
}

inline std::vector<double> solve(const Matrix& a, const std::vector<double>& b) {
  Matrix rhs(b.size(), 1);
  for (std::size_t i = 0; i < b.size(); ++i) rhs(i, 0) = b[i];
  Matrix x = solve(a, rhs);
  std::vector<double> out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = x(i, 0);
  return out;
}

inline Matrix inverse(const Matrix& a) { return solve(a, Matrix::identity(a.rows())); }

struct EigResult {
  std::vector<double> values;  // descending
  Matrix vectors;              // eigenvectors as columns, aligned with values
};

// Cyclic Jacobi rotations; robust for the small symmetric matrices used here.
inline EigResult sym_eig(const Matrix& a_in) {
  detail::require_symmetric(a_in, "sym_eig");
  const std::size_t n = a_in.rows();
  Matrix a = detail::symmetrized(a_in);
  Matrix v = Matrix::identity(n);
  const double tol = 1e-12 * (a.frob_norm() + 1e-300);

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  const int max_sweeps = 100;
  int sweep = 0;
  while (off_norm() > tol) {
    if (++sweep > max_sweeps) throw NoConvergence("sym_eig: Jacobi sweep cap exceeded");
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  EigResult r;
  r.values.resize(n);
  r.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    r.values[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) r.vectors(i, j) = v(i, order[j]);
  }
  return r;
}

// a x = lambda b x via Cholesky reduction: b = L L^T, standard solve on
// L^{-1} a L^{-T}, back-transform x = L^{-T} y. Eigenvectors satisfy x^T b x = 1.
inline EigResult gen_sym_eig(const Matrix& a, const Matrix& b) {
  detail::require_symmetric(a, "gen_sym_eig");
  if (a.rows() != b.rows()) throw std::invalid_argument("gen_sym_eig: dimension mismatch");
  const std::size_t n = a.rows();
  Matrix l = cholesky(b);

  // forward substitution per column: y = L^{-1} a
  Matrix y = a;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      double s = y(i, j);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y(k, j);
      y(i, j) = s / l(i, i);
    }
  // z = L^{-1} y^T = L^{-1} a L^{-T}
  Matrix yt = y.transpose();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      double s = yt(i, j);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * yt(k, j);
      yt(i, j) = s / l(i, i);
    }

  EigResult r = sym_eig(detail::symmetrized(yt));

  // x = L^{-T} y, column by column (back substitution)
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t ii = n; ii-- > 0;) {
      double s = r.vectors(ii, j);
      for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * r.vectors(k, j);
      r.vectors(ii, j) = s / l(ii, ii);
    }
  }
  return r;
}

// exp(t*a) by scaling-and-squaring with a diagonal [6/6] Pade kernel.
inline Matrix mat_exp(const Matrix& a, double t = 1.0) {
  detail::require_square(a, "mat_exp");
  if (!a.is_finite() || !std::isfinite(t)) throw std::invalid_argument("mat_exp: non-finite input");
  const std::size_t n = a.rows();
  Matrix m = a * t;
  double nrm = m.inf_norm();
  int squarings = 0;
  if (nrm > 0.25) {
    squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.25)));
    m *= std::ldexp(1.0, -squarings);
  }

  static const double c[7] = {1.0,        1.0 / 2.0,     5.0 / 44.0, 1.0 / 66.0,
                              1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0};
  Matrix m2 = m * m;
  Matrix m4 = m2 * m2;
  Matrix m6 = m4 * m2;
  Matrix even = Matrix::identity(n) * c[0] + m2 * c[2] + m4 * c[4] + m6 * c[6];
  Matrix odd = m * (Matrix::identity(n) * c[1] + m2 * c[3] + m4 * c[5]);
  Matrix num = even + odd;
  Matrix den = even - odd;
  Matrix e = solve(den, num);
  for (int i = 0; i < squarings; ++i) e = e * e;
  return e;
}

// coth(a) = (E+I)(E-I)^{-1} with E = exp(2a), computed as the solution of
// (E-I) X = (E+I); stays in real arithmetic for non-normal a.
inline Matrix mat_coth_apply(const Matrix& a) {
  detail::require_square(a, "mat_coth_apply");
  const std::size_t n = a.rows();
  Matrix e = mat_exp(a, 2.0);
  Matrix em = e - Matrix::identity(n);
  Matrix ep = e + Matrix::identity(n);
  Matrix x;
  try {
    x = solve(em, ep);
  } catch (const Singular&) {
    throw Singular("mat_coth_apply: exp(2a)-I singular (eigenvalue of a at 0 or i*pi*k)");
  }
  return x;
}

}  // namespace taumax
