#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "errors.hpp"

namespace hawkes_agg {

// Dense row-major matrix. Small fixed-size workhorse for parameter matrices,
// Hessians, and regression normal equations; no view semantics.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values)
      : rows_(rows), cols_(cols), data_(values) {
    if (data_.size() != rows * cols)
      throw std::invalid_argument("Matrix: initializer size does not match shape");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  [[nodiscard]] const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Solves a x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n)
    throw std::invalid_argument("solve: shape mismatch");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::fabs(a(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::fabs(a(r, col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (!(best > 0.0)) throw numerical_error("solve: singular matrix");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
    x[i] = s / a(i, i);
  }
  return x;
}

// Cholesky factorization a = L L^T. Returns false if a is not positive
// definite (within a tiny diagonal tolerance); on success fills the lower
// triangle of `lower`.
inline bool cholesky(const Matrix& a, Matrix& lower) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("cholesky: matrix must be square");
  lower = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      if (i == j) {
        if (!(s > 1e-300)) return false;
        lower(i, i) = std::sqrt(s);
      } else {
        lower(i, j) = s / lower(j, j);
      }
    }
  }
  return true;
}

// Solves L L^T x = b given the Cholesky factor L.
inline std::vector<double> cholesky_solve(const Matrix& lower, std::vector<double> b) {
  const std::size_t n = lower.rows();
  if (b.size() != n) throw std::invalid_argument("cholesky_solve: shape mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * b[k];
    b[i] = s / lower(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= lower(k, i) * b[k];
    b[i] = s / lower(i, i);
  }
  return b;
}

// Spectral radius of a square matrix. Closed forms for 1x1 and 2x2; larger
// matrices use power iteration on m + I, which converges to the dominant
// eigenvalue for the non-negative matrices this library feeds it
// (Perron-Frobenius makes the shifted dominant eigenvalue real and simple).
inline double spectral_radius(const Matrix& m) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw std::invalid_argument("spectral_radius: matrix must be square");
  if (n == 0) throw std::invalid_argument("spectral_radius: empty matrix");
  if (n == 1) return std::fabs(m(0, 0));
  if (n == 2) {
    const double tr = m(0, 0) + m(1, 1);
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double disc = tr * tr - 4.0 * det;
    if (disc >= 0.0) {
      const double root = std::sqrt(disc);
      return std::max(std::fabs((tr + root) / 2.0), std::fabs((tr - root) / 2.0));
    }
    return std::sqrt(det);  // complex pair, |lambda|^2 = det
  }
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> y(n);
  double est = 0.0;
  for (int iter = 0; iter < 200000; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i];  // shift by identity
      for (std::size_t j = 0; j < n; ++j) s += m(i, j) * x[j];
      y[i] = s;
    }
    double norm = 0.0;
    for (double v : y) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) return 0.0;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
    if (std::fabs(norm - est) <= 1e-13 * std::max(1.0, norm) && iter > 2)
      return std::fabs(norm - 1.0);
    est = norm;
  }
  return std::fabs(est - 1.0);
}

// Derivative of the spectral radius of a non-negative matrix in its entries:
// d rho / d m_ij = u_i v_j / (u^T v) with v, u the right and left Perron
// vectors. Power iteration on m + I; returns false when the vectors are
// degenerate (zero matrix, tied dominant eigenvalues).
inline bool perron_weights(const Matrix& m, Matrix& w) {
  const std::size_t n = m.rows();
  if (m.cols() != n || n == 0)
    throw std::invalid_argument("perron_weights: matrix must be square");
  std::vector<double> v(n, 1.0), u(n, 1.0), t(n);
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double>& vec = pass == 0 ? v : u;
    double est = 0.0;
    for (int iter = 0; iter < 200000; ++iter) {
      for (std::size_t i = 0; i < n; ++i) {
        double s = vec[i];
        for (std::size_t j = 0; j < n; ++j)
          s += (pass == 0 ? m(i, j) : m(j, i)) * vec[j];
        t[i] = s;
      }
      double norm = 0.0;
      for (double x : t) norm += x * x;
      norm = std::sqrt(norm);
      if (!(norm > 0.0)) return false;
      for (std::size_t i = 0; i < n; ++i) vec[i] = t[i] / norm;
      if (std::fabs(norm - est) <= 1e-14 * std::max(1.0, norm) && iter > 2) break;
      est = norm;
    }
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += u[i] * v[i];
  if (!(dot > 1e-12)) return false;
  w = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) w(i, j) = u[i] * v[j] / dot;
  return true;
}

}  // namespace hawkes_agg
