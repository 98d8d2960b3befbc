#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "finhol/dual.hpp"
#include "finhol/errors.hpp"

namespace finhol {

// Tiny dense helpers for the m x m (m <= 3 in the catalog) systems that show
// up in connection coefficients.  They are templated so AD carriers flow
// straight through; pivoting decisions look only at primal values.
// Double-precision spectral work (SVD, least squares) lives in rank.cpp on
// top of Eigen instead.

template <class T>
using Vec = std::vector<T>;

template <class T>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, T(0.0)) {}

  T& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  const T& operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

// Solves A y = b by Gaussian elimination with partial pivoting on primal
// magnitudes.  Throws GeometryError on a (numerically) singular matrix; the
// caller attaches the offending (x, u) context.
template <class T>
Vec<T> solve_linear(Mat<T> A, Vec<T> b) {
  const int n = A.rows;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::fabs(primal(A(col, col)));
    for (int r = col + 1; r < n; ++r) {
      double cand = std::fabs(primal(A(r, col)));
      if (cand > best) {
        best = cand;
        piv = r;
      }
    }
    if (!(best > 1e-14)) {
      throw GeometryError("singular matrix in linear solve");
    }
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(A(col, j), A(piv, j));
      std::swap(b[col], b[piv]);
    }
    for (int r = col + 1; r < n; ++r) {
      T f = A(r, col) / A(col, col);
      for (int j = col; j < n; ++j) A(r, j) = A(r, j) - f * A(col, j);
      b[r] = b[r] - f * b[col];
    }
  }
  Vec<T> y(static_cast<std::size_t>(n), T(0.0));
  for (int r = n - 1; r >= 0; --r) {
    T acc = b[r];
    for (int j = r + 1; j < n; ++j) acc = acc - A(r, j) * y[j];
    y[r] = acc / A(r, r);
  }
  return y;
}

inline double dot(const Vec<double>& a, const Vec<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec<double>& a) {
  using std::sqrt;
  return sqrt(dot(a, a));
}

inline double max_abs(const Vec<double>& a) {
  double m = 0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace finhol
