#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "finhol/metric.hpp"

namespace finhol {

template <class T>
std::vector<T> lift(std::span<const double> v) {
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = T(v[i]);
  return out;
}

inline std::string format_vec(std::span<const double> v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

// g_ab = 1/2 d^2(F^2)/du^a du^b.  Carrier-generic: the point may itself be
// dual-valued, so connection coefficients of any derivative order reduce to
// deeper evaluations of the same function.
template <class T>
Mat<T> fundamental_tensor(const FinslerSpace& sp, std::span<const T> x, std::span<const T> u) {
  static_assert(carrier_depth<T>::value + 2 <= kMaxCarrierDepth,
                "carrier nesting exceeds the compiled ceiling");
  const int m = sp.dim();
  using D1 = Dual<T>;
  using D2 = Dual<D1>;
  Mat<T> g(m, m);
  std::vector<D2> X(static_cast<std::size_t>(m)), U(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    X[static_cast<std::size_t>(i)] = D2(D1(x[static_cast<std::size_t>(i)], T(0.0)), D1(T(0.0), T(0.0)));
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) {
      for (int c = 0; c < m; ++c)
        U[static_cast<std::size_t>(c)] =
            D2(D1(u[static_cast<std::size_t>(c)], T(c == a ? 1.0 : 0.0)),
               D1(T(c == b ? 1.0 : 0.0), T(0.0)));
      D2 E = sp.energy(std::span<const D2>(X), std::span<const D2>(U));
      T val = 0.5 * E.dot.dot;
      g(a, b) = val;
      if (b != a) g(b, a) = val;
    }
  }
  return g;
}

// Geodesic spray coefficients G^i = 1/4 g^{il} (u^k d^2(F^2)/du^l dx^k - d(F^2)/dx^l).
// Satisfies the homogeneity identities G(x, s u) = s^2 G(x, u) and
// Gamma^i_j u^j = 2 G^i, which the tests pin down.
template <class T>
Vec<T> spray(const FinslerSpace& sp, std::span<const T> x, std::span<const T> u) {
  static_assert(carrier_depth<T>::value + 2 <= kMaxCarrierDepth,
                "carrier nesting exceeds the compiled ceiling");
  const int m = sp.dim();
  using D1 = Dual<T>;
  using D2 = Dual<D1>;
  Mat<T> g = fundamental_tensor(sp, x, u);

  Vec<T> b(static_cast<std::size_t>(m), T(0.0));
  for (int l = 0; l < m; ++l) {
    // outer level: base point moving along u; inner level: fiber direction e_l
    std::vector<D2> X(static_cast<std::size_t>(m)), U(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      X[static_cast<std::size_t>(i)] =
          D2(D1(x[static_cast<std::size_t>(i)], T(0.0)), D1(u[static_cast<std::size_t>(i)], T(0.0)));
      U[static_cast<std::size_t>(i)] =
          D2(D1(u[static_cast<std::size_t>(i)], T(i == l ? 1.0 : 0.0)), D1(T(0.0), T(0.0)));
    }
    T mixed = sp.energy(std::span<const D2>(X), std::span<const D2>(U)).dot.dot;

    std::vector<D1> X1(static_cast<std::size_t>(m)), U1(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      X1[static_cast<std::size_t>(i)] = D1(x[static_cast<std::size_t>(i)], T(i == l ? 1.0 : 0.0));
      U1[static_cast<std::size_t>(i)] = D1(u[static_cast<std::size_t>(i)], T(0.0));
    }
    T ex = sp.energy(std::span<const D1>(X1), std::span<const D1>(U1)).dot;

    b[static_cast<std::size_t>(l)] = mixed - ex;
  }

  Vec<T> G = solve_linear(std::move(g), std::move(b));
  for (T& gi : G) gi = 0.25 * gi;
  return G;
}

// Nonlinear connection Gamma^i_j = dG^i/du^j, stored as (i, j).
template <class T>
Mat<T> nonlinear_connection(const FinslerSpace& sp, std::span<const T> x, std::span<const T> u) {
  const int m = sp.dim();
  using D1 = Dual<T>;
  Mat<T> Gamma(m, m);
  std::vector<D1> X(static_cast<std::size_t>(m)), U(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) X[static_cast<std::size_t>(i)] = D1(x[static_cast<std::size_t>(i)], T(0.0));
  for (int j = 0; j < m; ++j) {
    for (int c = 0; c < m; ++c)
      U[static_cast<std::size_t>(c)] = D1(u[static_cast<std::size_t>(c)], T(c == j ? 1.0 : 0.0));
    Vec<D1> G = spray(sp, std::span<const D1>(X), std::span<const D1>(U));
    for (int i = 0; i < m; ++i) Gamma(i, j) = G[static_cast<std::size_t>(i)].dot;
  }
  return Gamma;
}

// Berwald coefficients Gamma^i_{jk} = dGamma^i_j/du^k, returned as one
// (j, k)-matrix per upper index i.  Symmetric in (j, k).
template <class T>
std::vector<Mat<T>> berwald_coefficients(const FinslerSpace& sp, std::span<const T> x,
                                         std::span<const T> u) {
  const int m = sp.dim();
  using D1 = Dual<T>;
  std::vector<Mat<T>> B(static_cast<std::size_t>(m), Mat<T>(m, m));
  std::vector<D1> X(static_cast<std::size_t>(m)), U(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) X[static_cast<std::size_t>(i)] = D1(x[static_cast<std::size_t>(i)], T(0.0));
  for (int k = 0; k < m; ++k) {
    for (int c = 0; c < m; ++c)
      U[static_cast<std::size_t>(c)] = D1(u[static_cast<std::size_t>(c)], T(c == k ? 1.0 : 0.0));
    Mat<D1> Gd = nonlinear_connection(sp, std::span<const D1>(X), std::span<const D1>(U));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) B[static_cast<std::size_t>(i)](j, k) = Gd(i, j).dot;
  }
  return B;
}

// Scales a direction onto the indicatrix {F(x, .) = 1}.
Vec<double> indicatrix_point(const FinslerSpace& sp, std::span<const double> x,
                             std::span<const double> dir);

// Full Berwald covariant derivative of g: out[i](a, b) = (nabla_i g)(du^a, du^b)
// = H_i(g_ab) - Gamma^c_{ia} g_cb - Gamma^c_{ib} g_ac, where H_i is the
// horizontal coordinate field.  Identically zero iff the space is Landsberg.
std::vector<Mat<double>> landsberg_tensor(const FinslerSpace& sp, std::span<const double> x,
                                          std::span<const double> u);

// Max-norm wrappers used by classification and the test gates.
double landsberg_residual(const FinslerSpace& sp, std::span<const double> x,
                          std::span<const double> u);

// Max |dGamma^i_{jk}/du^l|; zero iff the connection coefficients are
// independent of the fiber, i.e. the space is Berwald.
double berwald_residual(const FinslerSpace& sp, std::span<const double> x,
                        std::span<const double> u);

// Cartan-tensor magnitude max |1/2 dg_ab/du^c|; zero iff g is quadratic in u
// (the metric is Riemannian in this chart).
double riemannian_residual(const FinslerSpace& sp, std::span<const double> x,
                           std::span<const double> u);

// Connection data snapshot at one point of the slit bundle.
struct ConnectionData {
  Vec<double> G;
  Mat<double> nonlinear;            // Gamma^i_j
  std::vector<Mat<double>> berwald; // Gamma^i_{jk}, index order [i](j,k)
};

ConnectionData connection_at(const FinslerSpace& sp, std::span<const double> x,
                             std::span<const double> u);

}  // namespace finhol
