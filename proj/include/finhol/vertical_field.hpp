#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "finhol/finsler.hpp"

namespace finhol {

// Vertical vector fields on the slit tangent bundle, kept as closed-form
// trees so that covariant derivatives and brackets of any admissible order
// evaluate exactly (every derivative is taken by the dual-number tower, no
// finite differencing anywhere).
//
//   Curvature(i, j) : R(d/dx^i, d/dx^j), components H_i(G^a_j) - H_j(G^a_i)
//                     where G^a_j is the nonlinear connection and H_i the
//                     horizontal coordinate field
//   Nabla(i, V)     : (D_i V)^a = dV^a/dx^i - G^b_i dV^a/du^b + G^a_{ib} V^b
//   Bracket(V, W)   : fiberwise [V, W]^a = V^b dW^a/du^b - W^b dV^a/du^b
//   LinComb         : finite sum  sum_k c_k V_k
//   Components      : explicit components, expressions in x and u

enum class FieldKind { Curvature, Nabla, Bracket, LinComb, Components };

struct VerticalField;
using FieldPtr = std::shared_ptr<const VerticalField>;

struct VerticalField {
  FieldKind kind{};
  int i = 0, j = 0;  // Curvature uses (i, j); Nabla uses i
  FieldPtr a, b;     // Nabla child in a; Bracket children in a, b
  std::vector<std::pair<double, FieldPtr>> terms;  // LinComb
  std::vector<Expr> comp;                          // Components
};

FieldPtr curvature_field(int i, int j, int dim);
FieldPtr nabla(int i, FieldPtr child, int dim);
FieldPtr bracket(FieldPtr a, FieldPtr b);
FieldPtr lin_comb(std::vector<std::pair<double, FieldPtr>> terms);
FieldPtr components_field(const std::vector<std::string>& texts, int dim);

// Structural depth driving the derivative-order bookkeeping: explicit
// components count 1, a curvature leaf counts 2 (it differentiates the
// connection), Nabla and Bracket add one level, LinComb is transparent.
int tree_depth(const FieldPtr& f);

std::string describe(const FieldPtr& f);

// Carrier-depth budget.  Connection-backed nodes (Curvature, Nabla) spend
// four dual levels inside the spray/Berwald stack, so they are compiled for
// carriers up to kMaxConnectionCarrier; pure expression nodes may ride two
// levels higher.  Together with kMaxCarrierDepth = 10 this makes the deepest
// admissible tree (depth cap 6) evaluable with one external derivative to
// spare.
inline constexpr int kMaxConnectionCarrier = 6;
inline constexpr int kMaxFieldEvalCarrier = 8;
inline constexpr int kDefaultFieldDepthCap = 6;

template <class T>
Vec<T> eval_field(const VerticalField& f, const FinslerSpace& sp, std::span<const T> x,
                  std::span<const T> u) {
  constexpr int depth = carrier_depth<T>::value;
  const int m = sp.dim();
  const std::size_t um = static_cast<std::size_t>(m);

  switch (f.kind) {
    case FieldKind::Components: {
      Vec<T> out(um);
      EvalPoint<T> p{x, u, nullptr};
      for (int a = 0; a < m; ++a) out[static_cast<std::size_t>(a)] = eval_expression(f.comp[static_cast<std::size_t>(a)], p);
      return out;
    }

    case FieldKind::LinComb: {
      Vec<T> out(um, T(0.0));
      for (const auto& [c, child] : f.terms) {
        Vec<T> v = eval_field(*child, sp, x, u);
        for (std::size_t a = 0; a < um; ++a) out[a] += c * v[a];
      }
      return out;
    }

    case FieldKind::Curvature: {
      if constexpr (depth >= kMaxConnectionCarrier + 1) {
        throw ConfigError("vertical field exceeds the supported derivative depth");
      } else {
        using D = Dual<T>;
        Mat<T> Gamma = nonlinear_connection(sp, x, u);
        // H_dir(Gamma^a_col) for all (a, col) in one seeded pass per dir
        auto horizontal = [&](int dir) {
          std::vector<D> X(um), U(um);
          for (int b = 0; b < m; ++b) {
            X[static_cast<std::size_t>(b)] = D(x[static_cast<std::size_t>(b)], T(b == dir ? 1.0 : 0.0));
            U[static_cast<std::size_t>(b)] = D(u[static_cast<std::size_t>(b)], -Gamma(b, dir));
          }
          return nonlinear_connection(sp, std::span<const D>(X), std::span<const D>(U));
        };
        Mat<D> along_i = horizontal(f.i);
        Mat<D> along_j = horizontal(f.j);
        Vec<T> out(um);
        for (int a = 0; a < m; ++a)
          out[static_cast<std::size_t>(a)] = along_i(a, f.j).dot - along_j(a, f.i).dot;
        return out;
      }
    }

    case FieldKind::Nabla: {
      if constexpr (depth >= kMaxConnectionCarrier + 1) {
        throw ConfigError("vertical field exceeds the supported derivative depth");
      } else {
        using D = Dual<T>;
        Mat<T> Gamma = nonlinear_connection(sp, x, u);
        std::vector<D> X(um), U(um);
        for (int b = 0; b < m; ++b) {
          X[static_cast<std::size_t>(b)] = D(x[static_cast<std::size_t>(b)], T(b == f.i ? 1.0 : 0.0));
          U[static_cast<std::size_t>(b)] = D(u[static_cast<std::size_t>(b)], -Gamma(b, f.i));
        }
        Vec<D> child = eval_field(*f.a, sp, std::span<const D>(X), std::span<const D>(U));
        std::vector<Mat<T>> B = berwald_coefficients(sp, x, u);
        Vec<T> out(um);
        for (int a = 0; a < m; ++a) {
          T acc = child[static_cast<std::size_t>(a)].dot;  // H_i(V^a)
          for (int b = 0; b < m; ++b)
            acc += B[static_cast<std::size_t>(a)](f.i, b) * child[static_cast<std::size_t>(b)].val;
          out[static_cast<std::size_t>(a)] = acc;
        }
        return out;
      }
    }

    case FieldKind::Bracket: {
      if constexpr (depth >= kMaxFieldEvalCarrier - 1) {
        throw ConfigError("vertical field exceeds the supported derivative depth");
      } else {
        using D = Dual<T>;
        Vec<T> V = eval_field(*f.a, sp, x, u);
        Vec<T> W = eval_field(*f.b, sp, x, u);
        std::vector<D> X(um), U(um);
        for (int b = 0; b < m; ++b)
          X[static_cast<std::size_t>(b)] = D(x[static_cast<std::size_t>(b)], T(0.0));
        auto fiber_derivative = [&](const VerticalField& g, const Vec<T>& along) {
          for (int b = 0; b < m; ++b)
            U[static_cast<std::size_t>(b)] = D(u[static_cast<std::size_t>(b)], along[static_cast<std::size_t>(b)]);
          return eval_field(g, sp, std::span<const D>(X), std::span<const D>(U));
        };
        Vec<D> dW = fiber_derivative(*f.b, V);  // V^b dW^a/du^b
        Vec<D> dV = fiber_derivative(*f.a, W);  // W^b dV^a/du^b
        Vec<T> out(um);
        for (int a = 0; a < m; ++a)
          out[static_cast<std::size_t>(a)] = dW[static_cast<std::size_t>(a)].dot - dV[static_cast<std::size_t>(a)].dot;
        return out;
      }
    }
  }
  throw ConfigError("unreachable field kind");
}

// Depth-checked evaluation entry point.
Vec<double> field_value(const FieldPtr& f, const FinslerSpace& sp, const Vec<double>& x,
                        const Vec<double>& u, int depth_cap = kDefaultFieldDepthCap);

}  // namespace finhol
