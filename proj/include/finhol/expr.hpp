#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "finhol/dual.hpp"
#include "finhol/errors.hpp"

namespace finhol {

// Closed expression language for metric definitions and analytic curves:
// decimal constants, variables x1..xm / u1..um (and t for curves), the four
// arithmetic operators, rational powers with principal branch on a positive
// base, and sqrt/sin/cos/exp/log.  No abs, no comparisons, no conditionals —
// everything representable is smooth on its domain, which is what the
// derivative tower relies on.

enum class ExprKind { Constant, Variable, Add, Sub, Mul, Div, Neg, Pow, Call };
enum class Func { Sqrt, Sin, Cos, Exp, Log };
enum class VarGroup { X, U, T };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprKind kind{};
  double constant = 0;              // Constant
  VarGroup group = VarGroup::X;     // Variable
  int index = 0;                    // Variable (0-based within its group)
  long pnum = 1, pden = 1;          // Pow exponent, normalized, pden > 0
  Func func = Func::Sqrt;           // Call
  ExprPtr lhs, rhs;
};

// Which variables a given expression text is allowed to mention.
struct VarSpace {
  int dim = 0;        // x1..xdim and u1..udim
  bool with_t = false;
};

struct Expr {
  ExprPtr root;
  VarSpace vars;
};

Expr parse_expression(const std::string& text, const VarSpace& vars);

std::string print_expression(const ExprPtr& node);
inline std::string print_expression(const Expr& e) { return print_expression(e.root); }

bool expr_equal(const ExprPtr& a, const ExprPtr& b);
inline bool expr_equal(const Expr& a, const Expr& b) { return expr_equal(a.root, b.root); }

// Replaces every occurrence of variable (group, index) by `replacement`.
ExprPtr substitute(const ExprPtr& node, VarGroup group, int index, const ExprPtr& replacement);

// ---- evaluation ------------------------------------------------------------

template <class T>
struct EvalPoint {
  std::span<const T> x;
  std::span<const T> u;
  const T* t = nullptr;
};

template <class T>
T eval_node(const ExprNode& n, const EvalPoint<T>& p) {
  switch (n.kind) {
    case ExprKind::Constant:
      return T(n.constant);
    case ExprKind::Variable: {
      const std::size_t i = static_cast<std::size_t>(n.index);
      if (n.group == VarGroup::X) return p.x[i];
      if (n.group == VarGroup::U) return p.u[i];
      if (p.t == nullptr) throw EvalError("curve parameter used outside a curve", "t");
      return *p.t;
    }
    case ExprKind::Add:
      return eval_node(*n.lhs, p) + eval_node(*n.rhs, p);
    case ExprKind::Sub:
      return eval_node(*n.lhs, p) - eval_node(*n.rhs, p);
    case ExprKind::Mul:
      return eval_node(*n.lhs, p) * eval_node(*n.rhs, p);
    case ExprKind::Div: {
      T den = eval_node(*n.rhs, p);
      if (primal(den) == 0.0)
        throw EvalError("division by zero", print_expression(n.rhs));
      return eval_node(*n.lhs, p) / den;
    }
    case ExprKind::Neg:
      return -eval_node(*n.lhs, p);
    case ExprKind::Pow: {
      T base = eval_node(*n.lhs, p);
      if (n.pden == 1) return pow_int(base, n.pnum);
      // principal branch: fractional powers demand a strictly positive base
      if (!(primal(base) > 0.0))
        throw EvalError("fractional power of a non-positive base",
                        print_expression(std::make_shared<const ExprNode>(n)));
      using std::exp;
      using std::log;
      return exp((static_cast<double>(n.pnum) / static_cast<double>(n.pden)) * log(base));
    }
    case ExprKind::Call: {
      T a = eval_node(*n.lhs, p);
      using std::cos;
      using std::exp;
      using std::log;
      using std::sin;
      using std::sqrt;
      switch (n.func) {
        case Func::Sqrt:
          if (primal(a) < 0.0)
            throw EvalError("sqrt of a negative value", print_expression(n.lhs));
          if constexpr (carrier_depth<T>::value > 0) {
            if (primal(a) == 0.0)
              throw EvalError("sqrt not differentiable at zero", print_expression(n.lhs));
          }
          return sqrt(a);
        case Func::Sin: return sin(a);
        case Func::Cos: return cos(a);
        case Func::Exp: return exp(a);
        case Func::Log:
          if (!(primal(a) > 0.0))
            throw EvalError("log of a non-positive value", print_expression(n.lhs));
          return log(a);
      }
      throw EvalError("unreachable", "call");
    }
  }
  throw EvalError("unreachable", "node");
}

template <class T>
T eval_expression(const Expr& e, const EvalPoint<T>& p) {
  return eval_node<T>(*e.root, p);
}

}  // namespace finhol
