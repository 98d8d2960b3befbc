#pragma once

#include <cmath>
#include <utility>

namespace finhol {

// First-order forward-mode carrier.  Nesting (Dual<Dual<...>>) realizes
// higher mixed directional derivatives: each nesting level carries exactly
// one seed direction, and a k-fold mixed derivative is read off by taking
// the derivative part k times.  There is deliberately no truncated-Taylor
// or reverse-mode machinery here; everything downstream composes these.
template <class T>
struct Dual {
  T val{};
  T dot{};

  Dual() = default;
  Dual(double c) : val(c), dot(0.0) {}  // implicit: constants lift transparently
  Dual(T v, T d) : val(std::move(v)), dot(std::move(d)) {}
};

template <class T>
struct carrier_depth {
  static constexpr int value = 0;
};
template <class T>
struct carrier_depth<Dual<T>> {
  static constexpr int value = carrier_depth<T>::value + 1;
};

// Hard ceiling on nesting, enforced at compile time in the recursive
// evaluators.  The user-facing cap (default 6) is checked at runtime and is
// always at or below this.
inline constexpr int kMaxCarrierDepth = 10;

// Innermost primal value, for branching decisions (pivoting, domain checks).
inline double primal(double x) { return x; }
template <class T>
double primal(const Dual<T>& x) {
  return primal(x.val);
}

// ---- arithmetic ----------------------------------------------------------

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.val + b.val, a.dot + b.dot};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.val - b.val, a.dot - b.dot};
}
template <class T>
Dual<T> operator-(const Dual<T>& a) {
  return {-a.val, -a.dot};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.val * b.val, a.dot * b.val + a.val * b.dot};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  T q = a.val / b.val;
  return {q, (a.dot - q * b.dot) / b.val};
}

template <class T> Dual<T> operator+(const Dual<T>& a, double b) { return a + Dual<T>(b); }
template <class T> Dual<T> operator+(double a, const Dual<T>& b) { return Dual<T>(a) + b; }
template <class T> Dual<T> operator-(const Dual<T>& a, double b) { return a - Dual<T>(b); }
template <class T> Dual<T> operator-(double a, const Dual<T>& b) { return Dual<T>(a) - b; }
template <class T> Dual<T> operator*(const Dual<T>& a, double b) { return a * Dual<T>(b); }
template <class T> Dual<T> operator*(double a, const Dual<T>& b) { return Dual<T>(a) * b; }
template <class T> Dual<T> operator/(const Dual<T>& a, double b) { return a / Dual<T>(b); }
template <class T> Dual<T> operator/(double a, const Dual<T>& b) { return Dual<T>(a) / b; }

template <class T>
Dual<T>& operator+=(Dual<T>& a, const Dual<T>& b) { a = a + b; return a; }
template <class T>
Dual<T>& operator-=(Dual<T>& a, const Dual<T>& b) { a = a - b; return a; }
template <class T>
Dual<T>& operator*=(Dual<T>& a, const Dual<T>& b) { a = a * b; return a; }

// ---- elementary functions -------------------------------------------------
// Chain rule at each level; std:: versions resolve the double base case via
// the `using std::...` declarations at call sites in generic code.

template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  T s = sqrt(a.val);
  return {s, a.dot / (2.0 * s)};
}
template <class T>
Dual<T> sin(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return {sin(a.val), a.dot * cos(a.val)};
}
template <class T>
Dual<T> cos(const Dual<T>& a) {
  using std::cos;
  using std::sin;
  return {cos(a.val), -(a.dot * sin(a.val))};
}
template <class T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  T e = exp(a.val);
  return {e, a.dot * e};
}
template <class T>
Dual<T> log(const Dual<T>& a) {
  using std::log;
  return {log(a.val), a.dot / a.val};
}

// Integer powers via binary exponentiation on the carrier itself, so the
// derivative is exact and negative bases stay legal.
template <class T>
T pow_int(T base, long n) {
  if (n < 0) return T(1.0) / pow_int(base, -n);
  T acc(1.0);
  while (n > 0) {
    if (n & 1) acc = acc * base;
    base = base * base;
    n >>= 1;
  }
  return acc;
}

}  // namespace finhol
