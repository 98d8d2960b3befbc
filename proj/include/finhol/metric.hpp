#pragma once

#include <span>
#include <string>
#include <vector>

#include "finhol/expr.hpp"
#include "finhol/linalg.hpp"

namespace finhol {

// Open coordinate box; the single chart every object lives on.
struct Box {
  Vec<double> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(std::span<const double> x, double margin = 0.0) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(x[i] > lo[i] + margin && x[i] < hi[i] - margin)) return false;
    return true;
  }
};

struct MetricSpec {
  std::string name;    // catalog key or "expression"
  int dim = 2;
  std::string f_text;  // the Finsler function, in x1..xm / u1..um
  Box chart;
};

// Parses and validates a metric definition: positive 1-homogeneity of F and
// positive definiteness of the fundamental tensor are checked on a
// deterministic sample grid at construction; violations raise GeometryError.
class FinslerSpace {
 public:
  explicit FinslerSpace(MetricSpec spec);

  int dim() const { return spec_.dim; }
  const MetricSpec& spec() const { return spec_; }
  const Box& chart() const { return spec_.chart; }
  const Expr& f_expr() const { return f_; }

  template <class T>
  T F(std::span<const T> x, std::span<const T> u) const {
    return eval_expression(f_, EvalPoint<T>{x, u, nullptr});
  }

  // F^2, the function every connection formula differentiates.
  template <class T>
  T energy(std::span<const T> x, std::span<const T> u) const {
    T f = F(x, u);
    return f * f;
  }

 private:
  MetricSpec spec_;
  Expr f_;
};

// Largest |F(x, s*u) - s*F(x, u)| over a deterministic (x, u, s) sample set.
double homogeneity_residual(const FinslerSpace& space);
double homogeneity_residual(const Expr& f, const Box& chart, int dim);

// Built-in metric definitions.  `dim` is honored by euclidean and
// minkowski-quartic; the three surface metrics are two-dimensional.
// `param` is the drift-strength coefficient of the randers entry.
MetricSpec catalog_metric(const std::string& name, int dim = 2, double param = 0.1);
std::vector<std::string> catalog_names();

// ---- deterministic samplers -------------------------------------------------

// Unit-sphere directions used everywhere fiber sampling is needed.  m = 2:
// `count` equally spaced angles offset by half a step (no direction ever sits
// exactly on a coordinate axis, where e.g. the quartic metric degenerates);
// m = 3: Fibonacci lattice; higher m: seeded low-discrepancy-ish normals.
std::vector<Vec<double>> fiber_directions(int m, int count = 0);

// Regular lattice strictly inside the box, margin as a fraction of each edge.
std::vector<Vec<double>> chart_grid(const Box& box, int per_axis, double margin_frac = 0.1);

}  // namespace finhol
