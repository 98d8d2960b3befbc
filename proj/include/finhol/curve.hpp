#pragma once

#include <string>
#include <vector>

#include "finhol/expr.hpp"
#include "finhol/linalg.hpp"
#include "finhol/metric.hpp"

namespace finhol {

// A piecewise-analytic path in chart coordinates.  Each segment stores one
// expression per coordinate as a function of t; the segment parameter runs
// over [0,1] and the global parameter spreads segments uniformly across
// [0,1].  Velocities are exact (automatic differentiation in t), so joints
// are the only places where the velocity may jump.
class Curve {
 public:
  // straight chart-coordinate segment from a to b (constant velocity)
  static Curve segment(const Vec<double>& a, const Vec<double>& b);

  // vertex chain; each leg is traversed with the smoothstep profile
  // 3s^2 - 2s^3, so the velocity vanishes at every vertex and the whole
  // path is C^1 in the global parameter
  static Curve polyline(const std::vector<Vec<double>>& vertices);

  // one segment per chain leg, each at constant speed (velocity jumps at
  // the interior vertices)
  static Curve polygon(const std::vector<Vec<double>>& vertices);

  // a single segment given component expressions in the variable t
  static Curve from_expressions(const std::vector<std::string>& components);

  Curve reversed() const;                          // t -> 1 - t
  static Curve concat(const Curve& a, const Curve& b);  // endpoint must meet start

  // single-segment curves only: substitute t -> phi(t) where phi maps
  // [0,1] into [0,1] (endpoint agreement is checked, monotonicity is not)
  Curve reparametrized(const std::string& phi_text) const;

  int dim() const { return dim_; }
  int segment_count() const { return static_cast<int>(segments_.size()); }

  Vec<double> point(double t) const;
  // derivative with respect to the global parameter; at an interior joint
  // the incoming (left) velocity is reported
  Vec<double> velocity(double t) const;

  // point and global-parameter velocity evaluated on a chosen segment at
  // its local parameter in [0,1]; makes the velocity unambiguous at joints,
  // which is what piecewise integration needs
  void eval_on_segment(int s, double local, Vec<double>& p, Vec<double>& v) const;

  // sampled containment in an open box plus joint-continuity check
  void validate_in_chart(const Box& box) const;

 private:
  Curve() = default;
  struct Segment {
    std::vector<Expr> comp;  // dim expressions in t
  };
  // local evaluation on segment s at parameter s_local in [0,1]
  void eval_segment(int s, double s_local, Vec<double>* p, Vec<double>* v) const;

  int dim_ = 0;
  std::vector<Segment> segments_;
};

}  // namespace finhol
