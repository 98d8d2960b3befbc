#pragma once

#include <vector>

#include "finhol/curve.hpp"
#include "finhol/finsler.hpp"
#include "finhol/ode.hpp"

namespace finhol {

struct TransportOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  // extra interpolated drift samples per accepted step; 0 measures drift at
  // the accepted solver points only (interpolated samples carry the dense
  // interpolant's own error on top of the solution's)
  int drift_samples = 0;
  bool validate_chart = true;
};

struct TransportResult {
  Vec<double> u_end;
  // max |F(c(t), u(t)) - F(c(0), u(0))| seen along the trajectory; transport
  // preserves F exactly, so this is a pure integration-quality diagnostic.
  // It is reported, never corrected.
  double f_drift = 0;
  OdeStats stats;
};

// Horizontal lift of the curve through (c(0), u0): solves
//   du^i/dt = -dc^j/dt Gamma^i_j(c(t), u(t))
// segment by segment.
TransportResult horizontal_lift(const FinslerSpace& sp, const Curve& curve,
                                const Vec<double>& u0, const TransportOptions& opt = {});

// Endpoint of the horizontal lift: the nonlinear parallel transport of u0.
Vec<double> rho(const FinslerSpace& sp, const Curve& curve, const Vec<double>& u0,
                const TransportOptions& opt = {});

struct DifferentialTransportResult {
  Vec<double> u_end;
  std::vector<Vec<double>> vec_end;
  double f_drift = 0;
  OdeStats stats;
};

// Joint transport of the fiber point and finitely many fiber vectors:
//   du^i/dt = -dc^j/dt Gamma^i_j(c, u)
//   dV^i/dt = -dc^j/dt Gamma^i_{jk}(c, u) V^k
// The V-equation is the exact linearization of the u-equation, so vec_end
// equals the differential of the endpoint map applied to the given vectors.
DifferentialTransportResult rho_differential(const FinslerSpace& sp, const Curve& curve,
                                             const Vec<double>& u0,
                                             const std::vector<Vec<double>>& vectors,
                                             const TransportOptions& opt = {});

// Largest change of a fundamental-tensor pairing g(V_r, V_s) between the two
// ends of the curve under joint transport.  Vanishes for every curve and
// every vector set precisely when the covariant derivative of g is zero.
double isometry_defect(const FinslerSpace& sp, const Curve& curve, const Vec<double>& u0,
                       const std::vector<Vec<double>>& vectors,
                       const TransportOptions& opt = {});

// Small coordinate square based at x: x -> x+eps*e_i -> x+eps*(e_i+e_j)
// -> x+eps*e_j -> x, each side a straight constant-speed chart segment.
Curve coordinate_loop(const Vec<double>& x, int i, int j, double eps);

// (rho_loop(u0) - u0) / eps^2 for the coordinate square above; converges to
// the curvature displacement as eps -> 0.
Vec<double> loop_holonomy_displacement(const FinslerSpace& sp, const Vec<double>& x, int i,
                                       int j, double eps, const Vec<double>& u0,
                                       const TransportOptions& opt = {});

}  // namespace finhol
