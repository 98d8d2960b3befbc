#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

#include "finhol/curve.hpp"
#include "finhol/holonomy.hpp"
#include "finhol/ode.hpp"

namespace finhol {

// A finite-dimensional bundle of Lie algebras over a chart box: at each base
// point x the fiber R^n carries a bracket  [e_a, e_b] = C^c_ab(x) e_c  and a
// covariant derivative  D_i e_a = (K_i)^b_a(x) e_b,  with every coefficient an
// expression in the base coordinates x1..xm.  Construction validates bracket
// antisymmetry and the Jacobi identity on a deterministic sample grid.
class LieBundleModel {
 public:
  // structure[c][a][b] is C^c_ab; connection[i][b][a] is (K_i)^b_a
  LieBundleModel(Box chart, int fiber_dim,
                 std::vector<std::vector<std::vector<std::string>>> structure,
                 std::vector<std::vector<std::vector<std::string>>> connection);

  int base_dim() const { return base_dim_; }
  int fiber_dim() const { return fiber_dim_; }
  const Box& chart() const { return chart_; }

  // C[c][a][b] flattened as c*n*n + a*n + b
  std::vector<double> structure_at(const Vec<double>& x) const;
  // dC^c_ab/dx^i, same layout
  std::vector<double> structure_derivative_at(const Vec<double>& x, int i) const;
  // matrix K with K(b, a) = (K_i)^b_a, so K * v acts on fiber coordinates
  Eigen::MatrixXd connection_at(const Vec<double>& x, int i) const;

  // max |C^c_ab + C^c_ba| and the classical cyclic-double-bracket defect at x
  double antisymmetry_residual(const Vec<double>& x) const;
  double jacobi_residual(const Vec<double>& x) const;

 private:
  Box chart_;
  int base_dim_ = 0;
  int fiber_dim_ = 0;
  std::vector<Expr> c_;  // c*n*n + a*n + b
  std::vector<Expr> k_;  // (i*n + b)*n + a
};

// Frame transport along a curve: the coefficient matrix L(t) solves
//   dL/dt = -(velocity^i (K_i)) L,   L(0) = identity,
// so eta_a(t) = L^b_a(t) e_b is the parallel frame through the coordinate
// basis, and L(t) * frame0 carries an arbitrary initial basis.
struct ParallelFrameResult {
  std::vector<double> times;            // accepted solver times, first 0, last t_end
  std::vector<Eigen::MatrixXd> lambda;  // L at each accepted time
  Eigen::MatrixXd frame_end;            // L(t_end) * frame0
  double min_abs_det = 1.0;
  double valid_until = 0.0;  // last accepted time before |det L| first drops below 1e-10
  bool fully_valid = true;
  OdeStats stats;
};

ParallelFrameResult parallel_frame(const LieBundleModel& model, const Curve& curve,
                                   const Eigen::MatrixXd& frame0, double t_end = 1.0,
                                   const OdeOptions& opt = {});

// L(t) alone, integrated from the start of the curve to global time t
Eigen::MatrixXd lambda_at(const LieBundleModel& model, const Curve& curve, double t,
                          const OdeOptions& opt = {});

// Defect of the derivation rule for D_i on the bracket at x:
//   max_{a,b,c} | dC^c_ab/dx^i + C^d_ab (K_i)^c_d - C^c_db (K_i)^d_a - C^c_ad (K_i)^d_b |
// Zero exactly when D_i preserves brackets of parallel sections.
double lie_connection_residual(const LieBundleModel& model, const Vec<double>& x, int i);

// Compares transporting a bracket with bracketing the transports along the
// curve: max over basis pairs (a,b) and components e of
//   | L^e_f C^f_ab(start) - C^e_cd(end) L^c_a L^d_b |.
// An empty pair list means all pairs a < b.
double transport_bracket_check(const LieBundleModel& model, const Curve& curve,
                               const std::vector<std::pair<int, int>>& pairs = {},
                               const OdeOptions& opt = {});

// Local frame at `target` produced by transporting frame0 from `origin` along
// the axis-aligned staircase path (one coordinate adjusted per leg).
Eigen::MatrixXd ray_frame(const LieBundleModel& model, const Vec<double>& origin,
                          const Vec<double>& target, const Eigen::MatrixXd& frame0,
                          const OdeOptions& opt = {});

// Extracts a finite-dimensional bracket table from a family of vertical
// fields: picks a maximal independent subset as a basis (input order,
// greedy), then fits [V_a, V_b] = C^c_ab V_c by least squares over the same
// indicatrix sample grid the span estimate uses.
struct HolonomyFrame {
  std::vector<int> basis;         // indices into the input field list
  std::vector<double> structure;  // C[c][a][b] flattened, r = basis.size()
  double residual = 0;            // worst absolute fit error over samples
  SpanReport span;
};

HolonomyFrame frame_from_holonomy(const FinslerSpace& sp, const Vec<double>& x,
                                  const std::vector<FieldPtr>& fields, int samples = 16,
                                  double rel_tol = 1e-8);

}  // namespace finhol
