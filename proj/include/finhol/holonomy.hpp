#pragma once

#include <limits>
#include <vector>

#include "finhol/transport.hpp"
#include "finhol/vertical_field.hpp"

namespace finhol {

// ---- pointwise residuals -----------------------------------------------------

// Lie-derivative defect of the fundamental tensor along a vertical field:
//   eta^c dg_ab/du^c + g_cb deta^c/du^a + g_ac deta^c/du^b
// maximized over indicatrix samples at x.  Zero for every curvature field
// exactly when transport acts by isometries of the fibers.
double isometry_residual(const FinslerSpace& sp, const FieldPtr& field, const Vec<double>& x,
                         int samples = 16);

// Defect of  (D_i D_j - D_j D_i) V = [V, R(d_i, d_j)]  at x, maximized over
// indicatrix samples and components.
double curvature_identity_residual(const FinslerSpace& sp, const FieldPtr& V, int i, int j,
                                   const Vec<double>& x, int samples = 8);

// max |V^a dF/du^a|: vanishes when the field is tangent to the indicatrix.
double f_annihilation_residual(const FinslerSpace& sp, const FieldPtr& field,
                               const Vec<double>& x, int samples = 16);

// ---- spans and algebra estimates ----------------------------------------------

// Curvature fields and their iterated covariant derivatives up to total
// derivative order k - 2 (k >= 2), cumulative, deterministic order.
std::vector<FieldPtr> ck_generators(const FinslerSpace& sp, int k);

struct SpanReport {
  int rank = 0;
  // sigma_rank / sigma_{rank+1}; infinity when nothing falls below the cut
  double gap = std::numeric_limits<double>::infinity();
  std::vector<double> singular_values;
  int rows = 0, cols = 0;
};

// Numerical dimension of the span of the given fields, sampled on the
// indicatrix at x.  A singular value counts toward the rank when it exceeds
// max(rel_tol * sigma_max, 1e-9).
SpanReport span_dimension(const std::vector<FieldPtr>& fields, const FinslerSpace& sp,
                          const Vec<double>& x, int samples = 16, double rel_tol = 1e-8);

struct AlgebraReport {
  int dimension = 0;
  std::vector<int> ranks_by_k;    // rank of C^2, C^3, ... in order
  int stabilized_at_k = -1;       // first k whose rank repeats the previous one
  bool generators_stabilized = false;
  int closure_rounds = 0;
  bool closure_stabilized = false;
  bool depth_limited = false;     // candidate brackets beyond the depth cap were skipped
  SpanReport final_span;
};

// Estimates the curvature algebra at x: grow C^k until the rank stabilizes
// (two consecutive k agree), then close under fiberwise brackets until the
// rank stops growing.
AlgebraReport curvature_algebra_dimension(const FinslerSpace& sp, const Vec<double>& x,
                                          int k_cap = 6, int depth_cap = kDefaultFieldDepthCap,
                                          int samples = 16);

// ---- parallel translates -------------------------------------------------------

struct TranslateReport {
  int base_rank = 0;      // span of the untranslated curvature fields at x
  int combined_rank = 0;  // including every translated copy
  std::vector<int> ranks_after_each_curve;
  bool stabilized = false;  // the last four curve additions left the rank unchanged
  SpanReport final_span;
};

// Pulls curvature fields back along a deterministic family of curves ending
// at x (straight chart segments toward x from eight directions, then four
// two-leg polylines) and measures the span of everything together.
TranslateReport translated_curvature_span(const FinslerSpace& sp, const Vec<double>& x,
                                          int samples = 16, const TransportOptions& topt = {});

// ---- transport/derivative consistency ------------------------------------------

struct TaylorReport {
  double residual_coarse = 0;  // at s
  double residual_fine = 0;    // at s/2
  double ratio = 0;
  double expected_ratio = 0;   // 2^(order+1)
};

// Pulls the field back from x + s*w to x along the straight segment and
// compares with its covariant Taylor polynomial  sum_{r<=order} s^r/r! (w.D)^r V
// evaluated at x.  The residual must shrink like s^(order+1), so halving s
// divides it by about 2^(order+1).
TaylorReport taylor_transport_check(const FinslerSpace& sp, const Vec<double>& x,
                                    const Vec<double>& w, const FieldPtr& field, int order,
                                    double s = 0.1, int samples = 8,
                                    const TransportOptions& topt = {});

}  // namespace finhol
