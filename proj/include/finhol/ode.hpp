#pragma once

#include <functional>
#include <span>
#include <vector>

#include "finhol/errors.hpp"

namespace finhol {

struct OdeOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_steps = 500000;
  // extra interpolated observer calls per accepted step (cubic Hermite);
  // used for drift diagnostics, not for the solution itself
  int dense_per_step = 0;
};

struct OdeStats {
  long steps = 0;     // accepted
  long rejected = 0;
  double max_error_estimate = 0;  // largest scaled local error among accepted steps
};

using OdeRhs = std::function<void(double, std::span<const double>, std::span<double>)>;
using OdeObserver = std::function<void(double, std::span<const double>)>;

// Explicit adaptive embedded Runge-Kutta 5(4) (Dormand-Prince pair) from t0
// to t1 > t0, advancing y in place.  The observer, when given, sees the
// initial state, every accepted step, and `dense_per_step` interpolated
// points inside each step.  Throws IntegrationError on step-size underflow
// or a non-finite state.
void integrate(const OdeRhs& rhs, double t0, double t1, std::vector<double>& y,
               const OdeOptions& opt = {}, OdeStats* stats = nullptr,
               const OdeObserver& observer = {});

}  // namespace finhol
