#include "finhol/ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

namespace finhol {

namespace {

// Dormand-Prince coefficients.  The fifth-order solution is advanced; the
// embedded fourth-order solution supplies the error estimate.  First-same-
// as-last: k7 of an accepted step is k1 of the next.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b* (difference against the embedded fourth-order weights)
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600;
constexpr double e3 = 500.0 / 1113 - 7571.0 / 16695;
constexpr double e4 = 125.0 / 192 - 393.0 / 640;
constexpr double e5 = -2187.0 / 6784 + 92097.0 / 339200;
constexpr double e6 = 11.0 / 84 - 187.0 / 2100;
constexpr double e7 = -1.0 / 40;

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

void integrate(const OdeRhs& rhs, double t0, double t1, std::vector<double>& y,
               const OdeOptions& opt, OdeStats* stats, const OdeObserver& observer) {
  if (!(t1 > t0)) throw ConfigError("integrate: requires t1 > t0");
  if (!(opt.abs_tol > 0) || !(opt.rel_tol > 0))
    throw ConfigError("integrate: tolerances must be positive");
  const std::size_t n = y.size();
  const double span = t1 - t0;
  const double hmin = 1e-14 * std::max({std::abs(t0), std::abs(t1), 1.0});

  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  std::vector<double> ytmp(n), ynew(n), yerr(n);

  double t = t0;
  double h = span / 100.0;
  OdeStats local{};
  OdeStats& st = stats ? *stats : local;
  st = OdeStats{};

  if (observer) observer(t, y);
  rhs(t, y, k1);
  if (!all_finite(k1))
    throw IntegrationError("non-finite derivative at t=" + std::to_string(t));

  while (t < t1) {
    if (st.steps + st.rejected >= opt.max_steps)
      throw IntegrationError("step limit exceeded (" + std::to_string(opt.max_steps) +
                             ") before reaching t=" + std::to_string(t1));
    const bool last_step = h >= t1 - t;
    if (last_step) h = t1 - t;
    if (h < hmin)
      throw IntegrationError("step size underflow at t=" + std::to_string(t));

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    rhs(t + c2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                            a65 * k5[i]);
    rhs(t + h, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                            b6 * k6[i]);
    rhs(t + h, ynew, k7);

    if (!all_finite(ynew) || !all_finite(k7))
      throw IntegrationError("non-finite state at t=" + std::to_string(t + h));

    // scaled RMS error of the embedded pair
    double err = 0;
    for (std::size_t i = 0; i < n; ++i) {
      yerr[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                     e6 * k6[i] + e7 * k7[i]);
      double scale =
          opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      double r = yerr[i] / scale;
      err += r * r;
    }
    err = n ? std::sqrt(err / static_cast<double>(n)) : 0.0;

    if (err <= 1.0) {
      if (observer && opt.dense_per_step > 0) {
        // cubic Hermite on (y, h*k1) -- (ynew, h*k7)
        for (int q = 1; q <= opt.dense_per_step; ++q) {
          double s = static_cast<double>(q) / (opt.dense_per_step + 1);
          double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
          double h10 = s * (1 - s) * (1 - s);
          double h01 = s * s * (3 - 2 * s);
          double h11 = s * s * (s - 1);
          for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = h00 * y[i] + h10 * h * k1[i] + h01 * ynew[i] + h11 * h * k7[i];
          observer(t + s * h, ytmp);
        }
      }
      t = last_step ? t1 : t + h;
      y = ynew;
      k1 = k7;  // first-same-as-last
      ++st.steps;
      st.max_error_estimate = std::max(st.max_error_estimate, err);
      if (observer) observer(t, y);
      double grow = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      h *= std::clamp(grow, 0.2, 5.0);
    } else {
      ++st.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
    }
  }
}

}  // namespace finhol
