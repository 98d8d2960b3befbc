#include "finhol/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace finhol {

namespace {

OdeOptions ode_options(const TransportOptions& opt) {
  OdeOptions o;
  o.abs_tol = opt.abs_tol;
  o.rel_tol = opt.rel_tol;
  o.dense_per_step = opt.drift_samples;
  return o;
}

void accumulate(OdeStats& total, const OdeStats& part) {
  total.steps += part.steps;
  total.rejected += part.rejected;
  total.max_error_estimate = std::max(total.max_error_estimate, part.max_error_estimate);
}

}  // namespace

TransportResult horizontal_lift(const FinslerSpace& sp, const Curve& curve,
                                const Vec<double>& u0, const TransportOptions& opt) {
  const int m = sp.dim();
  if (curve.dim() != m || static_cast<int>(u0.size()) != m)
    throw ConfigError("horizontal_lift: dimension mismatch");
  if (opt.validate_chart) curve.validate_in_chart(sp.chart());

  const int n = curve.segment_count();
  Vec<double> x0 = curve.point(0.0);
  const double f0 = sp.F(std::span<const double>(x0), std::span<const double>(u0));

  TransportResult res;
  res.u_end = u0;
  Vec<double> p, v;

  auto drift_observer = [&](double t, std::span<const double> y) {
    Vec<double> c = curve.point(t);
    double f = sp.F(std::span<const double>(c), y);
    res.f_drift = std::max(res.f_drift, std::abs(f - f0));
  };

  for (int s = 0; s < n; ++s) {
    auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
      double local = t * n - s;
      curve.eval_on_segment(s, local, p, v);
      Mat<double> Gamma =
          nonlinear_connection(sp, std::span<const double>(p), y);
      for (int i = 0; i < m; ++i) {
        double acc = 0;
        for (int j = 0; j < m; ++j) acc += v[static_cast<std::size_t>(j)] * Gamma(i, j);
        dy[static_cast<std::size_t>(i)] = -acc;
      }
    };
    OdeStats part;
    integrate(rhs, static_cast<double>(s) / n, static_cast<double>(s + 1) / n, res.u_end,
              ode_options(opt), &part, drift_observer);
    accumulate(res.stats, part);
  }
  return res;
}

Vec<double> rho(const FinslerSpace& sp, const Curve& curve, const Vec<double>& u0,
                const TransportOptions& opt) {
  return horizontal_lift(sp, curve, u0, opt).u_end;
}

DifferentialTransportResult rho_differential(const FinslerSpace& sp, const Curve& curve,
                                             const Vec<double>& u0,
                                             const std::vector<Vec<double>>& vectors,
                                             const TransportOptions& opt) {
  const int m = sp.dim();
  const std::size_t um = static_cast<std::size_t>(m);
  if (curve.dim() != m || u0.size() != um)
    throw ConfigError("rho_differential: dimension mismatch");
  for (const auto& V : vectors)
    if (V.size() != um) throw ConfigError("rho_differential: vector dimension mismatch");
  if (opt.validate_chart) curve.validate_in_chart(sp.chart());

  const int n = curve.segment_count();
  const std::size_t k = vectors.size();
  Vec<double> x0 = curve.point(0.0);
  const double f0 = sp.F(std::span<const double>(x0), std::span<const double>(u0));

  // joint state: fiber point first, then the k vectors
  std::vector<double> y(um * (1 + k));
  std::copy(u0.begin(), u0.end(), y.begin());
  for (std::size_t r = 0; r < k; ++r)
    std::copy(vectors[r].begin(), vectors[r].end(), y.begin() + um * (1 + r));

  DifferentialTransportResult res;
  Vec<double> p, v;

  auto drift_observer = [&](double t, std::span<const double> yy) {
    Vec<double> c = curve.point(t);
    double f = sp.F(std::span<const double>(c), yy.subspan(0, um));
    res.f_drift = std::max(res.f_drift, std::abs(f - f0));
  };

  for (int s = 0; s < n; ++s) {
    auto rhs = [&](double t, std::span<const double> yy, std::span<double> dy) {
      double local = t * n - s;
      curve.eval_on_segment(s, local, p, v);
      std::span<const double> u = yy.subspan(0, um);
      Mat<double> Gamma = nonlinear_connection(sp, std::span<const double>(p), u);
      std::vector<Mat<double>> B =
          berwald_coefficients(sp, std::span<const double>(p), u);
      for (int i = 0; i < m; ++i) {
        double acc = 0;
        for (int j = 0; j < m; ++j) acc += v[static_cast<std::size_t>(j)] * Gamma(i, j);
        dy[static_cast<std::size_t>(i)] = -acc;
      }
      for (std::size_t r = 0; r < k; ++r) {
        std::span<const double> V = yy.subspan(um * (1 + r), um);
        for (int i = 0; i < m; ++i) {
          double acc = 0;
          for (int j = 0; j < m; ++j)
            for (int c = 0; c < m; ++c)
              acc += v[static_cast<std::size_t>(j)] *
                     B[static_cast<std::size_t>(i)](j, c) * V[static_cast<std::size_t>(c)];
          dy[um * (1 + r) + static_cast<std::size_t>(i)] = -acc;
        }
      }
    };
    OdeStats part;
    integrate(rhs, static_cast<double>(s) / n, static_cast<double>(s + 1) / n, y,
              ode_options(opt), &part, drift_observer);
    accumulate(res.stats, part);
  }

  res.u_end.assign(y.begin(), y.begin() + static_cast<long>(um));
  res.vec_end.resize(k);
  for (std::size_t r = 0; r < k; ++r)
    res.vec_end[r].assign(y.begin() + static_cast<long>(um * (1 + r)),
                          y.begin() + static_cast<long>(um * (2 + r)));
  return res;
}

double isometry_defect(const FinslerSpace& sp, const Curve& curve, const Vec<double>& u0,
                       const std::vector<Vec<double>>& vectors, const TransportOptions& opt) {
  DifferentialTransportResult tr = rho_differential(sp, curve, u0, vectors, opt);
  Vec<double> x0 = curve.point(0.0), x1 = curve.point(1.0);
  Mat<double> g0 = fundamental_tensor(sp, std::span<const double>(x0),
                                      std::span<const double>(u0));
  Mat<double> g1 = fundamental_tensor(sp, std::span<const double>(x1),
                                      std::span<const double>(tr.u_end));
  const int m = sp.dim();
  double defect = 0;
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    for (std::size_t s = r; s < vectors.size(); ++s) {
      double before = 0, after = 0;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          before += g0(a, b) * vectors[r][static_cast<std::size_t>(a)] *
                    vectors[s][static_cast<std::size_t>(b)];
          after += g1(a, b) * tr.vec_end[r][static_cast<std::size_t>(a)] *
                   tr.vec_end[s][static_cast<std::size_t>(b)];
        }
      defect = std::max(defect, std::abs(after - before));
    }
  }
  return defect;
}

Curve coordinate_loop(const Vec<double>& x, int i, int j, double eps) {
  const int m = static_cast<int>(x.size());
  if (i < 0 || i >= m || j < 0 || j >= m || i == j)
    throw ConfigError("coordinate_loop: bad axis pair");
  if (!(eps > 0)) throw ConfigError("coordinate_loop: eps must be positive");
  Vec<double> a = x, b = x, c = x;
  a[static_cast<std::size_t>(i)] += eps;
  b[static_cast<std::size_t>(i)] += eps;
  b[static_cast<std::size_t>(j)] += eps;
  c[static_cast<std::size_t>(j)] += eps;
  return Curve::polygon({x, a, b, c, x});
}

Vec<double> loop_holonomy_displacement(const FinslerSpace& sp, const Vec<double>& x, int i,
                                       int j, double eps, const Vec<double>& u0,
                                       const TransportOptions& opt) {
  Curve loop = coordinate_loop(x, i, j, eps);
  Vec<double> u1 = rho(sp, loop, u0, opt);
  Vec<double> disp(u0.size());
  for (std::size_t a = 0; a < u0.size(); ++a) disp[a] = (u1[a] - u0[a]) / (eps * eps);
  return disp;
}

}  // namespace finhol
