#include "finhol/metric.hpp"

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <random>

#include "finhol/finsler.hpp"

namespace finhol {

namespace {

std::string num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string sum_of_powers(int m, char var, int p) {
  std::string s;
  for (int i = 1; i <= m; ++i) {
    if (i > 1) s += " + ";
    s += var + std::to_string(i) + "^" + std::to_string(p);
  }
  return s;
}

Box cube(int m, double lo, double hi) {
  Box b;
  b.lo.assign(static_cast<std::size_t>(m), lo);
  b.hi.assign(static_cast<std::size_t>(m), hi);
  return b;
}

}  // namespace

MetricSpec catalog_metric(const std::string& name, int dim, double param) {
  MetricSpec s;
  s.name = name;
  if (name == "euclidean") {
    s.dim = dim;
    s.f_text = "sqrt(" + sum_of_powers(dim, 'u', 2) + ")";
    s.chart = cube(dim, -1.0, 1.0);
  } else if (name == "minkowski-quartic") {
    s.dim = dim;
    s.f_text = "(" + sum_of_powers(dim, 'u', 4) + ")^(1/4)";
    s.chart = cube(dim, -1.0, 1.0);
  } else if (name == "sphere2") {
    // round unit sphere in polar coordinates (x1 = colatitude, x2 = longitude)
    s.dim = 2;
    s.f_text = "sqrt(u1^2 + sin(x1)^2*u2^2)";
    s.chart.lo = {0.0, 0.0};
    s.chart.hi = {3.14159265358979323846, 6.28318530717958647692};
  } else if (name == "poincare-disk") {
    // hyperbolic plane; chart restricted to a box strictly inside the unit disk
    s.dim = 2;
    s.f_text = "2*sqrt(u1^2 + u2^2)/(1 - x1^2 - x2^2)";
    s.chart = cube(2, -0.7, 0.7);
  } else if (name == "randers") {
    // euclidean norm plus a linear drift 1-form b = (param*x2, 0); |b| < 1
    // on the chart keeps the metric strongly convex.  Not Berwald (db != 0).
    s.dim = 2;
    if (!(std::fabs(param) < 0.5))
      throw ConfigError("randers drift coefficient must satisfy |c| < 0.5, got " + num(param));
    s.f_text = "sqrt(u1^2 + u2^2) + " + num(param) + "*x2*u1";
    s.chart = cube(2, -1.0, 1.0);
  } else {
    throw ConfigError("unknown catalog metric '" + name + "'");
  }
  return s;
}

std::vector<std::string> catalog_names() {
  return {"euclidean", "minkowski-quartic", "sphere2", "poincare-disk", "randers"};
}

std::vector<Vec<double>> fiber_directions(int m, int count) {
  std::vector<Vec<double>> dirs;
  if (m == 2) {
    const int n = count > 0 ? count : 16;
    // equal spacing with an irrational phase, so no direction ever lands
    // exactly on a coordinate axis regardless of the count (the quartic
    // norm's fundamental tensor is singular there)
    const double phase = 0.30901699437494745;
    for (int s = 0; s < n; ++s) {
      double th = 2.0 * M_PI * (s + phase) / n;
      dirs.push_back({std::cos(th), std::sin(th)});
    }
  } else if (m == 3) {
    const int n = count > 0 ? count : 64;
    const double ga = M_PI * (3.0 - std::sqrt(5.0));  // golden angle
    for (int i = 0; i < n; ++i) {
      double z = 1.0 - 2.0 * (i + 0.5) / n;
      double r = std::sqrt(1.0 - z * z);
      dirs.push_back({r * std::cos(ga * i), r * std::sin(ga * i), z});
    }
  } else {
    const int n = count > 0 ? count : 16 * m;
    std::mt19937_64 rng(0x5eedf1be);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      Vec<double> d(static_cast<std::size_t>(m));
      double nrm = 0;
      do {
        for (auto& c : d) c = gauss(rng);
        nrm = norm2(d);
      } while (nrm < 1e-8);
      for (auto& c : d) c /= nrm;
      dirs.push_back(std::move(d));
    }
  }
  return dirs;
}

std::vector<Vec<double>> chart_grid(const Box& box, int per_axis, double margin_frac) {
  const int m = box.dim();
  std::vector<Vec<double>> pts;
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  for (;;) {
    Vec<double> x(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      double f = (idx[static_cast<std::size_t>(i)] + 0.5) / per_axis;
      double edge = box.hi[static_cast<std::size_t>(i)] - box.lo[static_cast<std::size_t>(i)];
      x[static_cast<std::size_t>(i)] =
          box.lo[static_cast<std::size_t>(i)] + edge * (margin_frac + (1.0 - 2.0 * margin_frac) * f);
    }
    pts.push_back(std::move(x));
    int d = 0;
    while (d < m && ++idx[static_cast<std::size_t>(d)] == per_axis) {
      idx[static_cast<std::size_t>(d)] = 0;
      ++d;
    }
    if (d == m) break;
  }
  return pts;
}

namespace {

double homogeneity_residual_impl(const Expr& f, const Box& chart, int dim) {
  const auto pts = chart_grid(chart, 3);
  const auto dirs = fiber_directions(dim);
  const double lambdas[] = {0.5, 2.0, 3.0};
  double worst = 0;
  for (const auto& x : pts) {
    for (const auto& u : dirs) {
      EvalPoint<double> p{x, u, nullptr};
      double base = eval_node(*f.root, p);
      for (double s : lambdas) {
        Vec<double> su(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) su[i] = s * u[i];
        EvalPoint<double> ps{x, su, nullptr};
        double scaled = eval_node(*f.root, ps);
        worst = std::max(worst, std::fabs(scaled - s * base));
      }
    }
  }
  return worst;
}

}  // namespace

double homogeneity_residual(const Expr& f, const Box& chart, int dim) {
  return homogeneity_residual_impl(f, chart, dim);
}

double homogeneity_residual(const FinslerSpace& space) {
  return homogeneity_residual_impl(space.f_expr(), space.chart(), space.dim());
}

FinslerSpace::FinslerSpace(MetricSpec spec) : spec_(std::move(spec)) {
  if (spec_.dim < 2) throw ConfigError("metric dimension must be at least 2");
  if (spec_.chart.dim() != spec_.dim)
    throw ConfigError("chart box dimension does not match metric dimension");
  for (int i = 0; i < spec_.dim; ++i)
    if (!(spec_.chart.lo[static_cast<std::size_t>(i)] < spec_.chart.hi[static_cast<std::size_t>(i)]))
      throw ConfigError("chart box is empty in coordinate " + std::to_string(i + 1));

  f_ = parse_expression(spec_.f_text, VarSpace{spec_.dim, false});

  // positivity and positive 1-homogeneity of F on the sample grid
  const auto pts = chart_grid(spec_.chart, 3);
  const auto dirs = fiber_directions(spec_.dim);
  for (const auto& x : pts) {
    for (const auto& u : dirs) {
      double f = F<double>(x, u);
      if (!(f > 0.0))
        throw GeometryError("F is not positive at x=" + format_vec(x) + ", u=" + format_vec(u));
    }
  }
  double hres = homogeneity_residual(*this);
  if (!(hres < 1e-8))
    throw GeometryError("F fails positive 1-homogeneity: residual " + std::to_string(hres));

  // positive definiteness of the fundamental tensor on the same grid
  for (const auto& x : pts) {
    for (const auto& u : dirs) {
      Mat<double> g = fundamental_tensor<double>(*this, x, u);
      Eigen::MatrixXd G(spec_.dim, spec_.dim);
      double scale = 0;
      for (int a = 0; a < spec_.dim; ++a)
        for (int b = 0; b < spec_.dim; ++b) {
          G(a, b) = g(a, b);
          scale = std::max(scale, std::fabs(g(a, b)));
        }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
      if (es.eigenvalues().minCoeff() <= 1e-10 * std::max(1.0, scale))
        throw GeometryError("fundamental tensor is not positive definite at x=" +
                            format_vec(x) + ", u=" + format_vec(u));
    }
  }
}

}  // namespace finhol
