#include "finhol/finsler.hpp"

namespace finhol {

Vec<double> indicatrix_point(const FinslerSpace& sp, std::span<const double> x,
                             std::span<const double> dir) {
  if (max_abs(Vec<double>(dir.begin(), dir.end())) == 0.0)
    throw GeometryError("cannot project the zero direction onto the indicatrix");
  double f = sp.F<double>(x, dir);
  if (!(f > 0.0))
    throw GeometryError("F is not positive at x=" + format_vec(x) +
                        ", direction=" + format_vec(dir));
  Vec<double> u(dir.size());
  for (std::size_t i = 0; i < dir.size(); ++i) u[i] = dir[i] / f;
  return u;
}

std::vector<Mat<double>> landsberg_tensor(const FinslerSpace& sp, std::span<const double> x,
                                          std::span<const double> u) {
  const int m = sp.dim();
  Mat<double> Gamma = nonlinear_connection<double>(sp, x, u);
  auto B = berwald_coefficients<double>(sp, x, u);
  Mat<double> g = fundamental_tensor<double>(sp, x, u);

  std::vector<Mat<double>> out(static_cast<std::size_t>(m), Mat<double>(m, m));
  using D = Dual<double>;
  for (int i = 0; i < m; ++i) {
    // derivative of g along the horizontal field H_i = d/dx^i - Gamma^a_i d/du^a
    std::vector<D> X(static_cast<std::size_t>(m)), U(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      X[static_cast<std::size_t>(j)] = D(x[static_cast<std::size_t>(j)], j == i ? 1.0 : 0.0);
      U[static_cast<std::size_t>(j)] = D(u[static_cast<std::size_t>(j)], -Gamma(j, i));
    }
    Mat<D> gh = fundamental_tensor(sp, std::span<const D>(X), std::span<const D>(U));
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        double v = gh(a, b).dot;
        for (int c = 0; c < m; ++c)
          v -= B[static_cast<std::size_t>(c)](i, a) * g(c, b) +
               B[static_cast<std::size_t>(c)](i, b) * g(a, c);
        out[static_cast<std::size_t>(i)](a, b) = v;
      }
    }
  }
  return out;
}

double landsberg_residual(const FinslerSpace& sp, std::span<const double> x,
                          std::span<const double> u) {
  auto t = landsberg_tensor(sp, x, u);
  double worst = 0;
  for (const auto& mi : t)
    for (double v : mi.a) worst = std::max(worst, std::fabs(v));
  return worst;
}

double berwald_residual(const FinslerSpace& sp, std::span<const double> x,
                        std::span<const double> u) {
  const int m = sp.dim();
  using D = Dual<double>;
  std::vector<D> X = lift<D>(x);
  double worst = 0;
  for (int l = 0; l < m; ++l) {
    std::vector<D> U(static_cast<std::size_t>(m));
    for (int c = 0; c < m; ++c)
      U[static_cast<std::size_t>(c)] = D(u[static_cast<std::size_t>(c)], c == l ? 1.0 : 0.0);
    auto Bd = berwald_coefficients(sp, std::span<const D>(X), std::span<const D>(U));
    for (const auto& mi : Bd)
      for (const D& v : mi.a) worst = std::max(worst, std::fabs(v.dot));
  }
  return worst;
}

double riemannian_residual(const FinslerSpace& sp, std::span<const double> x,
                           std::span<const double> u) {
  const int m = sp.dim();
  using D = Dual<double>;
  std::vector<D> X = lift<D>(x);
  double worst = 0;
  for (int c = 0; c < m; ++c) {
    std::vector<D> U(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j)
      U[static_cast<std::size_t>(j)] = D(u[static_cast<std::size_t>(j)], j == c ? 1.0 : 0.0);
    Mat<D> gd = fundamental_tensor(sp, std::span<const D>(X), std::span<const D>(U));
    for (const D& v : gd.a) worst = std::max(worst, 0.5 * std::fabs(v.dot));
  }
  return worst;
}

ConnectionData connection_at(const FinslerSpace& sp, std::span<const double> x,
                             std::span<const double> u) {
  ConnectionData c;
  c.G = spray<double>(sp, x, u);
  c.nonlinear = nonlinear_connection<double>(sp, x, u);
  c.berwald = berwald_coefficients<double>(sp, x, u);
  return c;
}

}  // namespace finhol
