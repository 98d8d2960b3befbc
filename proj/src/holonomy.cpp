#include "finhol/holonomy.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace finhol {

namespace {

std::vector<Vec<double>> indicatrix_samples(const FinslerSpace& sp, const Vec<double>& x,
                                            int samples) {
  std::vector<Vec<double>> out;
  for (const auto& dir : fiber_directions(sp.dim(), samples))
    out.push_back(indicatrix_point(sp, x, dir));
  return out;
}

double min_edge(const Box& box) {
  double e = box.hi[0] - box.lo[0];
  for (std::size_t i = 1; i < box.lo.size(); ++i) e = std::min(e, box.hi[i] - box.lo[i]);
  return e;
}

// rank/gap bookkeeping shared by every span estimate
SpanReport svd_report(const Eigen::MatrixXd& A, double rel_tol) {
  SpanReport rep;
  rep.rows = static_cast<int>(A.rows());
  rep.cols = static_cast<int>(A.cols());
  if (A.rows() == 0 || A.cols() == 0) return rep;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& sv = svd.singularValues();
  double smax = sv.size() ? sv(0) : 0.0;
  double cut = std::max(rel_tol * smax, 1e-9);
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    rep.singular_values.push_back(sv(i));
    if (sv(i) > cut) rep.rank = static_cast<int>(i) + 1;
  }
  if (rep.rank > 0 && rep.rank < sv.size() && sv(rep.rank) > 0.0)
    rep.gap = sv(rep.rank - 1) / sv(rep.rank);
  return rep;
}

Eigen::MatrixXd field_rows(const std::vector<FieldPtr>& fields, const FinslerSpace& sp,
                           const Vec<double>& x, const std::vector<Vec<double>>& us) {
  const int m = sp.dim();
  Eigen::MatrixXd A(static_cast<Eigen::Index>(fields.size()),
                    static_cast<Eigen::Index>(us.size() * static_cast<std::size_t>(m)));
  for (std::size_t f = 0; f < fields.size(); ++f) {
    for (std::size_t s = 0; s < us.size(); ++s) {
      Vec<double> v = eval_field<double>(*fields[f], sp, std::span<const double>(x),
                                         std::span<const double>(us[s]));
      for (int a = 0; a < m; ++a)
        A(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(s * static_cast<std::size_t>(m) + static_cast<std::size_t>(a))) =
            v[static_cast<std::size_t>(a)];
    }
  }
  return A;
}

}  // namespace

double isometry_residual(const FinslerSpace& sp, const FieldPtr& field, const Vec<double>& x,
                         int samples) {
  if (!field) throw ConfigError("isometry_residual: missing field");
  const int m = sp.dim();
  const std::size_t um = static_cast<std::size_t>(m);
  using D = Dual<double>;
  double worst = 0;

  for (const auto& u : indicatrix_samples(sp, x, samples)) {
    Vec<double> eta = field_value(field, sp, x, u);
    Mat<double> g = fundamental_tensor(sp, std::span<const double>(x), std::span<const double>(u));

    // eta^c dg_ab/du^c in one directional pass
    std::vector<D> X(um), U(um);
    for (int b = 0; b < m; ++b) {
      X[static_cast<std::size_t>(b)] = D(x[static_cast<std::size_t>(b)], 0.0);
      U[static_cast<std::size_t>(b)] = D(u[static_cast<std::size_t>(b)], eta[static_cast<std::size_t>(b)]);
    }
    Mat<D> g_along = fundamental_tensor(sp, std::span<const D>(X), std::span<const D>(U));

    // field Jacobian deta^c/du^a, one seeded pass per a
    Mat<double> J(m, m);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b)
        U[static_cast<std::size_t>(b)] = D(u[static_cast<std::size_t>(b)], b == a ? 1.0 : 0.0);
      Vec<D> etad = eval_field<D>(*field, sp, std::span<const D>(X), std::span<const D>(U));
      for (int c = 0; c < m; ++c) J(c, a) = etad[static_cast<std::size_t>(c)].dot;
    }

    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        double lie = g_along(a, b).dot;
        for (int c = 0; c < m; ++c) lie += g(c, b) * J(c, a) + g(a, c) * J(c, b);
        worst = std::max(worst, std::abs(lie));
      }
  }
  return worst;
}

double curvature_identity_residual(const FinslerSpace& sp, const FieldPtr& V, int i, int j,
                                   const Vec<double>& x, int samples) {
  if (!V) throw ConfigError("curvature_identity_residual: missing field");
  const int m = sp.dim();
  FieldPtr lhs = lin_comb({{1.0, nabla(i, nabla(j, V, m), m)},
                           {-1.0, nabla(j, nabla(i, V, m), m)}});
  FieldPtr rhs = bracket(V, curvature_field(i, j, m));
  double worst = 0;
  for (const auto& u : indicatrix_samples(sp, x, samples)) {
    Vec<double> a = field_value(lhs, sp, x, u);
    Vec<double> b = field_value(rhs, sp, x, u);
    for (int c = 0; c < m; ++c)
      worst = std::max(worst, std::abs(a[static_cast<std::size_t>(c)] - b[static_cast<std::size_t>(c)]));
  }
  return worst;
}

double f_annihilation_residual(const FinslerSpace& sp, const FieldPtr& field,
                               const Vec<double>& x, int samples) {
  if (!field) throw ConfigError("f_annihilation_residual: missing field");
  const int m = sp.dim();
  const std::size_t um = static_cast<std::size_t>(m);
  using D = Dual<double>;
  double worst = 0;
  for (const auto& u : indicatrix_samples(sp, x, samples)) {
    Vec<double> v = field_value(field, sp, x, u);
    std::vector<D> X(um), U(um);
    for (int b = 0; b < m; ++b) {
      X[static_cast<std::size_t>(b)] = D(x[static_cast<std::size_t>(b)], 0.0);
      U[static_cast<std::size_t>(b)] = D(u[static_cast<std::size_t>(b)], v[static_cast<std::size_t>(b)]);
    }
    D f = sp.F(std::span<const D>(X), std::span<const D>(U));
    worst = std::max(worst, std::abs(f.dot));
  }
  return worst;
}

std::vector<FieldPtr> ck_generators(const FinslerSpace& sp, int k) {
  if (k < 2) throw ConfigError("ck_generators: k must be at least 2");
  const int m = sp.dim();
  std::vector<FieldPtr> out, level;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) level.push_back(curvature_field(i, j, m));
  out = level;
  for (int r = 3; r <= k; ++r) {
    std::vector<FieldPtr> next;
    for (int a = 0; a < m; ++a)
      for (const auto& f : level) next.push_back(nabla(a, f, m));
    out.insert(out.end(), next.begin(), next.end());
    level = std::move(next);
  }
  return out;
}

SpanReport span_dimension(const std::vector<FieldPtr>& fields, const FinslerSpace& sp,
                          const Vec<double>& x, int samples, double rel_tol) {
  for (const auto& f : fields)
    if (tree_depth(f) > kDefaultFieldDepthCap)
      throw ConfigError("span_dimension: field '" + describe(f) + "' exceeds the depth cap");
  auto us = indicatrix_samples(sp, x, samples);
  return svd_report(field_rows(fields, sp, x, us), rel_tol);
}

AlgebraReport curvature_algebra_dimension(const FinslerSpace& sp, const Vec<double>& x,
                                          int k_cap, int depth_cap, int samples) {
  if (depth_cap < 2 || depth_cap > kDefaultFieldDepthCap)
    throw ConfigError("curvature_algebra_dimension: depth cap out of range");
  AlgebraReport rep;
  auto us = indicatrix_samples(sp, x, samples);

  std::vector<FieldPtr> gens;
  int prev_rank = -1;
  for (int k = 2; k <= k_cap; ++k) {
    if (k > depth_cap) {  // deeper generators are not representable under the cap
      rep.depth_limited = true;
      break;
    }
    std::vector<FieldPtr> ck = ck_generators(sp, k);
    SpanReport span = svd_report(field_rows(ck, sp, x, us), 1e-8);
    rep.ranks_by_k.push_back(span.rank);
    gens = std::move(ck);
    if (span.rank == prev_rank) {
      rep.stabilized_at_k = k;
      rep.generators_stabilized = true;
      break;
    }
    prev_rank = span.rank;
  }

  // close under fiberwise brackets
  std::vector<FieldPtr> all = gens;
  Eigen::MatrixXd rows = field_rows(all, sp, x, us);
  SpanReport span = svd_report(rows, 1e-8);
  std::size_t fresh_begin = 0;  // indices whose brackets are still pending
  for (int round = 0; round < 3; ++round) {
    std::vector<FieldPtr> cand;
    std::size_t fresh_end = all.size();
    for (std::size_t p = 0; p < fresh_end; ++p) {
      for (std::size_t q = std::max(p + 1, fresh_begin); q < fresh_end; ++q) {
        FieldPtr br = bracket(all[p], all[q]);
        if (tree_depth(br) > depth_cap) {
          rep.depth_limited = true;
          continue;
        }
        cand.push_back(std::move(br));
      }
    }
    if (cand.empty()) {
      rep.closure_stabilized = true;
      break;
    }
    Eigen::MatrixXd cand_rows = field_rows(cand, sp, x, us);
    Eigen::MatrixXd stacked(rows.rows() + cand_rows.rows(), rows.cols());
    stacked << rows, cand_rows;
    SpanReport bigger = svd_report(stacked, 1e-8);
    ++rep.closure_rounds;
    if (bigger.rank == span.rank) {
      rep.closure_stabilized = true;
      break;
    }
    span = bigger;
    rows = std::move(stacked);
    fresh_begin = fresh_end;
    all.insert(all.end(), cand.begin(), cand.end());
  }

  rep.dimension = span.rank;
  rep.final_span = span;
  return rep;
}

TranslateReport translated_curvature_span(const FinslerSpace& sp, const Vec<double>& x,
                                          int samples, const TransportOptions& topt) {
  const int m = sp.dim();
  const std::size_t um = static_cast<std::size_t>(m);
  const Box& box = sp.chart();
  const double margin = 0.05 * min_edge(box);
  if (!box.contains(x, margin))
    throw ConfigError("translated_curvature_span: base point too close to the chart edge");

  std::vector<FieldPtr> rfields;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) rfields.push_back(curvature_field(i, j, m));

  auto us = indicatrix_samples(sp, x, samples);

  // deterministic curve family ending at x
  auto dirs = fiber_directions(m, 8);
  auto fitted_offset = [&](const Vec<double>& w, double scale) {
    double delta = scale * min_edge(box);
    Vec<double> y(um);
    for (;;) {
      for (std::size_t a = 0; a < um; ++a) y[a] = x[a] - delta * w[a];
      if (box.contains(y, margin)) return y;
      delta *= 0.7;
      if (delta < 1e-6 * min_edge(box))
        throw ConfigError("translated_curvature_span: cannot fit curves inside the chart");
    }
  };
  std::vector<Curve> curves;
  for (const auto& w : dirs) curves.push_back(Curve::segment(fitted_offset(w, 0.25), x));
  for (int k = 0; k < 4; ++k) {
    const auto& w = dirs[static_cast<std::size_t>(k)];
    const auto& w2 = dirs[static_cast<std::size_t>((k + 2) % 8)];
    Vec<double> far = fitted_offset(w, 0.22);
    Vec<double> mid(um);
    Vec<double> half = fitted_offset(w2, 0.12);
    for (std::size_t a = 0; a < um; ++a) mid[a] = 0.5 * (far[a] + x[a]) + (half[a] - x[a]);
    if (!box.contains(mid, margin)) mid = half;  // fall back to a contained elbow
    curves.push_back(Curve::polygon({far, mid, x}));
  }

  TranslateReport rep;
  Eigen::MatrixXd rows = field_rows(rfields, sp, x, us);
  rep.base_rank = svd_report(rows, 1e-8).rank;

  for (const auto& c : curves) {
    Curve back = c.reversed();
    Vec<double> y = c.point(0.0);
    Eigen::MatrixXd extra(static_cast<Eigen::Index>(rfields.size()), rows.cols());
    for (std::size_t s = 0; s < us.size(); ++s) {
      Vec<double> u_far = rho(sp, back, us[s], topt);
      std::vector<Vec<double>> vals;
      for (const auto& f : rfields) vals.push_back(field_value(f, sp, y, u_far));
      DifferentialTransportResult fwd = rho_differential(sp, c, u_far, vals, topt);
      for (std::size_t f = 0; f < rfields.size(); ++f)
        for (int a = 0; a < m; ++a)
          extra(static_cast<Eigen::Index>(f),
                static_cast<Eigen::Index>(s * um + static_cast<std::size_t>(a))) =
              fwd.vec_end[f][static_cast<std::size_t>(a)];
    }
    Eigen::MatrixXd stacked(rows.rows() + extra.rows(), rows.cols());
    stacked << rows, extra;
    rows = std::move(stacked);
    rep.ranks_after_each_curve.push_back(svd_report(rows, 1e-8).rank);
  }

  rep.final_span = svd_report(rows, 1e-8);
  rep.combined_rank = rep.final_span.rank;
  const auto& seq = rep.ranks_after_each_curve;
  rep.stabilized = seq.size() >= 4;
  for (std::size_t i = seq.size() >= 4 ? seq.size() - 4 : 0; rep.stabilized && i < seq.size(); ++i)
    if (seq[i] != rep.combined_rank) rep.stabilized = false;
  return rep;
}

TaylorReport taylor_transport_check(const FinslerSpace& sp, const Vec<double>& x,
                                    const Vec<double>& w, const FieldPtr& field, int order,
                                    double s, int samples, const TransportOptions& topt) {
  const int m = sp.dim();
  const std::size_t um = static_cast<std::size_t>(m);
  if (static_cast<int>(w.size()) != m || static_cast<int>(x.size()) != m)
    throw ConfigError("taylor_transport_check: dimension mismatch");
  if (order < 0 || tree_depth(field) + order > kDefaultFieldDepthCap)
    throw ConfigError("taylor_transport_check: order pushes the field past the depth cap");
  if (!(s > 0)) throw ConfigError("taylor_transport_check: s must be positive");

  // iterated directional covariant derivatives (w.D)^r, kept as weighted trees
  std::vector<std::vector<std::pair<double, FieldPtr>>> levels(static_cast<std::size_t>(order) + 1);
  levels[0] = {{1.0, field}};
  for (int r = 1; r <= order; ++r)
    for (const auto& [c, t] : levels[static_cast<std::size_t>(r - 1)])
      for (int i = 0; i < m; ++i)
        if (w[static_cast<std::size_t>(i)] != 0.0)
          levels[static_cast<std::size_t>(r)].push_back({c * w[static_cast<std::size_t>(i)], nabla(i, t, m)});

  auto us = indicatrix_samples(sp, x, samples);

  // per-sample values of each level, evaluated once
  std::vector<std::vector<Vec<double>>> level_vals(levels.size());
  for (std::size_t r = 0; r < levels.size(); ++r) {
    level_vals[r].resize(us.size(), Vec<double>(um, 0.0));
    for (const auto& [c, t] : levels[r])
      for (std::size_t q = 0; q < us.size(); ++q) {
        Vec<double> v = field_value(t, sp, x, us[q]);
        for (std::size_t a = 0; a < um; ++a) level_vals[r][q][a] += c * v[a];
      }
  }

  auto residual_at = [&](double step) {
    Vec<double> y(um);
    for (std::size_t a = 0; a < um; ++a) y[a] = x[a] + step * w[a];
    Curve seg = Curve::segment(x, y);
    Curve back = seg.reversed();
    double worst = 0;
    for (std::size_t q = 0; q < us.size(); ++q) {
      Vec<double> u_far = rho(sp, seg, us[q], topt);
      Vec<double> val = field_value(field, sp, y, u_far);
      DifferentialTransportResult pulled = rho_differential(sp, back, u_far, {val}, topt);
      double fact = 1.0, powstep = 1.0;
      Vec<double> taylor(um, 0.0);
      for (std::size_t r = 0; r < levels.size(); ++r) {
        if (r > 0) {
          powstep *= step;
          fact *= static_cast<double>(r);
        }
        for (std::size_t a = 0; a < um; ++a)
          taylor[a] += powstep / fact * level_vals[r][q][a];
      }
      for (std::size_t a = 0; a < um; ++a)
        worst = std::max(worst, std::abs(pulled.vec_end[0][a] - taylor[a]));
    }
    return worst;
  };

  TaylorReport rep;
  rep.residual_coarse = residual_at(s);
  rep.residual_fine = residual_at(s / 2);
  rep.ratio = rep.residual_fine > 0 ? rep.residual_coarse / rep.residual_fine
                                    : std::numeric_limits<double>::infinity();
  rep.expected_ratio = std::pow(2.0, order + 1);
  return rep;
}

}  // namespace finhol
