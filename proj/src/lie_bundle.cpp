#include "finhol/lie_bundle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace finhol {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool mentions_fiber_vars(const ExprPtr& node) {
  if (!node) return false;
  if (node->kind == ExprKind::Variable && node->group == VarGroup::U) return true;
  return mentions_fiber_vars(node->lhs) || mentions_fiber_vars(node->rhs);
}

std::size_t flat(int c, int a, int b, int n) {
  return static_cast<std::size_t>((c * n + a) * n + b);
}

// Λ path along a curve up to global time t_end: dΛ/dt = -(ċ^i K_i) Λ from the
// identity, integrated segment by segment so velocity kinks at joints never
// cross a solver step.
struct LambdaPath {
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> lambda;
  OdeStats stats;
};

LambdaPath integrate_lambda(const LieBundleModel& model, const Curve& curve, double t_end,
                            const OdeOptions& opt) {
  const int m = model.base_dim();
  const int n = model.fiber_dim();
  if (curve.dim() != m) throw ConfigError("parallel frame: curve dimension mismatch");
  if (!(t_end > 0.0) || t_end > 1.0)
    throw ConfigError("parallel frame: end time must lie in (0, 1]");
  curve.validate_in_chart(model.chart());

  const int segs = curve.segment_count();
  const std::size_t nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  std::vector<double> y(nn, 0.0);
  for (int a = 0; a < n; ++a) y[static_cast<std::size_t>(a * n + a)] = 1.0;

  LambdaPath path;
  auto record = [&](double t, std::span<const double> yy) {
    if (!path.times.empty() && t <= path.times.back()) return;  // segment joins repeat
    path.times.push_back(t);
    path.lambda.emplace_back(Eigen::Map<const RowMat>(yy.data(), n, n));
  };

  Vec<double> p, v;
  for (int s = 0; s < segs; ++s) {
    const double t0 = static_cast<double>(s) / segs;
    const double t1 = static_cast<double>(s + 1) / segs;
    if (t0 >= t_end) break;
    const double stop = std::min(t1, t_end);

    auto rhs = [&](double t, std::span<const double> yy, std::span<double> dy) {
      double local = t * segs - s;
      curve.eval_on_segment(s, local, p, v);
      Eigen::MatrixXd ktilde = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < m; ++i)
        ktilde += v[static_cast<std::size_t>(i)] * model.connection_at(p, i);
      Eigen::Map<const RowMat> L(yy.data(), n, n);
      Eigen::Map<RowMat> dL(dy.data(), n, n);
      dL = -(ktilde * L);
    };
    OdeStats part;
    integrate(rhs, t0, stop, y, opt, &part, record);
    path.stats.steps += part.steps;
    path.stats.rejected += part.rejected;
    path.stats.max_error_estimate =
        std::max(path.stats.max_error_estimate, part.max_error_estimate);
  }
  return path;
}

}  // namespace

LieBundleModel::LieBundleModel(Box chart, int fiber_dim,
                               std::vector<std::vector<std::vector<std::string>>> structure,
                               std::vector<std::vector<std::vector<std::string>>> connection)
    : chart_(std::move(chart)) {
  base_dim_ = chart_.dim();
  if (base_dim_ < 1) throw ConfigError("lie bundle: base chart must have dimension >= 1");
  if (chart_.lo.size() != chart_.hi.size())
    throw ConfigError("lie bundle: chart bound sizes disagree");
  for (int i = 0; i < base_dim_; ++i)
    if (!(chart_.lo[static_cast<std::size_t>(i)] < chart_.hi[static_cast<std::size_t>(i)]))
      throw ConfigError("lie bundle: chart box is empty on some axis");
  if (fiber_dim < 1) throw ConfigError("lie bundle: fiber dimension must be >= 1");
  fiber_dim_ = fiber_dim;
  const std::size_t un = static_cast<std::size_t>(fiber_dim_);

  if (structure.size() != un)
    throw ConfigError("lie bundle: structure constants need one matrix per fiber index");
  if (connection.size() != static_cast<std::size_t>(base_dim_))
    throw ConfigError("lie bundle: connection needs one matrix per base direction");

  const VarSpace vars{base_dim_, false};
  auto parse_entry = [&](const std::string& text, const char* what) {
    Expr e = parse_expression(text, vars);
    if (mentions_fiber_vars(e.root))
      throw ConfigError(std::string("lie bundle: ") + what + " entry '" + text +
                        "' must depend on the base coordinates only");
    return e;
  };

  c_.reserve(un * un * un);
  for (std::size_t c = 0; c < un; ++c) {
    if (structure[c].size() != un)
      throw ConfigError("lie bundle: structure constant matrix has wrong row count");
    for (std::size_t a = 0; a < un; ++a) {
      if (structure[c][a].size() != un)
        throw ConfigError("lie bundle: structure constant matrix has wrong column count");
      for (std::size_t b = 0; b < un; ++b)
        c_.push_back(parse_entry(structure[c][a][b], "structure constant"));
    }
  }
  k_.reserve(static_cast<std::size_t>(base_dim_) * un * un);
  for (std::size_t i = 0; i < connection.size(); ++i) {
    if (connection[i].size() != un)
      throw ConfigError("lie bundle: connection matrix has wrong row count");
    for (std::size_t b = 0; b < un; ++b) {
      if (connection[i][b].size() != un)
        throw ConfigError("lie bundle: connection matrix has wrong column count");
      for (std::size_t a = 0; a < un; ++a)
        k_.push_back(parse_entry(connection[i][b][a], "connection coefficient"));
    }
  }

  for (const auto& x : chart_grid(chart_, 3)) {
    double anti = antisymmetry_residual(x);
    if (!(anti < 1e-12))
      throw ConfigError("lie bundle: structure constants are not antisymmetric (defect " +
                        std::to_string(anti) + " at " + format_vec(x) + ")");
    double jac = jacobi_residual(x);
    if (!(jac < 1e-10))
      throw ConfigError("lie bundle: structure constants violate the Jacobi identity (defect " +
                        std::to_string(jac) + " at " + format_vec(x) + ")");
  }
}

std::vector<double> LieBundleModel::structure_at(const Vec<double>& x) const {
  if (static_cast<int>(x.size()) != base_dim_)
    throw ConfigError("lie bundle: base point dimension mismatch");
  EvalPoint<double> p{std::span<const double>(x), {}, nullptr};
  std::vector<double> out(c_.size());
  for (std::size_t k = 0; k < c_.size(); ++k) out[k] = eval_expression(c_[k], p);
  return out;
}

std::vector<double> LieBundleModel::structure_derivative_at(const Vec<double>& x, int i) const {
  if (static_cast<int>(x.size()) != base_dim_)
    throw ConfigError("lie bundle: base point dimension mismatch");
  if (i < 0 || i >= base_dim_) throw ConfigError("lie bundle: base direction out of range");
  using D = Dual<double>;
  std::vector<D> xd(x.size());
  for (std::size_t k = 0; k < x.size(); ++k)
    xd[k] = D(x[k], static_cast<int>(k) == i ? 1.0 : 0.0);
  EvalPoint<D> p{std::span<const D>(xd), {}, nullptr};
  std::vector<double> out(c_.size());
  for (std::size_t k = 0; k < c_.size(); ++k) out[k] = eval_expression(c_[k], p).dot;
  return out;
}

Eigen::MatrixXd LieBundleModel::connection_at(const Vec<double>& x, int i) const {
  if (static_cast<int>(x.size()) != base_dim_)
    throw ConfigError("lie bundle: base point dimension mismatch");
  if (i < 0 || i >= base_dim_) throw ConfigError("lie bundle: base direction out of range");
  EvalPoint<double> p{std::span<const double>(x), {}, nullptr};
  const int n = fiber_dim_;
  Eigen::MatrixXd K(n, n);
  const std::size_t base = static_cast<std::size_t>(i) * static_cast<std::size_t>(n) *
                           static_cast<std::size_t>(n);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a)
      K(b, a) = eval_expression(k_[base + static_cast<std::size_t>(b * n + a)], p);
  return K;
}

double LieBundleModel::antisymmetry_residual(const Vec<double>& x) const {
  auto C = structure_at(x);
  const int n = fiber_dim_;
  double worst = 0;
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        worst = std::max(worst, std::abs(C[flat(c, a, b, n)] + C[flat(c, b, a, n)]));
  return worst;
}

double LieBundleModel::jacobi_residual(const Vec<double>& x) const {
  auto C = structure_at(x);
  const int n = fiber_dim_;
  double worst = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int e = 0; e < n; ++e) {
          double sum = 0;
          for (int d = 0; d < n; ++d)
            sum += C[flat(d, a, b, n)] * C[flat(e, d, c, n)] +
                   C[flat(d, b, c, n)] * C[flat(e, d, a, n)] +
                   C[flat(d, c, a, n)] * C[flat(e, d, b, n)];
          worst = std::max(worst, std::abs(sum));
        }
  return worst;
}

ParallelFrameResult parallel_frame(const LieBundleModel& model, const Curve& curve,
                                   const Eigen::MatrixXd& frame0, double t_end,
                                   const OdeOptions& opt) {
  const int n = model.fiber_dim();
  if (frame0.rows() != n || frame0.cols() != n)
    throw ConfigError("parallel frame: initial frame must be a square fiber-sized matrix");
  if (!frame0.allFinite()) throw ConfigError("parallel frame: initial frame has non-finite entries");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(frame0);
  if (lu.rank() < n)
    throw ConfigError("parallel frame: initial frame columns are not linearly independent");

  LambdaPath path = integrate_lambda(model, curve, t_end, opt);
  ParallelFrameResult res;
  res.times = std::move(path.times);
  res.lambda = std::move(path.lambda);
  res.stats = path.stats;
  res.min_abs_det = std::numeric_limits<double>::infinity();
  bool violated = false;
  for (std::size_t k = 0; k < res.lambda.size(); ++k) {
    double d = std::abs(res.lambda[k].determinant());
    res.min_abs_det = std::min(res.min_abs_det, d);
    if (!violated && d < 1e-10) {
      violated = true;
      res.valid_until = k == 0 ? 0.0 : res.times[k - 1];
    }
  }
  res.fully_valid = !violated;
  if (!violated) res.valid_until = res.times.back();
  res.frame_end = res.lambda.back() * frame0;
  return res;
}

Eigen::MatrixXd lambda_at(const LieBundleModel& model, const Curve& curve, double t,
                          const OdeOptions& opt) {
  const int n = model.fiber_dim();
  if (t == 0.0) return Eigen::MatrixXd::Identity(n, n);
  return integrate_lambda(model, curve, t, opt).lambda.back();
}

double lie_connection_residual(const LieBundleModel& model, const Vec<double>& x, int i) {
  const int n = model.fiber_dim();
  auto C = model.structure_at(x);
  auto dC = model.structure_derivative_at(x, i);
  Eigen::MatrixXd K = model.connection_at(x, i);
  double worst = 0;
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double r = dC[flat(c, a, b, n)];
        for (int d = 0; d < n; ++d)
          r += C[flat(d, a, b, n)] * K(c, d) - C[flat(c, d, b, n)] * K(d, a) -
               C[flat(c, a, d, n)] * K(d, b);
        worst = std::max(worst, std::abs(r));
      }
  return worst;
}

double transport_bracket_check(const LieBundleModel& model, const Curve& curve,
                               const std::vector<std::pair<int, int>>& pairs,
                               const OdeOptions& opt) {
  const int n = model.fiber_dim();
  std::vector<std::pair<int, int>> ps = pairs;
  if (ps.empty()) {
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) ps.emplace_back(a, b);
  } else {
    for (const auto& [a, b] : ps)
      if (a < 0 || a >= n || b < 0 || b >= n)
        throw ConfigError("transport bracket check: basis index out of range");
  }

  Eigen::MatrixXd L = lambda_at(model, curve, 1.0, opt);
  auto C0 = model.structure_at(curve.point(0.0));
  auto C1 = model.structure_at(curve.point(1.0));

  double worst = 0;
  for (const auto& [a, b] : ps) {
    for (int e = 0; e < n; ++e) {
      double lhs = 0;
      for (int f = 0; f < n; ++f) lhs += L(e, f) * C0[flat(f, a, b, n)];
      double rhs = 0;
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) rhs += C1[flat(e, c, d, n)] * L(c, a) * L(d, b);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

Eigen::MatrixXd ray_frame(const LieBundleModel& model, const Vec<double>& origin,
                          const Vec<double>& target, const Eigen::MatrixXd& frame0,
                          const OdeOptions& opt) {
  const int m = model.base_dim();
  if (static_cast<int>(origin.size()) != m || static_cast<int>(target.size()) != m)
    throw ConfigError("ray frame: point dimension mismatch");
  std::vector<Vec<double>> waypoints{origin};
  Vec<double> cur = origin;
  for (int i = 0; i < m; ++i) {
    if (target[static_cast<std::size_t>(i)] != cur[static_cast<std::size_t>(i)]) {
      cur[static_cast<std::size_t>(i)] = target[static_cast<std::size_t>(i)];
      waypoints.push_back(cur);
    }
  }
  if (waypoints.size() == 1) {
    const int n = model.fiber_dim();
    if (frame0.rows() != n || frame0.cols() != n)
      throw ConfigError("ray frame: initial frame must be a square fiber-sized matrix");
    return frame0;
  }
  return parallel_frame(model, Curve::polygon(waypoints), frame0, 1.0, opt).frame_end;
}

HolonomyFrame frame_from_holonomy(const FinslerSpace& sp, const Vec<double>& x,
                                  const std::vector<FieldPtr>& fields, int samples,
                                  double rel_tol) {
  const int m = sp.dim();
  if (static_cast<int>(x.size()) != m)
    throw ConfigError("frame_from_holonomy: base point dimension mismatch");

  HolonomyFrame out;
  out.span = span_dimension(fields, sp, x, samples, rel_tol);
  if (!(out.span.gap > 1e4))
    throw ConfigError("frame_from_holonomy: singular-value gap " +
                      std::to_string(out.span.gap) +
                      " leaves the rank ill-determined; increase samples or remove nearly "
                      "dependent fields");
  const int r = out.span.rank;
  if (r == 0) return out;

  std::vector<Vec<double>> us;
  for (const auto& dir : fiber_directions(m, samples)) us.push_back(indicatrix_point(sp, x, dir));
  const Eigen::Index cols = static_cast<Eigen::Index>(us.size() * static_cast<std::size_t>(m));

  auto row_of = [&](const FieldPtr& f) {
    Eigen::VectorXd row(cols);
    for (std::size_t s = 0; s < us.size(); ++s) {
      Vec<double> v = field_value(f, sp, x, us[s]);
      for (int a = 0; a < m; ++a)
        row(static_cast<Eigen::Index>(s * static_cast<std::size_t>(m) +
                                      static_cast<std::size_t>(a))) =
            v[static_cast<std::size_t>(a)];
    }
    return row;
  };

  auto rank_of = [&](const Eigen::MatrixXd& A) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    double cut = std::max(sv.size() ? rel_tol * sv(0) : 0.0, 1e-9);
    int rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
      if (sv(k) > cut) rank = static_cast<int>(k) + 1;
    return rank;
  };

  // greedy maximal independent subset, honoring the input order
  Eigen::MatrixXd chosen(0, cols);
  for (std::size_t f = 0; f < fields.size() && static_cast<int>(out.basis.size()) < r; ++f) {
    Eigen::MatrixXd candidate(chosen.rows() + 1, cols);
    candidate.topRows(chosen.rows()) = chosen;
    candidate.row(chosen.rows()) = row_of(fields[f]).transpose();
    if (rank_of(candidate) == static_cast<int>(chosen.rows()) + 1) {
      chosen.swap(candidate);
      out.basis.push_back(static_cast<int>(f));
    }
  }
  if (static_cast<int>(out.basis.size()) != r)
    throw ConfigError("frame_from_holonomy: could not extract a basis matching the span rank");

  // least-squares bracket coefficients over the shared sample grid
  Eigen::MatrixXd B = chosen.transpose();  // (samples*m) x r
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  out.structure.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(r) *
                           static_cast<std::size_t>(r),
                       0.0);
  for (int a = 0; a < r; ++a) {
    for (int b = a + 1; b < r; ++b) {
      FieldPtr br = bracket(fields[static_cast<std::size_t>(out.basis[static_cast<std::size_t>(a)])],
                            fields[static_cast<std::size_t>(out.basis[static_cast<std::size_t>(b)])]);
      Eigen::VectorXd rhs = row_of(br);
      Eigen::VectorXd beta = qr.solve(rhs);
      out.residual = std::max(out.residual, (B * beta - rhs).cwiseAbs().maxCoeff());
      for (int c = 0; c < r; ++c) {
        out.structure[flat(c, a, b, r)] = beta(c);
        out.structure[flat(c, b, a, r)] = -beta(c);
      }
    }
  }
  return out;
}

}  // namespace finhol
