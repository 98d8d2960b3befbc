#include "finhol/curve.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "finhol/finsler.hpp"

namespace finhol {

namespace {

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

constexpr VarSpace kCurveVars{0, true};  // only t may appear

Expr parse_component(const std::string& text) { return parse_expression(text, kCurveVars); }

}  // namespace

Curve Curve::segment(const Vec<double>& a, const Vec<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw ConfigError("segment endpoints must share a positive dimension");
  Curve c;
  c.dim_ = static_cast<int>(a.size());
  Segment s;
  for (std::size_t i = 0; i < a.size(); ++i)
    s.comp.push_back(
        parse_component("(" + fmt(a[i]) + ") + (" + fmt(b[i] - a[i]) + ")*t"));
  c.segments_.push_back(std::move(s));
  return c;
}

Curve Curve::polyline(const std::vector<Vec<double>>& vertices) {
  if (vertices.size() < 2) throw ConfigError("polyline needs at least two vertices");
  Curve c;
  c.dim_ = static_cast<int>(vertices.front().size());
  for (std::size_t k = 0; k + 1 < vertices.size(); ++k) {
    const auto& a = vertices[k];
    const auto& b = vertices[k + 1];
    if (static_cast<int>(a.size()) != c.dim_ || static_cast<int>(b.size()) != c.dim_)
      throw ConfigError("polyline vertices must share one dimension");
    Segment s;
    for (int i = 0; i < c.dim_; ++i)
      s.comp.push_back(parse_component("(" + fmt(a[i]) + ") + (" + fmt(b[i] - a[i]) +
                                       ")*(3*t^2 - 2*t^3)"));
    c.segments_.push_back(std::move(s));
  }
  return c;
}

Curve Curve::polygon(const std::vector<Vec<double>>& vertices) {
  if (vertices.size() < 2) throw ConfigError("polygon needs at least two vertices");
  Curve c = segment(vertices[0], vertices[1]);
  for (std::size_t k = 1; k + 1 < vertices.size(); ++k)
    c = concat(c, segment(vertices[k], vertices[k + 1]));
  return c;
}

Curve Curve::from_expressions(const std::vector<std::string>& components) {
  if (components.empty()) throw ConfigError("curve needs at least one component");
  Curve c;
  c.dim_ = static_cast<int>(components.size());
  Segment s;
  for (const auto& text : components) s.comp.push_back(parse_component(text));
  c.segments_.push_back(std::move(s));
  return c;
}

Curve Curve::reversed() const {
  // reverse segment order and flip each local parameter
  Expr one_minus_t = parse_component("1 - t");
  Curve c;
  c.dim_ = dim_;
  for (auto it = segments_.rbegin(); it != segments_.rend(); ++it) {
    Segment s;
    for (const auto& e : it->comp) {
      Expr flipped{substitute(e.root, VarGroup::T, 0, one_minus_t.root), kCurveVars};
      s.comp.push_back(std::move(flipped));
    }
    c.segments_.push_back(std::move(s));
  }
  return c;
}

Curve Curve::concat(const Curve& a, const Curve& b) {
  if (a.dim_ != b.dim_) throw ConfigError("concat: dimension mismatch");
  Vec<double> end = a.point(1.0), start = b.point(0.0);
  double gap = 0;
  for (int i = 0; i < a.dim_; ++i) gap = std::max(gap, std::abs(end[i] - start[i]));
  if (gap > 1e-12)
    throw ConfigError("concat: endpoint gap " + fmt(gap) + " exceeds 1e-12");
  Curve c;
  c.dim_ = a.dim_;
  c.segments_ = a.segments_;
  c.segments_.insert(c.segments_.end(), b.segments_.begin(), b.segments_.end());
  return c;
}

Curve Curve::reparametrized(const std::string& phi_text) const {
  if (segments_.size() != 1)
    throw ConfigError("reparametrized: only single-segment curves are supported");
  Expr phi = parse_component(phi_text);
  double t0 = 0.0, t1 = 1.0;
  EvalPoint<double> p0{{}, {}, &t0}, p1{{}, {}, &t1};
  if (std::abs(eval_expression(phi, p0)) > 1e-12 ||
      std::abs(eval_expression(phi, p1) - 1.0) > 1e-12)
    throw ConfigError("reparametrized: phi must map 0 to 0 and 1 to 1");
  Curve c;
  c.dim_ = dim_;
  Segment s;
  for (const auto& e : segments_[0].comp)
    s.comp.push_back(Expr{substitute(e.root, VarGroup::T, 0, phi.root), kCurveVars});
  c.segments_.push_back(std::move(s));
  return c;
}

void Curve::eval_segment(int s, double s_local, Vec<double>* p, Vec<double>* v) const {
  const Segment& seg = segments_[static_cast<std::size_t>(s)];
  if (v == nullptr) {
    EvalPoint<double> ep{{}, {}, &s_local};
    for (int i = 0; i < dim_; ++i)
      (*p)[static_cast<std::size_t>(i)] = eval_expression(seg.comp[static_cast<std::size_t>(i)], ep);
    return;
  }
  Dual<double> td(s_local, 1.0);
  EvalPoint<Dual<double>> ep{{}, {}, &td};
  const double scale = static_cast<double>(segments_.size());  // d(s_local)/dt
  for (int i = 0; i < dim_; ++i) {
    Dual<double> val = eval_expression(seg.comp[static_cast<std::size_t>(i)], ep);
    if (p) (*p)[static_cast<std::size_t>(i)] = val.val;
    (*v)[static_cast<std::size_t>(i)] = val.dot * scale;
  }
}

void Curve::eval_on_segment(int s, double local, Vec<double>& p, Vec<double>& v) const {
  if (s < 0 || s >= segment_count()) throw ConfigError("segment index out of range");
  p.resize(static_cast<std::size_t>(dim_));
  v.resize(static_cast<std::size_t>(dim_));
  eval_segment(s, std::clamp(local, 0.0, 1.0), &p, &v);
}

Vec<double> Curve::point(double t) const {
  t = std::clamp(t, 0.0, 1.0);
  const int n = segment_count();
  int s = std::min(static_cast<int>(t * n), n - 1);
  double local = t * n - s;
  Vec<double> p(static_cast<std::size_t>(dim_));
  eval_segment(s, local, &p, nullptr);
  return p;
}

Vec<double> Curve::velocity(double t) const {
  t = std::clamp(t, 0.0, 1.0);
  const int n = segment_count();
  // at interior joints report the incoming side
  int s;
  double local;
  double scaled = t * n;
  if (t > 0 && scaled == std::floor(scaled) && scaled <= n - 1 + 0.5) {
    s = static_cast<int>(scaled) - 1;
    local = 1.0;
  } else {
    s = std::min(static_cast<int>(scaled), n - 1);
    local = scaled - s;
  }
  Vec<double> v(static_cast<std::size_t>(dim_));
  eval_segment(s, local, nullptr, &v);
  return v;
}

void Curve::validate_in_chart(const Box& box) const {
  if (box.dim() != dim_) throw ConfigError("curve/chart dimension mismatch");
  const int per_segment = 65;
  Vec<double> p(static_cast<std::size_t>(dim_));
  for (int s = 0; s < segment_count(); ++s) {
    for (int q = 0; q <= per_segment; ++q) {
      double local = static_cast<double>(q) / per_segment;
      eval_segment(s, local, &p, nullptr);
      if (!box.contains(p, 0.0)) {
        throw GeometryError("curve leaves the chart at segment " + std::to_string(s) +
                            ", local parameter " + fmt(local) + ", point " + format_vec(p));
      }
    }
    if (s + 1 < segment_count()) {
      Vec<double> q0(static_cast<std::size_t>(dim_));
      eval_segment(s, 1.0, &p, nullptr);
      eval_segment(s + 1, 0.0, &q0, nullptr);
      for (int i = 0; i < dim_; ++i)
        if (std::abs(p[static_cast<std::size_t>(i)] - q0[static_cast<std::size_t>(i)]) > 1e-12)
          throw GeometryError("curve segments " + std::to_string(s) + " and " +
                              std::to_string(s + 1) + " do not meet");
    }
  }
}

}  // namespace finhol
