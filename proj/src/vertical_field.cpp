#include "finhol/vertical_field.hpp"

#include <algorithm>
#include <string>

namespace finhol {

namespace {

FieldPtr make(VerticalField f) { return std::make_shared<const VerticalField>(std::move(f)); }

void check_axis(int i, int dim, const char* what) {
  if (i < 0 || i >= dim) throw ConfigError(std::string(what) + ": axis out of range");
}

}  // namespace

FieldPtr curvature_field(int i, int j, int dim) {
  check_axis(i, dim, "curvature_field");
  check_axis(j, dim, "curvature_field");
  VerticalField f;
  f.kind = FieldKind::Curvature;
  f.i = i;
  f.j = j;
  return make(std::move(f));
}

FieldPtr nabla(int i, FieldPtr child, int dim) {
  check_axis(i, dim, "nabla");
  if (!child) throw ConfigError("nabla: missing operand");
  VerticalField f;
  f.kind = FieldKind::Nabla;
  f.i = i;
  f.a = std::move(child);
  return make(std::move(f));
}

FieldPtr bracket(FieldPtr a, FieldPtr b) {
  if (!a || !b) throw ConfigError("bracket: missing operand");
  VerticalField f;
  f.kind = FieldKind::Bracket;
  f.a = std::move(a);
  f.b = std::move(b);
  return make(std::move(f));
}

FieldPtr lin_comb(std::vector<std::pair<double, FieldPtr>> terms) {
  if (terms.empty()) throw ConfigError("lin_comb: empty sum");
  for (const auto& [c, t] : terms)
    if (!t) throw ConfigError("lin_comb: missing operand");
  VerticalField f;
  f.kind = FieldKind::LinComb;
  f.terms = std::move(terms);
  return make(std::move(f));
}

FieldPtr components_field(const std::vector<std::string>& texts, int dim) {
  if (static_cast<int>(texts.size()) != dim)
    throw ConfigError("components_field: need one expression per dimension");
  VerticalField f;
  f.kind = FieldKind::Components;
  for (const auto& t : texts) f.comp.push_back(parse_expression(t, VarSpace{dim, false}));
  return make(std::move(f));
}

int tree_depth(const FieldPtr& f) {
  if (!f) return 0;
  switch (f->kind) {
    case FieldKind::Components: return 1;
    case FieldKind::Curvature: return 2;
    case FieldKind::Nabla: return tree_depth(f->a) + 1;
    case FieldKind::Bracket: return std::max(tree_depth(f->a), tree_depth(f->b)) + 1;
    case FieldKind::LinComb: {
      int d = 0;
      for (const auto& [c, t] : f->terms) d = std::max(d, tree_depth(t));
      return d;
    }
  }
  return 0;
}

std::string describe(const FieldPtr& f) {
  if (!f) return "<null>";
  switch (f->kind) {
    case FieldKind::Curvature:
      return "R(" + std::to_string(f->i) + "," + std::to_string(f->j) + ")";
    case FieldKind::Nabla:
      return "D" + std::to_string(f->i) + " " + describe(f->a);
    case FieldKind::Bracket:
      return "[" + describe(f->a) + ", " + describe(f->b) + "]";
    case FieldKind::LinComb: {
      std::string s;
      for (std::size_t k = 0; k < f->terms.size(); ++k) {
        if (k) s += " + ";
        s += std::to_string(f->terms[k].first) + "*(" + describe(f->terms[k].second) + ")";
      }
      return s;
    }
    case FieldKind::Components: {
      std::string s = "{";
      for (std::size_t k = 0; k < f->comp.size(); ++k) {
        if (k) s += ", ";
        s += print_expression(f->comp[k]);
      }
      return s + "}";
    }
  }
  return "<?>";
}

Vec<double> field_value(const FieldPtr& f, const FinslerSpace& sp, const Vec<double>& x,
                        const Vec<double>& u, int depth_cap) {
  if (!f) throw ConfigError("field_value: missing field");
  if (depth_cap < 1 || depth_cap > kDefaultFieldDepthCap)
    throw ConfigError("field_value: depth cap must be between 1 and " +
                      std::to_string(kDefaultFieldDepthCap));
  if (tree_depth(f) > depth_cap)
    throw ConfigError("vertical field tree depth " + std::to_string(tree_depth(f)) +
                      " exceeds the cap " + std::to_string(depth_cap));
  if (static_cast<int>(x.size()) != sp.dim() || static_cast<int>(u.size()) != sp.dim())
    throw ConfigError("field_value: dimension mismatch");
  return eval_field<double>(*f, sp, std::span<const double>(x), std::span<const double>(u));
}

}  // namespace finhol
