#include "finhol/expr.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <numeric>

namespace finhol {

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  double number = 0;
  bool integral = false;  // number had no '.', 'e', 'E'
  std::string text;
  std::size_t offset = 0;
};

struct Lexer {
  const std::string& src;
  std::size_t pos = 0;

  explicit Lexer(const std::string& s) : src(s) {}

  Token next() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    Token t;
    t.offset = pos;
    if (pos >= src.size()) {
      t.kind = Tok::End;
      return t;
    }
    char c = src[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos;
      bool integral = true;
      while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
      if (pos < src.size() && src[pos] == '.') {
        integral = false;
        ++pos;
        while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
      }
      if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
        integral = false;
        ++pos;
        if (pos < src.size() && (src[pos] == '+' || src[pos] == '-')) ++pos;
        if (pos >= src.size() || !std::isdigit(static_cast<unsigned char>(src[pos])))
          throw ParseError("malformed exponent in numeric literal", pos);
        while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
      }
      t.kind = Tok::Number;
      t.text = src.substr(start, pos - start);
      if (t.text == ".") throw ParseError("malformed numeric literal", start);
      t.number = std::strtod(t.text.c_str(), nullptr);
      t.integral = integral;
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos;
      while (pos < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
        ++pos;
      t.kind = Tok::Ident;
      t.text = src.substr(start, pos - start);
      return t;
    }
    ++pos;
    switch (c) {
      case '+': t.kind = Tok::Plus; return t;
      case '-': t.kind = Tok::Minus; return t;
      case '*': t.kind = Tok::Star; return t;
      case '/': t.kind = Tok::Slash; return t;
      case '^': t.kind = Tok::Caret; return t;
      case '(': t.kind = Tok::LParen; return t;
      case ')': t.kind = Tok::RParen; return t;
      case ',': t.kind = Tok::Comma; return t;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", t.offset);
  }
};

ExprPtr make(ExprKind k, ExprPtr l = nullptr, ExprPtr r = nullptr) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  return n;
}

ExprPtr make_const(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Constant;
  n->constant = v;
  return n;
}

ExprPtr make_pow(ExprPtr base, long num, long den) {
  if (den == 0) throw ParseError("zero denominator in exponent", 0);
  if (den < 0) {
    den = -den;
    num = -num;
  }
  long g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprKind::Pow;
  n->pnum = num;
  n->pden = den;
  n->lhs = std::move(base);
  return n;
}

struct Parser {
  Lexer lex;
  Token cur;
  const VarSpace& vars;

  Parser(const std::string& s, const VarSpace& v) : lex(s), vars(v) { cur = lex.next(); }

  void advance() { cur = lex.next(); }

  void expect(Tok k, const char* what) {
    if (cur.kind != k) throw ParseError(std::string("expected ") + what, cur.offset);
    advance();
  }

  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    while (cur.kind == Tok::Plus || cur.kind == Tok::Minus) {
      ExprKind k = cur.kind == Tok::Plus ? ExprKind::Add : ExprKind::Sub;
      advance();
      e = make(k, e, parse_term());
    }
    return e;
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_factor();
    while (cur.kind == Tok::Star || cur.kind == Tok::Slash) {
      ExprKind k = cur.kind == Tok::Star ? ExprKind::Mul : ExprKind::Div;
      advance();
      e = make(k, e, parse_factor());
    }
    return e;
  }

  // unary minus binds looser than '^': -u1^2 is -(u1^2)
  ExprPtr parse_factor() {
    if (cur.kind == Tok::Minus) {
      advance();
      return make(ExprKind::Neg, parse_factor());
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr e = parse_primary();
    if (cur.kind == Tok::Caret) {
      advance();
      auto [num, den] = parse_rational("exponent", /*allow_ratio=*/false);
      e = make_pow(std::move(e), num, den);
    }
    return e;
  }

  // Exponents are rational literals.  A ratio p/q must be parenthesized
  // (or sit in a pow(., p/q) argument) so that a '/' after a bare integer
  // exponent can still mean division: u1^2/u2 is (u1^2)/u2.
  std::pair<long, long> parse_rational(const char* where, bool allow_ratio) {
    if (cur.kind == Tok::LParen) {
      advance();
      auto r = parse_rational(where, /*allow_ratio=*/true);
      expect(Tok::RParen, "')'");
      return r;
    }
    long sign = 1;
    if (cur.kind == Tok::Minus) {
      sign = -1;
      advance();
    }
    if (cur.kind != Tok::Number || !cur.integral)
      throw ParseError(std::string(where) + " must be an integer or integer ratio", cur.offset);
    long num = sign * static_cast<long>(cur.number + 0.5);
    advance();
    long den = 1;
    if (allow_ratio && cur.kind == Tok::Slash) {
      advance();
      if (cur.kind != Tok::Number || !cur.integral)
        throw ParseError(std::string(where) + " denominator must be an integer", cur.offset);
      den = static_cast<long>(cur.number + 0.5);
      if (den == 0) throw ParseError("zero denominator in exponent", cur.offset);
      advance();
    }
    return {num, den};
  }

  ExprPtr parse_primary() {
    if (cur.kind == Tok::Number) {
      double v = cur.number;
      advance();
      return make_const(v);
    }
    if (cur.kind == Tok::LParen) {
      advance();
      ExprPtr e = parse_expr();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (cur.kind == Tok::Ident) {
      std::string name = cur.text;
      std::size_t at = cur.offset;
      advance();
      if (cur.kind == Tok::LParen) return parse_call(name, at);
      return resolve_variable(name, at);
    }
    throw ParseError("expected an operand", cur.offset);
  }

  ExprPtr parse_call(const std::string& name, std::size_t at) {
    expect(Tok::LParen, "'('");
    if (name == "pow") {
      ExprPtr base = parse_expr();
      expect(Tok::Comma, "','");
      auto [num, den] = parse_rational("pow exponent", /*allow_ratio=*/true);
      expect(Tok::RParen, "')'");
      return make_pow(std::move(base), num, den);
    }
    Func f;
    if (name == "sqrt") f = Func::Sqrt;
    else if (name == "sin") f = Func::Sin;
    else if (name == "cos") f = Func::Cos;
    else if (name == "exp") f = Func::Exp;
    else if (name == "log") f = Func::Log;
    else throw ParseError("unknown function '" + name + "'", at);
    ExprPtr arg = parse_expr();
    if (cur.kind == Tok::Comma)
      throw ParseError(name + " expects exactly one argument", cur.offset);
    expect(Tok::RParen, "')'");
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Call;
    n->func = f;
    n->lhs = std::move(arg);
    return n;
  }

  ExprPtr resolve_variable(const std::string& name, std::size_t at) {
    auto var = [&](VarGroup g, int idx) {
      auto n = std::make_shared<ExprNode>();
      n->kind = ExprKind::Variable;
      n->group = g;
      n->index = idx;
      return n;
    };
    if (name == "t") {
      if (!vars.with_t) throw ParseError("unknown identifier 't'", at);
      return var(VarGroup::T, 0);
    }
    if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'u')) {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      if (digits) {
        int idx = std::atoi(name.c_str() + 1);
        if (idx < 1 || idx > vars.dim)
          throw ParseError("variable '" + name + "' is out of range for dimension " +
                               std::to_string(vars.dim),
                           at);
        return var(name[0] == 'x' ? VarGroup::X : VarGroup::U, idx - 1);
      }
    }
    throw ParseError("unknown identifier '" + name + "'", at);
  }
};

int precedence(const ExprNode& n) {
  switch (n.kind) {
    case ExprKind::Add:
    case ExprKind::Sub: return 1;
    case ExprKind::Mul:
    case ExprKind::Div: return 2;
    case ExprKind::Neg: return 3;
    case ExprKind::Pow: return 4;
    default: return 5;
  }
}

void print_node(const ExprPtr& node, std::string& out);

void print_child(const ExprPtr& child, int min_prec, std::string& out) {
  if (precedence(*child) < min_prec) {
    out += '(';
    print_node(child, out);
    out += ')';
  } else {
    print_node(child, out);
  }
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void print_node(const ExprPtr& node, std::string& out) {
  const ExprNode& n = *node;
  switch (n.kind) {
    case ExprKind::Constant:
      out += format_double(n.constant);
      return;
    case ExprKind::Variable:
      if (n.group == VarGroup::T) out += 't';
      else out += (n.group == VarGroup::X ? 'x' : 'u') + std::to_string(n.index + 1);
      return;
    case ExprKind::Add:
      print_child(n.lhs, 1, out);
      out += " + ";
      print_child(n.rhs, 2, out);
      return;
    case ExprKind::Sub:
      print_child(n.lhs, 1, out);
      out += " - ";
      print_child(n.rhs, 2, out);
      return;
    case ExprKind::Mul:
      print_child(n.lhs, 2, out);
      out += "*";
      print_child(n.rhs, 3, out);
      return;
    case ExprKind::Div:
      print_child(n.lhs, 2, out);
      out += "/";
      print_child(n.rhs, 3, out);
      return;
    case ExprKind::Neg:
      out += '-';
      print_child(n.lhs, 3, out);
      return;
    case ExprKind::Pow:
      print_child(n.lhs, 5, out);
      out += '^';
      if (n.pden == 1 && n.pnum >= 0) {
        out += std::to_string(n.pnum);
      } else {
        out += '(';
        out += std::to_string(n.pnum);
        if (n.pden != 1) {
          out += '/';
          out += std::to_string(n.pden);
        }
        out += ')';
      }
      return;
    case ExprKind::Call: {
      switch (n.func) {
        case Func::Sqrt: out += "sqrt"; break;
        case Func::Sin: out += "sin"; break;
        case Func::Cos: out += "cos"; break;
        case Func::Exp: out += "exp"; break;
        case Func::Log: out += "log"; break;
      }
      out += '(';
      print_node(n.lhs, out);
      out += ')';
      return;
    }
  }
}

}  // namespace

Expr parse_expression(const std::string& text, const VarSpace& vars) {
  Parser p(text, vars);
  ExprPtr root = p.parse_expr();
  if (p.cur.kind != Tok::End)
    throw ParseError("unexpected trailing input", p.cur.offset);
  return Expr{std::move(root), vars};
}

std::string print_expression(const ExprPtr& node) {
  std::string out;
  print_node(node, out);
  return out;
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::Constant: return a->constant == b->constant;
    case ExprKind::Variable: return a->group == b->group && a->index == b->index;
    case ExprKind::Pow:
      return a->pnum == b->pnum && a->pden == b->pden && expr_equal(a->lhs, b->lhs);
    case ExprKind::Call: return a->func == b->func && expr_equal(a->lhs, b->lhs);
    case ExprKind::Neg: return expr_equal(a->lhs, b->lhs);
    default: return expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
  }
}

ExprPtr substitute(const ExprPtr& node, VarGroup group, int index, const ExprPtr& replacement) {
  if (!node) return node;
  if (node->kind == ExprKind::Variable)
    return (node->group == group && node->index == index) ? replacement : node;
  auto n = std::make_shared<ExprNode>(*node);
  n->lhs = substitute(node->lhs, group, index, replacement);
  n->rhs = substitute(node->rhs, group, index, replacement);
  return n;
}

}  // namespace finhol
