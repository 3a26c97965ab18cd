#include "weinlab/phi.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <utility>
#include <vector>

namespace weinlab {

namespace {

std::string fmt_offset(const std::string& what, std::size_t off) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s at offset %zu", what.c_str(), off);
  return buf;
}

std::string fmt_at_y(const char* what, double v, double y) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "%s (%.6g) at y = %.17g", what, v, y);
  return buf;
}

}  // namespace

SyntaxError::SyntaxError(std::string msg, std::size_t off)
    : phi_error(fmt_offset(msg, off)), offset(off) {}
UnknownIdentifier::UnknownIdentifier(std::string n, std::size_t off)
    : phi_error(fmt_offset("unknown identifier '" + n + "'", off)), name(std::move(n)), offset(off) {}
EvalError::EvalError(std::string msg, double yy)
    : phi_error(fmt_at_y(msg.c_str(), yy, yy)), y(yy) {}
NotEven::NotEven(double wy, double dev)
    : phi_error(fmt_at_y("phi(y) != phi(-y), deviation", dev, wy)), worst_y(wy), deviation(dev) {}
Vanishing::Vanishing(double wy, double m)
    : phi_error(fmt_at_y("|phi| below tolerance, min", m, wy)), worst_y(wy), min_abs(m) {}
DerivativeMismatch::DerivativeMismatch(double wy, double rel)
    : phi_error(fmt_at_y("symbolic derivative disagrees with finite differences, rel error", rel, wy)),
      worst_y(wy), rel_error(rel) {}

namespace {

PhiNodePtr make_const(double v) {
  auto n = std::make_shared<PhiNode>();
  n->kind = PhiNodeKind::constant;
  n->value = v;
  return n;
}
PhiNodePtr make_var() {
  auto n = std::make_shared<PhiNode>();
  n->kind = PhiNodeKind::variable;
  return n;
}
PhiNodePtr make_unary(PhiNodeKind k, PhiNodePtr a) {
  auto n = std::make_shared<PhiNode>();
  n->kind = k;
  n->lhs = std::move(a);
  return n;
}
PhiNodePtr make_binary(PhiNodeKind k, PhiNodePtr a, PhiNodePtr b) {
  auto n = std::make_shared<PhiNode>();
  n->kind = k;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}
PhiNodePtr make_pow(PhiNodePtr base, int e) {
  auto n = std::make_shared<PhiNode>();
  n->kind = PhiNodeKind::pow;
  n->lhs = std::move(base);
  n->exponent = e;
  return n;
}

// Recursive-descent parser for
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | power
//   power  := atom ('^' intexp)?
//   atom   := number | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'
//   intexp := ['-'] digits | '(' ['-'] digits ')'
// Precedence ^ > unary- > *,/ > +,- ; '^' takes integer literal exponents only.
class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  PhiNodePtr run() {
    skip_ws();
    if (pos_ >= src_.size()) throw SyntaxError("empty expression", 0);
    PhiNodePtr e = expr();
    skip_ws();
    if (pos_ < src_.size()) throw SyntaxError("unexpected trailing input", pos_);
    return e;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool peek_is(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }
  bool consume(char c) {
    if (peek_is(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  PhiNodePtr expr() {
    PhiNodePtr lhs = term();
    for (;;) {
      if (consume('+'))
        lhs = make_binary(PhiNodeKind::add, lhs, term());
      else if (consume('-'))
        lhs = make_binary(PhiNodeKind::sub, lhs, term());
      else
        return lhs;
    }
  }

  PhiNodePtr term() {
    PhiNodePtr lhs = factor();
    for (;;) {
      if (consume('*'))
        lhs = make_binary(PhiNodeKind::mul, lhs, factor());
      else if (consume('/'))
        lhs = make_binary(PhiNodeKind::div, lhs, factor());
      else
        return lhs;
    }
  }

  PhiNodePtr factor() {
    if (consume('-')) return make_unary(PhiNodeKind::neg, factor());
    return power();
  }

  PhiNodePtr power() {
    PhiNodePtr base = atom();
    skip_ws();
    if (consume('^')) return make_pow(base, int_exponent());
    return base;
  }

  int int_exponent() {
    skip_ws();
    bool paren = consume('(');
    skip_ws();
    bool negative = consume('-');
    skip_ws();
    std::size_t start = pos_;
    long v = 0;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
      v = v * 10 + (src_[pos_] - '0');
      if (v > 1000000) throw SyntaxError("exponent out of range", start);
      ++pos_;
    }
    if (pos_ == start) throw SyntaxError("expected integer exponent after '^'", pos_);
    if (pos_ < src_.size() && src_[pos_] == '.')
      throw SyntaxError("exponent must be an integer", pos_);
    if (paren && !consume(')')) throw SyntaxError("expected ')' closing exponent", pos_);
    return negative ? -static_cast<int>(v) : static_cast<int>(v);
  }

  PhiNodePtr atom() {
    skip_ws();
    if (pos_ >= src_.size()) throw SyntaxError("unexpected end of expression", pos_);
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      PhiNodePtr e = expr();
      if (!consume(')')) throw SyntaxError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
  }

  PhiNodePtr number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.' ||
            src_[pos_] == 'e' || src_[pos_] == 'E' ||
            ((src_[pos_] == '+' || src_[pos_] == '-') && pos_ > start &&
             (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E'))))
      ++pos_;
    std::string text(src_.substr(start, pos_ - start));
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0')
      throw SyntaxError("malformed number '" + text + "'", start);
    return make_const(v);
  }

  PhiNodePtr identifier() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    std::string name(src_.substr(start, pos_ - start));
    if (name == "y") return make_var();
    if (name == "pi") return make_const(M_PI);
    PhiNodeKind k;
    if (name == "cos") k = PhiNodeKind::cos;
    else if (name == "sin") k = PhiNodeKind::sin;
    else if (name == "exp") k = PhiNodeKind::exp;
    else if (name == "sqrt") k = PhiNodeKind::sqrt;
    else if (name == "abs") k = PhiNodeKind::abs;
    else throw UnknownIdentifier(name, start);
    if (!consume('(')) throw SyntaxError("function '" + name + "' needs a parenthesized argument", pos_);
    PhiNodePtr arg = expr();
    if (!consume(')')) throw SyntaxError("expected ')' closing call", pos_);
    return make_unary(k, arg);
  }
};

double pow_int(double base, int e, double y) {
  if (e == 0) return 1.0;
  bool inv = e < 0;
  unsigned long n = inv ? -static_cast<long>(e) : e;
  double acc = 1.0, b = base;
  while (n) {
    if (n & 1) acc *= b;
    b *= b;
    n >>= 1;
  }
  if (inv) {
    if (acc == 0.0) throw EvalError("zero raised to a negative power", y);
    return 1.0 / acc;
  }
  return acc;
}

double eval_node(const PhiNode& n, double y) {
  switch (n.kind) {
    case PhiNodeKind::constant: return n.value;
    case PhiNodeKind::variable: return y;
    case PhiNodeKind::add: return eval_node(*n.lhs, y) + eval_node(*n.rhs, y);
    case PhiNodeKind::sub: return eval_node(*n.lhs, y) - eval_node(*n.rhs, y);
    case PhiNodeKind::mul: return eval_node(*n.lhs, y) * eval_node(*n.rhs, y);
    case PhiNodeKind::div: {
      double d = eval_node(*n.rhs, y);
      if (d == 0.0) throw EvalError("division by zero", y);
      return eval_node(*n.lhs, y) / d;
    }
    case PhiNodeKind::neg: return -eval_node(*n.lhs, y);
    case PhiNodeKind::pow: return pow_int(eval_node(*n.lhs, y), n.exponent, y);
    case PhiNodeKind::cos: return std::cos(eval_node(*n.lhs, y));
    case PhiNodeKind::sin: return std::sin(eval_node(*n.lhs, y));
    case PhiNodeKind::exp: return std::exp(eval_node(*n.lhs, y));
    case PhiNodeKind::sqrt: {
      double a = eval_node(*n.lhs, y);
      if (a < 0.0) throw EvalError("sqrt of a negative value", y);
      return std::sqrt(a);
    }
    case PhiNodeKind::abs: return std::fabs(eval_node(*n.lhs, y));
  }
  throw EvalError("corrupt expression node", y);
}

PhiNodePtr diff_node(const PhiNodePtr& n) {
  switch (n->kind) {
    case PhiNodeKind::constant: return make_const(0.0);
    case PhiNodeKind::variable: return make_const(1.0);
    case PhiNodeKind::add: return make_binary(PhiNodeKind::add, diff_node(n->lhs), diff_node(n->rhs));
    case PhiNodeKind::sub: return make_binary(PhiNodeKind::sub, diff_node(n->lhs), diff_node(n->rhs));
    case PhiNodeKind::mul:
      return make_binary(PhiNodeKind::add,
                         make_binary(PhiNodeKind::mul, diff_node(n->lhs), n->rhs),
                         make_binary(PhiNodeKind::mul, n->lhs, diff_node(n->rhs)));
    case PhiNodeKind::div:
      // (u/v)' = (u'v - uv') / v^2
      return make_binary(
          PhiNodeKind::div,
          make_binary(PhiNodeKind::sub,
                      make_binary(PhiNodeKind::mul, diff_node(n->lhs), n->rhs),
                      make_binary(PhiNodeKind::mul, n->lhs, diff_node(n->rhs))),
          make_pow(n->rhs, 2));
    case PhiNodeKind::neg: return make_unary(PhiNodeKind::neg, diff_node(n->lhs));
    case PhiNodeKind::pow:
      if (n->exponent == 0) return make_const(0.0);
      return make_binary(PhiNodeKind::mul,
                         make_binary(PhiNodeKind::mul, make_const(n->exponent),
                                     make_pow(n->lhs, n->exponent - 1)),
                         diff_node(n->lhs));
    case PhiNodeKind::cos:
      return make_binary(PhiNodeKind::mul,
                         make_unary(PhiNodeKind::neg, make_unary(PhiNodeKind::sin, n->lhs)),
                         diff_node(n->lhs));
    case PhiNodeKind::sin:
      return make_binary(PhiNodeKind::mul, make_unary(PhiNodeKind::cos, n->lhs), diff_node(n->lhs));
    case PhiNodeKind::exp:
      return make_binary(PhiNodeKind::mul, make_unary(PhiNodeKind::exp, n->lhs), diff_node(n->lhs));
    case PhiNodeKind::sqrt:
      // u' / (2 sqrt(u))
      return make_binary(PhiNodeKind::div, diff_node(n->lhs),
                         make_binary(PhiNodeKind::mul, make_const(2.0),
                                     make_unary(PhiNodeKind::sqrt, n->lhs)));
    case PhiNodeKind::abs:
      // sign(u) u' written as (u/abs(u)) * u'
      return make_binary(PhiNodeKind::mul,
                         make_binary(PhiNodeKind::div, n->lhs, make_unary(PhiNodeKind::abs, n->lhs)),
                         diff_node(n->lhs));
  }
  return make_const(0.0);
}

void print_node(const PhiNode& n, std::string& out) {
  char buf[40];
  switch (n.kind) {
    case PhiNodeKind::constant:
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      out += buf;
      return;
    case PhiNodeKind::variable: out += 'y'; return;
    case PhiNodeKind::add:
    case PhiNodeKind::sub:
    case PhiNodeKind::mul:
    case PhiNodeKind::div: {
      char op = n.kind == PhiNodeKind::add ? '+'
              : n.kind == PhiNodeKind::sub ? '-'
              : n.kind == PhiNodeKind::mul ? '*' : '/';
      out += '(';
      print_node(*n.lhs, out);
      out += ' ';
      out += op;
      out += ' ';
      print_node(*n.rhs, out);
      out += ')';
      return;
    }
    case PhiNodeKind::neg:
      out += "(-";
      print_node(*n.lhs, out);
      out += ')';
      return;
    case PhiNodeKind::pow:
      out += '(';
      print_node(*n.lhs, out);
      std::snprintf(buf, sizeof buf, "^(%d))", n.exponent);
      out += buf;
      return;
    case PhiNodeKind::cos: out += "cos("; break;
    case PhiNodeKind::sin: out += "sin("; break;
    case PhiNodeKind::exp: out += "exp("; break;
    case PhiNodeKind::sqrt: out += "sqrt("; break;
    case PhiNodeKind::abs: out += "abs("; break;
  }
  print_node(*n.lhs, out);
  out += ')';
}

bool equal_node(const PhiNode& a, const PhiNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case PhiNodeKind::constant: return a.value == b.value;
    case PhiNodeKind::variable: return true;
    case PhiNodeKind::pow: return a.exponent == b.exponent && equal_node(*a.lhs, *b.lhs);
    case PhiNodeKind::neg:
    case PhiNodeKind::cos:
    case PhiNodeKind::sin:
    case PhiNodeKind::exp:
    case PhiNodeKind::sqrt:
    case PhiNodeKind::abs: return equal_node(*a.lhs, *b.lhs);
    default: return equal_node(*a.lhs, *b.lhs) && equal_node(*a.rhs, *b.rhs);
  }
}

}  // namespace

PhiExpr PhiExpr::parse(std::string_view src) {
  if (src.empty()) throw SyntaxError("empty expression", 0);
  return PhiExpr(Parser(src).run());
}

PhiExpr PhiExpr::differentiate() const {
  if (!root_) throw phi_error("differentiate on empty expression");
  return PhiExpr(diff_node(root_));
}

double PhiExpr::eval(double y) const {
  if (!root_) throw phi_error("eval on empty expression");
  double v = eval_node(*root_, y);
  if (!std::isfinite(v)) throw EvalError("non-finite value", y);
  return v;
}

std::string PhiExpr::to_string() const {
  std::string out;
  if (root_) print_node(*root_, out);
  return out;
}

bool PhiExpr::structurally_equal(const PhiExpr& other) const {
  if (!root_ || !other.root_) return root_ == other.root_;
  return equal_node(*root_, *other.root_);
}

PrescribedFunction PrescribedFunction::validate(const PhiExpr& expr, ValidationOptions opt) {
  PrescribedFunction pf;
  pf.expr_ = expr;
  pf.deriv_ = expr.differentiate();
  pf.vanishing_allowed_ = opt.allow_vanishing;
  pf.source_ = expr.to_string();

  const int n = kValidationGridSize;
  std::vector<double> ys(n), vals(n);
  for (int i = 0; i < n; ++i) {
    ys[i] = -1.0 + 2.0 * i / (n - 1);
    vals[i] = expr.eval(ys[i]);  // EvalError propagates with the faulting y
  }

  // Evenness: phi(y) == phi(-y) on the grid (grid is symmetric by design).
  double worst_dev = 0.0, worst_y = 0.0;
  for (int i = 0; i < n; ++i) {
    double dev = std::fabs(vals[i] - vals[n - 1 - i]);
    if (dev >= worst_dev) {
      worst_dev = dev;
      worst_y = ys[i] >= 0 ? ys[i] : ys[n - 1 - i];
    }
  }
  if (worst_dev > kEvenTol) throw NotEven(worst_y, worst_dev);
  pf.evenness_certified_ = true;

  // Non-vanishing with constant sign.
  double min_abs = std::fabs(vals[0]);
  double min_y = ys[0];
  bool any_pos = false, any_neg = false;
  for (int i = 0; i < n; ++i) {
    double a = std::fabs(vals[i]);
    if (a <= min_abs) {
      min_abs = a;
      min_y = ys[i];
    }
    if (vals[i] > 0) any_pos = true;
    if (vals[i] < 0) any_neg = true;
  }
  if (!opt.allow_vanishing) {
    if (min_abs < kVanishTol) throw Vanishing(min_y, min_abs);
    if (any_pos && any_neg) throw Vanishing(min_y, min_abs);  // sign change implies a zero
  }
  pf.sign_ = any_neg && !any_pos ? PhiSign::negative : PhiSign::positive;

  // Symbolic derivative against central differences at interior points.
  const double h = 1e-5;
  double worst_rel = 0.0, worst_rel_y = 0.0;
  for (int i = 0; i < 101; ++i) {
    double y = -0.99 + 1.98 * i / 100.0;
    double sym = pf.deriv_.eval(y);
    double fd = (expr.eval(y + h) - expr.eval(y - h)) / (2 * h);
    double rel = std::fabs(sym - fd) / std::max(1.0, std::fabs(sym));
    if (rel > worst_rel) {
      worst_rel = rel;
      worst_rel_y = y;
    }
  }
  if (worst_rel > 1e-6) throw DerivativeMismatch(worst_rel_y, worst_rel);

  return pf;
}

PrescribedFunction PrescribedFunction::from_source(std::string_view src, ValidationOptions opt) {
  return validate(PhiExpr::parse(src), opt);
}

PrescribedFunction PrescribedFunction::scaled(double factor) const {
  auto product = make_binary(PhiNodeKind::mul, make_const(factor), expr_.root());
  ValidationOptions opt;
  opt.allow_vanishing = vanishing_allowed_;
  return validate(PhiExpr(product), opt);
}

}  // namespace weinlab
