#ifndef WEINLAB_PHI_HPP
#define WEINLAB_PHI_HPP

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace weinlab {

// Errors raised by the expression layer. All carry a human-readable message;
// the structured fields are what tests and the CLI key on.
struct phi_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SyntaxError : phi_error {
  SyntaxError(std::string msg, std::size_t offset);
  std::size_t offset;  // byte offset into the source text
};
struct UnknownIdentifier : phi_error {
  UnknownIdentifier(std::string name, std::size_t offset);
  std::string name;
  std::size_t offset;
};
struct EvalError : phi_error {
  EvalError(std::string msg, double y);
  double y;  // grid point where evaluation faulted
};
struct NotEven : phi_error {
  NotEven(double worst_y, double deviation);
  double worst_y;
  double deviation;
};
struct Vanishing : phi_error {
  Vanishing(double worst_y, double min_abs);
  double worst_y;
  double min_abs;
};
struct DerivativeMismatch : phi_error {
  DerivativeMismatch(double worst_y, double rel_error);
  double worst_y;
  double rel_error;
};

enum class PhiNodeKind { constant, variable, add, sub, mul, div, neg, pow, cos, sin, exp, sqrt, abs };

struct PhiNode;
using PhiNodePtr = std::shared_ptr<const PhiNode>;

struct PhiNode {
  PhiNodeKind kind;
  double value = 0.0;  // constant
  int exponent = 0;    // pow
  PhiNodePtr lhs;      // unary operand / left operand
  PhiNodePtr rhs;
};

// Expression in the single variable y = <N, e3>. Trees are immutable and
// cheap to share; differentiate() builds a new tree.
class PhiExpr {
 public:
  PhiExpr() = default;
  explicit PhiExpr(PhiNodePtr root) : root_(std::move(root)) {}

  static PhiExpr parse(std::string_view src);

  PhiExpr differentiate() const;
  double eval(double y) const;  // throws EvalError on a domain fault
  std::string to_string() const;
  bool structurally_equal(const PhiExpr& other) const;
  const PhiNodePtr& root() const { return root_; }
  bool empty() const { return root_ == nullptr; }

 private:
  PhiNodePtr root_;
};

enum class PhiSign { positive, negative };

struct ValidationOptions {
  // Test-only escape admitting phi == 0 (comparison oracle orbits). Rejected
  // by every user-facing classification entry point.
  bool allow_vanishing = false;
};

constexpr int kValidationGridSize = 1001;   // uniform on [-1, 1]
constexpr double kEvenTol = 1e-10;
constexpr double kVanishTol = 1e-8;

// A validated prescribed function: even, non-vanishing, C^1 on [-1,1],
// with its exact symbolic derivative. Immutable; safe to share across
// concurrent integrations.
class PrescribedFunction {
 public:
  static PrescribedFunction validate(const PhiExpr& expr, ValidationOptions opt = {});
  static PrescribedFunction from_source(std::string_view src, ValidationOptions opt = {});

  double operator()(double y) const { return expr_.eval(y); }
  double derivative(double y) const { return deriv_.eval(y); }

  PhiSign sign() const { return sign_; }
  bool evenness_certified() const { return evenness_certified_; }
  bool vanishing_allowed() const { return vanishing_allowed_; }
  const PhiExpr& expr() const { return expr_; }
  const PhiExpr& deriv() const { return deriv_; }
  const std::string& source() const { return source_; }

  // Same function scaled by a constant factor (used by the b=1 hyperbolic
  // normalization). Revalidates, inheriting allow_vanishing.
  PrescribedFunction scaled(double factor) const;

 private:
  PrescribedFunction() = default;
  PhiExpr expr_;
  PhiExpr deriv_;
  PhiSign sign_ = PhiSign::positive;
  bool evenness_certified_ = false;
  bool vanishing_allowed_ = false;
  std::string source_;
};

}  // namespace weinlab

#endif
