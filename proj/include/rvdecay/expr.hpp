#pragma once

// Arithmetic expression DSL for the model functions f(x) and g(t).
//
// Grammar (precedence low to high: + -  <  * /  <  unary -  <  ^, with ^
// right-associative; a sign is admitted directly after '^'):
//
//   expr     := term (('+' | '-') term)*
//   term     := factor (('*' | '/') factor)*
//   factor   := '-' factor | power
//   power    := primary ('^' ['-'] power)?
//   primary  := number | 'e' | variable | call | '(' expr ')'
//   call     := name '(' expr (',' expr)? ')'
//
// Numbers admit decimal and scientific forms (1.5, 2e-3, 1.25e+10).  The bare
// identifier `e` is Euler's constant.  A variable is `x` or `t`; an expression
// may use at most one of them.  Calls: exp, log, loglog, sqrt, abs, sgn with
// one argument; signed_pow(u, beta) with constant beta, where the one-argument
// shorthand signed_pow(beta) means signed_pow(x, beta).
//
// loglog(u) = log(log(u)); signed_pow(u, beta) = sgn(u)*|u|^beta, exact at 0.
//
// Evaluation never yields NaN or infinity silently: every fault (log of a
// non-positive value, division by zero, 0 raised to a negative power, a
// fractional power of a negative base, overflow) is reported through
// EvalResult with the offending node and input.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rvdecay {

enum class NodeKind : std::uint8_t {
  kConstant,
  kVariable,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,
  kNeg,
  kExp,
  kLog,
  kLogLog,
  kSqrt,
  kAbs,
  kSgn,
  kSignedPow,
};

struct ExprNode {
  NodeKind kind = NodeKind::kConstant;
  double value = 0.0;   // kConstant payload; kSignedPow exponent
  std::int32_t a = -1;  // first child index
  std::int32_t b = -1;  // second child index
};

enum class EvalFault : std::uint8_t {
  kNone,
  kLogDomain,   // log(u) with u <= 0
  kSqrtDomain,  // sqrt(u) with u < 0
  kDivByZero,
  kPowDomain,  // 0^negative, or negative base with fractional exponent
  kOverflow,   // non-finite intermediate
};

struct EvalResult {
  double value = 0.0;
  EvalFault fault = EvalFault::kNone;
  std::int32_t fault_node = -1;
  double fault_arg = 0.0;

  bool ok() const { return fault == EvalFault::kNone; }
};

// Immutable expression tree in topological (post-order) node storage: every
// node's children precede it, the root is the last node.  Value semantics;
// eval() is pure and safe to call concurrently from any number of threads.
class Expr {
 public:
  Expr() = default;

  EvalResult eval(double v) const;

  // Node access for structural work (reflection, printing, tests).
  const std::vector<ExprNode>& nodes() const { return nodes_; }
  std::int32_t root() const { return static_cast<std::int32_t>(nodes_.size()) - 1; }
  bool empty() const { return nodes_.empty(); }

  // Name of the single free variable ("x" or "t"), empty for constant
  // expressions.
  const std::string& variable() const { return variable_; }
  bool uses_variable() const { return !variable_.empty(); }

  // Canonical text form; parsing it back yields a structurally identical tree.
  std::string to_string() const;

  // Human-readable description of a fault, naming the offending subexpression.
  std::string describe_fault(const EvalResult& r) const;

  // Builder used by the parser and by structural transforms.
  static Expr build(std::vector<ExprNode> nodes, std::string variable);

 private:
  std::vector<ExprNode> nodes_;
  std::string variable_;
};

struct ParseError {
  std::size_t offset = 0;                  // byte offset into the source text
  std::string message;                     // what went wrong
  std::vector<std::string> expected;       // token classes that would be legal

  std::string render(std::string_view source) const;
};

class ParseResult {
 public:
  static ParseResult success(Expr e) {
    ParseResult r;
    r.expr_ = std::move(e);
    return r;
  }
  static ParseResult failure(ParseError e) {
    ParseResult r;
    r.error_ = std::move(e);
    return r;
  }

  bool ok() const { return expr_.has_value(); }
  const Expr& expr() const { return *expr_; }
  const ParseError& error() const { return error_; }

 private:
  std::optional<Expr> expr_;
  ParseError error_;
};

ParseResult parse_expression(std::string_view source);

// Central difference (f(v+h) - f(v-h)) / 2h with h = scale * max(|v|, 1).
// Throws EvalDomainError if either stencil point faults.
class EvalDomainError : public std::runtime_error {
 public:
  EvalDomainError(std::string what, double at)
      : std::runtime_error(std::move(what)), at_(at) {}
  double at() const { return at_; }

 private:
  double at_ = 0.0;
};

double numeric_derivative(const Expr& e, double value, double scale = 1e-6);

// A parsed model function bound to its declared variable.
struct FunctionSpec {
  Expr ast;
  std::string source;
  std::string variable;  // "x" or "t"

  double operator()(double v) const {
    EvalResult r = ast.eval(v);
    if (!r.ok()) throw EvalDomainError(ast.describe_fault(r), v);
    return r.value;
  }
  EvalResult eval(double v) const { return ast.eval(v); }

  // Parses source and checks that it uses no variable other than `variable`.
  // Throws std::invalid_argument with a rendered message on failure.
  static FunctionSpec parse(std::string_view source, std::string_view variable);
};

}  // namespace rvdecay
