#include "rvdecay/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace rvdecay {

namespace {

thread_local std::vector<double> g_scratch;

double sgn_of(double u) { return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0); }

bool is_integer_valued(double v) {
  return std::isfinite(v) && v == std::nearbyint(v);
}

// Shortest round-trip decimal form of a double.
std::string format_double(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace

Expr Expr::build(std::vector<ExprNode> nodes, std::string variable) {
  Expr e;
  e.nodes_ = std::move(nodes);
  e.variable_ = std::move(variable);
  return e;
}

EvalResult Expr::eval(double v) const {
  EvalResult out;
  if (nodes_.empty()) return out;
  std::vector<double>& vals = g_scratch;
  if (vals.size() < nodes_.size()) vals.resize(nodes_.size());

  for (std::int32_t i = 0; i < static_cast<std::int32_t>(nodes_.size()); ++i) {
    const ExprNode& n = nodes_[static_cast<std::size_t>(i)];
    double r = 0.0;
    switch (n.kind) {
      case NodeKind::kConstant:
        r = n.value;
        break;
      case NodeKind::kVariable:
        r = v;
        break;
      case NodeKind::kAdd:
        r = vals[n.a] + vals[n.b];
        break;
      case NodeKind::kSub:
        r = vals[n.a] - vals[n.b];
        break;
      case NodeKind::kMul:
        r = vals[n.a] * vals[n.b];
        break;
      case NodeKind::kDiv:
        if (vals[n.b] == 0.0) {
          out.fault = EvalFault::kDivByZero;
          out.fault_node = i;
          out.fault_arg = vals[n.b];
          return out;
        }
        r = vals[n.a] / vals[n.b];
        break;
      case NodeKind::kPow: {
        const double base = vals[n.a];
        const double ex = vals[n.b];
        if (base == 0.0 && ex < 0.0) {
          out.fault = EvalFault::kPowDomain;
          out.fault_node = i;
          out.fault_arg = base;
          return out;
        }
        if (base < 0.0 && !is_integer_valued(ex)) {
          out.fault = EvalFault::kPowDomain;
          out.fault_node = i;
          out.fault_arg = base;
          return out;
        }
        r = std::pow(base, ex);
        break;
      }
      case NodeKind::kNeg:
        r = -vals[n.a];
        break;
      case NodeKind::kExp:
        r = std::exp(vals[n.a]);  // underflow to 0 is fine; overflow caught below
        break;
      case NodeKind::kLog:
        if (vals[n.a] <= 0.0) {
          out.fault = EvalFault::kLogDomain;
          out.fault_node = i;
          out.fault_arg = vals[n.a];
          return out;
        }
        r = std::log(vals[n.a]);
        break;
      case NodeKind::kLogLog: {
        const double u = vals[n.a];
        if (u <= 0.0) {
          out.fault = EvalFault::kLogDomain;
          out.fault_node = i;
          out.fault_arg = u;
          return out;
        }
        const double lu = std::log(u);
        if (lu <= 0.0) {
          out.fault = EvalFault::kLogDomain;
          out.fault_node = i;
          out.fault_arg = lu;
          return out;
        }
        r = std::log(lu);
        break;
      }
      case NodeKind::kSqrt:
        if (vals[n.a] < 0.0) {
          out.fault = EvalFault::kSqrtDomain;
          out.fault_node = i;
          out.fault_arg = vals[n.a];
          return out;
        }
        r = std::sqrt(vals[n.a]);
        break;
      case NodeKind::kAbs:
        r = std::fabs(vals[n.a]);
        break;
      case NodeKind::kSgn:
        r = sgn_of(vals[n.a]);
        break;
      case NodeKind::kSignedPow: {
        const double u = vals[n.a];
        const double beta = n.value;
        if (u == 0.0) {
          if (beta > 0.0) {
            r = 0.0;
          } else if (beta == 0.0) {
            r = 0.0;  // sgn(0) * 1
          } else {
            out.fault = EvalFault::kPowDomain;
            out.fault_node = i;
            out.fault_arg = u;
            return out;
          }
        } else {
          r = sgn_of(u) * std::pow(std::fabs(u), beta);
        }
        break;
      }
    }
    if (std::isinf(r) || std::isnan(r)) {
      out.fault = EvalFault::kOverflow;
      out.fault_node = i;
      out.fault_arg = r;
      return out;
    }
    vals[i] = r;
  }
  out.value = vals[nodes_.size() - 1];
  return out;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

// Precedence classes used for minimal parenthesization.
enum Prec { kPrecAdd = 1, kPrecMul = 2, kPrecUnary = 3, kPrecPow = 4, kPrecAtom = 5 };

int node_prec(const ExprNode& n) {
  switch (n.kind) {
    case NodeKind::kAdd:
    case NodeKind::kSub:
      return kPrecAdd;
    case NodeKind::kMul:
    case NodeKind::kDiv:
      return kPrecMul;
    case NodeKind::kNeg:
      return kPrecUnary;
    case NodeKind::kPow:
      return kPrecPow;
    case NodeKind::kConstant:
    default:
      return kPrecAtom;
  }
}

void print_node(const std::vector<ExprNode>& nodes, const std::string& var,
                std::int32_t i, int min_prec, std::string& out) {
  const ExprNode& n = nodes[static_cast<std::size_t>(i)];
  const int prec = node_prec(n);
  const bool paren = prec < min_prec;
  if (paren) out += '(';
  switch (n.kind) {
    case NodeKind::kConstant:
      if (n.value < 0.0 || (n.value == 0.0 && std::signbit(n.value))) {
        // Negative literals never appear from the parser; print defensively.
        out += '(';
        out += format_double(n.value);
        out += ')';
      } else {
        out += format_double(n.value);
      }
      break;
    case NodeKind::kVariable:
      out += var;
      break;
    case NodeKind::kAdd:
    case NodeKind::kSub:
      print_node(nodes, var, n.a, kPrecAdd, out);
      out += (n.kind == NodeKind::kAdd) ? " + " : " - ";
      // Right operand needs one level more so a - (b - c) keeps its parens.
      print_node(nodes, var, n.b, kPrecAdd + 1, out);
      break;
    case NodeKind::kMul:
    case NodeKind::kDiv:
      print_node(nodes, var, n.a, kPrecMul, out);
      out += (n.kind == NodeKind::kMul) ? "*" : "/";
      print_node(nodes, var, n.b, kPrecMul + 1, out);
      break;
    case NodeKind::kNeg:
      out += '-';
      print_node(nodes, var, n.a, kPrecUnary, out);
      break;
    case NodeKind::kPow:
      // '^' is right-associative and binds above unary minus.
      print_node(nodes, var, n.a, kPrecAtom, out);
      out += '^';
      print_node(nodes, var, n.b, kPrecPow, out);
      break;
    case NodeKind::kExp:
    case NodeKind::kLog:
    case NodeKind::kLogLog:
    case NodeKind::kSqrt:
    case NodeKind::kAbs:
    case NodeKind::kSgn: {
      const char* name = n.kind == NodeKind::kExp      ? "exp"
                         : n.kind == NodeKind::kLog    ? "log"
                         : n.kind == NodeKind::kLogLog ? "loglog"
                         : n.kind == NodeKind::kSqrt   ? "sqrt"
                         : n.kind == NodeKind::kAbs    ? "abs"
                                                       : "sgn";
      out += name;
      out += '(';
      print_node(nodes, var, n.a, kPrecAdd, out);
      out += ')';
      break;
    }
    case NodeKind::kSignedPow:
      out += "signed_pow(";
      print_node(nodes, var, n.a, kPrecAdd, out);
      out += ", ";
      out += format_double(n.value);
      out += ')';
      break;
  }
  if (paren) out += ')';
}

void describe_node(const std::vector<ExprNode>& nodes, const std::string& var,
                   std::int32_t i, std::string& out) {
  print_node(nodes, var, i, kPrecAdd, out);
}

}  // namespace

std::string Expr::to_string() const {
  if (nodes_.empty()) return "0";
  std::string out;
  const std::string var = variable_.empty() ? "x" : variable_;
  print_node(nodes_, var, root(), kPrecAdd, out);
  return out;
}

std::string Expr::describe_fault(const EvalResult& r) const {
  if (r.ok()) return "no fault";
  std::string sub;
  if (r.fault_node >= 0 && r.fault_node < static_cast<std::int32_t>(nodes_.size())) {
    const std::string var = variable_.empty() ? "x" : variable_;
    describe_node(nodes_, var, r.fault_node, sub);
  }
  const char* what = "";
  switch (r.fault) {
    case EvalFault::kLogDomain: what = "log of a non-positive value"; break;
    case EvalFault::kSqrtDomain: what = "sqrt of a negative value"; break;
    case EvalFault::kDivByZero: what = "division by zero"; break;
    case EvalFault::kPowDomain: what = "power outside its domain"; break;
    case EvalFault::kOverflow: what = "overflow"; break;
    case EvalFault::kNone: what = "no fault"; break;
  }
  char arg[40];
  std::snprintf(arg, sizeof(arg), "%.17g", r.fault_arg);
  return std::string(what) + " in `" + sub + "` (input " + arg + ")";
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Token {
  enum Kind { kNumber, kIdent, kPlus, kMinus, kStar, kSlash, kCaret, kLParen, kRParen, kComma, kEnd, kBad };
  Kind kind = kEnd;
  std::size_t offset = 0;
  std::size_t length = 0;
  double number = 0.0;
  std::string_view text;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    Token t;
    t.offset = pos_;
    if (pos_ >= src_.size()) {
      t.kind = Token::kEnd;
      return t;
    }
    const char c = src_[pos_];
    switch (c) {
      case '+': t.kind = Token::kPlus; t.length = 1; ++pos_; return t;
      case '-': t.kind = Token::kMinus; t.length = 1; ++pos_; return t;
      case '*': t.kind = Token::kStar; t.length = 1; ++pos_; return t;
      case '/': t.kind = Token::kSlash; t.length = 1; ++pos_; return t;
      case '^': t.kind = Token::kCaret; t.length = 1; ++pos_; return t;
      case '(': t.kind = Token::kLParen; t.length = 1; ++pos_; return t;
      case ')': t.kind = Token::kRParen; t.length = 1; ++pos_; return t;
      case ',': t.kind = Token::kComma; t.length = 1; ++pos_; return t;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return lex_number();
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t end = pos_;
      while (end < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[end])) || src_[end] == '_'))
        ++end;
      t.kind = Token::kIdent;
      t.length = end - pos_;
      t.text = src_.substr(pos_, t.length);
      pos_ = end;
      return t;
    }
    t.kind = Token::kBad;
    t.length = 1;
    t.text = src_.substr(pos_, 1);
    ++pos_;
    return t;
  }

 private:
  Token lex_number() {
    const std::size_t start = pos_;
    std::size_t end = pos_;
    while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
    }
    // Exponent only if followed by digits (else `2e` lexes as 2 then ident e).
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t p = end + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        ++p;
        while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) ++p;
        end = p;
      }
    }
    Token t;
    t.kind = Token::kNumber;
    t.offset = start;
    t.length = end - start;
    t.text = src_.substr(start, t.length);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + end, v);
    if (ec != std::errc() || ptr != src_.data() + end) {
      t.kind = Token::kBad;
    }
    t.number = v;
    pos_ = end;
    return t;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { advance(); }

  ParseResult run() {
    std::int32_t root = parse_expr();
    if (failed_) return ParseResult::failure(std::move(error_));
    if (cur_.kind != Token::kEnd) {
      fail(cur_.offset, "unexpected trailing input", {"operator", "end of input"});
      return ParseResult::failure(std::move(error_));
    }
    (void)root;
    return ParseResult::success(Expr::build(std::move(nodes_), std::move(variable_)));
  }

 private:
  void advance() { cur_ = lex_.next(); }

  void fail(std::size_t offset, std::string message, std::vector<std::string> expected) {
    if (failed_) return;
    failed_ = true;
    error_.offset = offset;
    error_.message = std::move(message);
    error_.expected = std::move(expected);
  }

  std::int32_t push(ExprNode n) {
    nodes_.push_back(n);
    return static_cast<std::int32_t>(nodes_.size()) - 1;
  }

  std::int32_t parse_expr() {
    std::int32_t lhs = parse_term();
    while (!failed_ && (cur_.kind == Token::kPlus || cur_.kind == Token::kMinus)) {
      const bool add = cur_.kind == Token::kPlus;
      advance();
      std::int32_t rhs = parse_term();
      if (failed_) return -1;
      lhs = push({add ? NodeKind::kAdd : NodeKind::kSub, 0.0, lhs, rhs});
    }
    return lhs;
  }

  std::int32_t parse_term() {
    std::int32_t lhs = parse_factor();
    while (!failed_ && (cur_.kind == Token::kStar || cur_.kind == Token::kSlash)) {
      const bool mul = cur_.kind == Token::kStar;
      advance();
      std::int32_t rhs = parse_factor();
      if (failed_) return -1;
      lhs = push({mul ? NodeKind::kMul : NodeKind::kDiv, 0.0, lhs, rhs});
    }
    return lhs;
  }

  std::int32_t parse_factor() {
    if (cur_.kind == Token::kMinus) {
      advance();
      std::int32_t operand = parse_factor();
      if (failed_) return -1;
      return push({NodeKind::kNeg, 0.0, operand, -1});
    }
    return parse_power();
  }

  std::int32_t parse_power() {
    std::int32_t base = parse_primary();
    if (failed_) return -1;
    if (cur_.kind == Token::kCaret) {
      advance();
      bool negate = false;
      if (cur_.kind == Token::kMinus) {  // sign admitted directly after '^'
        negate = true;
        advance();
      }
      std::int32_t ex = parse_power();
      if (failed_) return -1;
      if (negate) ex = push({NodeKind::kNeg, 0.0, ex, -1});
      return push({NodeKind::kPow, 0.0, base, ex});
    }
    return base;
  }

  std::int32_t parse_primary() {
    switch (cur_.kind) {
      case Token::kNumber: {
        const double v = cur_.number;
        advance();
        return push({NodeKind::kConstant, v, -1, -1});
      }
      case Token::kIdent:
        return parse_ident();
      case Token::kLParen: {
        advance();
        std::int32_t inner = parse_expr();
        if (failed_) return -1;
        if (cur_.kind != Token::kRParen) {
          fail(cur_.offset, "unbalanced parenthesis", {")"});
          return -1;
        }
        advance();
        return inner;
      }
      case Token::kEnd:
        fail(cur_.offset, "unexpected end of input",
             {"number", "variable", "function", "(", "-"});
        return -1;
      default:
        fail(cur_.offset, "unexpected token `" + std::string(cur_.text) + "`",
             {"number", "variable", "function", "(", "-"});
        return -1;
    }
  }

  std::int32_t parse_ident() {
    const std::string name(cur_.text);
    const std::size_t name_offset = cur_.offset;
    advance();

    if (cur_.kind != Token::kLParen) {
      if (name == "e") return push({NodeKind::kConstant, 2.718281828459045235360287, -1, -1});
      if (name == "x" || name == "t") return make_variable(name, name_offset);
      fail(name_offset, "unknown identifier `" + name + "`",
           {"x", "t", "e", "exp", "log", "loglog", "sqrt", "abs", "sgn", "signed_pow"});
      return -1;
    }

    // Function call.
    advance();  // consume '('
    NodeKind kind;
    if (name == "exp") kind = NodeKind::kExp;
    else if (name == "log") kind = NodeKind::kLog;
    else if (name == "loglog") kind = NodeKind::kLogLog;
    else if (name == "sqrt") kind = NodeKind::kSqrt;
    else if (name == "abs") kind = NodeKind::kAbs;
    else if (name == "sgn") kind = NodeKind::kSgn;
    else if (name == "signed_pow") kind = NodeKind::kSignedPow;
    else {
      fail(name_offset, "unknown function `" + name + "`",
           {"exp", "log", "loglog", "sqrt", "abs", "sgn", "signed_pow"});
      return -1;
    }

    const std::size_t first_arg_offset = cur_.offset;
    const std::size_t first_arg_begin = nodes_.size();
    std::int32_t arg = parse_expr();
    if (failed_) return -1;

    if (kind != NodeKind::kSignedPow) {
      if (cur_.kind != Token::kRParen) {
        fail(cur_.offset, "expected `)` after the argument of " + name, {")"});
        return -1;
      }
      advance();
      return push({kind, 0.0, arg, -1});
    }

    // signed_pow: either (u, beta) or the (beta) shorthand for u = x.
    if (cur_.kind == Token::kComma) {
      advance();
      const std::size_t beta_offset = cur_.offset;
      const std::size_t beta_begin = nodes_.size();
      std::int32_t beta_node = parse_expr();
      if (failed_) return -1;
      if (cur_.kind != Token::kRParen) {
        fail(cur_.offset, "expected `)` after signed_pow exponent", {")"});
        return -1;
      }
      advance();
      std::optional<double> beta = fold_constant(beta_begin, beta_node);
      if (!beta) {
        fail(beta_offset, "signed_pow exponent must be a constant expression",
             {"constant expression"});
        return -1;
      }
      nodes_.resize(beta_begin);  // drop the folded exponent subtree
      return push({NodeKind::kSignedPow, *beta, arg, -1});
    }
    if (cur_.kind != Token::kRParen) {
      fail(cur_.offset, "expected `,` or `)` in signed_pow", {",", ")"});
      return -1;
    }
    advance();
    // One argument: it is the exponent, the operand is the variable x.
    std::optional<double> beta = fold_constant(first_arg_begin, arg);
    if (!beta) {
      fail(first_arg_offset,
           "single-argument signed_pow takes a constant exponent", {"constant expression"});
      return -1;
    }
    nodes_.resize(first_arg_begin);
    std::int32_t var = make_variable("x", first_arg_offset);
    if (failed_) return -1;
    return push({NodeKind::kSignedPow, *beta, var, -1});
  }

  std::int32_t make_variable(const std::string& name, std::size_t offset) {
    if (!variable_.empty() && variable_ != name) {
      fail(offset, "expression mixes variables `" + variable_ + "` and `" + name + "`",
           {variable_});
      return -1;
    }
    variable_ = name;
    return push({NodeKind::kVariable, 0.0, -1, -1});
  }

  // Evaluates nodes_[begin..root] if that subtree has no variable reference.
  std::optional<double> fold_constant(std::size_t begin, std::int32_t root) {
    for (std::size_t i = begin; i < nodes_.size(); ++i) {
      if (nodes_[i].kind == NodeKind::kVariable) return std::nullopt;
    }
    std::vector<ExprNode> sub(nodes_.begin() + static_cast<std::ptrdiff_t>(begin), nodes_.end());
    for (ExprNode& n : sub) {
      if (n.a >= 0) n.a -= static_cast<std::int32_t>(begin);
      if (n.b >= 0) n.b -= static_cast<std::int32_t>(begin);
    }
    (void)root;
    Expr e = Expr::build(std::move(sub), "");
    EvalResult r = e.eval(0.0);
    if (!r.ok()) return std::nullopt;
    return r.value;
  }

  Lexer lex_;
  Token cur_;
  std::vector<ExprNode> nodes_;
  std::string variable_;
  bool failed_ = false;
  ParseError error_;
};

}  // namespace

ParseResult parse_expression(std::string_view source) {
  return Parser(source).run();
}

std::string ParseError::render(std::string_view source) const {
  std::string out = "parse error at offset " + std::to_string(offset) + ": " + message;
  if (!expected.empty()) {
    out += " (expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) out += ", ";
      out += expected[i];
    }
    out += ")";
  }
  out += "\n  ";
  out += source;
  out += "\n  ";
  for (std::size_t i = 0; i < offset && i < source.size() + 1; ++i) out += ' ';
  out += '^';
  return out;
}

double numeric_derivative(const Expr& e, double value, double scale) {
  const double h = scale * std::max(std::fabs(value), 1.0);
  const EvalResult hi = e.eval(value + h);
  if (!hi.ok()) throw EvalDomainError(e.describe_fault(hi), value + h);
  const EvalResult lo = e.eval(value - h);
  if (!lo.ok()) throw EvalDomainError(e.describe_fault(lo), value - h);
  return (hi.value - lo.value) / (2.0 * h);
}

FunctionSpec FunctionSpec::parse(std::string_view source, std::string_view variable) {
  ParseResult r = parse_expression(source);
  if (!r.ok()) throw std::invalid_argument(r.error().render(source));
  const Expr& e = r.expr();
  if (e.uses_variable() && e.variable() != variable) {
    throw std::invalid_argument("expression `" + std::string(source) + "` uses variable `" +
                                e.variable() + "`, expected `" + std::string(variable) + "`");
  }
  FunctionSpec out;
  out.ast = r.expr();
  out.source = std::string(source);
  out.variable = std::string(variable);
  return out;
}

}  // namespace rvdecay
