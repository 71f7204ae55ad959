#include "rvdecay/problem.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace rvdecay {

namespace {

// Pointer tree used only during the reflection rewrite; the public Expr
// stays flat.
struct TNode {
  NodeKind kind;
  double value = 0.0;
  std::unique_ptr<TNode> a, b;
};
using TPtr = std::unique_ptr<TNode>;

TPtr make(NodeKind k, TPtr a = nullptr, TPtr b = nullptr, double value = 0.0) {
  auto n = std::make_unique<TNode>();
  n->kind = k;
  n->value = value;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

bool is_neg(const TPtr& p) { return p && p->kind == NodeKind::kNeg; }

TPtr strip_neg(TPtr p) { return std::move(p->a); }

// Smart constructors folding negation outward/away so that reflecting an
// odd expression twice (or once, when it is odd) returns the original shape.
TPtr make_neg(TPtr u) {
  if (is_neg(u)) return strip_neg(std::move(u));
  return make(NodeKind::kNeg, std::move(u));
}

TPtr make_binary(NodeKind k, TPtr a, TPtr b) {
  switch (k) {
    case NodeKind::kMul:
    case NodeKind::kDiv: {
      bool neg = false;
      if (is_neg(a)) {
        neg = !neg;
        a = strip_neg(std::move(a));
      }
      if (is_neg(b)) {
        neg = !neg;
        b = strip_neg(std::move(b));
      }
      TPtr n = make(k, std::move(a), std::move(b));
      return neg ? make_neg(std::move(n)) : std::move(n);
    }
    case NodeKind::kAdd:
      if (is_neg(a) && is_neg(b)) {
        return make_neg(make(NodeKind::kAdd, strip_neg(std::move(a)),
                             strip_neg(std::move(b))));
      }
      return make(k, std::move(a), std::move(b));
    case NodeKind::kSub:
      // (-a) - (-b) = b - a
      if (is_neg(a) && is_neg(b)) {
        return make(NodeKind::kSub, strip_neg(std::move(b)),
                    strip_neg(std::move(a)));
      }
      return make(k, std::move(a), std::move(b));
    default:
      return make(k, std::move(a), std::move(b));
  }
}

TPtr make_unary(NodeKind k, TPtr u, double value) {
  switch (k) {
    case NodeKind::kAbs:
      if (is_neg(u)) u = strip_neg(std::move(u));
      return make(k, std::move(u));
    case NodeKind::kSgn:
      if (is_neg(u)) return make_neg(make(k, strip_neg(std::move(u))));
      return make(k, std::move(u));
    case NodeKind::kSignedPow:
      if (is_neg(u)) {
        return make_neg(make(k, strip_neg(std::move(u)), nullptr, value));
      }
      return make(k, std::move(u), nullptr, value);
    case NodeKind::kNeg:
      return make_neg(std::move(u));
    default:
      return make(k, std::move(u), nullptr, value);
  }
}

// Rebuilds the subtree rooted at i, replacing the variable by its negation
// when negate_var is set, with the smart constructors applied throughout.
TPtr rebuild(const std::vector<ExprNode>& nodes, std::int32_t i, bool negate_var) {
  const ExprNode& n = nodes[static_cast<std::size_t>(i)];
  switch (n.kind) {
    case NodeKind::kConstant:
      return make(n.kind, nullptr, nullptr, n.value);
    case NodeKind::kVariable: {
      TPtr v = make(n.kind);
      return negate_var ? make_neg(std::move(v)) : std::move(v);
    }
    case NodeKind::kAdd:
    case NodeKind::kSub:
    case NodeKind::kMul:
    case NodeKind::kDiv:
    case NodeKind::kPow:
      return make_binary(n.kind, rebuild(nodes, n.a, negate_var),
                         rebuild(nodes, n.b, negate_var));
    default:
      return make_unary(n.kind, rebuild(nodes, n.a, negate_var), n.value);
  }
}

void flatten(const TPtr& p, std::vector<ExprNode>& out) {
  ExprNode n;
  n.kind = p->kind;
  n.value = p->value;
  if (p->a) {
    flatten(p->a, out);
    n.a = static_cast<std::int32_t>(out.size()) - 1;
  }
  if (p->b) {
    flatten(p->b, out);
    n.b = static_cast<std::int32_t>(out.size()) - 1;
  }
  out.push_back(n);
}

Expr to_expr(const TPtr& root, const std::string& variable) {
  std::vector<ExprNode> nodes;
  flatten(root, nodes);
  return Expr::build(std::move(nodes), variable);
}

FunctionSpec respec(Expr ast, const std::string& variable) {
  FunctionSpec out;
  out.source = ast.to_string();
  out.ast = std::move(ast);
  out.variable = variable;
  return out;
}

}  // namespace

Expr negate_reflect(const Expr& e) {
  if (e.empty()) return e;
  TPtr t = make_neg(rebuild(e.nodes(), e.root(), true));
  return to_expr(t, e.variable());
}

Expr negate(const Expr& e) {
  if (e.empty()) return e;
  TPtr t = make_neg(rebuild(e.nodes(), e.root(), false));
  return to_expr(t, e.variable());
}

namespace {

enum class SampledSign { kAllPositive, kAllNegative, kAllZero, kMixed };

SampledSign sample_sign(const FunctionSpec& h, const std::vector<double>& pts,
                        std::string* fault_note) {
  bool pos = false, neg = false;
  for (double s : pts) {
    const EvalResult r = h.eval(s);
    if (!r.ok()) {
      if (fault_note && fault_note->empty()) {
        *fault_note = h.ast.describe_fault(r);
      }
      continue;  // domain holes don't decide signs
    }
    if (r.value > 0.0) pos = true;
    else if (r.value < 0.0) neg = true;
  }
  if (pos && !neg) return SampledSign::kAllPositive;
  if (neg && !pos) return SampledSign::kAllNegative;
  if (!pos && !neg) return SampledSign::kAllZero;
  return SampledSign::kMixed;
}

std::vector<double> geometric_points(double lo, double hi, int per_decade) {
  std::vector<double> out;
  const double l0 = std::log10(lo), l1 = std::log10(hi);
  const int n = static_cast<int>(std::lround((l1 - l0) * per_decade)) + 1;
  for (int k = 0; k < n; ++k) {
    out.push_back(std::pow(10.0, l0 + (l1 - l0) * k / (n - 1)));
  }
  return out;
}

}  // namespace

std::string ValidationResult::summary() const {
  if (issues.empty()) return "ok";
  std::string s;
  for (std::size_t i = 0; i < issues.size(); ++i) {
    if (i) s += "; ";
    s += issues[i];
  }
  return s;
}

ValidationResult validate_problem(const ProblemSpec& p) {
  ValidationResult out;

  if (p.xi == 0.0 || !std::isfinite(p.xi)) {
    out.issues.push_back("xi must be nonzero and finite");
    return out;
  }

  // Sign survey of g on [~0, 1e8].
  std::vector<double> tpts = geometric_points(1e-3, 1e8, 4);
  tpts.insert(tpts.begin(), 0.0);
  std::string g_fault;
  const SampledSign gs = sample_sign(p.g, tpts, &g_fault);
  if (gs == SampledSign::kAllZero) {
    out.g_identically_zero = true;
    out.issues.push_back(
        "g vanishes at every sampled time; an identically zero perturbation "
        "is the unperturbed problem (use the unperturbed mode)");
    return out;
  }
  if (gs == SampledSign::kMixed) {
    out.issues.push_back(
        "g must be positive (or fully reflectable); it changes sign on the "
        "sampled range");
    return out;
  }

  const bool negative_side = (p.xi < 0.0) && (gs == SampledSign::kAllNegative);
  if (negative_side) {
    // Canonical checks apply to the reflected problem; report reflectability.
    out.reflectable = true;
    return out;
  }

  if (p.xi < 0.0) {
    out.issues.push_back("xi < 0 requires g < 0 throughout to mirror the problem");
    return out;
  }
  if (gs == SampledSign::kAllNegative) {
    out.issues.push_back(
        "g must be positive (or fully reflectable); got g < 0 with xi > 0");
    return out;
  }
  if (!g_fault.empty()) {
    out.issues.push_back("g faulted while sampling: " + g_fault);
    return out;
  }

  // f must restore: f(0) = 0 (exactly or in the sampled limit), f > 0 on (0, 1].
  const EvalResult f0 = p.f.eval(0.0);
  if (f0.ok()) {
    if (f0.value != 0.0) {
      out.issues.push_back("f(0) must be 0, got " + std::to_string(f0.value));
      return out;
    }
  } else {
    // Accept a removable singularity at 0 if f tends to 0 from the right.
    const EvalResult near = p.f.eval(1e-10);
    const EvalResult nearer = p.f.eval(1e-12);
    const bool vanishes = near.ok() && nearer.ok() &&
                          std::fabs(nearer.value) <= std::fabs(near.value) &&
                          std::fabs(near.value) < 1e-6;
    if (!vanishes) {
      out.issues.push_back("f(0) neither evaluates to 0 nor vanishes in the limit (" +
                           p.f.ast.describe_fault(f0) + ")");
      return out;
    }
  }
  // f > 0 on (0, 1].  Steeply flattening f legitimately underflows to 0 near
  // the origin, so zeros below 1e-2 are tolerated; any strictly negative
  // sample, or a non-positive sample on [1e-2, 1], is a real violation.
  std::string f_fault;
  bool f_ok = true;
  for (double x : geometric_points(1e-8, 1.0, 4)) {
    const EvalResult r = p.f.eval(x);
    if (!r.ok()) {
      if (f_fault.empty()) f_fault = p.f.ast.describe_fault(r);
      continue;
    }
    if (r.value < 0.0 || (r.value == 0.0 && x >= 1e-2)) f_ok = false;
  }
  if (!f_ok) {
    out.issues.push_back("f must be positive on (0, 1]" +
                         (f_fault.empty() ? "" : " (" + f_fault + ")"));
    return out;
  }

  out.ok = true;
  return out;
}

ProblemSpec reflect_problem(const ProblemSpec& p) {
  if (!(p.xi < 0.0)) {
    throw std::invalid_argument(
        "reflection applies to xi < 0 with g < 0; this problem is already in "
        "canonical orientation");
  }
  const SampledSign gs = sample_sign(p.g, geometric_points(1e-3, 1e8, 4), nullptr);
  if (gs != SampledSign::kAllNegative) {
    throw std::invalid_argument(
        "reflection applies only when g < 0 throughout the sampled range");
  }
  ProblemSpec out = p;
  out.f = respec(negate_reflect(p.f.ast), p.f.variable);
  out.g = respec(negate(p.g.ast), p.g.variable);
  out.xi = -p.xi;
  return out;
}

}  // namespace rvdecay
