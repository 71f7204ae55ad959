// rvdecay — classify and verify long-time convergence rates of the scalar
// problem x'(t) = -f(x(t)) + g(t), x(0) = xi.
//
// Subcommands:
//   classify   predict the regime and rate constants (JSON report)
//   simulate   integrate the problem, emitting the checkpointed trajectory
//   verify     classify + integrate + compare predictions against measurements
//   corpus     run the built-in benchmark entries
//   indices    estimate power-law indices of f at 0 and g at infinity
//
// Configuration comes from a single JSON document (--config) with
// command-line flags taking precedence field by field.  All output is
// deterministic: identical inputs produce byte-identical reports.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rvdecay/classify.hpp"
#include "rvdecay/corpus.hpp"
#include "rvdecay/curves.hpp"
#include "rvdecay/flowmap.hpp"
#include "rvdecay/integrate.hpp"
#include "rvdecay/problem.hpp"
#include "rvdecay/regvar.hpp"

namespace {

using nlohmann::ordered_json;
using namespace rvdecay;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitOutOfScope = 2;
constexpr int kExitInconclusive = 3;

// Configuration / usage problems; always mapped to exit code 1.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

std::string num17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string num9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Run configuration: JSON file fields overridden by command-line flags.

struct RunConfig {
  std::string f_src;
  std::string g_src;
  double xi = 1.0;
  std::optional<double> beta;
  std::optional<double> theta;
  bool g_decreasing = false;
  bool monotone_f = false;

  double horizon = 1e6;
  double rtol = 1e-9;
  double atol = 1e-12;
  double quadrature = 1e-12;

  double t0 = 10.0;
  int doublings = 20;
  int points_per_decade = 32;
  long long max_steps = 0;  // 0 = environment override or built-in default

  std::string output_path;
  std::string format;  // per-subcommand default when empty
};

void reject_unknown(const ordered_json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (item.key() == a) known = true;
    }
    if (!known) {
      throw UsageError("config: unknown field \"" + where + item.key() + "\"");
    }
  }
}

double need_number(const ordered_json& v, const std::string& field) {
  if (!v.is_number()) {
    throw UsageError("config: field \"" + field + "\" must be a number");
  }
  return v.get<double>();
}

std::string need_string(const ordered_json& v, const std::string& field) {
  if (!v.is_string()) {
    throw UsageError("config: field \"" + field + "\" must be a string");
  }
  return v.get<std::string>();
}

bool need_bool(const ordered_json& v, const std::string& field) {
  if (!v.is_boolean()) {
    throw UsageError("config: field \"" + field + "\" must be a boolean");
  }
  return v.get<bool>();
}

void load_config(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot open \"" + path + "\"");
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    throw UsageError("config: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw UsageError("config: top level must be an object");
  reject_unknown(doc, "",
                 {"f", "g", "xi", "beta", "theta", "flags", "horizon",
                  "tolerances", "grids", "output"});

  if (doc.contains("f")) cfg.f_src = need_string(doc["f"], "f");
  if (doc.contains("g")) cfg.g_src = need_string(doc["g"], "g");
  if (doc.contains("xi")) cfg.xi = need_number(doc["xi"], "xi");
  if (doc.contains("beta") && !doc["beta"].is_null()) {
    cfg.beta = need_number(doc["beta"], "beta");
  }
  if (doc.contains("theta") && !doc["theta"].is_null()) {
    cfg.theta = need_number(doc["theta"], "theta");
  }
  if (doc.contains("flags")) {
    const auto& fl = doc["flags"];
    if (!fl.is_object()) throw UsageError("config: \"flags\" must be an object");
    reject_unknown(fl, "flags.",
                   {"g_asymptotically_decreasing", "monotone_envelope_assumed"});
    if (fl.contains("g_asymptotically_decreasing")) {
      cfg.g_decreasing = need_bool(fl["g_asymptotically_decreasing"],
                                   "flags.g_asymptotically_decreasing");
    }
    if (fl.contains("monotone_envelope_assumed")) {
      cfg.monotone_f = need_bool(fl["monotone_envelope_assumed"],
                                 "flags.monotone_envelope_assumed");
    }
  }
  if (doc.contains("horizon")) cfg.horizon = need_number(doc["horizon"], "horizon");
  if (doc.contains("tolerances")) {
    const auto& tl = doc["tolerances"];
    if (!tl.is_object()) {
      throw UsageError("config: \"tolerances\" must be an object");
    }
    reject_unknown(tl, "tolerances.", {"rtol", "atol", "quadrature"});
    if (tl.contains("rtol")) cfg.rtol = need_number(tl["rtol"], "tolerances.rtol");
    if (tl.contains("atol")) cfg.atol = need_number(tl["atol"], "tolerances.atol");
    if (tl.contains("quadrature")) {
      cfg.quadrature = need_number(tl["quadrature"], "tolerances.quadrature");
    }
  }
  if (doc.contains("grids")) {
    const auto& gr = doc["grids"];
    if (!gr.is_object()) throw UsageError("config: \"grids\" must be an object");
    reject_unknown(gr, "grids.", {"t0", "doublings", "points_per_decade"});
    if (gr.contains("t0")) cfg.t0 = need_number(gr["t0"], "grids.t0");
    if (gr.contains("doublings")) {
      cfg.doublings = static_cast<int>(need_number(gr["doublings"], "grids.doublings"));
    }
    if (gr.contains("points_per_decade")) {
      cfg.points_per_decade = static_cast<int>(
          need_number(gr["points_per_decade"], "grids.points_per_decade"));
    }
  }
  if (doc.contains("output")) {
    const auto& out = doc["output"];
    if (!out.is_object()) throw UsageError("config: \"output\" must be an object");
    reject_unknown(out, "output.", {"path", "format"});
    if (out.contains("path")) cfg.output_path = need_string(out["path"], "output.path");
    if (out.contains("format")) {
      cfg.format = need_string(out["format"], "output.format");
    }
  }
}

void check_config(const RunConfig& cfg) {
  if (!(cfg.rtol > 0)) throw UsageError("field \"rtol\" must be positive");
  if (!(cfg.atol > 0)) throw UsageError("field \"atol\" must be positive");
  if (!(cfg.quadrature > 0)) {
    throw UsageError("field \"quadrature\" must be positive");
  }
  if (!(cfg.t0 > 0)) throw UsageError("field \"t0\" must be positive");
  if (!(cfg.horizon > cfg.t0)) {
    throw UsageError("field \"horizon\" must exceed t0");
  }
  if (cfg.doublings < 4) throw UsageError("field \"doublings\" must be at least 4");
  if (cfg.points_per_decade < 1) {
    throw UsageError("field \"points_per_decade\" must be at least 1");
  }
  if (cfg.max_steps < 0) throw UsageError("field \"max_steps\" must be nonnegative");
}

FunctionSpec parse_fn(const std::string& src, const char* var,
                      const char* field) {
  if (src.empty()) {
    throw UsageError(std::string("field \"") + field +
                     "\" is required (expression in " + var + ")");
  }
  try {
    return FunctionSpec::parse(src, var);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("field \"") + field + "\": " + e.what());
  }
}

ProblemSpec make_problem(const RunConfig& cfg) {
  ProblemSpec p;
  p.f = parse_fn(cfg.f_src, "x", "f");
  p.g = parse_fn(cfg.g_src, "t", "g");
  p.xi = cfg.xi;
  p.beta_hint = cfg.beta;
  p.theta_hint = cfg.theta;
  p.flags.g_asymptotically_decreasing = cfg.g_decreasing;
  p.flags.monotone_envelope_assumed = cfg.monotone_f;
  return p;
}

ClassifyOptions classify_options(const RunConfig& cfg) {
  ClassifyOptions opts;
  opts.limit_grid.t0 = cfg.t0;
  opts.limit_grid.doublings = cfg.doublings;
  opts.flow_rel_tol = cfg.quadrature;
  return opts;
}

IntegrateOptions integrate_options(const RunConfig& cfg) {
  IntegrateOptions opts;
  opts.horizon = cfg.horizon;
  opts.rtol = cfg.rtol;
  opts.atol = cfg.atol;
  opts.checkpoints_per_decade = cfg.points_per_decade;
  opts.max_steps = cfg.max_steps;
  return opts;
}

// Writes to the configured path, or stdout when none is set.
void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.output_path.empty()) {
    std::fputs(text.c_str(), stdout);
    return;
  }
  std::ofstream out(cfg.output_path, std::ios::binary);
  if (!out) {
    throw UsageError("cannot open output file \"" + cfg.output_path + "\"");
  }
  out << text;
}

std::string pick_format(const RunConfig& cfg, const char* fallback,
                        std::initializer_list<const char*> allowed) {
  const std::string fmt = cfg.format.empty() ? fallback : cfg.format;
  for (const char* a : allowed) {
    if (fmt == a) return fmt;
  }
  std::string msg = "field \"format\" must be one of {";
  bool first = true;
  for (const char* a : allowed) {
    if (!first) msg += ", ";
    msg += a;
    first = false;
  }
  throw UsageError(msg + "}, got \"" + fmt + "\"");
}

// ---------------------------------------------------------------------------
// classify

std::string report_text(const RegimeReport& rep) {
  std::ostringstream os;
  os << "regime: " << regime_name(rep.regime)
     << (rep.reflected ? " (mirrored)" : "") << "\n";
  if (rep.beta_rapid) {
    os << "beta: rapid (f drops faster than every power at 0)\n";
  } else if (rep.beta_known) {
    os << "beta: " << num9(rep.beta) << " +/- " << num9(rep.beta_uncertainty)
       << "\n";
  }
  if (rep.theta_rapid) {
    os << "theta: rapid (g drops faster than every power)\n";
  } else if (rep.theta_known) {
    os << "theta: " << num9(rep.theta) << " +/- " << num9(rep.theta_uncertainty)
       << "\n";
  }
  if (rep.L_estimated) {
    switch (rep.L.verdict) {
      case LimitVerdict::kZero:
        os << "L: zero\n";
        break;
      case LimitVerdict::kFinite:
        os << "L: " << num9(rep.L.value) << " +/- " << num9(rep.L.uncertainty)
           << "\n";
        break;
      case LimitVerdict::kInfinite:
        os << "L: infinite\n";
        break;
      case LimitVerdict::kUndetermined:
        os << "L: undetermined\n";
        break;
    }
  }
  if (rep.has_lambda) os << "lambda_star: " << num9(rep.lambda) << "\n";
  if (!rep.predicted_rate.empty()) {
    os << "predicted rate: " << rep.predicted_rate << "\n";
  }
  if (rep.has_x_over_y) {
    os << "x/y limit: "
       << (rep.x_over_y_infinite ? std::string("infinite") : num9(rep.x_over_y))
       << "\n";
  }
  if (rep.has_solution_index) {
    os << "solution_rv_index: " << num9(rep.solution_index) << "\n";
  }
  switch (rep.g_integral.verdict) {
    case GIntegrability::kYes:
      os << "g integrable: yes (" << num9(rep.g_integral.value) << ")\n";
      break;
    case GIntegrability::kNo:
      os << "g integrable: no\n";
      break;
    case GIntegrability::kUnknown:
      os << "g integrable: unknown\n";
      break;
  }
  if (!rep.reject_reason.empty()) os << "rejected: " << rep.reject_reason << "\n";
  for (const std::string& n : rep.notes) os << "note: " << n << "\n";
  return os.str();
}

int run_classify(const RunConfig& cfg) {
  const std::string fmt = pick_format(cfg, "json", {"json", "text"});
  const ProblemSpec p = make_problem(cfg);
  const RegimeReport rep = classify(p, classify_options(cfg));
  if (fmt == "json") {
    emit(cfg, rep.to_json(2) + "\n");
  } else {
    emit(cfg, report_text(rep));
  }
  if (rep.regime == Regime::kRejected) {
    std::fprintf(stderr, "rejected: %s\n", rep.reject_reason.c_str());
  }
  return rep.exit_code();
}

// ---------------------------------------------------------------------------
// simulate

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// The clock column reads F(|x|): a mirrored state keeps its distance from
// the rest point, and F is only defined on the positive side.
std::string trajectory_csv(const Trajectory& traj, bool diagnostics,
                           const ProblemSpec& p, const FlowMap* fm) {
  std::string out = diagnostics ? "t,x,F_of_x,f_of_x,g_of_t\n" : "t,x\n";
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    out += num17(traj.t[i]);
    out += ',';
    out += num17(traj.x[i]);
    if (diagnostics) {
      out += ',';
      if (fm != nullptr && traj.x[i] != 0.0 && std::isfinite(traj.x[i])) {
        try {
          out += num17(fm->F(std::fabs(traj.x[i])));
        } catch (const FlowMapError&) {
        }
      }
      out += ',';
      if (const EvalResult fr = p.f.eval(traj.x[i]); fr.ok()) {
        out += num17(fr.value);
      }
      out += ',';
      if (!p.g.source.empty()) {
        if (const EvalResult gr = p.g.eval(traj.t[i]); gr.ok()) {
          out += num17(gr.value);
        }
      }
    }
    out += '\n';
  }
  return out;
}

ordered_json trajectory_json(const Trajectory& traj) {
  ordered_json j;
  j["t"] = traj.t;
  j["x"] = traj.x;
  j["verdict"] = verdict_name(traj.verdict);
  j["reached_horizon"] = traj.reached_horizon;
  j["stop_reason"] = traj.stop_reason.empty() ? ordered_json(nullptr)
                                              : ordered_json(traj.stop_reason);
  j["steps_accepted"] = traj.steps_accepted;
  j["steps_rejected"] = traj.steps_rejected;
  j["final_t"] = traj.final_t;
  j["final_x"] = traj.final_x;
  return j;
}

int run_simulate(const RunConfig& cfg, bool unperturbed, bool diagnostics) {
  const std::string fmt = pick_format(cfg, "csv", {"csv", "json"});

  ProblemSpec p;
  p.f = parse_fn(cfg.f_src, "x", "f");
  p.xi = cfg.xi;
  if (!cfg.g_src.empty()) p.g = parse_fn(cfg.g_src, "t", "g");
  p.flags.g_asymptotically_decreasing = cfg.g_decreasing;
  p.flags.monotone_envelope_assumed = cfg.monotone_f;

  Trajectory traj;
  std::optional<FlowMap> fm;  // for diagnostics and the unperturbed path

  if (unperturbed) {
    if (p.xi == 0.0 || !std::isfinite(p.xi)) {
      std::fprintf(stderr, "xi must be nonzero and finite\n");
      return kExitOutOfScope;
    }
    // A negative start runs through the mirror image of the flow.
    FunctionSpec eff = p.f;
    if (p.xi < 0.0) {
      Expr m = negate_reflect(p.f.ast);
      eff = FunctionSpec{m, m.to_string(), "x"};
    }
    try {
      fm.emplace(eff, cfg.quadrature);
      traj = unperturbed_trajectory(*fm, std::fabs(p.xi), integrate_options(cfg));
    } catch (const FlowMapError& e) {
      std::fprintf(stderr, "comparison clock unavailable: %s\n", e.what());
      return kExitOutOfScope;
    }
    if (p.xi < 0.0) {
      for (double& x : traj.x) x = -x;
      traj.final_x = -traj.final_x;
    }
  } else {
    if (cfg.g_src.empty()) {
      throw UsageError(
          "field \"g\" is required (expression in t); "
          "pass --unperturbed to run without a perturbation");
    }
    const ValidationResult v = validate_problem(p);
    if (v.g_identically_zero) {
      std::fprintf(stderr,
                   "%s\nhint: pass --unperturbed to integrate x' = -f(x).\n",
                   v.summary().c_str());
      return kExitOutOfScope;
    }
    if (!v.ok && !v.reflectable) {
      std::fprintf(stderr, "%s\n", v.summary().c_str());
      return kExitOutOfScope;
    }
    traj = integrate_problem(p, integrate_options(cfg));
    if (diagnostics && fmt == "csv") {
      try {
        const FunctionSpec eff =
            v.reflectable ? reflect_problem(p).f : p.f;
        fm.emplace(eff, cfg.quadrature);
      } catch (const FlowMapError&) {
        // Clock column stays empty.
      } catch (const std::invalid_argument&) {
      }
    }
  }

  if (fmt == "csv") {
    emit(cfg, trajectory_csv(traj, diagnostics, p, fm ? &*fm : nullptr));
  } else {
    emit(cfg, trajectory_json(traj).dump(2) + "\n");
  }

  if (!traj.reached_horizon) {
    std::fprintf(stderr, "stopped before the horizon: %s\n",
                 traj.stop_reason.c_str());
  }
  return traj.budget_exhausted ? kExitInconclusive : kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct Measurement {
  std::string name;
  bool has_values = true;
  double predicted = 0.0;
  double measured = 0.0;
  double tolerance = 0.0;  // absolute
  bool ok = false;
  std::string note;
};

Measurement measure(const std::string& name, double predicted,
                    const RateCurve& curve, double tolerance) {
  Measurement m;
  m.name = name;
  m.predicted = predicted;
  m.tolerance = tolerance;
  if (!curve.has_limit) {
    m.has_values = false;
    m.ok = false;
    m.note = "no measurable points";
    return m;
  }
  m.measured = curve.limit;
  m.ok = std::fabs(m.measured - m.predicted) <= tolerance;
  return m;
}

int run_verify(const RunConfig& cfg) {
  const std::string fmt = pick_format(cfg, "text", {"text", "json"});
  const ProblemSpec p = make_problem(cfg);
  const RegimeReport rep = classify(p, classify_options(cfg));
  if (rep.regime == Regime::kRejected) {
    if (fmt == "json") {
      ordered_json j;
      j["report"] = ordered_json::parse(rep.to_json(0));
      j["measurements"] = ordered_json::array();
      j["all_ok"] = false;
      emit(cfg, j.dump(2) + "\n");
    } else {
      emit(cfg, report_text(rep));
    }
    std::fprintf(stderr, "rejected: %s\n", rep.reject_reason.c_str());
    return rep.exit_code();
  }

  const Trajectory traj = integrate_problem(p, integrate_options(cfg));

  // Rate curves are read in the canonical (positive) orientation.
  ProblemSpec canon = rep.reflected ? reflect_problem(p) : p;
  Trajectory view = traj;
  if (rep.reflected) {
    for (double& x : view.x) x = -x;
  }
  const FlowMap fm(canon.f, cfg.quadrature);
  const RateCurve clock = clock_ratio_curve(view, fm);
  const RateCurve track = tracking_ratio_curve(view, canon);
  const RateCurve comp = comparison_ratio_curve(view, fm, canon.xi);

  std::vector<Measurement> rows;
  const bool tracking_predicted =
      rep.predicted_rate.find("f(x)/g(t)") != std::string::npos;
  switch (rep.regime) {
    case Regime::kPreserved:
      rows.push_back(measure("F(x)/t", 1.0, clock, 0.01));
      if (!rep.beta_rapid) rows.push_back(measure("x/y", rep.x_over_y, comp,
                                                  0.02 * rep.x_over_y));
      break;
    case Regime::kCritical: {
      // With rapidly dropping f the clock ratio approaches its limit only at
      // speed 1/log(t), so the tolerance scales with the horizon accordingly.
      double tol = 0.02 * rep.lambda;
      if (rep.beta_rapid) {
        tol = std::max(tol, 2.0 * rep.lambda / std::log(cfg.horizon));
      }
      Measurement clock_row = measure("F(x)/t", rep.lambda, clock, tol);
      if (rep.beta_rapid) {
        clock_row.note = "tolerance widened to 2*lambda/log(horizon): the "
                         "approach is logarithmically slow";
      }
      rows.push_back(std::move(clock_row));
      if (!rep.beta_rapid) {
        rows.push_back(measure("x/y", rep.x_over_y, comp, 0.02 * rep.x_over_y));
      } else {
        Measurement m;
        m.name = "x/y";
        m.has_values = false;
        m.ok = true;
        m.note = "skipped: with rapidly dropping f the ratio closes in on 1 "
                 "only at logarithmic speed";
        rows.push_back(m);
      }
      break;
    }
    case Regime::kDominated:
      rows.push_back(measure("F(x)/t", 0.0, clock, 0.05));
      if (tracking_predicted) {
        rows.push_back(measure("f(x)/g(t)", 1.0, track, 0.02));
      }
      break;
    case Regime::kRejected:
      break;
  }

  // The long-run verdict must not contradict the predicted regime.
  {
    Measurement m;
    m.name = "long-run behaviour";
    m.has_values = false;
    const bool contradicts = (rep.regime == Regime::kPreserved ||
                              rep.regime == Regime::kCritical) &&
                             traj.verdict == SolutionVerdict::kEscapes;
    m.ok = !contradicts;
    m.note = verdict_name(traj.verdict);
    rows.push_back(m);
  }

  bool all_ok = true;
  for (const Measurement& m : rows) all_ok = all_ok && m.ok;

  if (fmt == "json") {
    ordered_json j;
    j["report"] = ordered_json::parse(rep.to_json(0));
    ordered_json ms = ordered_json::array();
    for (const Measurement& m : rows) {
      ordered_json row;
      row["name"] = m.name;
      if (m.has_values) {
        row["predicted"] = m.predicted;
        row["measured"] = m.measured;
        row["tolerance"] = m.tolerance;
      }
      row["ok"] = m.ok;
      if (!m.note.empty()) row["note"] = m.note;
      ms.push_back(std::move(row));
    }
    j["measurements"] = std::move(ms);
    j["all_ok"] = all_ok;
    emit(cfg, j.dump(2) + "\n");
  } else {
    std::ostringstream os;
    os << report_text(rep);
    os << "\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-18s %-14s %-14s %-12s %s\n",
                  "functional", "predicted", "measured", "tolerance", "status");
    os << line;
    for (const Measurement& m : rows) {
      if (m.has_values) {
        std::snprintf(line, sizeof(line), "%-18s %-14s %-14s %-12s %s\n",
                      m.name.c_str(), num9(m.predicted).c_str(),
                      num9(m.measured).c_str(), num9(m.tolerance).c_str(),
                      m.ok ? "ok" : "FAIL");
        os << line;
        if (!m.note.empty()) os << "  note: " << m.note << "\n";
      } else {
        std::snprintf(line, sizeof(line), "%-18s %-42s %s\n", m.name.c_str(),
                      m.note.c_str(), m.ok ? "ok" : "FAIL");
        os << line;
      }
    }
    os << (all_ok ? "verified: all measurements within tolerance\n"
                  : "verification FAILED\n");
    emit(cfg, os.str());
  }
  return all_ok ? kExitOk : kExitInconclusive;
}

// ---------------------------------------------------------------------------
// corpus

int run_corpus_cmd(const RunConfig& cfg, const std::string& entry_name,
                   bool fast) {
  const std::string fmt = pick_format(cfg, "text", {"text", "json", "csv"});

  std::vector<const CorpusEntry*> selected;
  if (!entry_name.empty()) {
    const CorpusEntry* e = find_entry(entry_name);
    if (e == nullptr) {
      std::string names;
      for (const CorpusEntry& c : corpus()) {
        if (!names.empty()) names += ", ";
        names += c.name;
      }
      std::fprintf(stderr, "unknown entry \"%s\"; available entries: %s\n",
                   entry_name.c_str(), names.c_str());
      return kExitUsage;
    }
    selected.push_back(e);
  } else {
    for (const CorpusEntry& c : corpus()) selected.push_back(&c);
  }

  std::vector<EntryResult> results;
  results.reserve(selected.size());
  for (const CorpusEntry* e : selected) {
    results.push_back(run_entry(*e, /*with_integration=*/!fast));
  }

  std::size_t passed = 0;
  for (const EntryResult& r : results) passed += r.passed ? 1 : 0;

  if (fmt == "text") {
    std::ostringstream os;
    for (const EntryResult& r : results) {
      os << "== " << r.name << ": " << (r.passed ? "PASS" : "FAIL") << "\n";
      for (const std::string& c : r.checks) os << "   " << c << "\n";
    }
    os << "summary: " << passed << "/" << results.size() << " entries passed\n";
    emit(cfg, os.str());
  } else if (fmt == "json") {
    ordered_json arr = ordered_json::array();
    for (const EntryResult& r : results) {
      ordered_json j;
      j["name"] = r.name;
      j["passed"] = r.passed;
      j["checks"] = r.checks;
      j["residual"] = r.residual;
      j["max_traj_rel_error"] =
          r.integrated ? ordered_json(r.max_traj_rel_error) : ordered_json(nullptr);
      j["report"] = ordered_json::parse(r.report.to_json(0));
      arr.push_back(std::move(j));
    }
    emit(cfg, arr.dump(2) + "\n");
  } else {  // csv summary
    std::string out =
        "name,passed,regime,residual,max_traj_rel_error,first_failure\n";
    for (const EntryResult& r : results) {
      std::string first_failure;
      for (const std::string& c : r.checks) {
        if (c.rfind("FAIL: ", 0) == 0) {
          first_failure = c.substr(6);
          break;
        }
      }
      out += csv_field(r.name);
      out += ',';
      out += r.passed ? "true" : "false";
      out += ',';
      out += regime_name(r.report.regime);
      out += ',';
      out += num17(r.residual);
      out += ',';
      out += r.integrated ? num17(r.max_traj_rel_error) : std::string();
      out += ',';
      out += csv_field(first_failure);
      out += '\n';
    }
    emit(cfg, out);
  }
  return passed == results.size() ? kExitOk : kExitInconclusive;
}

// ---------------------------------------------------------------------------
// indices

const char* kind_name(VariationKind k) {
  switch (k) {
    case VariationKind::kRegular:
      return "regular";
    case VariationKind::kRapidPlus:
      return "rapid-plus";
    case VariationKind::kRapidMinus:
      return "rapid-minus";
    case VariationKind::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

ordered_json estimate_json(const VariationEstimate& e) {
  ordered_json j;
  j["kind"] = kind_name(e.kind);
  if (e.regular()) {
    j["index"] = e.index;
    j["uncertainty"] = e.uncertainty;
  } else {
    j["index"] = nullptr;
    j["uncertainty"] = nullptr;
  }
  j["samples"] = e.samples;
  j["truncated"] = e.truncated;
  j["note"] = e.note;
  return j;
}

int run_indices(const RunConfig& cfg) {
  const std::string fmt = pick_format(cfg, "json", {"json"});
  (void)fmt;
  if (cfg.f_src.empty() && cfg.g_src.empty()) {
    throw UsageError("indices needs \"f\" (examined at 0), \"g\" (examined at "
                     "infinity), or both");
  }
  ordered_json j;
  bool inconclusive = false;
  if (!cfg.f_src.empty()) {
    const FunctionSpec f = parse_fn(cfg.f_src, "x", "f");
    const VariationEstimate e = variation_index_at_zero(f);
    j["f_at_zero"] = estimate_json(e);
    inconclusive = inconclusive || e.kind == VariationKind::kInconclusive;
  }
  if (!cfg.g_src.empty()) {
    const FunctionSpec g = parse_fn(cfg.g_src, "t", "g");
    const VariationEstimate e = variation_index_at_infinity(g);
    j["g_at_infinity"] = estimate_json(e);
    inconclusive = inconclusive || e.kind == VariationKind::kInconclusive;
  }
  emit(cfg, j.dump(2) + "\n");
  return inconclusive ? kExitInconclusive : kExitOk;
}

// ---------------------------------------------------------------------------
// option plumbing

struct CommonOpts {
  std::string config_path, f, g, output, format, entry;
  double xi = 1.0, beta = 0.0, theta = 0.0;
  double horizon = 1e6, rtol = 1e-9, atol = 1e-12, quadrature = 1e-12, t0 = 10.0;
  int doublings = 20, ppd = 32;
  long long max_steps = 0;
  bool gdec = false, monof = false, unperturbed = false, diagnostics = false;
  bool all = false, fast = false;

  CLI::Option *o_config = nullptr, *o_f = nullptr, *o_g = nullptr,
              *o_xi = nullptr, *o_beta = nullptr, *o_theta = nullptr,
              *o_gdec = nullptr, *o_monof = nullptr, *o_horizon = nullptr,
              *o_rtol = nullptr, *o_atol = nullptr, *o_quad = nullptr,
              *o_t0 = nullptr, *o_doublings = nullptr, *o_ppd = nullptr,
              *o_max_steps = nullptr, *o_output = nullptr, *o_format = nullptr;
};

void add_problem_opts(CLI::App* sub, CommonOpts& o) {
  o.o_config = sub->add_option("--config", o.config_path,
                               "JSON configuration file; flags override it");
  o.o_f = sub->add_option("--f", o.f, "restoring force, expression in x");
  o.o_g = sub->add_option("--g", o.g, "perturbation, expression in t");
  o.o_xi = sub->add_option("--xi", o.xi, "initial value (default 1)");
  o.o_beta = sub->add_option("--beta", o.beta,
                             "known decay exponent of f at 0 (skips estimation)");
  o.o_theta = sub->add_option("--theta", o.theta,
                              "known decay exponent of g at infinity");
  o.o_gdec = sub->add_flag("--g-decreasing", o.gdec,
                           "assert that g is asymptotic to a decreasing function");
  o.o_monof = sub->add_flag("--monotone-f", o.monof,
                            "assert that f is monotone near 0");
  o.o_output = sub->add_option("--output", o.output, "write the report here");
  o.o_format = sub->add_option("--format", o.format, "output format");
}

void add_numeric_opts(CLI::App* sub, CommonOpts& o) {
  o.o_horizon = sub->add_option("--horizon", o.horizon,
                                "integration / verification horizon (default 1e6)");
  o.o_rtol = sub->add_option("--rtol", o.rtol,
                             "integrator relative tolerance (default 1e-9)");
  o.o_atol = sub->add_option("--atol", o.atol,
                             "integrator absolute tolerance (default 1e-12)");
  o.o_quad = sub->add_option("--quadrature", o.quadrature,
                             "clock quadrature tolerance (default 1e-12)");
  o.o_t0 = sub->add_option("--t0", o.t0,
                           "first time of the limit-estimation grid (default 10)");
  o.o_doublings = sub->add_option("--doublings", o.doublings,
                                  "doublings in the limit-estimation grid (default 20)");
  o.o_ppd = sub->add_option("--points-per-decade", o.ppd,
                            "trajectory checkpoints per decade (default 32)");
  o.o_max_steps = sub->add_option(
      "--max-steps", o.max_steps,
      "step budget; 0 = RVDECAY_MAX_STEPS env or built-in default");
}

RunConfig merge_config(const CommonOpts& o) {
  RunConfig cfg;
  if (o.o_config != nullptr && o.o_config->count() > 0) {
    load_config(o.config_path, cfg);
  }
  auto used = [](const CLI::Option* opt) {
    return opt != nullptr && opt->count() > 0;
  };
  if (used(o.o_f)) cfg.f_src = o.f;
  if (used(o.o_g)) cfg.g_src = o.g;
  if (used(o.o_xi)) cfg.xi = o.xi;
  if (used(o.o_beta)) cfg.beta = o.beta;
  if (used(o.o_theta)) cfg.theta = o.theta;
  if (used(o.o_gdec)) cfg.g_decreasing = o.gdec;
  if (used(o.o_monof)) cfg.monotone_f = o.monof;
  if (used(o.o_horizon)) cfg.horizon = o.horizon;
  if (used(o.o_rtol)) cfg.rtol = o.rtol;
  if (used(o.o_atol)) cfg.atol = o.atol;
  if (used(o.o_quad)) cfg.quadrature = o.quadrature;
  if (used(o.o_t0)) cfg.t0 = o.t0;
  if (used(o.o_doublings)) cfg.doublings = o.doublings;
  if (used(o.o_ppd)) cfg.points_per_decade = o.ppd;
  if (used(o.o_max_steps)) cfg.max_steps = o.max_steps;
  if (used(o.o_output)) cfg.output_path = o.output;
  if (used(o.o_format)) cfg.format = o.format;
  check_config(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "rvdecay: convergence-rate classification for x'(t) = -f(x(t)) + g(t)"};
  app.require_subcommand(1);

  auto classify_opts = std::make_unique<CommonOpts>();
  CLI::App* c_classify = app.add_subcommand(
      "classify", "predict the convergence regime and rate constants");
  add_problem_opts(c_classify, *classify_opts);
  add_numeric_opts(c_classify, *classify_opts);

  auto simulate_opts = std::make_unique<CommonOpts>();
  CLI::App* c_simulate = app.add_subcommand(
      "simulate", "integrate the problem and emit the trajectory");
  add_problem_opts(c_simulate, *simulate_opts);
  add_numeric_opts(c_simulate, *simulate_opts);
  c_simulate->add_flag("--unperturbed", simulate_opts->unperturbed,
                       "integrate x' = -f(x) through the comparison clock, "
                       "ignoring g");
  c_simulate->add_flag("--diagnostics", simulate_opts->diagnostics,
                       "add F_of_x, f_of_x, g_of_t columns to the CSV");

  auto verify_opts = std::make_unique<CommonOpts>();
  CLI::App* c_verify = app.add_subcommand(
      "verify", "classify, integrate, and compare prediction to measurement");
  add_problem_opts(c_verify, *verify_opts);
  add_numeric_opts(c_verify, *verify_opts);

  auto corpus_opts = std::make_unique<CommonOpts>();
  CLI::App* c_corpus =
      app.add_subcommand("corpus", "run the built-in benchmark entries");
  c_corpus->add_option("--entry", corpus_opts->entry, "run a single entry");
  c_corpus->add_flag("--all", corpus_opts->all,
                     "run every entry (the default when --entry is absent)");
  c_corpus->add_flag("--fast", corpus_opts->fast,
                     "skip numerical integration, keep closed-form and "
                     "classifier checks");
  corpus_opts->o_output =
      c_corpus->add_option("--output", corpus_opts->output, "write the report here");
  corpus_opts->o_format = c_corpus->add_option(
      "--format", corpus_opts->format, "output format: text, json, or csv");

  auto indices_opts = std::make_unique<CommonOpts>();
  CLI::App* c_indices = app.add_subcommand(
      "indices", "estimate power-law indices: f at 0, g at infinity");
  add_problem_opts(c_indices, *indices_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (c_classify->parsed()) return run_classify(merge_config(*classify_opts));
    if (c_simulate->parsed()) {
      return run_simulate(merge_config(*simulate_opts),
                          simulate_opts->unperturbed,
                          simulate_opts->diagnostics);
    }
    if (c_verify->parsed()) return run_verify(merge_config(*verify_opts));
    if (c_corpus->parsed()) {
      if (!corpus_opts->entry.empty() && corpus_opts->all) {
        throw UsageError("--entry and --all are mutually exclusive");
      }
      return run_corpus_cmd(merge_config(*corpus_opts), corpus_opts->entry,
                            corpus_opts->fast);
    }
    if (c_indices->parsed()) return run_indices(merge_config(*indices_opts));
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
