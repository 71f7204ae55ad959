#pragma once

// Built-in benchmark problems with known behaviour, used to exercise the
// classifier and the integrator end to end.  Most entries carry an exact
// closed-form solution; for those, run_entry checks three independent facts:
//
//   1. the closed form really solves x' = -f(x) + g  (symbolic-free residual
//      check along a geometric time grid, via a central-difference x'),
//   2. the classifier lands in the expected regime with the expected rate
//      constants, and
//   3. the numerical trajectory agrees with the closed form to the entry's
//      stated tolerance over the whole checkpoint grid.
//
// Entries without a closed form (or flagged closed_form_only) skip the parts
// that do not apply.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rvdecay/classify.hpp"
#include "rvdecay/integrate.hpp"
#include "rvdecay/problem.hpp"

namespace rvdecay {

struct CorpusEntry {
  std::string name;
  std::string description;
  std::string f_src;  // expression in x
  std::string g_src;  // expression in t
  double xi = 1.0;
  std::optional<double> beta_hint;
  std::optional<double> theta_hint;
  bool g_asymptotically_decreasing = false;
  std::string closed_form;  // exact solution, expression in t; empty if none
  double horizon = 1e6;
  bool closed_form_only = false;  // validate the pair but skip integration

  // What the classifier is expected to report.
  Regime expected_regime = Regime::kPreserved;
  bool expect_reflected = false;
  std::string reject_contains;  // substring the refusal reason must carry
  std::optional<double> expected_lambda;
  double lambda_tol = 1e-6;
  std::optional<double> expected_L_lo, expected_L_hi;
  std::optional<double> expected_theta_lo, expected_theta_hi;

  // What the integrator is expected to do.
  std::optional<SolutionVerdict> expected_verdict;
  double traj_rtol = 1e-6;  // trajectory-vs-closed-form relative tolerance

  bool has_closed_form() const { return !closed_form.empty(); }
  // Parses the sources into a runnable problem (throws std::invalid_argument
  // on a malformed entry).
  ProblemSpec problem() const;
};

// The built-in table, in stable order.
const std::vector<CorpusEntry>& corpus();
// nullptr when no entry has that name.
const CorpusEntry* find_entry(std::string_view name);

// Largest relative defect |x'(t) + f(x(t)) - g(t)| / max(|f|, |g|) of a
// candidate solution over the given times; x' by central difference.
double closed_form_residual(const FunctionSpec& f, const FunctionSpec& g,
                            const FunctionSpec& closed,
                            const std::vector<double>& times);

struct EntryResult {
  std::string name;
  bool passed = true;
  std::vector<std::string> checks;  // "ok: ..." / "FAIL: ..." lines
  RegimeReport report;
  bool integrated = false;
  Trajectory traj;                  // populated when integrated
  double residual = 0.0;            // closed-form defect, when checked
  double max_traj_rel_error = 0.0;  // trajectory vs closed form, when checked
};

// Runs every check that applies to the entry.  with_integration = false
// restricts to the closed-form and classifier checks (fast mode).
EntryResult run_entry(const CorpusEntry& e, bool with_integration = true);
std::vector<EntryResult> run_corpus(bool with_integration = true);

}  // namespace rvdecay
