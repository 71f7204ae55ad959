#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "rvdecay/corpus.hpp"
#include "rvdecay/curves.hpp"
#include "rvdecay/flowmap.hpp"
#include "rvdecay/integrate.hpp"
#include "rvdecay/problem.hpp"

using namespace rvdecay;

namespace {

FunctionSpec fx(const std::string& src) { return FunctionSpec::parse(src, "x"); }
FunctionSpec gt(const std::string& src) { return FunctionSpec::parse(src, "t"); }

bool all_ok(const EntryResult& r) {
  for (const std::string& c : r.checks) {
    if (c.rfind("ok: ", 0) != 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("the built-in table is stable and well formed") {
  const auto& table = corpus();
  REQUIRE(table.size() == 11);
  const std::vector<std::string> names = {
      "examp.g0",        "examp.Lgt0",    "examp.Lgt0frapid",
      "examp.Linfty",    "examp.iterlog", "beta1-example",
      "escape-example",  "examp.gneg",    "reflect.critical",
      "reflect.preserved", "reflect.dominated"};
  for (std::size_t i = 0; i < table.size(); ++i) {
    CAPTURE(table[i].name);
    CHECK(table[i].name == names[i]);
    CHECK(table[i].has_closed_form());
    CHECK_NOTHROW(table[i].problem());
    CHECK(table[i].horizon > 0);
    CHECK(!table[i].description.empty());
  }

  CHECK(find_entry("examp.Lgt0") != nullptr);
  CHECK(find_entry("examp.Lgt0")->xi == 1.0);
  CHECK(find_entry("no-such-entry") == nullptr);
}

TEST_CASE("the residual check accepts true solutions and flags wrong ones") {
  const FunctionSpec f = fx("x^2");
  const FunctionSpec g = gt("2*(2+t)^-2");
  std::vector<double> times;
  for (double t = 0.0; t <= 100.0; t += 7.0) times.push_back(t);

  const double good = closed_form_residual(f, g, gt("2*(2+t)^-1"), times);
  CHECK(good <= 1e-8);

  const double bad = closed_form_residual(f, g, gt("(1+t)^-1"), times);
  CHECK(bad > 1e-2);
}

TEST_CASE("run_entry on the quadratic critical benchmark") {
  const CorpusEntry* e = find_entry("examp.Lgt0");
  REQUIRE(e != nullptr);
  const EntryResult r = run_entry(*e);
  CAPTURE(r.checks);
  CHECK(r.passed);
  CHECK(all_ok(r));
  CHECK(r.integrated);
  CHECK(r.residual <= 1e-5);
  CHECK(r.max_traj_rel_error <= 1e-6);
  CHECK(r.report.regime == Regime::kCritical);
  REQUIRE(r.report.has_lambda);
  CHECK(r.report.lambda == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.traj.reached_horizon);
  CHECK(r.traj.verdict == SolutionVerdict::kConvergesToZero);
}

TEST_CASE("run_entry on the out-of-scope exponent entry skips integration") {
  const CorpusEntry* e = find_entry("beta1-example");
  REQUIRE(e != nullptr);
  REQUIRE(e->closed_form_only);
  const EntryResult r = run_entry(*e);
  CAPTURE(r.checks);
  CHECK(r.passed);
  CHECK(!r.integrated);
  CHECK(r.report.regime == Regime::kRejected);
  CHECK(r.report.exit_code() == 2);
  CHECK(r.residual <= 1e-5);
}

TEST_CASE("fast mode runs the whole table without integrating") {
  const auto results = run_corpus(/*with_integration=*/false);
  REQUIRE(results.size() == corpus().size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    CAPTURE(results[i].name);
    CAPTURE(results[i].checks);
    CHECK(results[i].name == corpus()[i].name);
    CHECK(results[i].passed);
    CHECK(!results[i].integrated);
  }
}

TEST_CASE("clock and comparison curves on the quadratic critical benchmark") {
  const CorpusEntry* e = find_entry("examp.Lgt0");
  REQUIRE(e != nullptr);
  const ProblemSpec p = e->problem();
  IntegrateOptions opts;
  opts.horizon = 1e6;
  const Trajectory traj = integrate_problem(p, opts);
  REQUIRE(traj.reached_horizon);
  const FlowMap fm(p.f);

  // F(x)/t is exactly 1/2 along this closed form, at every time.
  const RateCurve clock = clock_ratio_curve(traj, fm);
  REQUIRE(!clock.value.empty());
  CHECK(clock.t.front() > 0.0);  // t = 0 has no ratio and is skipped
  for (double v : clock.value) CHECK(std::fabs(v - 0.5) <= 1e-5);
  REQUIRE(clock.has_limit);
  CHECK(clock.limit == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(clock.uncertainty <= 1e-6);
  CHECK(clock.at_time(1e4) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(clock.final_value() == doctest::Approx(0.5).epsilon(1e-6));

  // x(t)/y(t) tends to lambda^{-1/(beta-1)} = 2.
  const RateCurve comp = comparison_ratio_curve(traj, fm, p.xi);
  REQUIRE(comp.has_limit);
  CHECK(comp.limit == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(comp.final_value() == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(comp.value.front() < comp.value.back());  // climbs from 1 toward 2
}

TEST_CASE("tracking curve on the dominated benchmark") {
  const CorpusEntry* e = find_entry("examp.Linfty");
  REQUIRE(e != nullptr);
  const ProblemSpec p = e->problem();
  IntegrateOptions opts;
  opts.horizon = 1e8;
  const Trajectory traj = integrate_problem(p, opts);
  REQUIRE(traj.reached_horizon);

  const RateCurve track = tracking_ratio_curve(traj, p);
  REQUIRE(track.has_limit);
  // Closed form: f(x)/g = 1/(1 - 0.5 (1+t)^{-1/2}), so 1.0050 at t = 1e4.
  CHECK(track.at_time(1e4) == doctest::Approx(1.0050251).epsilon(1e-3));
  CHECK(std::fabs(track.limit - 1.0) <= 0.01);

  const FlowMap fm(p.f);
  const RateCurve clock = clock_ratio_curve(traj, fm);
  REQUIRE(clock.has_limit);
  CHECK(std::fabs(clock.limit) <= 0.01);  // clock collapses: F(x)/t -> 0
}

TEST_CASE("curves skip points they cannot evaluate and report it") {
  Trajectory traj;
  traj.t = {0.0, 1.0, 2.0, 3.0};
  traj.x = {1.0, 0.5, -0.25, 0.125};  // one sign-violating point by hand
  const FlowMap fm(fx("x^2"));

  const RateCurve clock = clock_ratio_curve(traj, fm);
  REQUIRE(clock.value.size() == 2);  // t=0 dropped silently, x<0 skipped
  CHECK(clock.t == std::vector<double>{1.0, 3.0});
  CHECK(clock.value[0] == doctest::Approx(1.0));          // F(0.5)/1
  CHECK(clock.value[1] == doctest::Approx(7.0 / 3.0));    // F(0.125)/3
  CHECK(clock.note.find("skipped") != std::string::npos);
  REQUIRE(clock.has_limit);
  CHECK(clock.limit == doctest::Approx(7.0 / 3.0));       // last value, n = 2
  CHECK(clock.uncertainty == doctest::Approx(7.0 / 3.0 - 1.0));

  // A perturbation that faults at one sample is skipped there as well.
  ProblemSpec p;
  p.f = fx("x^2");
  p.g = gt("1/(t-1)");
  const RateCurve track = tracking_ratio_curve(traj, p);
  CHECK(track.value.size() == 2);  // t=1 faults, t=0 has g<0; t=2,3 survive
  CHECK(track.note.find("skipped") != std::string::npos);

  const RateCurve empty = clock_ratio_curve(Trajectory{}, fm);
  CHECK(!empty.has_limit);
  CHECK_THROWS_AS(empty.at_time(1.0), std::out_of_range);
  CHECK_THROWS_AS(empty.final_value(), std::out_of_range);
}

TEST_CASE("explicit reflection classifies the same as the automatic mirror") {
  const CorpusEntry* e = find_entry("reflect.critical");
  REQUIRE(e != nullptr);
  const ProblemSpec original = e->problem();
  const ProblemSpec mirrored = reflect_problem(original);

  const RegimeReport a = classify(original);
  const RegimeReport b = classify(mirrored);
  CHECK(a.regime == b.regime);
  CHECK(a.reflected);
  CHECK(!b.reflected);
  REQUIRE(a.has_lambda);
  REQUIRE(b.has_lambda);
  CHECK(a.lambda == doctest::Approx(b.lambda).epsilon(1e-12));
  CHECK(a.solution_index == doctest::Approx(b.solution_index).epsilon(1e-12));
}
