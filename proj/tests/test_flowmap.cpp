#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rvdecay/flowmap.hpp"
#include "rvdecay/quadrature.hpp"

#include <cmath>

using namespace rvdecay;

TEST_CASE("base rule nodes are genuine Gauss-Legendre points") {
  const GaussLegendre& gl = GaussLegendre::standard();
  REQUIRE(gl.nodes().size() == 10);
  double wsum = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    wsum += gl.weights()[i];
    CHECK(gl.nodes()[i] == doctest::Approx(-gl.nodes()[9 - i]).epsilon(1e-14));
    CHECK(gl.weights()[i] == doctest::Approx(gl.weights()[9 - i]).epsilon(1e-14));
  }
  CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
  // Largest abscissa of the 10-point rule.
  CHECK(gl.nodes()[9] == doctest::Approx(0.9739065285171717).epsilon(1e-12));
}

TEST_CASE("ten points integrate degree 19 exactly, degree 20 not quite") {
  const GaussLegendre& gl = GaussLegendre::standard();
  auto p18 = [](double x) { return std::pow(x, 18); };
  CHECK(gl.panel(p18, -1.0, 1.0) == doctest::Approx(2.0 / 19.0).epsilon(1e-13));
  auto p19 = [](double x) { return std::pow(x, 19); };
  CHECK(std::fabs(gl.panel(p19, -1.0, 1.0)) < 1e-15);
  auto p20 = [](double x) { return std::pow(x, 20); };
  CHECK(std::fabs(gl.panel(p20, -1.0, 1.0) - 2.0 / 21.0) > 1e-8);
}

TEST_CASE("adaptive refinement handles steep and reversed integrands") {
  auto inv = [](double x) { return 1.0 / x; };
  QuadratureResult q = integrate_adaptive(inv, 1e-6, 1.0, 1e-12);
  CHECK(q.converged);
  CHECK(q.value == doctest::Approx(6.0 * std::log(10.0)).epsilon(1e-10));

  auto root = [](double x) { return std::sqrt(x); };
  CHECK(integrate_adaptive(root, 0.0, 1.0).value ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-9));

  CHECK(integrate_adaptive(root, 1.0, 0.0).value ==
        doctest::Approx(-2.0 / 3.0).epsilon(1e-9));

  auto osc = [](double x) { return std::sin(x); };
  CHECK(integrate_adaptive(osc, 0.0, std::acos(-1.0)).value ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("a non-integrable singularity is flagged, not silently accepted") {
  auto inv = [](double x) { return 1.0 / x; };
  QuadratureResult q = integrate_adaptive(inv, 0.0, 1.0, 1e-12, 0.0, 12);
  CHECK(!q.converged);
}

TEST_CASE("clock for f(x) = x^2 matches 1/x - 1") {
  FlowMap fm(FunctionSpec::parse("x^2", "x"));
  CHECK(fm.F(1.0) == 0.0);
  CHECK(fm.F(0.25) == doctest::Approx(3.0).epsilon(1e-11));
  CHECK(fm.F(0.5) == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(fm.F(1e-5) == doctest::Approx(1e5 - 1.0).epsilon(1e-11));
  CHECK(fm.F(2.0) == doctest::Approx(-0.5).epsilon(1e-11));
  CHECK(fm.F(10.0) == doctest::Approx(-0.9).epsilon(1e-11));

  CHECK(fm.invert_F(0.0) == 1.0);
  CHECK(fm.invert_F(3.0) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(fm.invert_F(1e6) == doctest::Approx(1.0 / 1000001.0).epsilon(1e-9));
  CHECK(fm.invert_F(-0.5) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(fm.invert_F(-0.9) == doctest::Approx(10.0).epsilon(1e-10));
  // F never falls below -1 on (1, infinity), so -1 has no preimage.
  CHECK_THROWS_AS(fm.invert_F(-1.0), FlowMapError);

  CHECK(fm.comparison_scale(99.0) == doctest::Approx(1e-4).epsilon(1e-9));
}

TEST_CASE("unperturbed trajectories follow the closed form for f(x) = x^2") {
  FlowMap fm(FunctionSpec::parse("x^2", "x"));
  CHECK(fm.unperturbed_solution(1.0, 0.0) == 1.0);  // exact at t = 0
  CHECK(fm.unperturbed_solution(1.0, 10.0) == doctest::Approx(1.0 / 11.0).epsilon(1e-10));
  CHECK(fm.unperturbed_solution(0.5, 8.0) == doctest::Approx(0.1).epsilon(1e-10));
  // Starting above 1 the trajectory descends through 1.
  CHECK(fm.unperturbed_solution(2.0, 0.25) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
  CHECK(fm.unperturbed_solution(2.0, 9.5) == doctest::Approx(0.1).epsilon(1e-10));
  CHECK_THROWS_AS(fm.unperturbed_solution(-1.0, 1.0), FlowMapError);
}

TEST_CASE("deep ladder stays accurate: f(x) = 2x has F^{-1}(y) = exp(-2y)") {
  FlowMap fm(FunctionSpec::parse("2*x", "x"));
  CHECK(fm.invert_F(3.0) == doctest::Approx(std::exp(-6.0)).epsilon(1e-9));
  const double deep = fm.invert_F(300.0);
  CHECK(deep == doctest::Approx(std::exp(-600.0)).epsilon(1e-6));
}

TEST_CASE("rapidly flattening f still inverts") {
  // f(x) = exp(-1/x) for x > 0; the clock grows roughly like exp(1/x) x^2.
  FlowMap fm(FunctionSpec::parse("sgn(x)*exp(-1/abs(x))", "x"));
  const double x6 = fm.invert_F(1e6);
  CHECK(x6 == doctest::Approx(0.050870773865001).epsilon(1e-8));
  CHECK(fm.F(x6) == doctest::Approx(1e6).epsilon(1e-9));
}

TEST_CASE("bounded clock reports that the inverse does not exist") {
  // f(x) = sqrt(x): F(x) = 2(1 - sqrt(x)) <= 2, so F^{-1}(2.5) is undefined.
  FlowMap fm(FunctionSpec::parse("sqrt(x)", "x"));
  CHECK(fm.invert_F(1.5) == doctest::Approx(0.0625).epsilon(1e-10));
  CHECK_THROWS_AS(fm.invert_F(2.5), FlowMapError);
  try {
    fm.invert_F(2.5);
  } catch (const FlowMapError& e) {
    CHECK(std::string(e.what()).find("does not exist") != std::string::npos);
  }
}

TEST_CASE("f dipping non-positive is an error, not a garbage clock") {
  FlowMap fm(FunctionSpec::parse("x - 0.5", "x"));
  CHECK_THROWS_AS(fm.F(0.25), FlowMapError);
}
