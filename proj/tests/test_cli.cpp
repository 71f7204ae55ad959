// End-to-end tests of the command-line tool: exit codes, output formats,
// config handling, and determinism.  The binary path comes from the
// RVDECAY_CLI_PATH compile definition (or environment variable).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "json.hpp"

namespace {

using nlohmann::json;

std::string cli_path() {
  if (const char* env = std::getenv("RVDECAY_CLI_PATH")) return env;
#ifdef RVDECAY_CLI_PATH
  return RVDECAY_CLI_PATH;
#else
  return "./rvdecay";
#endif
}

// Single-quote shell escaping: ' -> '\''.
std::string q(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args, bool merge_stderr = false) {
  std::string cmd = q(cli_path()) + " " + args;
  cmd += merge_stderr ? " 2>&1" : " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) {
    r.out.append(buf, n);
  }
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string temp_file(const std::string& stem, const std::string& content) {
  std::string path = "/tmp/rvdecay_test_" + std::to_string(getpid()) + "_" + stem;
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << content;
  out.close();
  return path;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> lines;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

const char* kCriticalF = "x^2";
const char* kCriticalG = "2*(2+t)^-2";

}  // namespace

TEST_CASE("classify: critical problem reports regime and rate over JSON") {
  RunResult r = run(std::string("classify --f ") + q(kCriticalF) + " --g " +
                    q(kCriticalG));
  CHECK(r.exit_code == 0);
  json d = json::parse(r.out);
  CHECK(d["regime"] == "Critical");
  CHECK(d["lambda_star"].get<double>() == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(d["beta"].get<double>() == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(d["L_verdict"] == "finite");
  CHECK(d["L_value"].get<double>() == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("classify: text format carries the same headline facts") {
  RunResult r = run(std::string("classify --format text --f ") + q(kCriticalF) +
                    " --g " + q(kCriticalG));
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("regime: Critical") != std::string::npos);
  CHECK(r.out.find("lambda_star: 0.5") != std::string::npos);
}

TEST_CASE("classify: negative g with positive start is out of scope, exit 2") {
  RunResult r = run(std::string("classify --f ") + q(kCriticalF) + " --g " +
                    q("-(1+t)^-2"));
  CHECK(r.exit_code == 2);
  json d = json::parse(r.out);
  CHECK(d["regime"] == "Rejected");
  const std::string reason = d["reject_reason"].get<std::string>();
  CHECK(reason.find("g must be positive (or fully reflectable)") !=
        std::string::npos);
}

TEST_CASE("classify: linear f sits on the excluded exponent boundary, exit 2") {
  RunResult r = run(std::string("classify --f 'x' --g ") + q("(1+t)^-2"));
  CHECK(r.exit_code == 2);
  json d = json::parse(r.out);
  CHECK(d["regime"] == "Rejected");
  CHECK(d["reject_reason"].get<std::string>().find("must exceed 1") !=
        std::string::npos);
}

TEST_CASE("classify: identical invocations produce byte-identical output") {
  const std::string args = std::string("classify --f ") + q(kCriticalF) +
                           " --g " + q(kCriticalG);
  RunResult a = run(args);
  RunResult b = run(args);
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(!a.out.empty());
}

TEST_CASE("simulate: CSV has the exact header and an accurate final row") {
  RunResult r = run(std::string("simulate --f ") + q("x^2") + " --g " +
                    q("(1+t)^-2 * ((1+t)^-1 + t)^-2") + " --horizon 1e4");
  CHECK(r.exit_code == 0);
  std::vector<std::string> lines = lines_of(r.out);
  REQUIRE(lines.size() > 3);
  CHECK(lines[0] == "t,x");
  CHECK(lines[1] == "0,1");

  double t = 0.0, x = 0.0;
  REQUIRE(std::sscanf(lines.back().c_str(), "%lf,%lf", &t, &x) == 2);
  CHECK(t == doctest::Approx(1e4).epsilon(1e-12));
  const double closed = 1.0 / (1.0 / (1.0 + t) + t);
  CHECK(x == doctest::Approx(closed).epsilon(1e-6));
}

TEST_CASE("simulate: diagnostics adds the clock and model columns") {
  RunResult r = run(std::string("simulate --diagnostics --f ") + q(kCriticalF) +
                    " --g " + q(kCriticalG) + " --horizon 100");
  CHECK(r.exit_code == 0);
  std::vector<std::string> lines = lines_of(r.out);
  REQUIRE(!lines.empty());
  CHECK(lines[0] == "t,x,F_of_x,f_of_x,g_of_t");
  // First row: t=0, x=1, F(1)=0, f(1)=1, g(0)=0.5.
  CHECK(lines[1] == "0,1,0,1,0.5");
}

TEST_CASE("simulate: identically zero perturbation points at unperturbed mode") {
  RunResult r = run(std::string("simulate --f ") + q(kCriticalF) +
                        " --g '0' --horizon 100",
                    /*merge_stderr=*/true);
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("--unperturbed") != std::string::npos);
}

TEST_CASE("simulate: unperturbed flow follows the closed form on both sides") {
  RunResult pos = run(std::string("simulate --unperturbed --f ") + q("x^2") +
                      " --horizon 100");
  CHECK(pos.exit_code == 0);
  std::vector<std::string> lines = lines_of(pos.out);
  double t = 0.0, x = 0.0;
  REQUIRE(std::sscanf(lines.back().c_str(), "%lf,%lf", &t, &x) == 2);
  CHECK(x == doctest::Approx(1.0 / 101.0).epsilon(1e-9));

  RunResult neg = run(std::string("simulate --unperturbed --f ") +
                      q("signed_pow(2)") + " --xi -1 --horizon 100");
  CHECK(neg.exit_code == 0);
  lines = lines_of(neg.out);
  REQUIRE(std::sscanf(lines.back().c_str(), "%lf,%lf", &t, &x) == 2);
  CHECK(x == doctest::Approx(-1.0 / 101.0).epsilon(1e-9));
}

TEST_CASE("config file: loads, validates strictly, and yields to flags") {
  const std::string cfg = temp_file("cfg.json", R"({
    "f": "x^2",
    "g": "2*(2+t)^-2",
    "xi": 1.0,
    "horizon": 1e6,
    "tolerances": {"rtol": 1e-9, "atol": 1e-12, "quadrature": 1e-12},
    "grids": {"t0": 10, "doublings": 20, "points_per_decade": 32},
    "flags": {"g_asymptotically_decreasing": false}
  })");

  RunResult r = run("classify --config " + q(cfg));
  CHECK(r.exit_code == 0);
  json d = json::parse(r.out);
  CHECK(d["regime"] == "Critical");
  CHECK(d["lambda_star"].get<double>() == doctest::Approx(0.5).epsilon(1e-6));

  // A flag overrides the file: a wrong beta hint shifts the rate constant.
  RunResult o = run("classify --config " + q(cfg) + " --beta 3");
  CHECK(o.exit_code == 0);
  json od = json::parse(o.out);
  CHECK(od["lambda_star"].get<double>() ==
        doctest::Approx(0.43204).epsilon(1e-3));

  std::remove(cfg.c_str());
}

TEST_CASE("config file: unknown fields are rejected by name, exit 1") {
  const std::string cfg = temp_file("bad.json",
                                    R"({"f": "x^2", "g": "1/t^2",
                                        "tolerances": {"reltol": 1e-9}})");
  RunResult r = run("classify --config " + q(cfg), /*merge_stderr=*/true);
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("tolerances.reltol") != std::string::npos);
  std::remove(cfg.c_str());
}

TEST_CASE("config file: non-positive tolerance is rejected, exit 1") {
  const std::string cfg = temp_file(
      "tol.json", R"({"f": "x^2", "g": "1/t^2", "tolerances": {"rtol": 0}})");
  RunResult r = run("classify --config " + q(cfg), /*merge_stderr=*/true);
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("rtol") != std::string::npos);
  std::remove(cfg.c_str());
}

TEST_CASE("config file: unparsable model expression names the field, exit 1") {
  RunResult r = run("classify --f 'x^^2' --g '1/t'", /*merge_stderr=*/true);
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("\"f\"") != std::string::npos);
}

TEST_CASE("verify: critical reference problem verifies clean, exit 0") {
  RunResult r = run(std::string("verify --f ") + q(kCriticalF) + " --g " +
                    q(kCriticalG) + " --horizon 1e5");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("verified: all measurements within tolerance") !=
        std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("verify: a wrong exponent hint fails measurement, exit 3") {
  RunResult r = run(std::string("verify --f ") + q(kCriticalF) + " --g " +
                    q(kCriticalG) + " --beta 3 --horizon 1e4");
  CHECK(r.exit_code == 3);
  CHECK(r.out.find("FAIL") != std::string::npos);
}

TEST_CASE("verify: JSON format embeds the report and the measurement rows") {
  RunResult r = run(std::string("verify --format json --f ") + q(kCriticalF) +
                    " --g " + q(kCriticalG) + " --horizon 1e4");
  CHECK(r.exit_code == 0);
  json d = json::parse(r.out);
  CHECK(d["all_ok"] == true);
  CHECK(d["report"]["regime"] == "Critical");
  REQUIRE(d["measurements"].is_array());
  bool saw_clock = false;
  for (const auto& m : d["measurements"]) {
    if (m["name"] == "F(x)/t") {
      saw_clock = true;
      CHECK(m["ok"] == true);
      CHECK(m["predicted"].get<double>() == doctest::Approx(0.5).epsilon(1e-6));
    }
  }
  CHECK(saw_clock);
}

TEST_CASE("corpus: unknown entry exits 1 and lists what exists") {
  RunResult r = run("corpus --entry nonexistent", /*merge_stderr=*/true);
  CHECK(r.exit_code == 1);
  CHECK(r.out.find("unknown entry") != std::string::npos);
  CHECK(r.out.find("examp.g0") != std::string::npos);
  CHECK(r.out.find("examp.Lgt0") != std::string::npos);
}

TEST_CASE("corpus: single entry without integration passes quickly") {
  RunResult r = run("corpus --entry examp.Lgt0 --fast");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("== examp.Lgt0: PASS") != std::string::npos);
  CHECK(r.out.find("summary: 1/1 entries passed") != std::string::npos);
}

TEST_CASE("corpus: fast JSON run covers every entry") {
  RunResult r = run("corpus --fast --format json");
  CHECK(r.exit_code == 0);
  json d = json::parse(r.out);
  REQUIRE(d.is_array());
  CHECK(d.size() == 11);
  for (const auto& e : d) {
    CAPTURE(e["name"].get<std::string>());
    CHECK(e["passed"] == true);
    CHECK(e["max_traj_rel_error"].is_null());  // no integration in fast mode
  }
}

TEST_CASE("corpus: CSV summary has one row per entry") {
  RunResult r = run("corpus --fast --format csv");
  CHECK(r.exit_code == 0);
  std::vector<std::string> lines = lines_of(r.out);
  REQUIRE(lines.size() == 12);
  CHECK(lines[0] ==
        "name,passed,regime,residual,max_traj_rel_error,first_failure");
  CHECK(lines[1].rfind("examp.g0,true,Preserved,", 0) == 0);
}

TEST_CASE("indices: pure powers read back their exponents") {
  RunResult r = run("indices --f 'x^3' --g 't^-2'");
  CHECK(r.exit_code == 0);
  json d = json::parse(r.out);
  CHECK(d["f_at_zero"]["kind"] == "regular");
  CHECK(d["f_at_zero"]["index"].get<double>() ==
        doctest::Approx(3.0).epsilon(1e-4));
  CHECK(d["g_at_infinity"]["kind"] == "regular");
  CHECK(d["g_at_infinity"]["index"].get<double>() ==
        doctest::Approx(-2.0).epsilon(1e-4));
}

TEST_CASE("indices: rapid drop at zero is flagged, not forced to a number") {
  RunResult r = run("indices --f 'exp(-1/x)'");
  CHECK(r.exit_code == 0);
  json d = json::parse(r.out);
  CHECK(d["f_at_zero"]["kind"] == "rapid-plus");
  CHECK(d["f_at_zero"]["index"].is_null());
}

TEST_CASE("indices: with no function at all the call is a usage error") {
  RunResult r = run("indices", /*merge_stderr=*/true);
  CHECK(r.exit_code == 1);
}

TEST_CASE("output file: --output writes the same bytes stdout would carry") {
  const std::string path =
      "/tmp/rvdecay_test_" + std::to_string(getpid()) + "_out.json";
  RunResult direct = run(std::string("classify --f ") + q(kCriticalF) +
                         " --g " + q(kCriticalG));
  RunResult filed = run(std::string("classify --f ") + q(kCriticalF) + " --g " +
                        q(kCriticalG) + " --output " + q(path));
  CHECK(filed.exit_code == 0);
  CHECK(filed.out.empty());
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == direct.out);
  std::remove(path.c_str());
}

TEST_CASE("usage: missing subcommand and bad flags exit 1") {
  RunResult none = run("", /*merge_stderr=*/true);
  CHECK(none.exit_code == 1);
  RunResult bad = run("classify --no-such-flag", /*merge_stderr=*/true);
  CHECK(bad.exit_code == 1);
  RunResult both = run("corpus --entry examp.g0 --all", /*merge_stderr=*/true);
  CHECK(both.exit_code == 1);
}
