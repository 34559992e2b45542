#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "fhn/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double k_pi = 3.141592653589793238462643383279502884;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

// runs the command-line tool and captures the requested stream
RunResult run_cli(const std::string& args, bool capture_stderr = false) {
  const std::string cmd = std::string(FHN_CLI_PATH) + " " + args +
                          (capture_stderr ? " 2>&1 1>/dev/null" : " 2>/dev/null");
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path write_temp(const std::string& name, const json& j) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream os(p);
  os << j.dump(2) << "\n";
  return p;
}

}  // namespace

TEST_CASE("predict on a built-in coefficient set matches the closed form") {
  const RunResult r = run_cli("predict --example 3");
  REQUIRE(r.exit_code == 0);
  const json doc = json::parse(r.output);
  CHECK(doc.at("status") == "ok");
  CHECK(doc.at("command") == "predict");
  CHECK(fhn::validate_report(doc).empty());
  const double lambda1 =
      doc.at("results").at("multiplier_series").at("lambda1").get<double>();
  CHECK(lambda1 == doctest::Approx(-20808 * k_pi / 3773).epsilon(1e-12));
}

TEST_CASE("bad config yields exit 1 and a field-level diagnostic") {
  const fs::path p = write_temp(
      "fhn_cli_bad.json",
      json{{"family", "A"}, {"coefficients", {{"d", 2.0}, {"eps", 0.01}}}});
  const RunResult r =
      run_cli("predict --config " + p.string(), /*capture_stderr=*/true);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("w") != std::string::npos);
  CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("locate refuses the degenerate eps = 0 case") {
  const fs::path p = write_temp(
      "fhn_cli_eps0.json",
      json{{"family", "A"},
           {"coefficients", {{"d", 2.0}, {"w", 0.5}, {"eps", 0.0}}}});
  const RunResult r = run_cli("locate --config " + p.string());
  CHECK(r.exit_code == 1);
  const json doc = json::parse(r.output);
  CHECK(doc.at("status") == "error");
  CHECK(doc.at("error").at("message").get<std::string>().find("eps") !=
        std::string::npos);
}

TEST_CASE("sweep over gamma1 crosses the trace-coefficient boundary") {
  // trace coefficient 2*pi*(beta1*d - gamma1)/w flips sign at gamma1 = 2
  const fs::path p = write_temp(
      "fhn_cli_sweep.json",
      json{{"family", "A"},
           {"coefficients",
            {{"d", 2.0}, {"w", 0.5}, {"eps", 0.01},
             {"alpha1", 1.0}, {"beta1", 1.0}, {"gamma1", 0.0}}}});
  const RunResult r = run_cli("sweep --config " + p.string() +
                              " --parameter gamma1 --lo 0 --hi 4 --points 5");
  REQUIRE(r.exit_code == 0);
  const json doc = json::parse(r.output);
  const json& table = doc.at("results").at("table");
  REQUIRE(table.size() == 5);
  const auto trace = [&](size_t i) {
    return table.at(i)
        .at("results")
        .at("first_family")
        .at("trace_coeff")
        .get<double>();
  };
  CHECK(trace(0) > 0);
  CHECK(trace(4) < 0);
  CHECK(std::abs(trace(2)) < 1e-12);
  CHECK(table.at(0).at("value").get<double>() == doctest::Approx(0.0));
  CHECK(table.at(4).at("value").get<double>() == doctest::Approx(4.0));
}

TEST_CASE("sweep with zero points yields an empty table and exit 0") {
  const RunResult r = run_cli(
      "sweep --example 3 --parameter beta2 --lo 0 --hi 1 --points 0");
  CHECK(r.exit_code == 0);
  const json doc = json::parse(r.output);
  CHECK(doc.at("results").at("table").empty());
}

TEST_CASE("repeated runs are byte-identical") {
  const RunResult a = run_cli("predict --example 1");
  const RunResult b = run_cli("predict --example 1");
  CHECK(a.exit_code == b.exit_code);
  CHECK(a.output == b.output);
  CHECK(!a.output.empty());
}

TEST_CASE("report is written to the output directory and validates") {
  const fs::path out = fs::temp_directory_path() / "fhn_cli_out";
  fs::remove_all(out);
  const RunResult r =
      run_cli("predict --example 2 --out " + out.string());
  CHECK(r.exit_code == 0);
  std::ifstream is(out / "report.json");
  REQUIRE(is.good());
  const json doc = json::parse(is);
  CHECK(fhn::validate_report(doc).empty());
  CHECK(json::parse(r.output) == doc);
}

TEST_CASE("shipped schema file matches the built-in schema") {
  std::ifstream is(FHN_SCHEMA_PATH);
  REQUIRE(is.good());
  const json shipped = json::parse(is);
  CHECK(shipped == fhn::report_schema());
}
