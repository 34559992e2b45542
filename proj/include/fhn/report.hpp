#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "fhn/dynsys.hpp"

namespace fhn {

using Json = nlohmann::json;

struct RunOptions {
  double tol_scale = 1.0;  // multiplies every comparison tolerance
  int workers = 1;         // sweep-point parallelism cap
  std::filesystem::path out_dir;  // empty: no data files written
  bool recompute_critical = false;  // re-locate the critical parameter value
};

struct RunConfig {
  FamilyCoeffs coeffs;
  RunOptions opts;
  Json raw;  // input echo for the report
};

// Parses {"family": "A"|"B", "coefficients": {...}, "options": {...}} with
// coefficient field names d, w, eps, alpha1.. / alpha[] etc. Throws
// std::invalid_argument with a field-level message on bad input.
RunConfig parse_config(const Json& j);

Json coeffs_to_json(const FamilyCoeffs& c);

// Built-in coefficient sets of the three worked examples (n in {1,2,3}).
// Example 1 stores the self-consistent d = 19/8 (the printed 17/16
// contradicts the example's own a, b, c); example 2 stores the printed
// non-exact decimal for the eps^2 coefficient of b verbatim.
FamilyCoeffs example_coeffs(int n);

struct RunReport {
  Json doc;
  // 0: all comparisons within tolerance; 2: completed with erratum flags;
  // 1: pipeline failure.
  int exit_code = 0;
};

// Closed-form pipeline only: family verdicts, scalar predictions, fixed
// points, bifurcation-curve leading terms. No integration.
RunReport cmd_predict(const RunConfig& cfg);

// Locates the section fixed point from the averaged-prediction seed,
// computes Floquet multipliers, compares against the predictions.
RunReport cmd_locate(const RunConfig& cfg);

// Full pipeline: critical-parameter location, Lyapunov coefficient
// (closed form + numerical), invariant-circle search by (reversed-time)
// iteration, fit and classification; writes section/torus data files when
// out_dir is set.
RunReport cmd_verify_torus(const RunConfig& cfg);

// Bundles the built-in example n and runs the pipeline stages that the
// corresponding worked example exercises, writing plot data files.
RunReport cmd_reproduce_example(int n, const RunOptions& opts);

// Evaluates cmd_predict over a 1D grid of one unfolding parameter
// ("gamma1", "beta2", ...); per-point failures are recorded and the sweep
// continues.
RunReport cmd_sweep(const RunConfig& cfg, const std::string& parameter,
                    double lo, double hi, int n_points);

// Structural schema of every report document; also shipped in the repo as
// schema/report.schema.json.
Json report_schema();

// Lightweight structural validation against report_schema(): checks
// required fields and types. Returns an empty string when valid, else a
// diagnostic.
std::string validate_report(const Json& doc);

}  // namespace fhn
