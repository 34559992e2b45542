#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fhn/report.hpp"

namespace {

fhn::Json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file " + path);
  return fhn::Json::parse(is);
}

fhn::RunConfig build_config(const std::string& config_path, int example,
                            double tol_scale, int workers,
                            const std::string& out_dir,
                            bool recompute_critical) {
  fhn::RunConfig cfg;
  if (!config_path.empty()) {
    cfg = fhn::parse_config(load_json(config_path));
  } else if (example != 0) {
    cfg.coeffs = fhn::example_coeffs(example);
    cfg.raw = fhn::Json{{"example", example},
                        {"coefficients", fhn::coeffs_to_json(cfg.coeffs)}};
  } else {
    throw std::runtime_error("either --config or --example is required");
  }
  // command-line options override the config file
  cfg.opts.tol_scale = tol_scale;
  cfg.opts.workers = workers;
  if (!out_dir.empty()) cfg.opts.out_dir = out_dir;
  if (recompute_critical) cfg.opts.recompute_critical = true;
  return cfg;
}

int emit(const fhn::RunReport& report, const std::string& out_dir,
         const std::string& name) {
  const std::string msg = fhn::validate_report(report.doc);
  if (!msg.empty()) {
    std::cerr << "internal error: report fails schema validation: " << msg
              << "\n";
    return 1;
  }
  const std::string text = report.doc.dump(2);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream os(std::filesystem::path(out_dir) / (name + ".json"));
    os << text << "\n";
  }
  std::cout << text << "\n";
  return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Averaging-based analysis of periodic orbits and invariant tori in the "
      "3D FitzHugh-Nagumo system"};
  app.require_subcommand(1);

  std::string config_path, out_dir, sweep_param;
  int example = 0, workers = 1, sweep_points = 0;
  double tol_scale = 1.0, sweep_lo = 0, sweep_hi = 0;
  bool recompute_critical = false;

  auto add_common = [&](CLI::App* cmd, bool needs_input) {
    auto* c = cmd->add_option("--config", config_path,
                              "JSON config file with family, coefficients "
                              "and options");
    auto* e = cmd->add_option("--example", example,
                              "built-in example coefficient set")
                  ->check(CLI::Range(1, 3));
    if (needs_input) {
      c->excludes(e);
    }
    cmd->add_option("--out", out_dir,
                    "directory for the report and data files");
    cmd->add_option("--tol-scale", tol_scale,
                    "scale factor on every comparison tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--workers", workers, "sweep-point parallelism cap")
        ->check(CLI::PositiveNumber);
  };

  auto* predict = app.add_subcommand(
      "predict", "closed-form pipeline only: verdicts and scalar predictions");
  add_common(predict, true);

  auto* locate = app.add_subcommand(
      "locate", "find the periodic orbit and its Floquet multipliers");
  add_common(locate, true);

  auto* verify = app.add_subcommand(
      "verify-torus",
      "full pipeline: critical parameter, Lyapunov coefficient, invariant "
      "circle search and classification");
  add_common(verify, true);
  verify->add_flag("--recompute-critical", recompute_critical,
                   "re-locate the critical parameter value numerically");

  auto* repro = app.add_subcommand(
      "reproduce-example",
      "run the pipeline on a built-in example and write its figure data");
  add_common(repro, false);

  auto* sweep = app.add_subcommand(
      "sweep", "evaluate the closed-form predictions over a parameter grid");
  add_common(sweep, true);
  sweep->add_option("--parameter", sweep_param,
                    "unfolding coefficient to vary (e.g. gamma1, beta2)")
      ->required();
  sweep->add_option("--lo", sweep_lo, "grid start")->required();
  sweep->add_option("--hi", sweep_hi, "grid end")->required();
  sweep->add_option("--points", sweep_points, "number of grid points")
      ->required()
      ->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (repro->parsed()) {
      if (example == 0)
        throw std::runtime_error("reproduce-example requires --example");
      fhn::RunOptions opts;
      opts.tol_scale = tol_scale;
      opts.workers = workers;
      if (!out_dir.empty()) opts.out_dir = out_dir;
      return emit(fhn::cmd_reproduce_example(example, opts), out_dir,
                  "report");
    }
    const fhn::RunConfig cfg = build_config(
        config_path, example, tol_scale, workers, out_dir, recompute_critical);
    if (predict->parsed()) return emit(fhn::cmd_predict(cfg), out_dir, "report");
    if (locate->parsed()) return emit(fhn::cmd_locate(cfg), out_dir, "report");
    if (verify->parsed())
      return emit(fhn::cmd_verify_torus(cfg), out_dir, "report");
    if (sweep->parsed())
      return emit(
          fhn::cmd_sweep(cfg, sweep_param, sweep_lo, sweep_hi, sweep_points),
          out_dir, "report");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
