#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "commands.hpp"
#include "sfpc/error.hpp"

namespace {

int exit_code_for(const std::string& kind) {
  if (kind == "config" || kind == "argument") return 2;
  if (kind == "parse" || kind == "location" || kind == "geometry") return 3;
  if (kind == "numeric" || kind == "conditioning" || kind == "stationarity" || kind == "fit" || kind == "construction")
    return 4;
  return 1;
}

int report(const std::string& command, const std::string& kind, const std::string& message, int code) {
  nlohmann::ordered_json j;
  j["status"] = "error";
  j["command"] = command;
  j["kind"] = kind;
  j["message"] = message;
  j["exit_code"] = code;
  std::cerr << j.dump() << "\n";
  return code;
}

void add_common(CLI::App* sub, sfpc::cli::CommonOptions& c) {
  sub->add_option("--config,-c", c.config, "run configuration file")->required();
  sub->add_option("--seed", c.seed, "seed for every random step (overrides cv.seed)");
  sub->add_option("--output,-o", c.output, "output directory (overrides data.output)");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace sfpc::cli;
  CLI::App app{"Serially correlated functional PCA on triangulated domains"};
  app.require_subcommand(1);

  FitOptions fit;
  auto* s_fit = app.add_subcommand("fit", "fit the model and archive it");
  add_common(s_fit, fit.common);
  s_fit->add_flag("--freeze-K", fit.freeze_K, "fix all AR coefficients at 0 (serially independent baseline)");

  SimulateOptions sim;
  auto* s_sim = app.add_subcommand("simulate", "simulation study, or emit one synthetic data set");
  s_sim->add_option("--setup", sim.setups, "setups i..iv")->delimiter(',');
  s_sim->add_option("--levels", sim.levels, "variance levels: high, low")->delimiter(',');
  s_sim->add_option("--runs", sim.runs, "replicates per cell");
  s_sim->add_option("--seed", sim.seed, "master seed");
  s_sim->add_option("--n", sim.n, "time points per data set");
  s_sim->add_option("--output,-o", sim.output, "output directory");
  s_sim->add_flag("--no-mfpc", sim.no_mfpc, "skip the serially independent baseline");
  s_sim->add_flag("--emit-data", sim.emit_data, "write one data set with mesh and run config");
  s_sim->add_option("--holdout", sim.holdout, "trailing time points written to truth.csv with --emit-data");

  CvSelectOptions cv;
  auto* s_cv = app.add_subcommand("cv-select", "penalty search by cross validation, then p and J selection");
  add_common(s_cv, cv.common);

  ForecastOptions fc;
  auto* s_fc = app.add_subcommand("forecast", "forecast surfaces from an archived fit");
  add_common(s_fc, fc.common);
  s_fc->add_option("--model", fc.model, "model archive directory (default <output>/model)");
  s_fc->add_option("--horizon", fc.horizon, "steps ahead");
  s_fc->add_option("--truth", fc.truth, "held-out observations t,x,y,value for the per-month error table");

  BootstrapOptions bs;
  auto* s_bs = app.add_subcommand("bootstrap", "bootstrap SD surfaces of the PC functions");
  add_common(s_bs, bs.common);
  s_bs->add_option("--model", bs.model, "model archive directory (default <output>/model)");
  s_bs->add_option("--replicates,-B", bs.replicates, "bootstrap replicates");

  ExportGridOptions eg;
  auto* s_eg = app.add_subcommand("export-grid", "write fitted surfaces on a grid");
  add_common(s_eg, eg.common);
  s_eg->add_option("--model", eg.model, "model archive directory (default <output>/model)");
  s_eg->add_option("--what", eg.what, "pcs, mean, surfaces")->delimiter(',');
  s_eg->add_option("--times", eg.times, "comma separated 1-based times, or all");

  std::string command = "sfpc";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(command, "config", e.what(), 2);
  }

  const auto subs = app.get_subcommands();
  command = subs.front()->get_name();
  try {
    if (command == "fit") run_fit(fit);
    else if (command == "simulate") run_simulate(sim);
    else if (command == "cv-select") run_cv_select(cv);
    else if (command == "forecast") run_forecast(fc);
    else if (command == "bootstrap") run_bootstrap(bs);
    else if (command == "export-grid") run_export_grid(eg);
  } catch (const sfpc::Error& e) {
    return report(command, e.kind(), e.what(), exit_code_for(e.kind()));
  } catch (const std::filesystem::filesystem_error& e) {
    return report(command, "config", e.what(), 2);
  } catch (const std::exception& e) {
    return report(command, "internal", e.what(), 1);
  }
  return 0;
}
