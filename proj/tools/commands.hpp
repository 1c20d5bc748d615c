#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sfpc::cli {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output;  // overrides data.output
};

struct FitOptions {
  CommonOptions common;
  bool freeze_K = false;
};

struct SimulateOptions {
  std::vector<std::string> setups{"i"};
  std::vector<std::string> levels{"high"};
  int runs = 10;
  std::uint64_t seed = 1;
  int n = 500;
  std::string output = "sim_out";
  bool no_mfpc = false;
  // Write one generated data set (plus mesh and a run config) instead of the study.
  bool emit_data = false;
  int holdout = 12;
};

struct CvSelectOptions {
  CommonOptions common;
};

struct ForecastOptions {
  CommonOptions common;
  std::string model;
  std::optional<int> horizon;
  std::string truth;
};

struct BootstrapOptions {
  CommonOptions common;
  std::string model;
  std::optional<int> replicates;
};

struct ExportGridOptions {
  CommonOptions common;
  std::string model;
  std::vector<std::string> what{"pcs"};
  std::string times = "all";
};

void run_fit(const FitOptions& o);
void run_simulate(const SimulateOptions& o);
void run_cv_select(const CvSelectOptions& o);
void run_forecast(const ForecastOptions& o);
void run_bootstrap(const BootstrapOptions& o);
void run_export_grid(const ExportGridOptions& o);

}  // namespace sfpc::cli
