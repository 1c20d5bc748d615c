#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfpc/config.hpp"
#include "sfpc/em_fitter.hpp"
#include "sfpc/model_selection.hpp"

namespace sfpc::cli {

/// Fixed values, or "select" for a CV search.
struct PenaltySetting {
  bool select = false;
  Penalties fixed;
};

struct RunConfig {
  std::string config_dir;  // relative paths resolve against this
  // [data]
  std::string panel, mesh, output, truth, grid;
  double grid_step = 0.04;
  // [model]
  int J = 2, p = 2, degree = 3, smoothness = 1;
  TemporalSpec temporal;
  bool freeze_K = false;
  bool demean = false;
  // [penalties]
  PenaltySetting penalties;
  // [demean]
  bool demean_select = false;
  double demean_mu_s = 1e-4, demean_mu_t = 1e-4;
  std::vector<double> demean_grid{-6, -4, -2, 0};
  // [cv]
  int folds = 5;
  std::uint64_t seed = 1;
  SimplexOptions simplex;
  std::vector<int> p_candidates{1, 2, 3, 4};
  InfoCriterion criterion = InfoCriterion::AIC;
  double tau = 0.95;
  // [fit]
  double tol = 1e-6;
  int max_iter = 200;
  bool stationary_init = false;
  double init_ridge = 1e-6;
  // [bootstrap]
  int replicates = 100;
  int burn_in = 500;
  // [forecast]
  int horizon = 12;

  FitConfig fit_config(const Penalties& pen) const;

  /// Parses and validates; throws ConfigError.
  static RunConfig from_file(const std::string& path);
  static RunConfig from_kv(const KeyValueConfig& kv, const std::string& config_dir);

  std::string resolve(const std::string& p) const;

  /// Throws ConfigError when a required path is unset or missing on disk.
  void require_file(const std::string& key, const std::string& value) const;
};

}  // namespace sfpc::cli
