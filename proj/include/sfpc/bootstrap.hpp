#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfpc/em_fitter.hpp"

namespace sfpc {

struct BootstrapConfig {
  int replicates = 100;
  std::uint64_t seed = 1;
  std::vector<Point2> grid;
  int burn_in = 500;
  // Every replicate uses `seed` itself instead of a split seed.
  bool identical_seeds = false;
};

struct BootstrapResult {
  Eigen::MatrixXd sd;    // grid points x J, pointwise SD of the sign-aligned PCs
  Eigen::MatrixXd mean;  // grid points x J
  int completed = 0;
  std::vector<std::string> failures;
};

/// One bootstrap data set: AR scores from the fitted dynamics, fitted surfaces
/// at the observed locations, residuals resampled within each time point.
std::vector<Eigen::VectorXd> bootstrap_sample(const FittedModel& model, const ObservationPanel& panel,
                                              const std::vector<Eigen::VectorXd>& residuals, int burn_in,
                                              std::uint64_t seed);

/// Semi-parametric bootstrap SD surfaces of the fitted PC functions.
/// Replicates run in parallel; replicate b uses split_seed(seed, b). Throws
/// FitError when fewer than two replicates complete.
BootstrapResult bootstrap_sd(const FittedModel& model, const ObservationPanel& panel, const BootstrapConfig& config);

}  // namespace sfpc
