#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sfpc/em_fitter.hpp"

namespace sfpc {

/// Additive fit W_t(x, y) = b(x, y)^T theta_mu + c(t)^T eta_nu by penalized
/// least squares, with the mean of nu over observed times pinned to 0.
struct DemeanResult {
  std::vector<Eigen::VectorXd> values;  // W_t - mu - nu_t at the observed locations
  Eigen::VectorXd theta_mu;
  Eigen::VectorXd eta_nu;
};

/// Throws ConditioningError when the constrained normal system is singular.
DemeanResult demean_two_stage(const ObservationPanel& panel, const ModelBases& bases, double mu_s, double mu_t);

struct DemeanSelection {
  double mu_s = 0.0;
  double mu_t = 0.0;
  double cv = 0.0;
};

/// Picks (mu_s, mu_t) from a log10 grid by leave-location-out CV (MSE).
DemeanSelection select_demean_penalties(const ObservationPanel& panel, const ModelBases& bases, int folds,
                                        std::uint64_t seed, const std::vector<double>& log10_grid);

}  // namespace sfpc
