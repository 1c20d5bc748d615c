#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfpc/em_fitter.hpp"

namespace sfpc {

/// AIC / BIC use the score-part criterion below. The *_OBSERVED variants use
/// the Kalman observed likelihood instead: -2 log L + 2 pJ (or log(N) pJ with
/// N the observation count).
enum class InfoCriterion { AIC, BIC, AIC_OBSERVED, BIC_OBSERVED };

InfoCriterion parse_criterion(const std::string& s);

/// sum_j { n log sigma_j^2 + S_j(k_j) / sigma_j^2 } + 2p (AIC) or log(n) p (BIC),
/// with S_j from the model's smoothed moments. Observed variants as above.
double information_criterion(const FittedModel& model, InfoCriterion criterion);

struct CriterionRow {
  int candidate = 0;
  double value = 0.0;
};

/// Argmin over candidates; exact ties go to the smaller candidate. Throws
/// ArgumentError for an empty list.
int argmin_candidate(const std::vector<CriterionRow>& rows);

/// Evaluates the criterion on each fitted model (one per p) and returns the
/// chosen p. `report` receives one row per model when given.
int select_p(const std::vector<FittedModel>& models, InfoCriterion criterion, std::vector<CriterionRow>* report = nullptr);

/// Smallest J whose leading score variances reach fraction tau of the total.
int select_J(const Eigen::VectorXd& score_variances, double tau = 0.95);

/// Same, using the sample variances of the model's smoothed scores.
int select_J(const FittedModel& model, double tau = 0.95);

/// Sample variance (divisor n - 1) of each row of alpha.
Eigen::VectorXd score_sample_variances(const Eigen::MatrixXd& alpha);

/// Per-time random partition of observation indices into folds.
struct CVPlan {
  int folds = 5;
  std::uint64_t seed = 1;
  std::vector<std::vector<int>> fold_of;  // fold_of[t][i] for observation i at time t

  static CVPlan make(const ObservationPanel& panel, int folds, std::uint64_t seed);

  /// Training mask of fold f (true = kept).
  std::vector<std::vector<bool>> training_mask(int f) const;
};

struct CVResult {
  double score = 0.0;  // mean squared prediction error over held-out points
  int folds_completed = 0;
  long held_out = 0;
  std::vector<std::string> warnings;
};

/// Leave-location-out CV: refit on each fold complement and predict the
/// held-out values from training-only smoothed scores. Folds run in parallel.
CVResult cv_score(const ObservationPanel& panel, std::shared_ptr<const ModelBases> bases, const FitConfig& config,
                  const CVPlan& plan);

struct SimplexOptions {
  int grid_per_axis = 3;
  double grid_lo = -4.0;  // log10 units
  double grid_hi = 4.0;
  int budget = 60;          // objective evaluations in the simplex stage
  double tol = 0.05;        // simplex diameter in log10 units
  double initial_step = 1.0;
  double reflection = 1.0, expansion = 2.0, contraction = 0.5, shrink = 0.5;
};

struct SimplexResult {
  Eigen::VectorXd x;  // best point (log10 units)
  double value = 0.0;
  Eigen::VectorXd grid_best;
  double grid_value = 0.0;
  bool converged = false;
  int evaluations = 0;
  int iterations = 0;
  std::vector<std::pair<Eigen::VectorXd, double>> history;
};

/// Two-stage search: coarse log-spaced grid, then Nelder-Mead from the best
/// grid point. `dim` is the number of coordinates.
SimplexResult simplex_search(const std::function<double(const Eigen::VectorXd&)>& objective, int dim,
                             const SimplexOptions& opts = {});

/// Nelder-Mead stage alone, started from `start`.
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective, const Eigen::VectorXd& start,
                          const SimplexOptions& opts = {});

/// Penalties from log10 coordinates (mu_s, mu_t, pc).
Penalties penalties_from_log10(const Eigen::VectorXd& x);

void write_criterion_csv(std::ostream& out, const std::vector<CriterionRow>& rows, const std::string& name);

}  // namespace sfpc
