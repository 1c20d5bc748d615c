#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfpc/bivariate_basis.hpp"
#include "sfpc/panel.hpp"
#include "sfpc/state_space.hpp"
#include "sfpc/temporal_basis.hpp"

namespace sfpc {

/// Spatial and temporal bases with their roughness penalty matrices.
struct ModelBases {
  BivariateBasis spatial;
  TemporalBasis temporal;
  Eigen::MatrixXd Gamma;  // thin-plate energy (zero when degree < 2)
  Eigen::MatrixXd P;      // temporal curvature over [1, n]

  static std::shared_ptr<const ModelBases> build(const Triangulation& mesh, int degree, int smoothness,
                                                 const TemporalSpec& temporal, int n);
};

struct ModelParams {
  Eigen::VectorXd theta_b;   // unit norm, length n_b
  Eigen::VectorXd theta_c;   // length n_c
  Eigen::MatrixXd Theta;     // n_b x J, orthonormal columns
  Eigen::MatrixXd K;         // p x J
  double sigma2 = 1.0;
  Eigen::VectorXd sigma_j2;  // strictly decreasing

  int J() const { return static_cast<int>(Theta.cols()); }
  int p() const { return static_cast<int>(K.rows()); }
};

struct Penalties {
  double mu_s = 0.0;
  double mu_t = 0.0;
  double pc = 0.0;
};

struct FitConfig {
  int J = 2;
  int p = 2;
  Penalties penalties;
  double tol = 1e-6;
  int max_iter = 200;
  bool freeze_K = false;
  bool stationary_init = false;
  double init_ridge = 1e-6;
  bool record_blocks = false;  // record q_value after every block update
  // called with (iteration, params) at the end of every EM iteration
  std::function<void(int, const ModelParams&)> on_iteration;
};

/// One entry of the block-level trace: q_value of the current iteration's
/// objective right after the named step.
struct BlockTraceEntry {
  int iteration = 0;
  std::string step;
  double q = 0.0;
};

struct FittedModel {
  ModelParams params;
  LatentMoments moments;
  std::shared_ptr<const ModelBases> bases;
  FitConfig config;
  std::vector<double> q_trace;       // q_value at the end of each iteration
  std::vector<double> loglik_trace;  // observed -2 log-likelihood of each E-step
  std::vector<BlockTraceEntry> block_trace;
  std::vector<std::string> warnings;
  bool converged = false;
  int iterations = 0;
  double neg2_loglik = 0.0;  // observed -2 log-likelihood at the returned parameters
  long observation_count = 0;
  // Final smoothed companion state, used to start forecasts.
  Eigen::VectorXd final_state;
  Eigen::MatrixXd final_state_cov;
};

/// Complete-data -2 log-likelihood for known scores alpha (J x n), without
/// 2 pi constants. Throws StationarityError for a non-stationary k_j.
double neg2_complete_loglik(const ModelParams& params, const ObservationPanel& panel, const Eigen::MatrixXd& alpha);

StateSpaceModel make_state_space(const ModelParams& params, bool stationary_init = false);

/// Per-time sufficient statistics of z_t - mean_t against B_t Theta.
std::vector<CompressedObs> compress_observations(const ModelParams& params, const ObservationPanel& panel);

struct EStepResult {
  LatentMoments moments;
  double neg2_loglik = 0.0;
  Eigen::VectorXd final_state;
  Eigen::MatrixXd final_state_cov;
};

EStepResult e_step_full(const ModelParams& params, const ObservationPanel& panel, bool stationary_init = false);
LatentMoments e_step(const ModelParams& params, const ObservationPanel& panel, bool stationary_init = false);

/// Expected penalized objective. With include_ar_logdet = false the
/// -log|M_j| terms are dropped (the objective the K update minimizes).
double q_value(const ModelParams& params, const LatentMoments& moments, const Penalties& penalties,
               const ObservationPanel& panel, const ModelBases& bases, bool include_ar_logdet = true);

struct SphereOptions {
  double beta = 0.5;
  double gamma = 1e-4;
  double tol = 1e-8;
  int max_iter = 5000;
};

struct SphereResult {
  Eigen::VectorXd theta;
  int iterations = 0;
  double grad_norm = 0.0;  // projected gradient norm at the returned point
  std::vector<double> objective;  // f at the start and after each step
};

/// Minimizes (theta - m)^T A (theta - m) over the unit sphere by projected
/// gradient steps with Armijo backtracking and normalization retraction.
SphereResult sphere_minimize(const Eigen::MatrixXd& A, const Eigen::VectorXd& m, const Eigen::VectorXd& start,
                             const SphereOptions& opts = {});

/// The (A, m) pair defining the theta_b block. Throws ConditioningError
/// when A is not positive definite.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> theta_b_system(const ModelParams& params, const LatentMoments& moments,
                                                          const ObservationPanel& panel, const Penalties& penalties,
                                                          const ModelBases& bases);

SphereResult update_theta_b(const ModelParams& params, const LatentMoments& moments, const ObservationPanel& panel,
                            const Penalties& penalties, const ModelBases& bases, const SphereOptions& opts = {});

Eigen::VectorXd update_theta_c(const ModelParams& params, const LatentMoments& moments, const ObservationPanel& panel,
                               const Penalties& penalties, const ModelBases& bases);

double update_sigma2(const ModelParams& params, const LatentMoments& moments, const ObservationPanel& panel);

/// Sequential column-wise closed-form update, before re-orthonormalization.
Eigen::MatrixXd update_Theta_columns(const ModelParams& params, const LatentMoments& moments,
                                     const ObservationPanel& panel, const Penalties& penalties,
                                     const ModelBases& bases);

struct Reorthonormalized {
  Eigen::MatrixXd Theta;  // orthonormal, sign-canonical columns
  Eigen::VectorXd H;      // decreasing
  Eigen::MatrixXd M;      // score map alpha -> M alpha
  bool near_tie = false;  // two eigenvalues within 1e-10 (relative)
};

/// Spectral decomposition of Theta_hat diag(H) Theta_hat^T.
Reorthonormalized reorthonormalize(const Eigen::MatrixXd& Theta_hat, const Eigen::VectorXd& H);

Eigen::VectorXd update_sigma_j2(const ModelParams& params, const LatentMoments& moments);

/// Column-wise weighted least squares with the stationarity guard.
Eigen::MatrixXd update_K(const LatentMoments& moments, int p);

/// Warm start: penalized mean fit, per-time ridge regressions of the
/// residuals, SVD of the coefficient matrix.
ModelParams initialize(const ObservationPanel& panel, const ModelBases& bases, const FitConfig& config);

/// Runs EM from `initialize` (or from `start` when given).
FittedModel fit(const ObservationPanel& panel, std::shared_ptr<const ModelBases> bases, const FitConfig& config,
                const ModelParams* start = nullptr);

/// Fitted surface at 0-based time t: b^T theta_b theta_c^T c_t + b^T Theta alpha_t.
Eigen::VectorXd reconstruct(const FittedModel& model, int t, std::span<const Point2> points);

/// Mean surface b^T theta_b theta_c^T c(t) at a 1-based (possibly future) time.
Eigen::VectorXd mean_surface(const FittedModel& model, double time, std::span<const Point2> points);

struct Forecast {
  std::vector<Eigen::VectorXd> mean;  // per horizon step
  std::vector<Eigen::VectorXd> sd;
  std::vector<Eigen::VectorXd> score_mean;
  std::vector<Eigen::MatrixXd> score_cov;
};

/// h-step forecasts from the final smoothed state.
Forecast forecast(const FittedModel& model, int horizon, std::span<const Point2> points);

/// Score forecasts only: T^h b and T^h V T^h' + sum of propagated innovations.
void forecast_scores(const ModelParams& params, const Eigen::VectorXd& state, const Eigen::MatrixXd& cov, int horizon,
                     std::vector<Eigen::VectorXd>& means, std::vector<Eigen::MatrixXd>& covs);

/// Residuals z_t - reconstruction at the observed locations.
std::vector<Eigen::VectorXd> residuals(const FittedModel& model, const ObservationPanel& panel);

/// Checks the parameter invariants; returns an empty string when all hold.
std::string check_invariants(const ModelParams& params, double tol = 1e-8);

}  // namespace sfpc
