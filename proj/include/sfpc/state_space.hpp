#pragma once

#include <vector>

#include <Eigen/Dense>

namespace sfpc {

/// AR(p) latent factor dynamics in companion form. The state at time t is
/// (alpha_t, alpha_{t-1}, ..., alpha_{t-p}), so S selects the first J rows.
struct StateSpaceModel {
  int J = 1;
  int p = 1;
  Eigen::MatrixXd K;  // p x J, column j holds the AR coefficients of score j
  Eigen::VectorXd H;  // innovation variances sigma_j^2
  double sigma2 = 1.0;
  // false: b_{0|0} = 0, Q_{0|0} = 0. true: stationary prior for the pre-sample state.
  bool stationary_init = false;

  int state_dim() const { return (p + 1) * J; }
  Eigen::MatrixXd transition() const;
  Eigen::MatrixXd innovation_cov() const;
  /// Covariance of the initial state b_{0|0}.
  Eigen::MatrixXd initial_cov() const;
};

/// Sufficient statistics of one time point's observations for the score
/// update: with G = B_t Theta and r = z_t - mean_t, W = G^T G, g = G^T r,
/// rr = r^T r. All filter computations only need these.
struct CompressedObs {
  int n = 0;
  Eigen::MatrixXd W;
  Eigen::VectorXd g;
  double rr = 0.0;

  static CompressedObs from_dense(const Eigen::MatrixXd& G, const Eigen::VectorXd& r);
};

struct FilterOutput {
  std::vector<Eigen::VectorXd> b_pred, b_filt;
  std::vector<Eigen::MatrixXd> Q_pred, Q_filt;
  // Innovation v_t = z_t - E[z_t | z_{1:t-1}] and F_t = Var(v_t), summarized
  // by v^T F^{-1} v and log|F_t|.
  std::vector<double> innovation_quad, innovation_logdet;
  double neg2_loglik = 0.0;  // includes the n_t log(2 pi) constants
};

struct SmootherOutput {
  std::vector<Eigen::VectorXd> b;
  std::vector<Eigen::MatrixXd> V;
};

/// Prediction-correction recursion over t = 1..n (vector index t - 1).
/// Throws NumericError on non-finite inputs and ConditioningError when an
/// innovation covariance is not invertible.
FilterOutput kalman_filter(const StateSpaceModel& model, const std::vector<CompressedObs>& obs);

/// Backward (Rauch-Tung-Striebel) pass; singular Q_{t+1|t} uses a
/// pseudo-inverse with relative cutoff 1e-12.
SmootherOutput kalman_smoother(const StateSpaceModel& model, const FilterOutput& filt);

/// Smoothed score moments. lag_cov[t][l - 1] = Cov(alpha_t, alpha_{t-l} | z),
/// l = 1..p, with zero blocks for pre-sample lags.
struct LatentMoments {
  int J = 0;
  int p = 0;
  Eigen::MatrixXd alpha;  // J x n
  std::vector<Eigen::MatrixXd> Sigma;
  std::vector<std::vector<Eigen::MatrixXd>> lag_cov;

  int n() const { return static_cast<int>(alpha.cols()); }

  /// E[alpha_{j,a} alpha_{j,b} | z] for 0-based times a, b with |a - b| <= p.
  double second_moment(int j, int a, int b) const;

  /// Signed expected lag matrix E[D_j | z] of order `order` (<= p), so that
  /// E[S_j(k)] = (1, k^T) D (1, k^T)^T.
  Eigen::MatrixXd lag_matrix(int j, int order) const;
  Eigen::MatrixXd lag_matrix(int j) const { return lag_matrix(j, p); }

  /// Applies the linear map alpha -> M alpha to every moment.
  void transform(const Eigen::MatrixXd& M);
};

LatentMoments extract_moments(const SmootherOutput& smooth, int J, int p);

/// Moments from exactly known scores (J x n), with zero covariances.
LatentMoments exact_moments(const Eigen::MatrixXd& alpha, int p);

/// Symmetric pseudo-inverse with eigenvalue cutoff rel_tol * largest |eigenvalue|.
Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& A, double rel_tol = 1e-12);

}  // namespace sfpc
