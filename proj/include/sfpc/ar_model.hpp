#pragma once

#include <Eigen/Dense>

namespace sfpc {

/// Largest modulus among the eigenvalues of the AR(p) companion matrix. The
/// process is stationary iff this is below 1 (all characteristic roots
/// outside the unit circle).
double companion_spectral_radius(const Eigen::VectorXd& k);

/// True when every root of 1 - sum_i k_i x^i has modulus > min_root_modulus.
bool is_stationary(const Eigen::VectorXd& k, double min_root_modulus = 1.0);

/// Autocovariances gamma_0..gamma_max_lag of a stationary AR(p) with unit
/// innovation variance, from the extended Yule-Walker system. Throws
/// StationarityError for a non-stationary k.
Eigen::VectorXd ar_autocovariances(const Eigen::VectorXd& k, int max_lag);

struct ArPrecision {
  Eigen::MatrixXd M;  // inverse Toeplitz(gamma_0..gamma_{p-1})
  double log_det = 0.0;
};

/// Precision of (alpha_1, ..., alpha_p) / sigma under stationarity.
ArPrecision ar_precision(const Eigen::VectorXd& k);

/// Returns k unchanged when stationary; otherwise c * k for the largest
/// c in {0.99, 0.98, ...} whose roots all have modulus >= min_root_modulus.
Eigen::VectorXd stabilize_ar(const Eigen::VectorXd& k, double min_root_modulus = 1.01);

/// Lag-product sums D_{i,k} = sum_{s=0}^{n+1-i-k} a_{i+s} a_{k+s}, i,k = 1..p+1.
Eigen::MatrixXd lag_products(const Eigen::VectorXd& series, int p);

/// Negates the off-diagonal entries of the first row and column, giving the
/// matrix D with S(k) = (1, k^T) D (1, k^T)^T.
Eigen::MatrixXd signed_lag_matrix(const Eigen::MatrixXd& products);

/// S(k) = (1, k^T) D (1, k^T)^T for a signed lag matrix D.
double ar_quadratic(const Eigen::MatrixXd& signed_d, const Eigen::VectorXd& k);

/// Minimizer of S(k): D_p^{-1} d with d = (D_{1,2}, ..., D_{1,p+1}) taken from
/// the unsigned products and D_p the trailing p x p block. Throws
/// ConditioningError when D_p is singular.
Eigen::VectorXd ar_least_squares(const Eigen::MatrixXd& signed_d);

/// Simulates n values of a stationary AR(p) after `burn_in` discarded steps.
template <class Rng>
Eigen::VectorXd simulate_ar(const Eigen::VectorXd& k, double innovation_sd, int n, int burn_in, Rng& rng);

}  // namespace sfpc

#include <random>

namespace sfpc {

template <class Rng>
Eigen::VectorXd simulate_ar(const Eigen::VectorXd& k, double innovation_sd, int n, int burn_in, Rng& rng) {
  std::normal_distribution<double> normal(0.0, innovation_sd);
  const auto p = k.size();
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(p);  // hist[0] = most recent
  Eigen::VectorXd out(n);
  for (int s = 0; s < burn_in + n; ++s) {
    double v = normal(rng);
    for (Eigen::Index i = 0; i < p; ++i) v += k[i] * hist[i];
    for (Eigen::Index i = p - 1; i > 0; --i) hist[i] = hist[i - 1];
    if (p > 0) hist[0] = v;
    if (s >= burn_in) out[s - burn_in] = v;
  }
  return out;
}

}  // namespace sfpc
