#include "sfpc/ar_model.hpp"

#include <cmath>

#include "sfpc/error.hpp"

namespace sfpc {

double companion_spectral_radius(const Eigen::VectorXd& k) {
  const auto p = k.size();
  if (p == 0) return 0.0;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p, p);
  c.row(0) = k.transpose();
  for (Eigen::Index i = 1; i < p; ++i) c(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(c, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_stationary(const Eigen::VectorXd& k, double min_root_modulus) {
  if (!k.allFinite()) return false;
  return companion_spectral_radius(k) < 1.0 / min_root_modulus;
}

Eigen::VectorXd ar_autocovariances(const Eigen::VectorXd& k, int max_lag) {
  if (!is_stationary(k)) throw StationarityError("AR coefficients are not stationary");
  const auto p = static_cast<int>(k.size());
  // gamma_h - sum_i k_i gamma_{|h-i|} = [h == 0], h = 0..p.
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(p + 1, p + 1);
  for (int h = 0; h <= p; ++h) {
    for (int i = 1; i <= p; ++i) a(h, std::abs(h - i)) -= k[i - 1];
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + 1);
  rhs[0] = 1.0;
  const Eigen::VectorXd g0 = a.fullPivLu().solve(rhs);
  Eigen::VectorXd g(std::max(max_lag, p) + 1);
  g.head(p + 1) = g0;
  for (int h = p + 1; h < g.size(); ++h) {
    double v = 0.0;
    for (int i = 1; i <= p; ++i) v += k[i - 1] * g[h - i];
    g[h] = v;
  }
  return g.head(max_lag + 1);
}

ArPrecision ar_precision(const Eigen::VectorXd& k) {
  const auto p = static_cast<int>(k.size());
  if (p == 0) return {Eigen::MatrixXd(0, 0), 0.0};
  const Eigen::VectorXd g = ar_autocovariances(k, p - 1);
  Eigen::MatrixXd toeplitz(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) toeplitz(i, j) = g[std::abs(i - j)];
  Eigen::LLT<Eigen::MatrixXd> llt(toeplitz);
  if (llt.info() != Eigen::Success) throw StationarityError("autocovariance matrix is not positive definite");
  ArPrecision out;
  out.M = llt.solve(Eigen::MatrixXd::Identity(p, p));
  out.M = 0.5 * (out.M + out.M.transpose());
  double logdet = 0.0;
  for (int i = 0; i < p; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  out.log_det = -logdet;
  return out;
}

Eigen::VectorXd stabilize_ar(const Eigen::VectorXd& k, double min_root_modulus) {
  if (is_stationary(k)) return k;
  for (int step = 99; step >= 0; --step) {
    const Eigen::VectorXd scaled = (step / 100.0) * k;
    if (is_stationary(scaled, min_root_modulus)) return scaled;
  }
  return Eigen::VectorXd::Zero(k.size());
}

Eigen::MatrixXd lag_products(const Eigen::VectorXd& series, int p) {
  const auto n = static_cast<int>(series.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(p + 1, p + 1);
  for (int i = 1; i <= p + 1; ++i) {
    for (int k = i; k <= p + 1; ++k) {
      double s = 0.0;
      for (int off = 0; off <= n + 1 - i - k; ++off) s += series[i - 1 + off] * series[k - 1 + off];
      d(i - 1, k - 1) = s;
      d(k - 1, i - 1) = s;
    }
  }
  return d;
}

Eigen::MatrixXd signed_lag_matrix(const Eigen::MatrixXd& products) {
  Eigen::MatrixXd d = products;
  for (Eigen::Index i = 1; i < d.rows(); ++i) {
    d(0, i) = -d(0, i);
    d(i, 0) = -d(i, 0);
  }
  return d;
}

double ar_quadratic(const Eigen::MatrixXd& signed_d, const Eigen::VectorXd& k) {
  Eigen::VectorXd v(k.size() + 1);
  v[0] = 1.0;
  v.tail(k.size()) = k;
  return v.dot(signed_d * v);
}

Eigen::VectorXd ar_least_squares(const Eigen::MatrixXd& signed_d) {
  const Eigen::Index p = signed_d.rows() - 1;
  const Eigen::MatrixXd dp = signed_d.bottomRightCorner(p, p);
  const Eigen::VectorXd d = -signed_d.row(0).tail(p).transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(dp);
  const double scale = std::max(1e-300, dp.diagonal().cwiseAbs().maxCoeff());
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-12 * scale)
    throw ConditioningError("lag-product matrix for the AR update is singular");
  return ldlt.solve(d);
}

}  // namespace sfpc
