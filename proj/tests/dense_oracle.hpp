#pragma once

// Brute-force joint-Gaussian conditioning for small latent AR(p) factor
// models, used as an independent reference for the Kalman recursions.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct DenseInstance {
  int J = 1, p = 1, n = 4;
  Eigen::MatrixXd K;  // p x J
  Eigen::VectorXd H;  // J
  double sigma2 = 1.0;
  std::vector<Eigen::MatrixXd> G;  // n_t x J per time
  std::vector<Eigen::VectorXd> r;  // n_t per time (observation minus mean)
};

struct DensePosterior {
  Eigen::VectorXd mean;  // stacked alpha_1..alpha_n (nJ)
  Eigen::MatrixXd cov;
  double neg2_loglik = 0.0;
};

// Prior covariance of the stacked scores with a zero pre-sample state.
inline Eigen::MatrixXd prior_cov(const DenseInstance& in) {
  const int N = in.n * in.J;
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(N, N);
  for (int t = 0; t < in.n; ++t)
    for (int l = 1; l <= in.p; ++l)
      if (t - l >= 0)
        for (int j = 0; j < in.J; ++j) L(t * in.J + j, (t - l) * in.J + j) -= in.K(l - 1, j);
  Eigen::VectorXd h(N);
  for (int t = 0; t < in.n; ++t) h.segment(t * in.J, in.J) = in.H;
  const Eigen::MatrixXd Li = L.inverse();
  return Li * h.asDiagonal() * Li.transpose();
}

inline DensePosterior condition(const DenseInstance& in) {
  const int N = in.n * in.J;
  int m = 0;
  for (const auto& v : in.r) m += static_cast<int>(v.size());
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(m, N);
  Eigen::VectorXd y(m);
  int row = 0;
  for (int t = 0; t < in.n; ++t) {
    const auto nt = static_cast<int>(in.r[t].size());
    if (nt == 0) continue;
    Z.block(row, t * in.J, nt, in.J) = in.G[t];
    y.segment(row, nt) = in.r[t];
    row += nt;
  }
  const Eigen::MatrixXd P = prior_cov(in);
  DensePosterior out;
  if (m == 0) {
    out.mean = Eigen::VectorXd::Zero(N);
    out.cov = P;
    return out;
  }
  const Eigen::MatrixXd S = Z * P * Z.transpose() + in.sigma2 * Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd Si = S.inverse();
  out.mean = P * Z.transpose() * Si * y;
  out.cov = P - P * Z.transpose() * Si * Z * P;
  out.neg2_loglik = y.dot(Si * y) + std::log(S.determinant()) + m * std::log(2.0 * std::numbers::pi);
  return out;
}

// E[D_{i,k,j} | z] from the dense posterior, signed as in S_j(k).
inline Eigen::MatrixXd dense_lag_matrix(const DensePosterior& post, int J, int n, int j, int p) {
  auto m2 = [&](int a, int b) {
    return post.mean[a * J + j] * post.mean[b * J + j] + post.cov(a * J + j, b * J + j);
  };
  Eigen::MatrixXd d(p + 1, p + 1);
  for (int i = 1; i <= p + 1; ++i)
    for (int k = 1; k <= p + 1; ++k) {
      double s = 0.0;
      for (int off = 0; off <= n + 1 - i - k; ++off) s += m2(i - 1 + off, k - 1 + off);
      d(i - 1, k - 1) = (i == 1) != (k == 1) ? -s : s;
    }
  return d;
}

}  // namespace oracle
