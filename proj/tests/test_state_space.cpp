#include <gtest/gtest.h>

#include <random>

#include "dense_oracle.hpp"
#include "random_instances.hpp"
#include "sfpc/error.hpp"
#include "sfpc/state_space.hpp"

using namespace sfpc;

namespace {

double max_abs(const Eigen::MatrixXd& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

oracle::DenseInstance truncate(const oracle::DenseInstance& in, int n) {
  oracle::DenseInstance out = in;
  out.n = n;
  out.G.resize(static_cast<std::size_t>(n));
  out.r.resize(static_cast<std::size_t>(n));
  return out;
}

}  // namespace

TEST(KalmanFilter, FilteredMeansMatchDenseConditioningScalarAr1) {
  std::mt19937_64 rng(11);
  auto in = oracle::random_instance(rng, 1, 1, 6, 1);
  for (auto& g : in.G) {  // dense scalar observations
    if (g.rows() == 0) {
      g = Eigen::MatrixXd::Constant(1, 1, 0.7);
    }
  }
  for (std::size_t t = 0; t < in.r.size(); ++t)
    if (in.r[t].size() == 0) in.r[t] = Eigen::VectorXd::Constant(1, 0.3);
  const auto filt = kalman_filter(oracle::to_model(in), oracle::to_obs(in));
  for (int t = 1; t <= in.n; ++t) {
    const auto post = oracle::condition(truncate(in, t));
    EXPECT_NEAR(filt.b_filt[static_cast<std::size_t>(t - 1)][0], post.mean[t - 1], 1e-10);
    EXPECT_NEAR(filt.Q_filt[static_cast<std::size_t>(t - 1)](0, 0), post.cov(t - 1, t - 1), 1e-10);
  }
}

TEST(KalmanFilter, EmptyTimeIsPurePrediction) {
  std::mt19937_64 rng(3);
  auto in = oracle::random_instance(rng, 2, 2, 6, 3);
  in.G[2] = Eigen::MatrixXd(0, 2);
  in.r[2] = Eigen::VectorXd(0);
  const auto filt = kalman_filter(oracle::to_model(in), oracle::to_obs(in));
  EXPECT_EQ(filt.b_filt[2], filt.b_pred[2]);
  EXPECT_EQ(filt.Q_filt[2], filt.Q_pred[2]);
}

TEST(KalmanFilter, NoiselessObservationsRecoverScores) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  StateSpaceModel m;
  m.J = 2;
  m.p = 1;
  m.K = Eigen::MatrixXd(1, 2);
  m.K << 0.5, -0.3;
  m.H = Eigen::Vector2d(1.0, 0.5);
  m.sigma2 = 1e-14;
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  std::vector<CompressedObs> obs;
  std::vector<Eigen::Vector2d> truth;
  for (int t = 0; t < 8; ++t) {
    a = Eigen::Vector2d(0.5 * a[0], -0.3 * a[1]) + Eigen::Vector2d(z(rng), 0.7 * z(rng));
    Eigen::MatrixXd G(3, 2);
    for (int i = 0; i < 6; ++i) G.data()[i] = z(rng);
    obs.push_back(CompressedObs::from_dense(G, G * a));
    truth.push_back(a);
  }
  const auto filt = kalman_filter(m, obs);
  for (std::size_t t = 0; t < truth.size(); ++t) EXPECT_LT((filt.b_filt[t].head(2) - truth[t]).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(KalmanSmoother, MatchesDenseOracleAcrossSmallInstances) {
  std::mt19937_64 rng(2024);
  for (int J : {1, 2})
    for (int p : {1, 2})
      for (int n = 4; n <= 8; ++n) {
        const auto in = oracle::random_instance(rng, J, p, n);
        const auto model = oracle::to_model(in);
        const auto filt = kalman_filter(model, oracle::to_obs(in));
        const auto sm = kalman_smoother(model, filt);
        const auto mo = extract_moments(sm, J, p);
        const auto post = oracle::condition(in);
        for (int t = 0; t < n; ++t) {
          EXPECT_LT(max_abs(mo.alpha.col(t) - post.mean.segment(t * J, J)), 1e-9);
          EXPECT_LT(max_abs(mo.Sigma[static_cast<std::size_t>(t)] - post.cov.block(t * J, t * J, J, J)), 1e-9);
          // covariance monotonicity
          const auto& V = sm.V[static_cast<std::size_t>(t)];
          const auto& Qf = filt.Q_filt[static_cast<std::size_t>(t)];
          for (int i = 0; i < V.rows(); ++i) EXPECT_LE(V(i, i), Qf(i, i) + 1e-10);
        }
        for (int j = 0; j < J; ++j) {
          const Eigen::MatrixXd d = mo.lag_matrix(j);
          EXPECT_LT(max_abs(d - oracle::dense_lag_matrix(post, J, n, j, p)), 1e-9);
          EXPECT_LT(max_abs(d - d.transpose()), 1e-12);
        }
        EXPECT_NEAR(filt.neg2_loglik, post.neg2_loglik, 1e-8);
      }
}

TEST(KalmanSmoother, TerminalStepEqualsFilter) {
  std::mt19937_64 rng(8);
  const auto in = oracle::random_instance(rng, 2, 1, 5);
  const auto model = oracle::to_model(in);
  const auto filt = kalman_filter(model, oracle::to_obs(in));
  const auto sm = kalman_smoother(model, filt);
  EXPECT_EQ(sm.b.back(), filt.b_filt.back());
  EXPECT_EQ(sm.V.back(), filt.Q_filt.back());
}

TEST(KalmanSmoother, DataFreeModelReturnsPrior) {
  std::mt19937_64 rng(9);
  auto in = oracle::random_instance(rng, 2, 2, 6, 0);
  const auto model = oracle::to_model(in);
  const auto filt = kalman_filter(model, oracle::to_obs(in));
  const auto sm = kalman_smoother(model, filt);
  const Eigen::MatrixXd prior = oracle::prior_cov(in);
  for (int t = 0; t < in.n; ++t) {
    EXPECT_LT(max_abs(sm.b[static_cast<std::size_t>(t)]), 1e-14);
    EXPECT_LT(max_abs(sm.V[static_cast<std::size_t>(t)].topLeftCorner(2, 2) - prior.block(2 * t, 2 * t, 2, 2)), 1e-10);
  }
  EXPECT_EQ(filt.neg2_loglik, 0.0);
}

TEST(KalmanFilter, DeletingOneTimeOnlyChangesItsCorrection) {
  std::mt19937_64 rng(21);
  auto in = oracle::random_instance(rng, 1, 2, 7, 3);
  in.G[3] = Eigen::MatrixXd::Ones(2, 1);
  in.r[3] = Eigen::VectorXd::Ones(2);
  const auto model = oracle::to_model(in);
  const auto full = kalman_filter(model, oracle::to_obs(in));
  auto gap = in;
  gap.G[3] = Eigen::MatrixXd(0, 1);
  gap.r[3] = Eigen::VectorXd(0);
  const auto holed = kalman_filter(model, oracle::to_obs(gap));
  for (int t = 0; t < 3; ++t) EXPECT_EQ(full.b_filt[static_cast<std::size_t>(t)], holed.b_filt[static_cast<std::size_t>(t)]);
  EXPECT_EQ(full.b_pred[3], holed.b_pred[3]);
  EXPECT_EQ(holed.b_filt[3], holed.b_pred[3]);
}

TEST(ExtractMoments, ExactScoresGivePlainLagSums) {
  Eigen::MatrixXd a(1, 6);
  a << 1.0, -2.0, 0.5, 3.0, 1.5, -1.0;
  const auto mo = exact_moments(a, 2);
  const Eigen::MatrixXd d = mo.lag_matrix(0);
  // direct loop
  const int n = 6;
  for (int i = 1; i <= 3; ++i)
    for (int k = 1; k <= 3; ++k) {
      double s = 0.0;
      for (int t = i; t <= n + 1 - k; ++t) {
        const int u = t + k - i;
        if (u >= 1 && u <= n) s += a(0, t - 1) * a(0, u - 1);
      }
      const double sign = (i == 1) != (k == 1) ? -1.0 : 1.0;
      EXPECT_NEAR(d(i - 1, k - 1), sign * s, 1e-12);
    }
}

TEST(KalmanFilter, RejectsNonFiniteInput) {
  std::mt19937_64 rng(1);
  auto in = oracle::random_instance(rng, 1, 1, 4, 2);
  auto model = oracle::to_model(in);
  model.sigma2 = std::nan("");
  EXPECT_THROW(kalman_filter(model, oracle::to_obs(in)), NumericError);
}
