#include <algorithm>

#include <gtest/gtest.h>

#include "em_fixture.hpp"
#include "sfpc/bootstrap.hpp"
#include "sfpc/error.hpp"

using namespace sfpc;

namespace {

struct Fitted {
  fixture::Problem pr;
  FittedModel model;
};

const Fitted& fitted() {
  static const Fitted f = [] {
    Fitted out{fixture::make_problem(41, 2, 1, 30, 12), {}};
    FitConfig cfg;
    cfg.J = 2;
    cfg.p = 1;
    cfg.max_iter = 15;
    cfg.penalties = {1e-3, 1e-3, 1e-3};
    out.model = fit(out.pr.panel, out.pr.bases, cfg);
    return out;
  }();
  return f;
}

std::vector<Point2> small_grid() {
  std::vector<Point2> g;
  for (double x : {0.1, 0.3, 1.7, 1.9})
    for (double y : {0.2, 1.0, 1.8}) g.push_back({x, y});
  return g;
}

}  // namespace

TEST(BootstrapSample, NoScoresNoResidualsGivesMeanSurface) {
  const auto& f = fitted();
  FittedModel m = f.model;
  m.params.sigma_j2.setZero();
  std::vector<Eigen::VectorXd> zero;
  for (int t = 0; t < f.pr.panel.n(); ++t) zero.push_back(Eigen::VectorXd::Zero(f.pr.panel.n_t(t)));
  const auto v = bootstrap_sample(m, f.pr.panel, zero, 50, 3);
  for (int t = 0; t < f.pr.panel.n(); ++t) {
    const double s = m.params.theta_c.dot(f.pr.panel.c(t));
    const Eigen::VectorXd mean = f.pr.panel.B(t) * m.params.theta_b * s;
    EXPECT_LT((v[static_cast<std::size_t>(t)] - mean).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BootstrapSample, ResidualsDrawnWithinTime) {
  const auto& f = fitted();
  FittedModel m = f.model;
  m.params.sigma_j2.setZero();
  const auto res = residuals(m, f.pr.panel);
  const auto v = bootstrap_sample(m, f.pr.panel, res, 50, 4);
  for (int t = 0; t < f.pr.panel.n(); ++t) {
    const double s = m.params.theta_c.dot(f.pr.panel.c(t));
    const Eigen::VectorXd d = v[static_cast<std::size_t>(t)] - f.pr.panel.B(t) * m.params.theta_b * s;
    const Eigen::VectorXd& r = res[static_cast<std::size_t>(t)];
    for (double x : d) {
      const bool found = std::any_of(r.begin(), r.end(), [&](double y) { return std::abs(x - y) < 1e-10; });
      EXPECT_TRUE(found) << "t=" << t;
    }
  }
  EXPECT_EQ(v[0], bootstrap_sample(m, f.pr.panel, res, 50, 4)[0]);
}

TEST(Bootstrap, IdenticalSeedsGiveZeroSd) {
  const auto& f = fitted();
  BootstrapConfig c;
  c.replicates = 3;
  c.grid = small_grid();
  c.burn_in = 50;
  c.identical_seeds = true;
  const BootstrapResult r = bootstrap_sd(f.model, f.pr.panel, c);
  EXPECT_EQ(r.completed, 3);
  EXPECT_EQ(r.sd.maxCoeff(), 0.0);
}

TEST(Bootstrap, DeterministicAlignedAndFinite) {
  const auto& f = fitted();
  BootstrapConfig c;
  c.replicates = 4;
  c.seed = 17;
  c.grid = small_grid();
  c.burn_in = 50;
  const BootstrapResult a = bootstrap_sd(f.model, f.pr.panel, c), b = bootstrap_sd(f.model, f.pr.panel, c);
  EXPECT_EQ(a.sd, b.sd);
  ASSERT_EQ(a.sd.rows(), 12);
  ASSERT_EQ(a.sd.cols(), 2);
  EXPECT_TRUE(a.sd.allFinite());
  EXPECT_GE(a.sd.minCoeff(), 0.0);
  EXPECT_GT(a.sd.maxCoeff(), 0.0);
  const Eigen::MatrixXd orig = f.model.bases->spatial.eval_design(c.grid) * f.model.params.Theta;
  for (int j = 0; j < 2; ++j) EXPECT_GT(a.mean.col(j).dot(orig.col(j)), 0.0);
}

TEST(Bootstrap, RejectsBadConfig) {
  const auto& f = fitted();
  BootstrapConfig c;
  c.replicates = 1;
  c.grid = small_grid();
  EXPECT_THROW(bootstrap_sd(f.model, f.pr.panel, c), ArgumentError);
  c.replicates = 3;
  c.grid.clear();
  EXPECT_THROW(bootstrap_sd(f.model, f.pr.panel, c), ArgumentError);
}
