#include "sfpc/demean.hpp"

#include <cmath>
#include <limits>

#include "sfpc/error.hpp"
#include "sfpc/model_selection.hpp"

namespace sfpc {
namespace {

struct Coefs {
  Eigen::VectorXd theta, eta;
};

Coefs solve_additive(const ObservationPanel& panel, const ModelBases& bases, double mu_s, double mu_t) {
  if (mu_s < 0.0 || mu_t < 0.0) throw ArgumentError("demeaning penalties must be non-negative");
  const int nb = panel.nb(), nc = panel.nc();
  const int m = nb + nc;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 1, m + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(nc);
  int observed = 0;
  for (int t = 0; t < panel.n(); ++t) {
    if (panel.n_t(t) == 0) continue;
    const Eigen::VectorXd c = panel.C().row(t).transpose();
    const Eigen::VectorXd bsum = panel.B(t).colwise().sum().transpose();
    A.topLeftCorner(nb, nb) += panel.BtB(t);
    A.block(0, nb, nb, nc) += bsum * c.transpose();
    A.block(nb, nb, nc, nc) += panel.n_t(t) * c * c.transpose();
    rhs.head(nb) += panel.Btz(t);
    rhs.segment(nb, nc) += c * panel.z(t).sum();
    a += c;
    ++observed;
  }
  if (observed == 0) throw ArgumentError("demeaning needs at least one observation");
  A.block(nb, 0, nc, nb) = A.block(0, nb, nb, nc).transpose();
  A.topLeftCorner(nb, nb) += mu_s * bases.Gamma;
  A.block(nb, nb, nc, nc) += mu_t * bases.P;
  a /= observed;
  A.block(m, nb, 1, nc) = a.transpose();
  A.block(nb, m, nc, 1) = a;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw ConditioningError("demeaning normal system is singular (add penalty or data)");
  const Eigen::VectorXd x = lu.solve(rhs);
  return {x.head(nb), x.segment(nb, nc)};
}

}  // namespace

DemeanResult demean_two_stage(const ObservationPanel& panel, const ModelBases& bases, double mu_s, double mu_t) {
  const Coefs c = solve_additive(panel, bases, mu_s, mu_t);
  DemeanResult out;
  out.theta_mu = c.theta;
  out.eta_nu = c.eta;
  out.values.resize(static_cast<std::size_t>(panel.n()));
  for (int t = 0; t < panel.n(); ++t) {
    if (panel.n_t(t) == 0) continue;
    const double nu = panel.C().row(t).dot(c.eta);
    out.values[static_cast<std::size_t>(t)] = panel.z(t) - panel.B(t) * c.theta - Eigen::VectorXd::Constant(panel.n_t(t), nu);
  }
  return out;
}

DemeanSelection select_demean_penalties(const ObservationPanel& panel, const ModelBases& bases, int folds,
                                        std::uint64_t seed, const std::vector<double>& log10_grid) {
  if (log10_grid.empty()) throw ArgumentError("demeaning penalty grid is empty");
  const CVPlan plan = CVPlan::make(panel, folds, seed);
  std::vector<ObservationPanel> train;
  for (int f = 0; f < folds; ++f) train.push_back(panel.subset(plan.training_mask(f)));
  DemeanSelection best;
  best.cv = std::numeric_limits<double>::infinity();
  for (double ls : log10_grid) {
    for (double lt : log10_grid) {
      const double mu_s = std::pow(10.0, ls), mu_t = std::pow(10.0, lt);
      double sse = 0.0;
      long count = 0;
      bool ok = true;
      for (int f = 0; f < folds && ok; ++f) {
        Coefs c;
        try {
          c = solve_additive(train[static_cast<std::size_t>(f)], bases, mu_s, mu_t);
        } catch (const ConditioningError&) {
          ok = false;
          break;
        }
        for (int t = 0; t < panel.n(); ++t) {
          const auto& fold = plan.fold_of[static_cast<std::size_t>(t)];
          const double nu = panel.C().row(t).dot(c.eta);
          for (std::size_t i = 0; i < fold.size(); ++i) {
            if (fold[i] != f) continue;
            const double e = panel.z(t)[static_cast<Eigen::Index>(i)] -
                             panel.B(t).row(static_cast<Eigen::Index>(i)).dot(c.theta) - nu;
            sse += e * e;
            ++count;
          }
        }
      }
      if (!ok || count == 0) continue;
      const double cv = sse / count;
      if (cv < best.cv) best = {mu_s, mu_t, cv};
    }
  }
  if (!std::isfinite(best.cv)) throw ConditioningError("no demeaning penalty on the grid gave a solvable system");
  return best;
}

}  // namespace sfpc
