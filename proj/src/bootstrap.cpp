#include "sfpc/bootstrap.hpp"

#include <cmath>
#include <random>

#include "sfpc/ar_model.hpp"
#include "sfpc/error.hpp"
#include "sfpc/parallel.hpp"

namespace sfpc {

std::vector<Eigen::VectorXd> bootstrap_sample(const FittedModel& model, const ObservationPanel& panel,
                                              const std::vector<Eigen::VectorXd>& residuals, int burn_in,
                                              std::uint64_t seed) {
  const auto& prm = model.params;
  const int n = panel.n();
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd alpha = Eigen::MatrixXd::Zero(prm.J(), n);
  for (int j = 0; j < prm.J(); ++j) {
    if (prm.sigma_j2[j] > 0.0)
      alpha.row(j) = simulate_ar(Eigen::VectorXd(prm.K.col(j)), std::sqrt(prm.sigma_j2[j]), n, burn_in, rng).transpose();
  }
  std::vector<Eigen::VectorXd> values(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    const int m = panel.n_t(t);
    if (m == 0) continue;
    const double s = prm.theta_c.dot(panel.C().row(t).transpose());
    Eigen::VectorXd z = panel.B(t) * (prm.theta_b * s + prm.Theta * alpha.col(t));
    const Eigen::VectorXd& r = residuals[static_cast<std::size_t>(t)];
    std::uniform_int_distribution<int> pick(0, m - 1);
    for (int i = 0; i < m; ++i) z[i] += r[pick(rng)];
    values[static_cast<std::size_t>(t)] = std::move(z);
  }
  return values;
}

BootstrapResult bootstrap_sd(const FittedModel& model, const ObservationPanel& panel, const BootstrapConfig& config) {
  if (config.replicates < 2) throw ArgumentError("bootstrap needs at least 2 replicates");
  if (config.grid.empty()) throw ArgumentError("bootstrap needs a non-empty grid");
  const Eigen::MatrixXd Bg = model.bases->spatial.eval_design(config.grid);
  const Eigen::MatrixXd original = Bg * model.params.Theta;
  const int J = model.params.J();
  const auto res = residuals(model, panel);

  std::vector<Eigen::MatrixXd> pcs(static_cast<std::size_t>(config.replicates));
  std::vector<std::string> errors(static_cast<std::size_t>(config.replicates));
  parallel_for(config.replicates, [&](int b) {
    try {
      const std::uint64_t seed = config.identical_seeds ? config.seed : split_seed(config.seed, static_cast<std::uint64_t>(b));
      const ObservationPanel boot = panel.with_values(bootstrap_sample(model, panel, res, config.burn_in, seed));
      const FittedModel m = fit(boot, model.bases, model.config);
      Eigen::MatrixXd v = Bg * m.params.Theta;
      for (int j = 0; j < J; ++j)
        if (v.col(j).dot(original.col(j)) < 0.0) v.col(j) *= -1.0;
      pcs[static_cast<std::size_t>(b)] = std::move(v);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(b)] = e.what();
    }
  });

  BootstrapResult out;
  const auto rows = static_cast<Eigen::Index>(config.grid.size());
  std::vector<const Eigen::MatrixXd*> done;
  for (int b = 0; b < config.replicates; ++b) {
    if (pcs[static_cast<std::size_t>(b)].size() == 0)
      out.failures.push_back("replicate " + std::to_string(b) + ": " + errors[static_cast<std::size_t>(b)]);
    else
      done.push_back(&pcs[static_cast<std::size_t>(b)]);
  }
  out.completed = static_cast<int>(done.size());
  if (out.completed < 2) throw FitError("bootstrap: fewer than two replicates completed");
  // Shifted by the first replicate so identical replicates give exactly zero.
  const Eigen::MatrixXd& ref = *done.front();
  Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(rows, J);
  for (const auto* v : done) shift += *v - ref;
  shift /= out.completed;
  Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(rows, J);
  for (const auto* v : done) ss += (*v - ref - shift).cwiseAbs2();
  out.mean = ref + shift;
  out.sd = (ss / (out.completed - 1.0)).cwiseSqrt();
  return out;
}

}  // namespace sfpc
