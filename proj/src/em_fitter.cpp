#include "sfpc/em_fitter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sfpc/ar_model.hpp"
#include "sfpc/error.hpp"

namespace sfpc {
namespace {

Eigen::LLT<Eigen::MatrixXd> spd_factor(const Eigen::MatrixXd& A, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (A + A.transpose()));
  if (llt.info() != Eigen::Success) throw ConditioningError(std::string(what) + ": normal matrix is not positive definite");
  return llt;
}

double score(const ModelParams& params, const ObservationPanel& panel, int t) {
  return params.theta_c.dot(panel.C().row(t).transpose());
}

// Coefficient vector of the fitted surface at time t given scores a.
Eigen::VectorXd surface_coef(const ModelParams& params, double s, const Eigen::VectorXd& a) {
  return params.theta_b * s + params.Theta * a;
}

double largest_entry_sign(const Eigen::VectorXd& v) {
  Eigen::Index i = 0;
  v.cwiseAbs().maxCoeff(&i);
  return v[i] < 0.0 ? -1.0 : 1.0;
}

void canonicalize_mean_sign(ModelParams& params) {
  if (largest_entry_sign(params.theta_b) < 0.0) {
    params.theta_b = -params.theta_b;
    params.theta_c = -params.theta_c;
  }
}

// Reorders components so that sigma_j2 is decreasing; scores follow.
bool sort_components(ModelParams& params, LatentMoments* moments) {
  const int J = params.J();
  std::vector<int> order(static_cast<std::size_t>(J));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return params.sigma_j2[a] > params.sigma_j2[b]; });
  bool identity = true;
  for (int j = 0; j < J; ++j) identity = identity && order[static_cast<std::size_t>(j)] == j;
  if (identity) return false;
  Eigen::MatrixXd perm = Eigen::MatrixXd::Zero(J, J);
  for (int j = 0; j < J; ++j) perm(j, order[static_cast<std::size_t>(j)]) = 1.0;
  params.Theta = params.Theta * perm.transpose();
  params.sigma_j2 = perm * params.sigma_j2;
  params.K = params.K * perm.transpose();
  if (moments) moments->transform(perm);
  return true;
}

}  // namespace

std::shared_ptr<const ModelBases> ModelBases::build(const Triangulation& mesh, int degree, int smoothness,
                                                    const TemporalSpec& temporal, int n) {
  auto b = std::make_shared<ModelBases>();
  b->spatial = BivariateBasis::build(mesh, degree, smoothness);
  b->temporal = TemporalBasis::build(temporal, n);
  b->Gamma = degree >= 2 ? b->spatial.energy() : Eigen::MatrixXd::Zero(b->spatial.size(), b->spatial.size());
  b->P = curvature_matrix(b->temporal);
  return b;
}

double neg2_complete_loglik(const ModelParams& params, const ObservationPanel& panel, const Eigen::MatrixXd& alpha) {
  const int n = panel.n();
  if (alpha.cols() != n || alpha.rows() != params.J()) throw ArgumentError("score matrix must be J x n");
  double obs = 0.0;
  long total = 0;
  for (int t = 0; t < n; ++t) {
    if (panel.n_t(t) == 0) continue;
    const Eigen::VectorXd r =
        panel.z(t) - panel.B(t) * surface_coef(params, score(params, panel, t), alpha.col(t));
    obs += r.squaredNorm();
    total += panel.n_t(t);
  }
  double val = obs / params.sigma2 + static_cast<double>(total) * std::log(params.sigma2);
  const LatentMoments exact = exact_moments(alpha, params.p());
  for (int j = 0; j < params.J(); ++j) {
    const Eigen::VectorXd k = params.K.col(j);
    const ArPrecision prec = ar_precision(k);
    val += n * std::log(params.sigma_j2[j]) - prec.log_det + ar_quadratic(exact.lag_matrix(j), k) / params.sigma_j2[j];
  }
  return val;
}

StateSpaceModel make_state_space(const ModelParams& params, bool stationary_init) {
  StateSpaceModel m;
  m.J = params.J();
  m.p = params.p();
  m.K = params.K;
  m.H = params.sigma_j2;
  m.sigma2 = params.sigma2;
  m.stationary_init = stationary_init;
  return m;
}

std::vector<CompressedObs> compress_observations(const ModelParams& params, const ObservationPanel& panel) {
  std::vector<CompressedObs> out(static_cast<std::size_t>(panel.n()));
  for (int t = 0; t < panel.n(); ++t) {
    auto& o = out[static_cast<std::size_t>(t)];
    o.n = panel.n_t(t);
    if (o.n == 0) {
      o.W = Eigen::MatrixXd::Zero(params.J(), params.J());
      o.g = Eigen::VectorXd::Zero(params.J());
      continue;
    }
    const Eigen::MatrixXd G = panel.B(t) * params.Theta;
    const Eigen::VectorXd r = panel.z(t) - panel.B(t) * (params.theta_b * score(params, panel, t));
    o.W = G.transpose() * G;
    o.g = G.transpose() * r;
    o.rr = r.squaredNorm();
  }
  return out;
}

EStepResult e_step_full(const ModelParams& params, const ObservationPanel& panel, bool stationary_init) {
  const StateSpaceModel model = make_state_space(params, stationary_init);
  const FilterOutput filt = kalman_filter(model, compress_observations(params, panel));
  const SmootherOutput sm = kalman_smoother(model, filt);
  EStepResult out;
  out.moments = extract_moments(sm, params.J(), params.p());
  out.neg2_loglik = filt.neg2_loglik;
  if (!sm.b.empty()) {
    out.final_state = sm.b.back();
    out.final_state_cov = sm.V.back();
  }
  return out;
}

LatentMoments e_step(const ModelParams& params, const ObservationPanel& panel, bool stationary_init) {
  return e_step_full(params, panel, stationary_init).moments;
}

double q_value(const ModelParams& params, const LatentMoments& moments, const Penalties& penalties,
               const ObservationPanel& panel, const ModelBases& bases, bool include_ar_logdet) {
  const int n = panel.n();
  double fit = 0.0;
  long total = 0;
  for (int t = 0; t < n; ++t) {
    if (panel.n_t(t) == 0) continue;
    const Eigen::VectorXd r =
        panel.z(t) - panel.B(t) * surface_coef(params, score(params, panel, t), moments.alpha.col(t));
    const Eigen::MatrixXd W = params.Theta.transpose() * panel.BtB(t) * params.Theta;
    fit += r.squaredNorm() + (moments.Sigma[static_cast<std::size_t>(t)].cwiseProduct(W)).sum();
    total += panel.n_t(t);
  }
  double q = fit / params.sigma2 + static_cast<double>(total) * std::log(params.sigma2);
  for (int j = 0; j < params.J(); ++j) {
    const Eigen::VectorXd k = params.K.col(j);
    q += n * std::log(params.sigma_j2[j]) + ar_quadratic(moments.lag_matrix(j, params.p()), k) / params.sigma_j2[j];
    if (include_ar_logdet) q -= ar_precision(k).log_det;
  }
  q += penalties.mu_s * params.theta_b.dot(bases.Gamma * params.theta_b);
  q += penalties.mu_t * params.theta_c.dot(bases.P * params.theta_c);
  q += penalties.pc * (params.Theta.transpose() * bases.Gamma * params.Theta).trace();
  return q;
}

SphereResult sphere_minimize(const Eigen::MatrixXd& A, const Eigen::VectorXd& m, const Eigen::VectorXd& start,
                             const SphereOptions& opts) {
  const Eigen::VectorXd Am = A * m;
  const double mAm = m.dot(Am);
  auto f = [&](const Eigen::VectorXd& x) { return x.dot(A * x) - 2.0 * x.dot(Am) + mAm; };
  auto proj_grad = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd g = A * x - Am;
    return Eigen::VectorXd(-2.0 * (g - x * x.dot(g)));
  };
  SphereResult res;
  Eigen::VectorXd x = start.normalized();
  double fx = f(x);
  res.objective.push_back(fx);
  for (int it = 0; it < opts.max_iter; ++it) {
    const Eigen::VectorXd eta = proj_grad(x);
    const double eta2 = eta.squaredNorm();
    if (eta2 == 0.0) break;
    double step = 1.0;
    Eigen::VectorXd next;
    double fn = fx;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      next = (x + step * eta).normalized();
      fn = f(next);
      if (fn <= fx - opts.gamma * step * eta2) {
        accepted = true;
        break;
      }
      step *= opts.beta;
    }
    if (!accepted) break;
    const double move = (next - x).norm();
    x = next;
    fx = fn;
    res.objective.push_back(fx);
    res.iterations = it + 1;
    if (move < opts.tol) break;
  }
  res.theta = x;
  res.grad_norm = proj_grad(x).norm();
  return res;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> theta_b_system(const ModelParams& params, const LatentMoments& moments,
                                                          const ObservationPanel& panel, const Penalties& penalties,
                                                          const ModelBases& bases) {
  const int nb = panel.nb();
  Eigen::MatrixXd A = params.sigma2 * penalties.mu_s * bases.Gamma;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nb);
  for (int t = 0; t < panel.n(); ++t) {
    if (panel.n_t(t) == 0) continue;
    const double s = score(params, panel, t);
    A.noalias() += (s * s) * panel.BtB(t);
    rhs.noalias() += s * (panel.Btz(t) - panel.BtB(t) * (params.Theta * moments.alpha.col(t)));
  }
  A = 0.5 * (A + A.transpose());
  const auto llt = spd_factor(A, "theta_b update");
  return {A, llt.solve(rhs)};
}

SphereResult update_theta_b(const ModelParams& params, const LatentMoments& moments, const ObservationPanel& panel,
                            const Penalties& penalties, const ModelBases& bases, const SphereOptions& opts) {
  const auto [A, m] = theta_b_system(params, moments, panel, penalties, bases);
  return sphere_minimize(A, m, params.theta_b, opts);
}

Eigen::VectorXd update_theta_c(const ModelParams& params, const LatentMoments& moments, const ObservationPanel& panel,
                               const Penalties& penalties, const ModelBases& bases) {
  const int nc = panel.nc();
  Eigen::MatrixXd A = params.sigma2 * penalties.mu_t * bases.P;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nc);
  for (int t = 0; t < panel.n(); ++t) {
    if (panel.n_t(t) == 0) continue;
    const Eigen::VectorXd c = panel.C().row(t).transpose();
    const Eigen::VectorXd Bb = panel.BtB(t) * params.theta_b;
    A.noalias() += params.theta_b.dot(Bb) * c * c.transpose();
    rhs.noalias() += c * (params.theta_b.dot(panel.Btz(t)) - Bb.dot(params.Theta * moments.alpha.col(t)));
  }
  return spd_factor(A, "theta_c update").solve(rhs);
}

double update_sigma2(const ModelParams& params, const LatentMoments& moments, const ObservationPanel& panel) {
  double s = 0.0;
  long total = 0;
  for (int t = 0; t < panel.n(); ++t) {
    if (panel.n_t(t) == 0) continue;
    const Eigen::VectorXd r =
        panel.z(t) - panel.B(t) * surface_coef(params, score(params, panel, t), moments.alpha.col(t));
    const Eigen::MatrixXd W = params.Theta.transpose() * panel.BtB(t) * params.Theta;
    s += r.squaredNorm() + (moments.Sigma[static_cast<std::size_t>(t)].cwiseProduct(W)).sum();
    total += panel.n_t(t);
  }
  if (total == 0) throw ArgumentError("sigma^2 update needs at least one observation");
  return s / static_cast<double>(total);
}

Eigen::MatrixXd update_Theta_columns(const ModelParams& params, const LatentMoments& moments,
                                     const ObservationPanel& panel, const Penalties& penalties,
                                     const ModelBases& bases) {
  const int J = params.J();
  const int nb = panel.nb();
  Eigen::MatrixXd Theta = params.Theta;
  // Residual against the mean, projected: B^T (z - B theta_b s).
  std::vector<Eigen::VectorXd> proj(static_cast<std::size_t>(panel.n()));
  for (int t = 0; t < panel.n(); ++t) {
    if (panel.n_t(t) == 0) continue;
    proj[static_cast<std::size_t>(t)] = panel.Btz(t) - panel.BtB(t) * params.theta_b * score(params, panel, t);
  }
  for (int j = 0; j < J; ++j) {
    Eigen::MatrixXd A = params.sigma2 * penalties.pc * bases.Gamma;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nb);
    for (int t = 0; t < panel.n(); ++t) {
      if (panel.n_t(t) == 0) continue;
      const auto& Sig = moments.Sigma[static_cast<std::size_t>(t)];
      const Eigen::VectorXd a = moments.alpha.col(t);
      A.noalias() += (a[j] * a[j] + Sig(j, j)) * panel.BtB(t);
      Eigen::VectorXd other = Eigen::VectorXd::Zero(nb);
      for (int jp = 0; jp < J; ++jp) {
        if (jp == j) continue;
        other += (a[jp] * a[j] + Sig(jp, j)) * Theta.col(jp);
      }
      rhs.noalias() += a[j] * proj[static_cast<std::size_t>(t)] - panel.BtB(t) * other;
    }
    Theta.col(j) = spd_factor(A, "Theta column update").solve(rhs);
  }
  return Theta;
}

Reorthonormalized reorthonormalize(const Eigen::MatrixXd& Theta_hat, const Eigen::VectorXd& H) {
  const auto J = Theta_hat.cols();
  if (H.size() != J || (H.array() <= 0.0).any()) throw ArgumentError("reorthonormalization needs J positive variances");
  const Eigen::MatrixXd X = Theta_hat * H.cwiseSqrt().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU);
  Reorthonormalized out;
  out.Theta = svd.matrixU();
  out.H = svd.singularValues().cwiseAbs2();
  for (Eigen::Index j = 0; j < J; ++j) {
    if (largest_entry_sign(out.Theta.col(j)) < 0.0) out.Theta.col(j) *= -1.0;
  }
  for (Eigen::Index j = 0; j + 1 < J; ++j) {
    if (out.H[j] - out.H[j + 1] <= 1e-10 * std::max(1.0, out.H[j])) out.near_tie = true;
  }
  out.M = out.Theta.transpose() * Theta_hat;
  return out;
}

Eigen::VectorXd update_sigma_j2(const ModelParams& params, const LatentMoments& moments) {
  Eigen::VectorXd s(params.J());
  for (int j = 0; j < params.J(); ++j)
    s[j] = ar_quadratic(moments.lag_matrix(j, params.p()), params.K.col(j)) / moments.n();
  return s;
}

Eigen::MatrixXd update_K(const LatentMoments& moments, int p) {
  Eigen::MatrixXd K(p, moments.J);
  for (int j = 0; j < moments.J; ++j) K.col(j) = stabilize_ar(ar_least_squares(moments.lag_matrix(j, p)));
  return K;
}

ModelParams initialize(const ObservationPanel& panel, const ModelBases& bases, const FitConfig& config) {
  const int nb = panel.nb();
  const int nc = panel.nc();
  const int J = config.J;
  const int p = config.freeze_K ? 1 : config.p;
  if (J < 1 || J > nb) throw ArgumentError("J must be between 1 and the spatial basis size");
  if (p < 1) throw ArgumentError("AR order p must be at least 1");
  if (panel.total() == 0) throw ArgumentError("panel has no observations");
  const double ridge = config.init_ridge;
  const auto& pen = config.penalties;

  // Mean: pooled surface, then alternate theta_c / theta_b.
  ModelParams params;
  {
    Eigen::MatrixXd A = pen.mu_s * bases.Gamma + ridge * Eigen::MatrixXd::Identity(nb, nb);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nb);
    for (int t = 0; t < panel.n(); ++t) {
      A += panel.BtB(t);
      rhs += panel.Btz(t);
    }
    Eigen::VectorXd tb = spd_factor(A, "initial mean").solve(rhs);
    if (!(tb.norm() > 0.0)) tb = Eigen::VectorXd::Unit(nb, 0);
    params.theta_b = tb.normalized();
  }
  for (int round = 0; round < 5; ++round) {
    Eigen::MatrixXd Ac = pen.mu_t * bases.P + ridge * Eigen::MatrixXd::Identity(nc, nc);
    Eigen::VectorXd rc = Eigen::VectorXd::Zero(nc);
    for (int t = 0; t < panel.n(); ++t) {
      if (panel.n_t(t) == 0) continue;
      const Eigen::VectorXd c = panel.C().row(t).transpose();
      Ac += params.theta_b.dot(panel.BtB(t) * params.theta_b) * c * c.transpose();
      rc += c * params.theta_b.dot(panel.Btz(t));
    }
    params.theta_c = spd_factor(Ac, "initial mean").solve(rc);
    Eigen::MatrixXd Ab = pen.mu_s * bases.Gamma + ridge * Eigen::MatrixXd::Identity(nb, nb);
    Eigen::VectorXd rb = Eigen::VectorXd::Zero(nb);
    for (int t = 0; t < panel.n(); ++t) {
      if (panel.n_t(t) == 0) continue;
      const double s = params.theta_c.dot(panel.C().row(t).transpose());
      Ab += s * s * panel.BtB(t);
      rb += s * panel.Btz(t);
    }
    const Eigen::VectorXd tb = spd_factor(Ab, "initial mean").solve(rb);
    if (!(tb.norm() > 0.0)) break;
    params.theta_b = tb.normalized();
  }
  {
    // Refresh theta_c for the final theta_b.
    Eigen::MatrixXd Ac = pen.mu_t * bases.P + ridge * Eigen::MatrixXd::Identity(nc, nc);
    Eigen::VectorXd rc = Eigen::VectorXd::Zero(nc);
    for (int t = 0; t < panel.n(); ++t) {
      if (panel.n_t(t) == 0) continue;
      const Eigen::VectorXd c = panel.C().row(t).transpose();
      Ac += params.theta_b.dot(panel.BtB(t) * params.theta_b) * c * c.transpose();
      rc += c * params.theta_b.dot(panel.Btz(t));
    }
    params.theta_c = spd_factor(Ac, "initial mean").solve(rc);
  }
  canonicalize_mean_sign(params);

  // Per-time ridge coefficients of the residual surfaces.
  Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(nb, panel.n());
  const Eigen::MatrixXd reg = ridge * Eigen::MatrixXd::Identity(nb, nb) + pen.pc * bases.Gamma;
  std::vector<Eigen::VectorXd> resid(static_cast<std::size_t>(panel.n()));
  for (int t = 0; t < panel.n(); ++t) {
    if (panel.n_t(t) == 0) continue;
    const double s = params.theta_c.dot(panel.C().row(t).transpose());
    resid[static_cast<std::size_t>(t)] = panel.z(t) - panel.B(t) * params.theta_b * s;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(panel.BtB(t) + reg);
    coef.col(t) = ldlt.solve(panel.B(t).transpose() * resid[static_cast<std::size_t>(t)]);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(coef, Eigen::ComputeThinU);
  params.Theta = svd.matrixU().leftCols(J);
  for (int j = 0; j < J; ++j)
    if (largest_entry_sign(params.Theta.col(j)) < 0.0) params.Theta.col(j) *= -1.0;

  Eigen::MatrixXd alpha = Eigen::MatrixXd::Zero(J, panel.n());
  double rss = 0.0;
  long total = 0;
  for (int t = 0; t < panel.n(); ++t) {
    if (panel.n_t(t) == 0) continue;
    const Eigen::MatrixXd G = panel.B(t) * params.Theta;
    const Eigen::MatrixXd W = G.transpose() * G + ridge * Eigen::MatrixXd::Identity(J, J);
    alpha.col(t) = W.ldlt().solve(G.transpose() * resid[static_cast<std::size_t>(t)]);
    rss += (resid[static_cast<std::size_t>(t)] - G * alpha.col(t)).squaredNorm();
    total += panel.n_t(t);
  }
  params.sigma2 = std::max(rss / static_cast<double>(total), 1e-8);
  params.sigma_j2.resize(J);
  for (int j = 0; j < J; ++j) {
    const Eigen::RowVectorXd row = alpha.row(j);
    const double mean = row.mean();
    params.sigma_j2[j] = std::max((row.array() - mean).square().sum() / std::max(1, panel.n() - 1), 1e-8);
  }
  params.K = Eigen::MatrixXd::Zero(p, J);
  sort_components(params, nullptr);
  for (int j = 1; j < J; ++j) {
    if (params.sigma_j2[j] >= params.sigma_j2[j - 1]) params.sigma_j2[j] = params.sigma_j2[j - 1] * (1.0 - 1e-6);
  }
  return params;
}

std::string check_invariants(const ModelParams& params, double tol) {
  std::ostringstream msg;
  if (std::abs(params.theta_b.norm() - 1.0) > 1e-10) msg << "theta_b not unit norm; ";
  const int J = params.J();
  const double orth = (params.Theta.transpose() * params.Theta - Eigen::MatrixXd::Identity(J, J)).cwiseAbs().maxCoeff();
  if (orth > tol) msg << "Theta not orthonormal (" << orth << "); ";
  for (int j = 1; j < J; ++j)
    if (!(params.sigma_j2[j] < params.sigma_j2[j - 1])) msg << "sigma_j2 not strictly decreasing; ";
  if ((params.sigma_j2.array() <= 0.0).any()) msg << "sigma_j2 not positive; ";
  if (!(params.sigma2 > 0.0)) msg << "sigma2 not positive; ";
  for (int j = 0; j < J; ++j)
    if (!is_stationary(params.K.col(j))) msg << "K column " << j << " not stationary; ";
  return msg.str();
}

FittedModel fit(const ObservationPanel& panel, std::shared_ptr<const ModelBases> bases, const FitConfig& config,
                const ModelParams* start) {
  if (!bases) throw ArgumentError("fit needs bases");
  if (panel.nb() != bases->spatial.size() || panel.nc() != bases->temporal.size())
    throw ArgumentError("panel was built with different bases");
  const ModelBases& B = *bases;
  const Penalties& pen = config.penalties;
  if (pen.mu_s < 0.0 || pen.mu_t < 0.0 || pen.pc < 0.0) throw ArgumentError("penalties must be non-negative");

  FittedModel out;
  out.bases = bases;
  out.config = config;
  ModelParams params = start ? *start : initialize(panel, B, config);
  const int p = params.p();

  auto warn = [&](const std::string& msg) {
    if (std::find(out.warnings.begin(), out.warnings.end(), msg) == out.warnings.end()) out.warnings.push_back(msg);
  };
  double q_prev = 0.0;
  auto record = [&](int it, const char* step, const ModelParams& prm, const LatentMoments& mo) {
    if (!config.record_blocks) return;
    out.block_trace.push_back({it, step, q_value(prm, mo, pen, panel, B)});
  };
  for (int it = 1; it <= config.max_iter; ++it) {
    EStepResult es = e_step_full(params, panel, config.stationary_init);
    LatentMoments& mo = es.moments;
    out.loglik_trace.push_back(es.neg2_loglik);
    record(it, "e_step", params, mo);

    params.theta_b = update_theta_b(params, mo, panel, pen, B).theta;
    record(it, "theta_b", params, mo);
    params.theta_c = update_theta_c(params, mo, panel, pen, B);
    canonicalize_mean_sign(params);
    record(it, "theta_c", params, mo);

    double s2 = update_sigma2(params, mo, panel);
    if (!(s2 > 0.0)) {
      warn("degenerate fit: sigma^2 estimate is zero");
      s2 = 1e-12;
    }
    params.sigma2 = s2;
    record(it, "sigma2", params, mo);

    params.Theta = update_Theta_columns(params, mo, panel, pen, B);
    record(it, "theta_columns", params, mo);
    const Reorthonormalized ro = reorthonormalize(params.Theta, params.sigma_j2);
    if (ro.near_tie) warn("near-equal component variances: column order is arbitrary");
    params.Theta = ro.Theta;
    params.sigma_j2 = ro.H;
    mo.transform(ro.M);
    record(it, "reorthonormalize", params, mo);

    params.sigma_j2 = update_sigma_j2(params, mo);
    if (!(params.sigma_j2.array() > 0.0).all()) {
      if (!params.sigma_j2.allFinite()) throw FitError("score innovation variance is not finite");
      warn("degenerate fit: a score innovation variance is zero");
      params.sigma_j2 = params.sigma_j2.cwiseMax(1e-12);
    }
    sort_components(params, &mo);
    record(it, "sigma_j2", params, mo);

    if (!config.freeze_K) {
      params.K = update_K(mo, p);
      record(it, "K", params, mo);
    }

    const double q = q_value(params, mo, pen, panel, B);
    if (!std::isfinite(q)) {
      std::ostringstream msg;
      msg << "EM diverged at iteration " << it << "; q trace:";
      for (double v : out.q_trace) msg << ' ' << v;
      throw FitError(msg.str());
    }
    out.q_trace.push_back(q);
    out.iterations = it;
    if (config.on_iteration) config.on_iteration(it, params);
    if (it > 1 && std::abs(q - q_prev) <= config.tol * std::abs(q_prev)) {
      out.converged = true;
      break;
    }
    q_prev = q;
  }

  EStepResult fin = e_step_full(params, panel, config.stationary_init);
  out.params = params;
  out.moments = std::move(fin.moments);
  out.neg2_loglik = fin.neg2_loglik;
  out.observation_count = panel.total();
  out.final_state = fin.final_state;
  out.final_state_cov = fin.final_state_cov;
  return out;
}

Eigen::VectorXd mean_surface(const FittedModel& model, double time, std::span<const Point2> points) {
  const Eigen::MatrixXd Bp = model.bases->spatial.eval_design(points);
  const double s = model.params.theta_c.dot(model.bases->temporal.eval(time));
  return Bp * (model.params.theta_b * s);
}

Eigen::VectorXd reconstruct(const FittedModel& model, int t, std::span<const Point2> points) {
  if (t < 0 || t >= model.moments.n()) throw ArgumentError("time index out of range");
  const Eigen::MatrixXd Bp = model.bases->spatial.eval_design(points);
  const double s = model.params.theta_c.dot(model.bases->temporal.eval(t + 1.0));
  return Bp * surface_coef(model.params, s, model.moments.alpha.col(t));
}

void forecast_scores(const ModelParams& params, const Eigen::VectorXd& state, const Eigen::MatrixXd& cov, int horizon,
                     std::vector<Eigen::VectorXd>& means, std::vector<Eigen::MatrixXd>& covs) {
  const StateSpaceModel ss = make_state_space(params);
  const Eigen::MatrixXd T = ss.transition();
  const Eigen::MatrixXd H = ss.innovation_cov();
  Eigen::VectorXd b = state;
  Eigen::MatrixXd V = cov;
  means.clear();
  covs.clear();
  for (int h = 1; h <= horizon; ++h) {
    b = T * b;
    V = T * V * T.transpose() + H;
    V = 0.5 * (V + V.transpose());
    means.push_back(b);
    covs.push_back(V);
  }
}

Forecast forecast(const FittedModel& model, int horizon, std::span<const Point2> points) {
  if (horizon < 0) throw ArgumentError("forecast horizon must be non-negative");
  const Eigen::MatrixXd Bp = model.bases->spatial.eval_design(points);
  const Eigen::MatrixXd BT = Bp * model.params.Theta;
  const int J = model.params.J();
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
  forecast_scores(model.params, model.final_state, model.final_state_cov, horizon, means, covs);
  Forecast out;
  const int n = model.moments.n();
  for (int h = 1; h <= horizon; ++h) {
    const Eigen::VectorXd a = means[static_cast<std::size_t>(h - 1)].head(J);
    const Eigen::MatrixXd S = covs[static_cast<std::size_t>(h - 1)].topLeftCorner(J, J);
    const double s = model.params.theta_c.dot(model.bases->temporal.eval(n + h));
    out.mean.push_back(Bp * (model.params.theta_b * s) + BT * a);
    const Eigen::VectorXd var = (BT * S).cwiseProduct(BT).rowwise().sum().array() + model.params.sigma2;
    out.sd.push_back(var.cwiseMax(0.0).cwiseSqrt());
    out.score_mean.push_back(a);
    out.score_cov.push_back(S);
  }
  return out;
}

std::vector<Eigen::VectorXd> residuals(const FittedModel& model, const ObservationPanel& panel) {
  std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(panel.n()));
  for (int t = 0; t < panel.n(); ++t) {
    const double s = model.params.theta_c.dot(panel.C().row(t).transpose());
    out[static_cast<std::size_t>(t)] =
        panel.n_t(t) == 0 ? Eigen::VectorXd()
                          : Eigen::VectorXd(panel.z(t) - panel.B(t) * surface_coef(model.params, s,
                                                                                   model.moments.alpha.col(t)));
  }
  return out;
}

}  // namespace sfpc
