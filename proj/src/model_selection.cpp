#include "sfpc/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "sfpc/ar_model.hpp"
#include "sfpc/error.hpp"
#include "sfpc/parallel.hpp"

namespace sfpc {

InfoCriterion parse_criterion(const std::string& s) {
  if (s == "aic" || s == "AIC") return InfoCriterion::AIC;
  if (s == "bic" || s == "BIC") return InfoCriterion::BIC;
  if (s == "aic-observed") return InfoCriterion::AIC_OBSERVED;
  if (s == "bic-observed") return InfoCriterion::BIC_OBSERVED;
  throw ArgumentError("criterion must be aic, bic, aic-observed or bic-observed, got '" + s + "'");
}

double information_criterion(const FittedModel& model, InfoCriterion criterion) {
  const auto& prm = model.params;
  if (criterion == InfoCriterion::AIC_OBSERVED || criterion == InfoCriterion::BIC_OBSERVED) {
    const double k = static_cast<double>(prm.p()) * prm.J();
    if (criterion == InfoCriterion::AIC_OBSERVED) return model.neg2_loglik + 2.0 * k;
    return model.neg2_loglik + std::log(static_cast<double>(std::max(1L, model.observation_count))) * k;
  }
  const int n = model.moments.n();
  double v = 0.0;
  for (int j = 0; j < prm.J(); ++j) {
    const double s = ar_quadratic(model.moments.lag_matrix(j, prm.p()), prm.K.col(j));
    v += n * std::log(prm.sigma_j2[j]) + s / prm.sigma_j2[j];
  }
  const int p = prm.p();
  return v + (criterion == InfoCriterion::AIC ? 2.0 * p : std::log(static_cast<double>(n)) * p);
}

int argmin_candidate(const std::vector<CriterionRow>& rows) {
  if (rows.empty()) throw ArgumentError("no candidates to select from");
  const CriterionRow* best = &rows.front();
  for (const auto& r : rows) {
    if (r.value < best->value || (r.value == best->value && r.candidate < best->candidate)) best = &r;
  }
  return best->candidate;
}

int select_p(const std::vector<FittedModel>& models, InfoCriterion criterion, std::vector<CriterionRow>* report) {
  std::vector<CriterionRow> rows;
  for (const auto& m : models) rows.push_back({m.params.p(), information_criterion(m, criterion)});
  if (report) *report = rows;
  return argmin_candidate(rows);
}

Eigen::VectorXd score_sample_variances(const Eigen::MatrixXd& alpha) {
  Eigen::VectorXd v(alpha.rows());
  const double denom = std::max<Eigen::Index>(1, alpha.cols() - 1);
  for (Eigen::Index j = 0; j < alpha.rows(); ++j) {
    const double mean = alpha.row(j).mean();
    v[j] = (alpha.row(j).array() - mean).square().sum() / denom;
  }
  return v;
}

int select_J(const Eigen::VectorXd& v, double tau) {
  if (v.size() == 0) throw ArgumentError("select_J needs at least one score variance");
  if (!(tau > 0.0 && tau <= 1.0)) throw ArgumentError("variance threshold must lie in (0, 1]");
  const double total = v.sum();
  if (!(total > 0.0)) return 1;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    acc += v[j];
    // Small slack so that exact fractions such as 4/4 >= 0.95 are not lost to rounding.
    if (acc >= tau * total * (1.0 - 1e-12)) return static_cast<int>(j + 1);
  }
  return static_cast<int>(v.size());
}

int select_J(const FittedModel& model, double tau) { return select_J(score_sample_variances(model.moments.alpha), tau); }

CVPlan CVPlan::make(const ObservationPanel& panel, int folds, std::uint64_t seed) {
  if (folds < 2) throw ArgumentError("cross validation needs at least 2 folds");
  CVPlan plan;
  plan.folds = folds;
  plan.seed = seed;
  std::mt19937_64 rng(seed);
  plan.fold_of.resize(static_cast<std::size_t>(panel.n()));
  for (int t = 0; t < panel.n(); ++t) {
    std::vector<int> idx(static_cast<std::size_t>(panel.n_t(t)));
    std::iota(idx.begin(), idx.end(), 0);
    // Fisher-Yates with explicit draws so the partition does not depend on the
    // standard library's shuffle.
    for (std::size_t i = idx.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(idx[i - 1], idx[j]);
    }
    auto& f = plan.fold_of[static_cast<std::size_t>(t)];
    f.assign(idx.size(), 0);
    for (std::size_t k = 0; k < idx.size(); ++k) f[static_cast<std::size_t>(idx[k])] = static_cast<int>(k % folds);
  }
  return plan;
}

std::vector<std::vector<bool>> CVPlan::training_mask(int f) const {
  std::vector<std::vector<bool>> keep(fold_of.size());
  for (std::size_t t = 0; t < fold_of.size(); ++t) {
    keep[t].resize(fold_of[t].size());
    for (std::size_t i = 0; i < fold_of[t].size(); ++i) keep[t][i] = fold_of[t][i] != f;
  }
  return keep;
}

CVResult cv_score(const ObservationPanel& panel, std::shared_ptr<const ModelBases> bases, const FitConfig& config,
                  const CVPlan& plan) {
  if (static_cast<int>(plan.fold_of.size()) != panel.n()) throw ArgumentError("CV plan does not match the panel");
  for (int t = 0; t < panel.n(); ++t)
    if (static_cast<int>(plan.fold_of[static_cast<std::size_t>(t)].size()) != panel.n_t(t))
      throw ArgumentError("CV plan does not match the panel");
  struct FoldOut {
    bool ok = false;
    double sse = 0.0;
    long count = 0;
    std::string error;
  };
  std::vector<FoldOut> outs(static_cast<std::size_t>(plan.folds));
  parallel_for(plan.folds, [&](int f) {
    FoldOut& o = outs[static_cast<std::size_t>(f)];
    try {
      const ObservationPanel train = panel.subset(plan.training_mask(f));
      const FittedModel m = fit(train, bases, config);
      for (int t = 0; t < panel.n(); ++t) {
        const auto& folds = plan.fold_of[static_cast<std::size_t>(t)];
        std::vector<int> held;
        for (std::size_t i = 0; i < folds.size(); ++i)
          if (folds[i] == f) held.push_back(static_cast<int>(i));
        if (held.empty()) continue;
        const double s = m.params.theta_c.dot(panel.C().row(t).transpose());
        const Eigen::VectorXd coef = m.params.theta_b * s + m.params.Theta * m.moments.alpha.col(t);
        for (int i : held) {
          const double pred = panel.B(t).row(i).dot(coef);
          const double e = panel.z(t)[i] - pred;
          o.sse += e * e;
          ++o.count;
        }
      }
      o.ok = true;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  });
  CVResult res;
  double sse = 0.0;
  for (int f = 0; f < plan.folds; ++f) {
    const FoldOut& o = outs[static_cast<std::size_t>(f)];
    if (!o.ok) {
      res.warnings.push_back("fold " + std::to_string(f) + " failed: " + o.error);
      continue;
    }
    sse += o.sse;
    res.held_out += o.count;
    ++res.folds_completed;
  }
  if (res.folds_completed == 0 || res.held_out == 0) throw FitError("cross validation: no fold completed");
  res.score = sse / static_cast<double>(res.held_out);
  return res;
}

namespace {

double simplex_diameter(const std::vector<Eigen::VectorXd>& pts) {
  double d = 0.0;
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b) d = std::max(d, (pts[a] - pts[b]).norm());
  return d;
}

}  // namespace

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective, const Eigen::VectorXd& start,
                          const SimplexOptions& opts) {
  const auto dim = start.size();
  if (dim < 1) throw ArgumentError("simplex search needs at least one coordinate");
  SimplexResult res;
  auto eval = [&](const Eigen::VectorXd& x) {
    const double v = objective(x);
    ++res.evaluations;
    res.history.emplace_back(x, v);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  std::vector<Eigen::VectorXd> pts{start};
  for (Eigen::Index i = 0; i < dim; ++i) pts.push_back(start + opts.initial_step * Eigen::VectorXd::Unit(dim, i));
  std::vector<double> vals;
  for (const auto& p : pts) vals.push_back(eval(p));

  auto order = [&] {
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<Eigen::VectorXd> p2;
    std::vector<double> v2;
    for (auto i : idx) {
      p2.push_back(pts[i]);
      v2.push_back(vals[i]);
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };
  order();
  while (true) {
    if (simplex_diameter(pts) < opts.tol) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= opts.budget) break;
    ++res.iterations;
    const std::size_t worst = pts.size() - 1;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t i = 0; i < worst; ++i) centroid += pts[i];
    centroid /= static_cast<double>(worst);
    const Eigen::VectorXd xr = centroid + opts.reflection * (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < vals[0]) {
      const Eigen::VectorXd xe = centroid + opts.expansion * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
    } else if (fr < vals[worst - 1]) {
      pts[worst] = xr;
      vals[worst] = fr;
    } else {
      const bool outside = fr < vals[worst];
      const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + opts.contraction * (xr - centroid))
                                         : Eigen::VectorXd(centroid + opts.contraction * (pts[worst] - centroid));
      const double fc = eval(xc);
      if (fc < (outside ? fr : vals[worst])) {
        pts[worst] = xc;
        vals[worst] = fc;
      } else {
        for (std::size_t i = 1; i < pts.size(); ++i) {
          pts[i] = pts[0] + opts.shrink * (pts[i] - pts[0]);
          vals[i] = eval(pts[i]);
        }
      }
    }
    order();
  }
  res.x = pts[0];
  res.value = vals[0];
  return res;
}

SimplexResult simplex_search(const std::function<double(const Eigen::VectorXd&)>& objective, int dim,
                             const SimplexOptions& opts) {
  if (dim < 1) throw ArgumentError("simplex search needs at least one coordinate");
  if (opts.grid_per_axis < 1) throw ArgumentError("grid needs at least one value per axis");
  std::vector<double> axis;
  for (int i = 0; i < opts.grid_per_axis; ++i)
    axis.push_back(opts.grid_per_axis == 1 ? 0.5 * (opts.grid_lo + opts.grid_hi)
                                           : opts.grid_lo + (opts.grid_hi - opts.grid_lo) * i / (opts.grid_per_axis - 1));
  long total = 1;
  for (int d = 0; d < dim; ++d) total *= opts.grid_per_axis;
  Eigen::VectorXd best;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::pair<Eigen::VectorXd, double>> grid_hist;
  for (long k = 0; k < total; ++k) {
    Eigen::VectorXd x(dim);
    long r = k;
    for (int d = 0; d < dim; ++d) {
      x[d] = axis[static_cast<std::size_t>(r % opts.grid_per_axis)];
      r /= opts.grid_per_axis;
    }
    double v = objective(x);
    if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
    grid_hist.emplace_back(x, v);
    if (best.size() == 0 || v < best_val) {
      best = x;
      best_val = v;
    }
  }
  SimplexResult res = nelder_mead(objective, best, opts);
  res.grid_best = best;
  res.grid_value = best_val;
  res.history.insert(res.history.begin(), grid_hist.begin(), grid_hist.end());
  if (!(res.value <= best_val)) {
    res.x = best;
    res.value = best_val;
  }
  return res;
}

Penalties penalties_from_log10(const Eigen::VectorXd& x) {
  if (x.size() != 3) throw ArgumentError("penalty search works on three log10 coordinates");
  return {std::pow(10.0, x[0]), std::pow(10.0, x[1]), std::pow(10.0, x[2])};
}

void write_criterion_csv(std::ostream& out, const std::vector<CriterionRow>& rows, const std::string& name) {
  out << "candidate," << name << '\n';
  out.precision(17);
  for (const auto& r : rows) out << r.candidate << ',' << r.value << '\n';
}

}  // namespace sfpc
