#include "sfpc/simulation.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "sfpc/ar_model.hpp"
#include "sfpc/error.hpp"
#include "sfpc/parallel.hpp"

namespace sfpc {

Setup parse_setup(const std::string& s) {
  if (s == "i") return Setup::i;
  if (s == "ii") return Setup::ii;
  if (s == "iii") return Setup::iii;
  if (s == "iv") return Setup::iv;
  throw ArgumentError("unknown simulation setup '" + s + "' (expected i, ii, iii or iv)");
}

std::string to_string(Setup s) {
  switch (s) {
    case Setup::i: return "i";
    case Setup::ii: return "ii";
    case Setup::iii: return "iii";
    case Setup::iv: return "iv";
  }
  return "?";
}

double SimSetup::sigma2() const { return variance_level == 0 ? 1.0 : 0.1; }

Eigen::Vector2d SimSetup::score_variances() const {
  return variance_level == 0 ? Eigen::Vector2d(1.0, 0.1) : Eigen::Vector2d(0.1, 0.01);
}

Eigen::MatrixXd SimSetup::ar_coefficients() const {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2, 2);
  if (setup == Setup::i || setup == Setup::iii) {
    k.row(0).setConstant(0.8);
    k.row(1).setConstant(0.1);
  }
  return k;
}

namespace truth {

double mu1(double x, double y) {
  const double s = std::sqrt(0.1 * x * x + 0.2 * y);
  return 5.0 * (std::exp(s) + std::exp(-s));
}

double mu2(Setup s, double t, int n) {
  if (s == Setup::iii || s == Setup::iv) return 1.0;
  return std::cos(2.0 * std::numbers::pi * t / 12.0) + t / n;
}

double phi1(double x, double y) { return 0.8578 * std::sin(x * x + 0.5 * y * y); }

double phi2(double x, double y) {
  return 0.8721 * std::sin(0.3 * x * x + 0.6 * y * y) - 0.2988 * std::sin(x * x + 0.5 * y * y);
}

}  // namespace truth

Triangulation square_hole_mesh() {
  std::vector<Point2> verts;
  std::vector<int> id(25, -1);
  for (int j = 0; j <= 4; ++j) {
    for (int i = 0; i <= 4; ++i) {
      if (i == 2 && j == 2) continue;
      id[static_cast<std::size_t>(j * 5 + i)] = static_cast<int>(verts.size());
      verts.push_back({0.5 * i, 0.5 * j});
    }
  }
  std::vector<Triangle> tris;
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) {
      if ((i == 1 || i == 2) && (j == 1 || j == 2)) continue;
      const int ll = id[static_cast<std::size_t>(j * 5 + i)], lr = id[static_cast<std::size_t>(j * 5 + i + 1)];
      const int ul = id[static_cast<std::size_t>((j + 1) * 5 + i)], ur = id[static_cast<std::size_t>((j + 1) * 5 + i + 1)];
      if ((i + j) % 2 == 0) {
        tris.push_back({{ll, lr, ur}});
        tris.push_back({{ll, ur, ul}});
      } else {
        tris.push_back({{ll, lr, ul}});
        tris.push_back({{lr, ur, ul}});
      }
    }
  }
  return Triangulation(std::move(verts), std::move(tris));
}

bool in_sim_domain(Point2 p) {
  if (p.x < 0.0 || p.x > 2.0 || p.y < 0.0 || p.y > 2.0) return false;
  return !(p.x > 0.5 && p.x < 1.5 && p.y > 0.5 && p.y < 1.5);
}

std::vector<Point2> eval_grid() {
  std::vector<Point2> pts;
  for (int j = 0; j <= 50; ++j) {
    for (int i = 0; i <= 50; ++i) {
      const Point2 p{0.04 * i, 0.04 * j};
      if (in_sim_domain(p)) pts.push_back(p);
    }
  }
  return pts;
}

SimData generate(const SimSetup& setup) {
  if (setup.n < 1) throw ArgumentError("simulation needs n >= 1");
  if (setup.min_locations < 0 || setup.max_locations < setup.min_locations)
    throw ArgumentError("invalid per-time location count range");
  std::mt19937_64 rng(setup.seed);
  SimData out;
  out.setup = setup;
  const Eigen::MatrixXd K = setup.ar_coefficients();
  const Eigen::Vector2d sv = setup.score_variances();
  out.scores.resize(2, setup.n);
  for (int j = 0; j < 2; ++j)
    out.scores.row(j) = simulate_ar(K.col(j), std::sqrt(sv[j]), setup.n, setup.burn_in, rng).transpose();

  std::uniform_int_distribution<int> count(setup.min_locations, setup.max_locations);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  std::normal_distribution<double> noise(0.0, std::sqrt(setup.sigma2()));
  out.raw.locations.resize(static_cast<std::size_t>(setup.n));
  out.raw.values.resize(static_cast<std::size_t>(setup.n));
  for (int t = 0; t < setup.n; ++t) {
    const int m = count(rng);
    auto& locs = out.raw.locations[static_cast<std::size_t>(t)];
    Eigen::VectorXd z(m);
    const double mu2 = truth::mu2(setup.setup, t + 1.0, setup.n);
    for (int i = 0; i < m; ++i) {
      Point2 p;
      do {
        p.x = unif(rng);
        p.y = unif(rng);
      } while (!in_sim_domain(p));
      locs.push_back(p);
      z[i] = truth::mu1(p.x, p.y) * mu2 + out.scores(0, t) * truth::phi1(p.x, p.y) +
             out.scores(1, t) * truth::phi2(p.x, p.y) + noise(rng);
    }
    out.raw.values[static_cast<std::size_t>(t)] = std::move(z);
  }
  return out;
}

Eigen::MatrixXd truth_mean(const SimSetup& setup, const std::vector<Point2>& points) {
  Eigen::VectorXd m1(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) m1[static_cast<Eigen::Index>(i)] = truth::mu1(points[i].x, points[i].y);
  Eigen::RowVectorXd m2(setup.n);
  for (int t = 0; t < setup.n; ++t) m2[t] = truth::mu2(setup.setup, t + 1.0, setup.n);
  return m1 * m2;
}

Eigen::MatrixXd truth_pcs(const std::vector<Point2>& points) {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(points.size()), 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    v(static_cast<Eigen::Index>(i), 0) = truth::phi1(points[i].x, points[i].y);
    v(static_cast<Eigen::Index>(i), 1) = truth::phi2(points[i].x, points[i].y);
  }
  return v;
}

Eigen::MatrixXd truth_surfaces(const SimData& data, const std::vector<Point2>& points) {
  return truth_mean(data.setup, points) + truth_pcs(points) * data.scores;
}

double miae(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth, double area) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols()) throw ArgumentError("MIAE needs surfaces on the same grid");
  if (est.size() == 0) throw ArgumentError("MIAE needs a non-empty grid");
  return area / static_cast<double>(est.rows()) * (est - truth).cwiseAbs().colwise().sum().mean();
}

double principal_angle(const Eigen::MatrixXd& V_hat, const Eigen::MatrixXd& V) {
  if (V_hat.rows() != V.rows()) throw ArgumentError("principal angle needs equal row counts");
  auto orth = [](const Eigen::MatrixXd& A) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < A.cols()) throw ArgumentError("principal angle needs full column rank inputs");
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(A.rows(), A.cols()));
  };
  const Eigen::MatrixXd prod = orth(V_hat).transpose() * orth(V);
  const double rho = Eigen::JacobiSVD<Eigen::MatrixXd>(prod).singularValues().minCoeff();
  return std::acos(std::clamp(rho, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

FitConfig sim_fit_config() {
  FitConfig c;
  c.J = 2;
  c.p = 2;
  c.penalties = {1e-4, 1e-4, 1.0};
  return c;
}

TemporalSpec sim_temporal_spec() {
  TemporalSpec s;
  s.poly_degree = 3;
  s.fourier_harmonics = 5;
  s.period = 12.0;
  return s;
}

namespace {

struct GridEval {
  std::vector<Point2> grid = eval_grid();
  Eigen::MatrixXd truth_mean, truth_z, truth_pc;
};

GridEval grid_truth(const SimData& data) {
  GridEval g;
  g.truth_mean = truth_mean(data.setup, g.grid);
  g.truth_pc = truth_pcs(g.grid);
  g.truth_z = g.truth_mean + g.truth_pc * data.scores;
  return g;
}

// Mean and full surfaces of a fitted model on the grid, columns = times.
void model_grid(const FittedModel& m, const Eigen::MatrixXd& Bg, Eigen::MatrixXd& mean, Eigen::MatrixXd& z) {
  const int n = m.moments.n();
  Eigen::RowVectorXd s(n);
  for (int t = 0; t < n; ++t) s[t] = m.params.theta_c.dot(m.bases->temporal.eval(t + 1.0));
  mean = (Bg * m.params.theta_b) * s;
  z = mean + Bg * m.params.Theta * m.moments.alpha;
}

}  // namespace

MethodMetrics evaluate_sfpc(const SimData& data, const StudyOptions& opt) {
  const auto bases = ModelBases::build(square_hole_mesh(), opt.degree, opt.smoothness, sim_temporal_spec(), data.setup.n);
  const ObservationPanel panel = ObservationPanel::build(data.raw, bases->spatial, bases->temporal);
  const FittedModel m = fit(panel, bases, opt.sfpc);
  const GridEval g = grid_truth(data);
  const Eigen::MatrixXd Bg = bases->spatial.eval_design(g.grid);
  Eigen::MatrixXd mean, z;
  model_grid(m, Bg, mean, z);
  MethodMetrics out;
  out.pa = principal_angle(Bg * m.params.Theta, g.truth_pc);
  out.miae_mean = miae(mean, g.truth_mean, kSimDomainArea);
  out.miae_z = miae(z, g.truth_z, kSimDomainArea);
  out.iterations = m.iterations;
  out.converged = m.converged;
  return out;
}

MethodMetrics evaluate_mfpc(const SimData& data, const StudyOptions& opt) {
  const Triangulation mesh = square_hole_mesh();
  const int n = data.setup.n;
  TemporalSpec constant;
  constant.poly_degree = 0;
  const auto bases = ModelBases::build(mesh, opt.degree, opt.smoothness, constant, n);
  const GridEval g = grid_truth(data);
  const Eigen::MatrixXd Bg = bases->spatial.eval_design(g.grid);

  RawPanel raw = data.raw;
  Eigen::MatrixXd pre_mean = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.grid.size()), n);
  if (data.setup.varying_mean()) {
    // Step 1: overall time effect from the temporal basis alone.
    const TemporalBasis tb = TemporalBasis::build(sim_temporal_spec(), n);
    const Eigen::MatrixXd C = tb.design();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(C.cols(), C.cols());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(C.cols());
    for (int t = 0; t < n; ++t) {
      const Eigen::VectorXd c = C.row(t).transpose();
      A += raw.values[static_cast<std::size_t>(t)].size() * c * c.transpose();
      rhs += c * raw.values[static_cast<std::size_t>(t)].sum();
    }
    const Eigen::VectorXd nu = C * A.ldlt().solve(rhs);
    // Step 2: regress on nu(t) b(x, y).
    const ObservationPanel full = ObservationPanel::build(raw, bases->spatial, bases->temporal);
    const int nb = full.nb();
    Eigen::MatrixXd As = opt.mfpc_penalties.mu_s * bases->Gamma + 1e-8 * Eigen::MatrixXd::Identity(nb, nb);
    Eigen::VectorXd rs = Eigen::VectorXd::Zero(nb);
    for (int t = 0; t < n; ++t) {
      if (full.n_t(t) == 0) continue;
      As += nu[t] * nu[t] * full.BtB(t);
      rs += nu[t] * full.Btz(t);
    }
    const Eigen::VectorXd theta = As.ldlt().solve(rs);
    for (int t = 0; t < n; ++t) {
      if (full.n_t(t) == 0) continue;
      raw.values[static_cast<std::size_t>(t)] -= nu[t] * (full.B(t) * theta);
    }
    pre_mean = (Bg * theta) * nu.transpose();
  }

  const ObservationPanel panel = ObservationPanel::build(raw, bases->spatial, bases->temporal);
  FitConfig cfg = opt.sfpc;
  cfg.freeze_K = true;
  cfg.penalties = opt.mfpc_penalties;
  const FittedModel m = fit(panel, bases, cfg);
  Eigen::MatrixXd mean, z;
  model_grid(m, Bg, mean, z);
  mean += pre_mean;
  z += pre_mean;
  MethodMetrics out;
  out.pa = principal_angle(Bg * m.params.Theta, g.truth_pc);
  out.miae_mean = miae(mean, g.truth_mean, kSimDomainArea);
  out.miae_z = miae(z, g.truth_z, kSimDomainArea);
  out.iterations = m.iterations;
  out.converged = m.converged;
  return out;
}

StudyResult run_study(const std::vector<Setup>& setups, const std::vector<int>& levels, int runs,
                      const StudyOptions& opt) {
  if (runs < 0) throw ArgumentError("run count must be non-negative");
  StudyResult result;
  if (runs == 0) return result;
  struct Job {
    Setup setup;
    int level;
    int cell;
    int run;
  };
  std::vector<Job> jobs;
  int cell = 0;
  for (Setup s : setups) {
    for (int level : levels) {
      for (int r = 0; r < runs; ++r) jobs.push_back({s, level, cell, r});
      ++cell;
    }
  }
  struct Outcome {
    bool sfpc_ok = false, mfpc_ok = false;
    MethodMetrics sfpc, mfpc;
    std::string sfpc_err, mfpc_err;
  };
  std::vector<Outcome> outcomes(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), [&](int idx) {
    const Job& job = jobs[static_cast<std::size_t>(idx)];
    SimSetup setup;
    setup.setup = job.setup;
    setup.variance_level = job.level;
    setup.n = opt.n;
    setup.seed = split_seed(opt.master_seed, 1000ull * static_cast<std::uint64_t>(job.cell) + job.run);
    const SimData data = generate(setup);
    Outcome& o = outcomes[static_cast<std::size_t>(idx)];
    try {
      o.sfpc = evaluate_sfpc(data, opt);
      o.sfpc_ok = true;
    } catch (const std::exception& e) {
      o.sfpc_err = e.what();
    }
    if (!opt.run_mfpc) return;
    try {
      o.mfpc = evaluate_mfpc(data, opt);
      o.mfpc_ok = true;
    } catch (const std::exception& e) {
      o.mfpc_err = e.what();
    }
  });

  auto summarize = [&](const Job& head, const std::string& method, std::size_t begin, std::size_t end) {
    const char* names[] = {"pa", "miae_mean", "miae_z"};
    for (int metric = 0; metric < 3; ++metric) {
      std::vector<double> v;
      for (std::size_t k = begin; k < end; ++k) {
        const Outcome& o = outcomes[k];
        const bool ok = method == "sFPC" ? o.sfpc_ok : o.mfpc_ok;
        if (!ok) continue;
        const MethodMetrics& mm = method == "sFPC" ? o.sfpc : o.mfpc;
        v.push_back(metric == 0 ? mm.pa : metric == 1 ? mm.miae_mean : mm.miae_z);
      }
      StudyCell c;
      c.setup = to_string(head.setup);
      c.variance_level = head.level;
      c.method = method;
      c.metric = names[metric];
      c.runs_completed = static_cast<int>(v.size());
      if (!v.empty()) {
        double s = 0.0;
        for (double x : v) s += x;
        c.mean = s / v.size();
        double ss = 0.0;
        for (double x : v) ss += (x - c.mean) * (x - c.mean);
        c.se = v.size() > 1 ? std::sqrt(ss / (v.size() - 1.0) / v.size()) : 0.0;
      }
      result.cells.push_back(c);
    }
  };
  for (std::size_t begin = 0; begin < jobs.size(); begin += static_cast<std::size_t>(runs)) {
    const std::size_t end = begin + static_cast<std::size_t>(runs);
    summarize(jobs[begin], "sFPC", begin, end);
    if (opt.run_mfpc) summarize(jobs[begin], "mFPC", begin, end);
    for (std::size_t k = begin; k < end; ++k) {
      const Job& j = jobs[k];
      const std::string tag = to_string(j.setup) + "," + std::to_string(j.level) + "," + std::to_string(j.run);
      if (!outcomes[k].sfpc_ok) result.failures.push_back(tag + ",sFPC: " + outcomes[k].sfpc_err);
      if (opt.run_mfpc && !outcomes[k].mfpc_ok) result.failures.push_back(tag + ",mFPC: " + outcomes[k].mfpc_err);
    }
  }
  return result;
}

void write_study_csv(std::ostream& out, const StudyResult& result) {
  out << "setup,variance_level,method,metric,mean,se,runs_completed\n";
  out.precision(10);
  for (const auto& c : result.cells) {
    out << c.setup << ',' << (c.variance_level == 0 ? "high" : "low") << ',' << c.method << ',' << c.metric << ','
        << c.mean << ',' << c.se << ',' << c.runs_completed << '\n';
  }
}

}  // namespace sfpc
