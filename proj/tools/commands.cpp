#include "commands.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>

#include "run_config.hpp"
#include "sfpc/archive.hpp"
#include "sfpc/bootstrap.hpp"
#include "sfpc/data_io.hpp"
#include "sfpc/demean.hpp"
#include "sfpc/error.hpp"
#include "sfpc/model_selection.hpp"
#include "sfpc/simulation.hpp"

namespace fs = std::filesystem;

namespace sfpc::cli {
namespace {

const char* const kMonths[12] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::string padded(long v, int width) {
  std::ostringstream s;
  s << std::setw(width) << std::setfill('0') << v;
  return s.str();
}

int digits(long v) { return v < 10 ? 1 : 1 + digits(v / 10); }

RunConfig load_config(const CommonOptions& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  RunConfig cfg = RunConfig::from_file(o.config);
  if (o.seed) cfg.seed = *o.seed;
  cfg.output = o.output.empty() ? cfg.resolve(cfg.output) : o.output;
  if (!cfg.grid.empty()) cfg.require_file("data.grid", cfg.grid);
  return cfg;
}

std::string model_dir(const RunConfig& cfg, const std::string& flag) {
  const std::string dir = flag.empty() ? (fs::path(cfg.output) / "model").string() : flag;
  if (!fs::is_regular_file(fs::path(dir) / "manifest.txt")) throw ConfigError("no fitted model in " + dir);
  return dir;
}

// Month 1..12 of 0-based index t; integer labels count months from label 1.
int month_of(const LoadedPanel& p, long t) {
  if (p.monthly) return p.month(t);
  const long v = p.first_time + t - 1;
  return static_cast<int>(((v % 12) + 12) % 12 + 1);
}

void write_month_table(const fs::path& path, const std::string& method, const std::array<double, 12>& sum,
                       const std::array<long, 12>& count) {
  auto out = open_out(path);
  out << "method";
  for (const char* m : kMonths) out << "," << m;
  out << "\n" << method;
  for (int m = 0; m < 12; ++m) {
    out << ",";
    if (count[static_cast<std::size_t>(m)] > 0)
      out << format_double(sum[static_cast<std::size_t>(m)] / static_cast<double>(count[static_cast<std::size_t>(m)]));
  }
  out << "\n";
}

std::vector<Point2> grid_points(const RunConfig& cfg, const Triangulation& mesh) {
  if (!cfg.grid.empty()) return read_points_csv(cfg.resolve(cfg.grid));
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (const auto& v : mesh.vertices()) {
    x0 = std::min(x0, v.x), x1 = std::max(x1, v.x);
    y0 = std::min(y0, v.y), y1 = std::max(y1, v.y);
  }
  const int nx = static_cast<int>(std::floor((x1 - x0) / cfg.grid_step + 1e-9));
  const int ny = static_cast<int>(std::floor((y1 - y0) / cfg.grid_step + 1e-9));
  std::vector<Point2> pts;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const Point2 p{x0 + cfg.grid_step * i, y0 + cfg.grid_step * j};
      if (mesh.contains(p)) pts.push_back(p);
    }
  return pts;
}

// Additive pre-mean (mu(x, y) + nu(t)) removed before the fit.
struct PreMean {
  bool active = false;
  double mu_s = 0.0, mu_t = 0.0;
  Eigen::VectorXd theta_mu, eta_nu;

  Eigen::VectorXd at(const ModelBases& b, double t, std::span<const Point2> pts) const {
    if (!active) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pts.size()));
    return ((b.spatial.eval_design(pts) * theta_mu).array() + b.temporal.eval(t).dot(eta_nu)).matrix();
  }
};

struct Prepared {
  RunConfig cfg;
  LoadedPanel loaded;
  std::shared_ptr<const ModelBases> bases;
  ObservationPanel panel;
  PreMean pre;
};

Prepared prepare(const RunConfig& cfg) {
  cfg.require_file("data.panel", cfg.panel);
  cfg.require_file("data.mesh", cfg.mesh);
  Prepared p;
  p.cfg = cfg;
  const Triangulation mesh = Triangulation::from_file(cfg.resolve(cfg.mesh));
  p.loaded = load_panel(cfg.resolve(cfg.panel), mesh);
  if (p.loaded.raw.total() == 0) throw ParseError("panel has no usable observations");
  p.bases = ModelBases::build(mesh, cfg.degree, cfg.smoothness, cfg.temporal, p.loaded.raw.n());
  p.panel = ObservationPanel::build(p.loaded.raw, p.bases->spatial, p.bases->temporal);
  if (cfg.demean) {
    p.pre.active = true;
    if (cfg.demean_select) {
      const auto sel = select_demean_penalties(p.panel, *p.bases, cfg.folds, cfg.seed, cfg.demean_grid);
      p.pre.mu_s = sel.mu_s, p.pre.mu_t = sel.mu_t;
    } else {
      p.pre.mu_s = cfg.demean_mu_s, p.pre.mu_t = cfg.demean_mu_t;
    }
    auto d = demean_two_stage(p.panel, *p.bases, p.pre.mu_s, p.pre.mu_t);
    p.pre.theta_mu = d.theta_mu;
    p.pre.eta_nu = d.eta_nu;
    p.panel = p.panel.with_values(std::move(d.values));
  }
  return p;
}

void save_meta(const fs::path& dir, const LoadedPanel& loaded, const std::string& method, const PreMean& pre) {
  auto out = open_out(dir / "cli.txt");
  out << "first_time = " << loaded.first_time << "\nmonthly = " << (loaded.monthly ? "true" : "false") << "\n";
  out << "method = " << method << "\ndemean = " << (pre.active ? "true" : "false") << "\n";
  out << "demean_mu_s = " << format_double(pre.mu_s) << "\ndemean_mu_t = " << format_double(pre.mu_t) << "\n";
  if (pre.active) {
    std::ofstream bin(dir / "demean.bin", std::ios::binary);
    write_matrices(bin, {{"theta_mu", pre.theta_mu}, {"eta_nu", pre.eta_nu}});
  }
}

struct Loaded {
  FittedModel model;
  PreMean pre;
  long first_time = 1;
  bool monthly = false;
  std::string method;
};

Loaded load_fitted(const std::string& dir) {
  Loaded l;
  l.model = load_model(dir);
  const auto kv = KeyValueConfig::from_file((fs::path(dir) / "cli.txt").string());
  l.first_time = std::stol(kv.get_string("first_time", "1"));
  l.monthly = kv.get_bool("monthly", false);
  l.method = kv.get_string("method", "sFPC");
  l.pre.active = kv.get_bool("demean", false);
  l.pre.mu_s = kv.get_double("demean_mu_s", 0.0);
  l.pre.mu_t = kv.get_double("demean_mu_t", 0.0);
  if (l.pre.active) {
    std::ifstream bin(fs::path(dir) / "demean.bin", std::ios::binary);
    if (!bin) throw ParseError("model archive lacks demean.bin");
    for (auto& [name, m] : read_matrices(bin)) {
      if (name == "theta_mu") l.pre.theta_mu = m.col(0);
      if (name == "eta_nu") l.pre.eta_nu = m.col(0);
    }
  }
  return l;
}

// The configured panel re-expressed on the fitted model's bases, with the
// stored pre-mean removed.
ObservationPanel refit_panel(const RunConfig& cfg, const Loaded& l) {
  cfg.require_file("data.panel", cfg.panel);
  const auto& b = *l.model.bases;
  const LoadedPanel loaded = load_panel(cfg.resolve(cfg.panel), b.spatial.triangulation());
  if (loaded.raw.n() != b.temporal.horizon() || loaded.first_time != l.first_time || loaded.monthly != l.monthly)
    throw ParseError("panel time range does not match the fitted model");
  ObservationPanel panel = ObservationPanel::build(loaded.raw, b.spatial, b.temporal);
  if (l.pre.active) {
    std::vector<Eigen::VectorXd> vals;
    for (int t = 0; t < panel.n(); ++t)
      vals.push_back(panel.z(t) - panel.B(t) * l.pre.theta_mu -
                     Eigen::VectorXd::Constant(panel.n_t(t), panel.c(t).dot(l.pre.eta_nu)));
    panel = panel.with_values(std::move(vals));
  }
  return panel;
}

struct PenaltySearch {
  Penalties best;
  SimplexResult result;
};

PenaltySearch search_penalties(const Prepared& p, const FitConfig& base) {
  const CVPlan plan = CVPlan::make(p.panel, p.cfg.folds, p.cfg.seed);
  auto objective = [&](const Eigen::VectorXd& x) {
    FitConfig c = base;
    c.penalties = penalties_from_log10(x);
    try {
      return cv_score(p.panel, p.bases, c, plan).score;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  PenaltySearch s;
  s.result = simplex_search(objective, 3, p.cfg.simplex);
  if (!std::isfinite(s.result.value)) throw FitError("penalty search: every candidate failed");
  s.best = penalties_from_log10(s.result.x);
  return s;
}

void write_search_history(const fs::path& path, const SimplexResult& r) {
  auto out = open_out(path);
  out << "log10_mu_s,log10_mu_t,log10_pc,cv\n";
  for (const auto& [x, v] : r.history)
    out << format_double(x(0)) << "," << format_double(x(1)) << "," << format_double(x(2)) << "," << format_double(v)
        << "\n";
}

void write_fit_report(const fs::path& path, const FittedModel& m) {
  auto out = open_out(path);
  out << "converged = " << (m.converged ? "true" : "false") << "\n";
  out << "iterations = " << m.iterations << "\n";
  out << "neg2_loglik = " << format_double(m.neg2_loglik) << "\n";
  out << "sigma2 = " << format_double(m.params.sigma2) << "\n";
  for (int j = 0; j < m.params.J(); ++j) out << "sigma_" << j + 1 << "2 = " << format_double(m.params.sigma_j2(j)) << "\n";
  for (int j = 0; j < m.params.J(); ++j)
    for (int l = 0; l < m.params.p(); ++l)
      out << "k_" << j + 1 << "_" << l + 1 << " = " << format_double(m.params.K(l, j)) << "\n";
  out << "mu_s = " << format_double(m.config.penalties.mu_s) << "\nmu_t = " << format_double(m.config.penalties.mu_t)
      << "\npc = " << format_double(m.config.penalties.pc) << "\n";
  for (std::size_t i = 0; i < m.warnings.size(); ++i) out << "warning_" << i + 1 << " = " << m.warnings[i] << "\n";
}

std::vector<int> parse_levels(const std::vector<std::string>& in) {
  std::vector<int> out;
  for (const auto& s : in) {
    if (s == "high" || s == "0") out.push_back(0);
    else if (s == "low" || s == "1") out.push_back(1);
    else throw ConfigError("unknown variance level '" + s + "' (use high or low)");
  }
  return out;
}

}  // namespace

void run_fit(const FitOptions& o) {
  RunConfig cfg = load_config(o.common);
  if (o.freeze_K) cfg.freeze_K = true;
  Prepared p = prepare(cfg);
  const fs::path out = cfg.output;
  fs::create_directories(out / "model");

  Penalties pen = cfg.penalties.fixed;
  if (cfg.penalties.select) {
    const auto s = search_penalties(p, cfg.fit_config(pen));
    pen = s.best;
    write_search_history(out / "cv_history.csv", s.result);
  }
  const FittedModel m = fit(p.panel, p.bases, cfg.fit_config(pen));
  const std::string method = cfg.freeze_K ? "mFPC" : "sFPC";
  save_model(m, (out / "model").string());
  save_meta(out / "model", p.loaded, method, p.pre);
  write_fit_report(out / "fit_report.txt", m);
  {
    auto tr = open_out(out / "trace.csv");
    tr << "iteration,q_value,neg2_loglik\n";
    for (std::size_t i = 0; i < m.q_trace.size(); ++i)
      tr << i + 1 << "," << format_double(m.q_trace[i]) << ","
         << (i < m.loglik_trace.size() ? format_double(m.loglik_trace[i]) : "") << "\n";
  }
  {
    auto rej = open_out(out / "rejected_rows.csv");
    write_row_report(rej, p.loaded.rejected);
  }
  std::array<double, 12> sum{};
  std::array<long, 12> count{};
  const auto res = residuals(m, p.panel);
  for (int t = 0; t < p.panel.n(); ++t) {
    const auto mi = static_cast<std::size_t>(month_of(p.loaded, t) - 1);
    sum[mi] += res[static_cast<std::size_t>(t)].cwiseAbs().sum();
    count[mi] += p.panel.n_t(t);
  }
  write_month_table(out / "mae_by_month.csv", method, sum, count);
}

void run_simulate(const SimulateOptions& o) {
  if (o.runs < 0) throw ConfigError("--runs must be >= 0");
  if (o.n < 2) throw ConfigError("--n must be >= 2");
  std::vector<Setup> setups;
  for (const auto& s : o.setups) {
    try {
      setups.push_back(parse_setup(s));
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
  }
  const auto levels = parse_levels(o.levels);
  if (setups.empty() || levels.empty()) throw ConfigError("need at least one setup and one level");
  const fs::path out = o.output;
  fs::create_directories(out);

  if (o.emit_data) {
    if (o.holdout < 0 || o.holdout >= o.n) throw ConfigError("--holdout must lie in [0, n)");
    SimSetup s;
    s.setup = setups.front();
    s.variance_level = levels.front();
    s.n = o.n;
    s.seed = o.seed;
    const SimData d = generate(s);
    const int fit_n = o.n - o.holdout;
    LoadedPanel train, test;
    for (int t = 0; t < o.n; ++t) {
      LoadedPanel& dst = t < fit_n ? train : test;
      dst.raw.locations.push_back(d.raw.locations[static_cast<std::size_t>(t)]);
      dst.raw.values.push_back(d.raw.values[static_cast<std::size_t>(t)]);
    }
    train.first_time = 1;
    test.first_time = fit_n + 1;
    {
      auto f = open_out(out / "panel.csv");
      write_panel_csv(f, train);
    }
    if (o.holdout > 0) {
      auto f = open_out(out / "truth.csv");
      write_panel_csv(f, test);
    }
    {
      auto f = open_out(out / "mesh.tri");
      square_hole_mesh().write(f);
    }
    const TemporalSpec ts = sim_temporal_spec();
    const FitConfig fc = sim_fit_config();
    auto f = open_out(out / "run.ini");
    f << "[data]\npanel = panel.csv\nmesh = mesh.tri\noutput = fit\n";
    if (o.holdout > 0) f << "truth = truth.csv\n";
    f << "[model]\nJ = " << fc.J << "\np = " << fc.p << "\ndegree = 3\nsmoothness = 1\n";
    f << "poly_degree = " << ts.poly_degree << "\nfourier_harmonics = " << ts.fourier_harmonics
      << "\nperiod = " << format_double(ts.period) << "\n";
    f << "[penalties]\nmu_s = " << format_double(fc.penalties.mu_s) << "\nmu_t = " << format_double(fc.penalties.mu_t)
      << "\npc = " << format_double(fc.penalties.pc) << "\n";
    f << "[forecast]\nhorizon = " << std::max(o.holdout, 1) << "\n";
    return;
  }

  StudyOptions opt;
  opt.master_seed = o.seed;
  opt.run_mfpc = !o.no_mfpc;
  opt.n = o.n;
  const StudyResult r = run_study(setups, levels, o.runs, opt);
  {
    auto f = open_out(out / "study.csv");
    write_study_csv(f, r);
  }
  auto f = open_out(out / "failures.csv");
  f << "failure\n";
  for (const auto& s : r.failures) f << "\"" << s << "\"\n";
}

void run_cv_select(const CvSelectOptions& o) {
  const RunConfig cfg = load_config(o.common);
  const Prepared p = prepare(cfg);
  const fs::path out = cfg.output;
  fs::create_directories(out);

  Penalties pen = cfg.penalties.fixed;
  if (cfg.penalties.select) {
    const auto s = search_penalties(p, cfg.fit_config(pen));
    pen = s.best;
    write_search_history(out / "cv_history.csv", s.result);
  }

  std::vector<FittedModel> models(cfg.p_candidates.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    RunConfig c = cfg;
    c.p = cfg.p_candidates[i];
    c.freeze_K = false;
    models[i] = fit(p.panel, p.bases, c.fit_config(pen));
  }
  std::vector<CriterionRow> rows;
  const int chosen_p = select_p(models, cfg.criterion, &rows);
  {
    auto f = open_out(out / "criterion.csv");
    write_criterion_csv(f, rows, "criterion");
  }
  std::size_t chosen = 0;
  while (models[chosen].params.p() != chosen_p && chosen + 1 < models.size()) ++chosen;
  const Eigen::VectorXd var = score_sample_variances(models[chosen].moments.alpha);
  const int J = select_J(var, cfg.tau);

  auto f = open_out(out / "selection.txt");
  f << "[penalties]\nmu_s = " << format_double(pen.mu_s) << "\nmu_t = " << format_double(pen.mu_t)
    << "\npc = " << format_double(pen.pc) << "\n";
  f << "[model]\np = " << chosen_p << "\nJ = " << J << "\n";
  f << "# score variances at the chosen p:";
  for (Eigen::Index j = 0; j < var.size(); ++j) f << " " << format_double(var(j));
  f << "\n";
}

void run_forecast(const ForecastOptions& o) {
  const RunConfig cfg = load_config(o.common);
  const Loaded l = load_fitted(model_dir(cfg, o.model));
  const int H = o.horizon.value_or(cfg.horizon);
  if (H < 1) throw ConfigError("--horizon must be >= 1");
  const std::string truth_path = o.truth.empty() ? (cfg.truth.empty() ? "" : cfg.resolve(cfg.truth)) : o.truth;
  if (!truth_path.empty() && !fs::is_regular_file(truth_path)) throw ConfigError("truth file not found: " + truth_path);

  const auto& b = *l.model.bases;
  const int n = b.temporal.horizon();
  const fs::path out = cfg.output;
  fs::create_directories(out);
  const auto grid = grid_points(cfg, b.spatial.triangulation());
  const Forecast fc = forecast(l.model, H, grid);
  const int width = std::max(2, digits(H));
  for (int h = 1; h <= H; ++h) {
    Eigen::MatrixXd v = fc.mean[static_cast<std::size_t>(h - 1)] + l.pre.at(b, n + h, grid);
    write_grid_csv((out / ("forecast_h" + padded(h, width) + ".csv")).string(), grid, v, {"value"});
  }
  if (truth_path.empty()) return;

  LoadedPanel truth = load_panel(truth_path, b.spatial.triangulation());
  if (truth.monthly != l.monthly) throw ParseError("truth time labels use a different format than the fitted panel");
  std::array<double, 12> sum{};
  std::array<long, 12> count{};
  for (int t = 0; t < truth.raw.n(); ++t) {
    const long h = truth.first_time + t - (l.first_time + n - 1);
    const auto& locs = truth.raw.locations[static_cast<std::size_t>(t)];
    if (h < 1 || h > H || locs.empty()) continue;
    const Forecast at = forecast(l.model, static_cast<int>(h), locs);
    const Eigen::VectorXd pred = at.mean.back() + l.pre.at(b, static_cast<double>(n + h), locs);
    const auto mi = static_cast<std::size_t>(month_of(truth, t) - 1);
    sum[mi] += (pred - truth.raw.values[static_cast<std::size_t>(t)]).cwiseAbs().sum();
    count[mi] += static_cast<long>(locs.size());
  }
  write_month_table(out / "mape_by_month.csv", l.method, sum, count);
}

void run_bootstrap(const BootstrapOptions& o) {
  const RunConfig cfg = load_config(o.common);
  const Loaded l = load_fitted(model_dir(cfg, o.model));
  const ObservationPanel panel = refit_panel(cfg, l);
  BootstrapConfig bc;
  bc.replicates = o.replicates.value_or(cfg.replicates);
  if (bc.replicates < 2) throw ConfigError("--replicates must be >= 2");
  bc.seed = cfg.seed;
  bc.burn_in = cfg.burn_in;
  bc.grid = grid_points(cfg, l.model.bases->spatial.triangulation());
  const BootstrapResult r = bootstrap_sd(l.model, panel, bc);
  const fs::path out = cfg.output;
  fs::create_directories(out);
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < r.sd.cols(); ++j) names.push_back("sd_pc" + std::to_string(j + 1));
  write_grid_csv((out / "bootstrap_sd.csv").string(), bc.grid, r.sd, names);
  auto f = open_out(out / "bootstrap_report.txt");
  f << "replicates = " << bc.replicates << "\ncompleted = " << r.completed << "\n";
  for (std::size_t i = 0; i < r.failures.size(); ++i) f << "failure_" << i + 1 << " = " << r.failures[i] << "\n";
}

void run_export_grid(const ExportGridOptions& o) {
  const RunConfig cfg = load_config(o.common);
  const Loaded l = load_fitted(model_dir(cfg, o.model));
  const auto& b = *l.model.bases;
  const int n = b.temporal.horizon();
  bool pcs = false, mean = false, surfaces = false;
  for (const auto& w : o.what) {
    if (w == "pcs") pcs = true;
    else if (w == "mean") mean = true;
    else if (w == "surfaces") surfaces = true;
    else throw ConfigError("--what: unknown surface kind '" + w + "' (pcs, mean, surfaces)");
  }
  std::vector<int> times;
  if (o.times == "all") {
    for (int t = 1; t <= n; ++t) times.push_back(t);
  } else {
    std::stringstream ss(o.times);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      int t = 0;
      try {
        std::size_t used = 0;
        t = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("--times: not an integer: '" + tok + "'");
      }
      if (t < 1 || t > n) throw ConfigError("--times: " + tok + " outside 1.." + std::to_string(n));
      times.push_back(t);
    }
  }
  const fs::path out = cfg.output;
  fs::create_directories(out);
  const auto grid = grid_points(cfg, b.spatial.triangulation());
  const int tw = std::max(4, digits(n));
  if (pcs) {
    const Eigen::MatrixXd V = b.spatial.eval_design(grid) * l.model.params.Theta;
    const int pw = std::max(2, digits(V.cols()));
    for (Eigen::Index j = 0; j < V.cols(); ++j)
      write_grid_csv((out / ("pc_" + padded(j + 1, pw) + ".csv")).string(), grid, V.col(j), {"value"});
  }
  for (int t : times) {
    const Eigen::VectorXd pre = l.pre.at(b, t, grid);
    if (mean) {
      Eigen::MatrixXd v = mean_surface(l.model, t, grid) + pre;
      write_grid_csv((out / ("mean_t" + padded(t, tw) + ".csv")).string(), grid, v, {"value"});
    }
    if (surfaces) {
      Eigen::MatrixXd v = reconstruct(l.model, t - 1, grid) + pre;
      write_grid_csv((out / ("surface_t" + padded(t, tw) + ".csv")).string(), grid, v, {"value"});
    }
  }
}

}  // namespace sfpc::cli
