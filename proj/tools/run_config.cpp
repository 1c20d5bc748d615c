#include "run_config.hpp"

#include <charconv>
#include <filesystem>
#include <set>

#include "sfpc/error.hpp"

namespace sfpc::cli {
namespace {

const std::set<std::string> kKnownKeys = {
    "data.panel",         "data.mesh",          "data.output",           "data.truth",        "data.grid",
    "data.grid_step",     "model.J",            "model.p",               "model.degree",      "model.smoothness",
    "model.poly_degree",  "model.knots",        "model.fourier_harmonics", "model.period",    "model.normalize",
    "model.freeze_K",     "model.demean",       "penalties.mu_s",        "penalties.mu_t",    "penalties.pc",
    "demean.mu_s",        "demean.mu_t",        "demean.grid",           "cv.folds",          "cv.seed",
    "cv.grid_per_axis",   "cv.grid_lo",         "cv.grid_hi",            "cv.budget",         "cv.tol",
    "cv.p_candidates",    "cv.criterion",       "cv.tau",                "fit.tol",           "fit.max_iter",
    "fit.stationary_init", "fit.init_ridge",    "bootstrap.replicates",  "bootstrap.burn_in", "forecast.horizon"};

bool is_select(const KeyValueConfig& kv, const std::string& key) {
  const auto v = kv.raw(key);
  return v && *v == "select";
}

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

FitConfig RunConfig::fit_config(const Penalties& pen) const {
  FitConfig c;
  c.J = J;
  c.p = freeze_K ? 1 : p;
  c.penalties = pen;
  c.tol = tol;
  c.max_iter = max_iter;
  c.freeze_K = freeze_K;
  c.stationary_init = stationary_init;
  c.init_ridge = init_ridge;
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
  const auto kv = KeyValueConfig::from_file(path);
  auto dir = std::filesystem::path(path).parent_path().string();
  return from_kv(kv, dir);
}

RunConfig RunConfig::from_kv(const KeyValueConfig& kv, const std::string& config_dir) {
  kv.reject_unknown(kKnownKeys);
  RunConfig c;
  c.config_dir = config_dir;
  c.panel = kv.get_string("data.panel", "");
  c.mesh = kv.get_string("data.mesh", "");
  c.output = kv.get_string("data.output", "out");
  c.truth = kv.get_string("data.truth", "");
  c.grid = kv.get_string("data.grid", "");
  c.grid_step = kv.get_double("data.grid_step", c.grid_step);

  c.J = kv.get_int("model.J", c.J);
  c.p = kv.get_int("model.p", c.p);
  c.degree = kv.get_int("model.degree", c.degree);
  c.smoothness = kv.get_int("model.smoothness", c.smoothness);
  c.temporal.poly_degree = kv.get_int("model.poly_degree", 3);
  c.temporal.knots = kv.get_doubles("model.knots");
  c.temporal.fourier_harmonics = kv.get_int("model.fourier_harmonics", 5);
  c.temporal.period = kv.get_double("model.period", 12.0);
  c.temporal.normalize = kv.get_bool("model.normalize", true);
  c.freeze_K = kv.get_bool("model.freeze_K", false);
  c.demean = kv.get_bool("model.demean", false);

  const bool any_select =
      is_select(kv, "penalties.mu_s") || is_select(kv, "penalties.mu_t") || is_select(kv, "penalties.pc");
  if (any_select) {
    check(is_select(kv, "penalties.mu_s") && is_select(kv, "penalties.mu_t") && is_select(kv, "penalties.pc"),
          "penalties: 'select' must be given for all of mu_s, mu_t, pc or none");
    c.penalties.select = true;
  } else {
    c.penalties.fixed = {kv.get_double("penalties.mu_s", 1e-4), kv.get_double("penalties.mu_t", 1e-4),
                         kv.get_double("penalties.pc", 1.0)};
  }
  c.demean_select = is_select(kv, "demean.mu_s") || is_select(kv, "demean.mu_t");
  if (c.demean_select) {
    check(is_select(kv, "demean.mu_s") && is_select(kv, "demean.mu_t"), "demean: 'select' must be given for both");
  } else {
    c.demean_mu_s = kv.get_double("demean.mu_s", c.demean_mu_s);
    c.demean_mu_t = kv.get_double("demean.mu_t", c.demean_mu_t);
  }
  if (kv.has("demean.grid")) c.demean_grid = kv.get_doubles("demean.grid");

  c.folds = kv.get_int("cv.folds", c.folds);
  if (const auto s = kv.raw("cv.seed")) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    check(ec == std::errc() && ptr == s->data() + s->size(), "cv.seed: not an unsigned integer");
    c.seed = v;
  }
  c.simplex.grid_per_axis = kv.get_int("cv.grid_per_axis", c.simplex.grid_per_axis);
  c.simplex.grid_lo = kv.get_double("cv.grid_lo", c.simplex.grid_lo);
  c.simplex.grid_hi = kv.get_double("cv.grid_hi", c.simplex.grid_hi);
  c.simplex.budget = kv.get_int("cv.budget", c.simplex.budget);
  c.simplex.tol = kv.get_double("cv.tol", c.simplex.tol);
  if (kv.has("cv.p_candidates")) {
    c.p_candidates.clear();
    for (double v : kv.get_doubles("cv.p_candidates")) {
      check(v == static_cast<int>(v) && v >= 1, "cv.p_candidates: entries must be positive integers");
      c.p_candidates.push_back(static_cast<int>(v));
    }
  }
  try {
    c.criterion = parse_criterion(kv.get_string("cv.criterion", "aic"));
  } catch (const Error& e) {
    throw ConfigError(std::string("cv.criterion: ") + e.what());
  }
  c.tau = kv.get_double("cv.tau", c.tau);

  c.tol = kv.get_double("fit.tol", c.tol);
  c.max_iter = kv.get_int("fit.max_iter", c.max_iter);
  c.stationary_init = kv.get_bool("fit.stationary_init", c.stationary_init);
  c.init_ridge = kv.get_double("fit.init_ridge", c.init_ridge);
  c.replicates = kv.get_int("bootstrap.replicates", c.replicates);
  c.burn_in = kv.get_int("bootstrap.burn_in", c.burn_in);
  c.horizon = kv.get_int("forecast.horizon", c.horizon);

  check(c.J >= 1, "model.J must be >= 1");
  check(c.p >= 1, "model.p must be >= 1");
  check(c.degree >= 1 && c.smoothness >= 0 && c.smoothness < c.degree, "model: need degree >= 1, 0 <= smoothness < degree");
  check(c.temporal.poly_degree >= 0 && c.temporal.fourier_harmonics >= 0 && c.temporal.period > 0,
        "model: invalid temporal basis");
  check(c.folds >= 2, "cv.folds must be >= 2");
  check(c.tau > 0 && c.tau <= 1, "cv.tau must lie in (0, 1]");
  check(c.tol > 0 && c.max_iter >= 1, "fit: need tol > 0 and max_iter >= 1");
  check(c.replicates >= 2, "bootstrap.replicates must be >= 2");
  check(c.burn_in >= 0, "bootstrap.burn_in must be >= 0");
  check(c.horizon >= 1, "forecast.horizon must be >= 1");
  check(c.grid_step > 0, "data.grid_step must be positive");
  check(!c.p_candidates.empty(), "cv.p_candidates is empty");
  if (!c.penalties.select) {
    const auto& f = c.penalties.fixed;
    check(f.mu_s >= 0 && f.mu_t >= 0 && f.pc >= 0, "penalties must be non-negative");
  }
  return c;
}

std::string RunConfig::resolve(const std::string& p) const {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  if (path.is_absolute() || config_dir.empty()) return path.string();
  return (std::filesystem::path(config_dir) / path).string();
}

void RunConfig::require_file(const std::string& key, const std::string& value) const {
  if (value.empty()) throw ConfigError(key + " is required");
  if (!std::filesystem::is_regular_file(resolve(value))) throw ConfigError(key + ": file not found: " + resolve(value));
}

}  // namespace sfpc::cli
