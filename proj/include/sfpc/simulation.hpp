#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfpc/em_fitter.hpp"
#include "sfpc/geometry.hpp"
#include "sfpc/panel.hpp"

namespace sfpc {

enum class Setup { i, ii, iii, iv };

/// "i".."iv"; throws ArgumentError otherwise.
Setup parse_setup(const std::string& s);
std::string to_string(Setup s);

struct SimSetup {
  Setup setup = Setup::i;
  // 0: sigma^2 = 1, (sigma_1^2, sigma_2^2) = (1, 0.1)
  // 1: sigma^2 = 0.1, (sigma_1^2, sigma_2^2) = (0.1, 0.01)
  int variance_level = 0;
  int n = 500;
  int min_locations = 50;
  int max_locations = 60;
  int burn_in = 500;
  std::uint64_t seed = 1;

  double sigma2() const;
  Eigen::Vector2d score_variances() const;
  Eigen::MatrixXd ar_coefficients() const;  // 2 x 2, column j = (k_{j,1}, k_{j,2})
  bool varying_mean() const { return setup == Setup::i || setup == Setup::ii; }
};

namespace truth {
double mu1(double x, double y);
double mu2(Setup s, double t, int n);
double phi1(double x, double y);
double phi2(double x, double y);
}  // namespace truth

constexpr double kSimDomainArea = 3.0;

/// The 2 x 2 square with the centred 1 x 1 hole, meshed on a 0.5 grid with
/// alternating diagonals (24 vertices, 24 triangles).
Triangulation square_hole_mesh();

/// True for points of [0,2]^2 outside the open hole (0.5,1.5)^2.
bool in_sim_domain(Point2 p);

/// 51 x 51 grid on [0,2]^2 without the points inside the hole (1976 points).
std::vector<Point2> eval_grid();

struct SimData {
  SimSetup setup;
  RawPanel raw;
  Eigen::MatrixXd scores;  // 2 x n
};

SimData generate(const SimSetup& setup);

/// Truth on a point set; columns are times 1..n.
Eigen::MatrixXd truth_mean(const SimSetup& setup, const std::vector<Point2>& points);
Eigen::MatrixXd truth_surfaces(const SimData& data, const std::vector<Point2>& points);
Eigen::MatrixXd truth_pcs(const std::vector<Point2>& points);  // points x 2

/// (1/n) sum_t area / m sum_i |est - truth| with m grid points and n columns.
double miae(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth, double area);

/// Largest principal angle between column spaces, in degrees.
double principal_angle(const Eigen::MatrixXd& V_hat, const Eigen::MatrixXd& V);

/// Temporal basis used for the simulation fits: cubic trend plus 5 Fourier
/// pairs of period 12 (14 functions).
TemporalSpec sim_temporal_spec();

struct MethodMetrics {
  double pa = 0.0;
  double miae_mean = 0.0;
  double miae_z = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// J = 2, p = 2, penalties (1e-4, 1e-4, 1).
FitConfig sim_fit_config();

struct StudyOptions {
  int degree = 3;
  int smoothness = 1;
  FitConfig sfpc = sim_fit_config();  // J, p, penalties, tolerances
  Penalties mfpc_penalties{1e-4, 1e-4, 1.0};
  bool run_mfpc = true;
  std::uint64_t master_seed = 1;
  int n = 500;  // time points per replicate
};

/// Fits sFPC to one data set and scores it against the truth.
MethodMetrics evaluate_sfpc(const SimData& data, const StudyOptions& opt);

/// mFPC baseline: K frozen at 0 with a time-constant mean, after a two-step
/// mean removal when the true mean varies over time.
MethodMetrics evaluate_mfpc(const SimData& data, const StudyOptions& opt);

struct StudyCell {
  std::string setup;
  int variance_level = 0;
  std::string method;
  std::string metric;
  double mean = 0.0;
  double se = 0.0;
  int runs_completed = 0;
};

struct StudyResult {
  std::vector<StudyCell> cells;
  std::vector<std::string> failures;  // "setup,level,run,method: message"
};

/// Runs `runs` replicates for every (setup, level). Replicate r of a cell
/// uses seed split_seed(master_seed, 1000 * cell + r).
StudyResult run_study(const std::vector<Setup>& setups, const std::vector<int>& levels, int runs,
                      const StudyOptions& opt);

void write_study_csv(std::ostream& out, const StudyResult& result);

}  // namespace sfpc
