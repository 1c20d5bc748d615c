#pragma once

#include <vector>

#include <Eigen/Dense>

namespace sfpc {

/// Description of c(t): polynomial trend of `poly_degree` (poly_degree + 1
/// functions), one truncated cubic per interior knot, then Fourier pairs
/// sin(2 pi k t / period), cos(2 pi k t / period) for k = 1..fourier_harmonics.
struct TemporalSpec {
  int poly_degree = 3;
  std::vector<double> knots;
  int fourier_harmonics = 0;
  double period = 12.0;
  // Polynomial pieces use u = (t - 1) / (n - 1) when true, raw t otherwise.
  bool normalize = true;
};

/// Time basis c(t) on the index range [1, n]. Immutable.
class TemporalBasis {
 public:
  TemporalBasis() = default;

  /// Throws ArgumentError for negative degrees, knots outside (1, n) or a
  /// non-positive period.
  static TemporalBasis build(const TemporalSpec& spec, int n);

  const TemporalSpec& spec() const { return spec_; }
  int horizon() const { return n_; }
  int size() const;
  int polynomial_size() const { return spec_.poly_degree + 1 + static_cast<int>(spec_.knots.size()); }

  /// c(t); t may lie outside [1, n].
  Eigen::VectorXd eval(double t) const;

  /// Second derivative c''(t).
  Eigen::VectorXd eval_second(double t) const;

  /// Row i = c(i + 1)^T for i = 0..n-1.
  Eigen::MatrixXd design() const;

  double origin() const { return origin_; }
  double scale() const { return scale_; }

 private:
  TemporalSpec spec_;
  int n_ = 0;
  double origin_ = 0.0;
  double scale_ = 1.0;
};

/// P = \int_a^b c''(t) c''(t)^T dt in closed form.
Eigen::MatrixXd curvature_matrix(const TemporalBasis& basis, double a, double b);

/// P over the default range [1, n].
Eigen::MatrixXd curvature_matrix(const TemporalBasis& basis);

}  // namespace sfpc
