#include "sfpc/temporal_basis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "sfpc/error.hpp"

namespace sfpc {
namespace {

constexpr double kNoCutoff = -std::numeric_limits<double>::infinity();

// Second derivative of one basis function, in the internal variable u:
// either a polynomial sum a_m u^m (zero for u <= lo) or amp * sin(freq u + phase).
struct Piece {
  bool trig = false;
  double lo = kNoCutoff;
  std::vector<double> coef;
  double amp = 0.0, freq = 0.0, phase = 0.0;
};

double poly_antiderivative(const std::vector<double>& c, double u) {
  double s = 0.0;
  for (std::size_t m = 0; m < c.size(); ++m) s += c[m] * std::pow(u, static_cast<double>(m + 1)) / (m + 1.0);
  return s;
}

// \int_a^b u^m e^{i f u} du, f != 0.
std::complex<double> moment_exp(int m, double f, double a, double b) {
  const std::complex<double> i_f(0.0, f);
  auto prim = [&](double u) {
    std::complex<double> s = 0.0;
    double fall = 1.0;  // m! / (m - k)!
    std::complex<double> pw = i_f;
    for (int k = 0; k <= m; ++k) {
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      s += sign * fall * std::pow(u, m - k) / pw;
      fall *= (m - k);
      pw *= i_f;
    }
    return std::exp(std::complex<double>(0.0, f * u)) * s;
  };
  return prim(b) - prim(a);
}

double integrate_cos(double g, double h, double a, double b) {
  if (std::abs(g) < 1e-14) return (b - a) * std::cos(h);
  return (std::sin(g * b + h) - std::sin(g * a + h)) / g;
}

double integrate_pair(const Piece& p, const Piece& q, double a, double b) {
  if (!p.trig && !q.trig) {
    const double lo = std::max({a, p.lo, q.lo});
    if (lo >= b) return 0.0;
    std::vector<double> prod(p.coef.size() + q.coef.size() - 1, 0.0);
    for (std::size_t i = 0; i < p.coef.size(); ++i)
      for (std::size_t j = 0; j < q.coef.size(); ++j) prod[i + j] += p.coef[i] * q.coef[j];
    return poly_antiderivative(prod, b) - poly_antiderivative(prod, lo);
  }
  if (p.trig && q.trig) {
    const double diff = integrate_cos(p.freq - q.freq, p.phase - q.phase, a, b);
    const double sum = integrate_cos(p.freq + q.freq, p.phase + q.phase, a, b);
    return p.amp * q.amp * 0.5 * (diff - sum);
  }
  const Piece& poly = p.trig ? q : p;
  const Piece& tr = p.trig ? p : q;
  const double lo = std::max(a, poly.lo);
  if (lo >= b) return 0.0;
  double s = 0.0;
  for (std::size_t m = 0; m < poly.coef.size(); ++m) {
    if (poly.coef[m] == 0.0) continue;
    double val;
    if (std::abs(tr.freq) < 1e-14) {
      val = std::sin(tr.phase) * (std::pow(b, m + 1.0) - std::pow(lo, m + 1.0)) / (m + 1.0);
    } else {
      const std::complex<double> mom = moment_exp(static_cast<int>(m), tr.freq, lo, b);
      val = std::imag(std::exp(std::complex<double>(0.0, tr.phase)) * mom);
    }
    s += poly.coef[m] * val;
  }
  return tr.amp * s;
}

std::vector<Piece> second_derivative_pieces(const TemporalBasis& basis) {
  const auto& spec = basis.spec();
  const double inv2 = 1.0 / (basis.scale() * basis.scale());
  std::vector<Piece> out;
  for (int m = 0; m <= spec.poly_degree; ++m) {
    Piece pc;
    pc.coef.assign(static_cast<std::size_t>(std::max(m - 1, 1)), 0.0);
    if (m >= 2) pc.coef[static_cast<std::size_t>(m - 2)] = m * (m - 1.0) * inv2;
    out.push_back(pc);
  }
  for (double k : spec.knots) {
    const double ku = (k - basis.origin()) / basis.scale();
    Piece pc;
    pc.lo = ku;
    pc.coef = {-6.0 * ku * inv2, 6.0 * inv2};
    out.push_back(pc);
  }
  for (int h = 1; h <= spec.fourier_harmonics; ++h) {
    const double w = 2.0 * std::numbers::pi * h / spec.period;
    for (int c = 0; c < 2; ++c) {
      Piece pc;
      pc.trig = true;
      pc.amp = -w * w;
      pc.freq = w * basis.scale();
      pc.phase = w * basis.origin() + (c == 1 ? std::numbers::pi / 2.0 : 0.0);
      out.push_back(pc);
    }
  }
  return out;
}

}  // namespace

TemporalBasis TemporalBasis::build(const TemporalSpec& spec, int n) {
  if (n < 1) throw ArgumentError("temporal horizon must be at least 1");
  if (spec.poly_degree < 0) throw ArgumentError("polynomial degree must be non-negative");
  if (spec.fourier_harmonics < 0) throw ArgumentError("Fourier harmonic count must be non-negative");
  if (spec.fourier_harmonics > 0 && !(spec.period > 0.0)) throw ArgumentError("Fourier period must be positive");
  for (double k : spec.knots) {
    if (!(k > 1.0 && k < n)) throw ArgumentError("spline knots must lie strictly inside [1, n]");
  }
  if (!spec.knots.empty() && spec.poly_degree != 3) throw ArgumentError("interior knots require a cubic polynomial part");
  TemporalBasis basis;
  basis.spec_ = spec;
  std::sort(basis.spec_.knots.begin(), basis.spec_.knots.end());
  basis.n_ = n;
  if (spec.normalize && n > 1) {
    basis.origin_ = 1.0;
    basis.scale_ = n - 1.0;
  }
  return basis;
}

int TemporalBasis::size() const { return polynomial_size() + 2 * spec_.fourier_harmonics; }

Eigen::VectorXd TemporalBasis::eval(double t) const {
  Eigen::VectorXd c(size());
  const double u = (t - origin_) / scale_;
  int k = 0;
  for (int m = 0; m <= spec_.poly_degree; ++m) c[k++] = std::pow(u, m);
  for (double knot : spec_.knots) {
    const double d = u - (knot - origin_) / scale_;
    c[k++] = d > 0.0 ? d * d * d : 0.0;
  }
  for (int h = 1; h <= spec_.fourier_harmonics; ++h) {
    const double a = 2.0 * std::numbers::pi * h * t / spec_.period;
    c[k++] = std::sin(a);
    c[k++] = std::cos(a);
  }
  return c;
}

Eigen::VectorXd TemporalBasis::eval_second(double t) const {
  Eigen::VectorXd c(size());
  const double u = (t - origin_) / scale_;
  const double inv2 = 1.0 / (scale_ * scale_);
  int k = 0;
  for (int m = 0; m <= spec_.poly_degree; ++m) c[k++] = m >= 2 ? m * (m - 1.0) * std::pow(u, m - 2) * inv2 : 0.0;
  for (double knot : spec_.knots) {
    const double d = u - (knot - origin_) / scale_;
    c[k++] = d > 0.0 ? 6.0 * d * inv2 : 0.0;
  }
  for (int h = 1; h <= spec_.fourier_harmonics; ++h) {
    const double w = 2.0 * std::numbers::pi * h / spec_.period;
    c[k++] = -w * w * std::sin(w * t);
    c[k++] = -w * w * std::cos(w * t);
  }
  return c;
}

Eigen::MatrixXd TemporalBasis::design() const {
  Eigen::MatrixXd d(n_, size());
  for (int t = 1; t <= n_; ++t) d.row(t - 1) = eval(t).transpose();
  return d;
}

Eigen::MatrixXd curvature_matrix(const TemporalBasis& basis, double a, double b) {
  if (!(b > a)) throw ArgumentError("curvature range must satisfy a < b");
  const auto pieces = second_derivative_pieces(basis);
  const double ua = (a - basis.origin()) / basis.scale();
  const double ub = (b - basis.origin()) / basis.scale();
  const auto n = static_cast<Eigen::Index>(pieces.size());
  Eigen::MatrixXd p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = basis.scale() *
                       integrate_pair(pieces[static_cast<std::size_t>(i)], pieces[static_cast<std::size_t>(j)], ua, ub);
      p(i, j) = v;
      p(j, i) = v;
    }
  }
  return p;
}

Eigen::MatrixXd curvature_matrix(const TemporalBasis& basis) {
  if (basis.horizon() < 2) return Eigen::MatrixXd::Zero(basis.size(), basis.size());
  return curvature_matrix(basis, 1.0, basis.horizon());
}

}  // namespace sfpc
