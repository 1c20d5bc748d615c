#include "sfpc/state_space.hpp"

#include <cmath>
#include <numbers>

#include "sfpc/ar_model.hpp"
#include "sfpc/error.hpp"

namespace sfpc {
namespace {

void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()); }

void check_model(const StateSpaceModel& model) {
  if (model.J < 1 || model.p < 0) throw ArgumentError("state-space model needs J >= 1 and p >= 0");
  if (model.K.rows() != model.p || model.K.cols() != model.J) throw ArgumentError("K must be p x J");
  if (model.H.size() != model.J) throw ArgumentError("H must have J entries");
  if (!model.K.allFinite() || !model.H.allFinite() || !std::isfinite(model.sigma2))
    throw NumericError("non-finite state-space parameters");
  if (!(model.sigma2 > 0.0)) throw ConditioningError("observation variance must be positive");
}

}  // namespace

Eigen::MatrixXd StateSpaceModel::transition() const {
  const int m = state_dim();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (int l = 0; l < p; ++l) {
    for (int j = 0; j < J; ++j) t(j, l * J + j) = K(l, j);
  }
  for (int l = 1; l <= p; ++l) t.block(l * J, (l - 1) * J, J, J).setIdentity();
  return t;
}

Eigen::MatrixXd StateSpaceModel::innovation_cov() const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(state_dim(), state_dim());
  h.topLeftCorner(J, J) = H.asDiagonal();
  return h;
}

Eigen::MatrixXd StateSpaceModel::initial_cov() const {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(state_dim(), state_dim());
  if (!stationary_init) return q;
  for (int j = 0; j < J; ++j) {
    const Eigen::VectorXd g = ar_autocovariances(K.col(j), p);
    for (int a = 0; a <= p; ++a)
      for (int b = 0; b <= p; ++b) q(a * J + j, b * J + j) = H[j] * g[std::abs(a - b)];
  }
  return q;
}

CompressedObs CompressedObs::from_dense(const Eigen::MatrixXd& G, const Eigen::VectorXd& r) {
  CompressedObs o;
  o.n = static_cast<int>(r.size());
  o.W = G.transpose() * G;
  o.g = G.transpose() * r;
  o.rr = r.squaredNorm();
  return o;
}

FilterOutput kalman_filter(const StateSpaceModel& model, const std::vector<CompressedObs>& obs) {
  check_model(model);
  const int J = model.J;
  const int m = model.state_dim();
  const Eigen::MatrixXd T = model.transition();
  const Eigen::MatrixXd Ht = model.innovation_cov();
  const double s2 = model.sigma2;
  const auto n = obs.size();

  FilterOutput out;
  out.b_pred.resize(n);
  out.b_filt.resize(n);
  out.Q_pred.resize(n);
  out.Q_filt.resize(n);
  out.innovation_quad.assign(n, 0.0);
  out.innovation_logdet.assign(n, 0.0);

  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd Q = model.initial_cov();
  const Eigen::MatrixXd I_J = Eigen::MatrixXd::Identity(J, J);
  for (std::size_t t = 0; t < n; ++t) {
    b = T * b;
    Q = T * Q * T.transpose() + Ht;
    symmetrize(Q);
    out.b_pred[t] = b;
    out.Q_pred[t] = Q;

    const CompressedObs& o = obs[t];
    if (o.n > 0) {
      if (o.W.rows() != J || o.W.cols() != J || o.g.size() != J)
        throw ArgumentError("compressed observation has wrong dimensions");
      if (!o.W.allFinite() || !o.g.allFinite() || !std::isfinite(o.rr)) throw NumericError("non-finite observation");
      const Eigen::VectorXd a = b.head(J);
      const Eigen::VectorXd gi = o.g - o.W * a;
      const double rri = o.rr - 2.0 * o.g.dot(a) + a.dot(o.W * a);
      const Eigen::MatrixXd P = Q.topLeftCorner(J, J);
      const Eigen::MatrixXd C = s2 * I_J + o.W * P;  // (s2 I + W P)
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(C);
      const double det = lu.determinant();
      if (!(std::isfinite(det) && det > 0.0)) throw ConditioningError("innovation covariance is not invertible");
      const Eigen::MatrixXd QSt = Q.leftCols(J);
      // Gain in compressed form: F_t v = Q S^T (s2 I + W P)^{-1} G^T v.
      Eigen::PartialPivLU<Eigen::MatrixXd> lut(C.transpose());
      const Eigen::MatrixXd gain = lut.solve(QSt.transpose()).transpose();
      b = b + gain * gi;
      Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m);
      A.leftCols(J) -= gain * o.W;
      Q = A * Q * A.transpose() + s2 * gain * o.W * gain.transpose();
      symmetrize(Q);
      // P (s2 I + W P)^{-1} = (s2 I + P W)^{-1} P
      const Eigen::VectorXd solved = lu.solve(gi);
      const double quad = (rri - gi.dot(P * solved)) / s2;
      const double logdet = (o.n - J) * std::log(s2) + std::log(det);
      out.innovation_quad[t] = quad;
      out.innovation_logdet[t] = logdet;
      out.neg2_loglik += quad + logdet + o.n * std::log(2.0 * std::numbers::pi);
    }
    out.b_filt[t] = b;
    out.Q_filt[t] = Q;
  }
  return out;
}

Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& A, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
  const auto& ev = es.eigenvalues();
  const double cut = rel_tol * ev.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) inv[i] = std::abs(ev[i]) > cut ? 1.0 / ev[i] : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

SmootherOutput kalman_smoother(const StateSpaceModel& model, const FilterOutput& filt) {
  const auto n = filt.b_filt.size();
  SmootherOutput out;
  out.b.resize(n);
  out.V.resize(n);
  if (n == 0) return out;
  const Eigen::MatrixXd T = model.transition();
  out.b[n - 1] = filt.b_filt[n - 1];
  out.V[n - 1] = filt.Q_filt[n - 1];
  for (std::size_t s = n - 1; s-- > 0;) {
    const Eigen::MatrixXd L = filt.Q_filt[s] * T.transpose() * symmetric_pinv(filt.Q_pred[s + 1]);
    out.b[s] = filt.b_filt[s] + L * (out.b[s + 1] - filt.b_pred[s + 1]);
    Eigen::MatrixXd V = filt.Q_filt[s] + L * (out.V[s + 1] - filt.Q_pred[s + 1]) * L.transpose();
    symmetrize(V);
    out.V[s] = V;
  }
  return out;
}

LatentMoments extract_moments(const SmootherOutput& smooth, int J, int p) {
  const auto n = static_cast<int>(smooth.b.size());
  LatentMoments mo;
  mo.J = J;
  mo.p = p;
  mo.alpha.resize(J, n);
  mo.Sigma.resize(static_cast<std::size_t>(n));
  mo.lag_cov.resize(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    const auto& b = smooth.b[static_cast<std::size_t>(t)];
    const auto& V = smooth.V[static_cast<std::size_t>(t)];
    if (b.size() != (p + 1) * J) throw InternalError("smoothed state has unexpected dimension");
    mo.alpha.col(t) = b.head(J);
    mo.Sigma[static_cast<std::size_t>(t)] = V.topLeftCorner(J, J);
    auto& lc = mo.lag_cov[static_cast<std::size_t>(t)];
    lc.resize(static_cast<std::size_t>(p));
    for (int l = 1; l <= p; ++l) {
      lc[static_cast<std::size_t>(l - 1)] = (t - l >= 0) ? Eigen::MatrixXd(V.block(0, l * J, J, J))
                                                         : Eigen::MatrixXd::Zero(J, J);
    }
  }
  return mo;
}

LatentMoments exact_moments(const Eigen::MatrixXd& alpha, int p) {
  LatentMoments mo;
  mo.J = static_cast<int>(alpha.rows());
  mo.p = p;
  mo.alpha = alpha;
  const auto n = static_cast<std::size_t>(alpha.cols());
  mo.Sigma.assign(n, Eigen::MatrixXd::Zero(mo.J, mo.J));
  mo.lag_cov.assign(n, std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(p), Eigen::MatrixXd::Zero(mo.J, mo.J)));
  return mo;
}

double LatentMoments::second_moment(int j, int a, int b) const {
  if (a < b) std::swap(a, b);
  const int lag = a - b;
  if (j < 0 || j >= J || b < 0 || a >= n()) throw InternalError("moment index out of range");
  double cov = 0.0;
  if (lag == 0) {
    cov = Sigma[static_cast<std::size_t>(a)](j, j);
  } else {
    if (lag > static_cast<int>(lag_cov[static_cast<std::size_t>(a)].size()))
      throw InternalError("lag exceeds stored cross-covariances");
    cov = lag_cov[static_cast<std::size_t>(a)][static_cast<std::size_t>(lag - 1)](j, j);
  }
  return alpha(j, a) * alpha(j, b) + cov;
}

Eigen::MatrixXd LatentMoments::lag_matrix(int j, int order) const {
  if (order < 0 || order > p) throw InternalError("lag order exceeds stored moments");
  const int nn = n();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(order + 1, order + 1);
  for (int i = 1; i <= order + 1; ++i) {
    for (int k = i; k <= order + 1; ++k) {
      double s = 0.0;
      for (int off = 0; off <= nn + 1 - i - k; ++off) s += second_moment(j, i - 1 + off, k - 1 + off);
      d(i - 1, k - 1) = s;
      d(k - 1, i - 1) = s;
    }
  }
  for (int i = 1; i <= order; ++i) {
    d(0, i) = -d(0, i);
    d(i, 0) = -d(i, 0);
  }
  return d;
}

void LatentMoments::transform(const Eigen::MatrixXd& M) {
  alpha = M * alpha;
  for (auto& s : Sigma) s = M * s * M.transpose();
  for (auto& lc : lag_cov)
    for (auto& c : lc) c = M * c * M.transpose();
}

}  // namespace sfpc
