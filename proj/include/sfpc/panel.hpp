#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sfpc/bivariate_basis.hpp"
#include "sfpc/geometry.hpp"
#include "sfpc/temporal_basis.hpp"

namespace sfpc {

/// Raw observations: per time t = 1..n a list of locations and responses.
struct RawPanel {
  std::vector<std::vector<Point2>> locations;
  std::vector<Eigen::VectorXd> values;

  int n() const { return static_cast<int>(values.size()); }
  long total() const;
};

/// Observations with cached design quantities: B_t, B_t^T B_t, B_t^T z_t and
/// c_t = c(t). Time t (1-based) lives at vector index t - 1.
class ObservationPanel {
 public:
  ObservationPanel() = default;

  /// Throws LocationError for a location outside the spatial domain and
  /// ArgumentError for mismatched sizes.
  static ObservationPanel build(RawPanel raw, const BivariateBasis& spatial, const TemporalBasis& temporal);

  int n() const { return raw_.n(); }
  int n_t(int t) const { return static_cast<int>(raw_.values[static_cast<std::size_t>(t)].size()); }
  long total() const { return raw_.total(); }
  const RawPanel& raw() const { return raw_; }

  const Eigen::VectorXd& z(int t) const { return raw_.values[static_cast<std::size_t>(t)]; }
  const std::vector<Point2>& locations(int t) const { return raw_.locations[static_cast<std::size_t>(t)]; }
  const Eigen::MatrixXd& B(int t) const { return B_[static_cast<std::size_t>(t)]; }
  const Eigen::MatrixXd& BtB(int t) const { return BtB_[static_cast<std::size_t>(t)]; }
  const Eigen::VectorXd& Btz(int t) const { return Btz_[static_cast<std::size_t>(t)]; }
  Eigen::VectorXd c(int t) const { return C_.row(t).transpose(); }
  const Eigen::MatrixXd& C() const { return C_; }
  int nb() const { return nb_; }
  int nc() const { return static_cast<int>(C_.cols()); }

  /// Copy with response vectors replaced (same locations, same designs).
  ObservationPanel with_values(std::vector<Eigen::VectorXd> values) const;

  /// Keeps only the observations whose mask entry is true.
  ObservationPanel subset(const std::vector<std::vector<bool>>& keep) const;

 private:
  void refresh_products();

  RawPanel raw_;
  std::vector<Eigen::MatrixXd> B_, BtB_;
  std::vector<Eigen::VectorXd> Btz_;
  Eigen::MatrixXd C_;
  int nb_ = 0;
};

}  // namespace sfpc
