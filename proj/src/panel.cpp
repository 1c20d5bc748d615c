#include "sfpc/panel.hpp"

#include "sfpc/error.hpp"

namespace sfpc {

long RawPanel::total() const {
  long s = 0;
  for (const auto& v : values) s += static_cast<long>(v.size());
  return s;
}

ObservationPanel ObservationPanel::build(RawPanel raw, const BivariateBasis& spatial, const TemporalBasis& temporal) {
  if (raw.locations.size() != raw.values.size()) throw ArgumentError("panel locations and values differ in length");
  if (raw.n() != temporal.horizon()) throw ArgumentError("temporal basis horizon does not match the panel length");
  ObservationPanel p;
  p.nb_ = spatial.size();
  const auto n = static_cast<std::size_t>(raw.n());
  p.B_.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (raw.locations[t].size() != static_cast<std::size_t>(raw.values[t].size()))
      throw ArgumentError("locations and values differ in length at one time point");
    if (!raw.values[t].allFinite()) throw ArgumentError("non-finite response value");
    p.B_[t] = spatial.eval_design(raw.locations[t]);
  }
  p.C_ = temporal.design();
  p.raw_ = std::move(raw);
  p.refresh_products();
  return p;
}

void ObservationPanel::refresh_products() {
  const auto n = B_.size();
  BtB_.resize(n);
  Btz_.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (B_[t].rows() == 0) {
      BtB_[t] = Eigen::MatrixXd::Zero(nb_, nb_);
      Btz_[t] = Eigen::VectorXd::Zero(nb_);
    } else {
      BtB_[t] = B_[t].transpose() * B_[t];
      Btz_[t] = B_[t].transpose() * raw_.values[t];
    }
  }
}

ObservationPanel ObservationPanel::with_values(std::vector<Eigen::VectorXd> values) const {
  if (values.size() != raw_.values.size()) throw ArgumentError("replacement values have the wrong length");
  ObservationPanel p = *this;
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (values[t].size() != raw_.values[t].size()) throw ArgumentError("replacement values have the wrong length");
    p.Btz_[t] = values[t].size() == 0 ? Eigen::VectorXd::Zero(nb_) : Eigen::VectorXd(B_[t].transpose() * values[t]);
  }
  p.raw_.values = std::move(values);
  return p;
}

ObservationPanel ObservationPanel::subset(const std::vector<std::vector<bool>>& keep) const {
  if (keep.size() != raw_.values.size()) throw ArgumentError("mask length does not match the panel");
  ObservationPanel p;
  p.nb_ = nb_;
  p.C_ = C_;
  const auto n = keep.size();
  p.raw_.locations.resize(n);
  p.raw_.values.resize(n);
  p.B_.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& m = keep[t];
    if (m.size() != raw_.locations[t].size()) throw ArgumentError("mask length does not match a time point");
    std::vector<int> rows;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i]) rows.push_back(static_cast<int>(i));
    const auto k = static_cast<Eigen::Index>(rows.size());
    p.B_[t].resize(k, nb_);
    p.raw_.values[t].resize(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      const auto src = static_cast<std::size_t>(rows[static_cast<std::size_t>(r)]);
      p.B_[t].row(r) = B_[t].row(static_cast<Eigen::Index>(src));
      p.raw_.values[t][r] = raw_.values[t][static_cast<Eigen::Index>(src)];
      p.raw_.locations[t].push_back(raw_.locations[t][src]);
    }
  }
  p.refresh_products();
  return p;
}

}  // namespace sfpc
