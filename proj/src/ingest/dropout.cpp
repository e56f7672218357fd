#include <algorithm>

#include "beamgat/errors.hpp"
#include "beamgat/ingest.hpp"

namespace beamgat {

std::vector<std::size_t> SparseFrame::dropped_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dropped_.size(); ++i) {
    if (dropped_[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> SparseFrame::observed_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dropped_.size(); ++i) {
    if (!dropped_[i]) out.push_back(i);
  }
  return out;
}

std::size_t SparseFrame::num_dropped() const {
  return static_cast<std::size_t>(std::count(dropped_.begin(), dropped_.end(), true));
}

SparseFrame make_sparse_frame(const PointCloud& cloud, std::vector<bool> dropped) {
  cloud.check_beams();
  if (dropped.size() != cloud.size()) throw ConfigError("drop mask length mismatch");

  SparseFrame f;
  f.cloud_ = cloud;
  f.dropped_ = std::move(dropped);
  f.z_truth_.resize(cloud.size());
  f.z_masked_.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    f.z_truth_[i] = cloud.points[i].z;
    f.z_masked_[i] = f.dropped_[i] ? 0.0 : cloud.points[i].z;
    f.cloud_.points[i].z = f.z_masked_[i];
  }
  return f;
}

SparseFrame apply_beam_dropout(const PointCloud& cloud, const EveryNth& pattern) {
  if (pattern.n < 1 || pattern.offset < 0 || pattern.offset >= pattern.n) {
    throw ConfigError("invalid dropout pattern: n=" + std::to_string(pattern.n) +
                      " offset=" + std::to_string(pattern.offset));
  }
  cloud.check_beams();
  std::vector<bool> dropped(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) dropped[i] = pattern.drops(cloud.beam[i]);
  if (std::all_of(dropped.begin(), dropped.end(), [](bool d) { return d; })) {
    throw ConfigError("dropout pattern drops every point");
  }
  if (std::none_of(dropped.begin(), dropped.end(), [](bool d) { return d; })) {
    throw ConfigError("dropout pattern drops no point");
  }
  return make_sparse_frame(cloud, std::move(dropped));
}

}  // namespace beamgat
