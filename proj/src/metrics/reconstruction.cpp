#include "beamgat/reconstruction.hpp"

#include "beamgat/errors.hpp"

namespace beamgat {

Reconstruction z_only_reconstruction(const SparseFrame& frame, std::span<const double> z_hat) {
  const auto dropped = frame.dropped_indices();
  if (z_hat.size() != dropped.size()) throw ConfigError("one z estimate per dropped point required");
  Reconstruction rec;
  rec.points.reserve(dropped.size());
  for (std::size_t t = 0; t < dropped.size(); ++t) {
    const RawPoint& p = frame.cloud().points[dropped[t]];
    rec.points.push_back({p.x, p.y, z_hat[t]});
  }
  return rec;
}

}  // namespace beamgat
