#include "beamgat/baselines.hpp"

#include <cmath>
#include <numbers>
#include <optional>

#include "beamgat/errors.hpp"
#include "beamgat/spatial_index.hpp"

namespace beamgat {

namespace baselines {
namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

struct AzimuthBins {
  std::size_t bin_count;
  int num_beams;
  std::vector<std::size_t> best;  // [bin * num_beams + beam] -> point index
  std::vector<double> best_gap;

  std::size_t& at(std::size_t bin, int beam) { return best[bin * static_cast<std::size_t>(num_beams) + static_cast<std::size_t>(beam)]; }
  std::size_t at(std::size_t bin, int beam) const { return best[bin * static_cast<std::size_t>(num_beams) + static_cast<std::size_t>(beam)]; }
};

double azimuth(const RawPoint& p) {
  const double a = std::atan2(p.y, p.x);
  return a < 0.0 ? a + 2.0 * std::numbers::pi : a;
}

std::size_t bin_of(double az, std::size_t bins) {
  const auto b = static_cast<std::size_t>(az / (2.0 * std::numbers::pi) * static_cast<double>(bins));
  return std::min(b, bins - 1);
}

std::optional<double> interpolate_in_bin(const AzimuthBins& bins, const PointCloud& cloud, std::size_t bin, int beam) {
  int lo = beam - 1, hi = beam + 1;
  while (lo >= 0 && bins.at(bin, lo) == kNone) --lo;
  while (hi < cloud.num_beams && bins.at(bin, hi) == kNone) ++hi;
  const bool has_lo = lo >= 0, has_hi = hi < cloud.num_beams;
  if (has_lo && has_hi) {
    const double z_lo = cloud.points[bins.at(bin, lo)].z;
    const double z_hi = cloud.points[bins.at(bin, hi)].z;
    return z_lo + (z_hi - z_lo) * static_cast<double>(beam - lo) / static_cast<double>(hi - lo);
  }
  if (!has_lo && !has_hi) return std::nullopt;
  if (has_lo && (!has_hi || beam - lo <= hi - beam)) return cloud.points[bins.at(bin, lo)].z;
  return cloud.points[bins.at(bin, hi)].z;
}

}  // namespace

std::vector<double> linear_interp(const SparseFrame& frame, std::size_t bin_count) {
  if (bin_count < 8) throw ConfigError("linear_interp needs at least 8 azimuth bins");
  const PointCloud& cloud = frame.cloud();
  cloud.check_beams();
  if (frame.num_dropped() == frame.size()) throw ConfigError("linear_interp: no observed points");

  AzimuthBins bins{bin_count, cloud.num_beams,
                   std::vector<std::size_t>(bin_count * static_cast<std::size_t>(cloud.num_beams), kNone),
                   std::vector<double>(bin_count * static_cast<std::size_t>(cloud.num_beams), 0.0)};
  const double width = 2.0 * std::numbers::pi / static_cast<double>(bin_count);
  std::vector<std::size_t> point_bin(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double az = azimuth(cloud.points[i]);
    point_bin[i] = bin_of(az, bin_count);
    if (frame.dropped(i)) continue;
    const double gap = std::fabs(az - (static_cast<double>(point_bin[i]) + 0.5) * width);
    const std::size_t slot = point_bin[i] * static_cast<std::size_t>(cloud.num_beams) + static_cast<std::size_t>(cloud.beam[i]);
    // Ascending scan: strict < keeps the lower index on ties.
    if (bins.best[slot] == kNone || gap < bins.best_gap[slot]) {
      bins.best[slot] = i;
      bins.best_gap[slot] = gap;
    }
  }

  std::vector<double> z_hat;
  z_hat.reserve(frame.num_dropped());
  for (std::size_t i : frame.dropped_indices()) {
    const std::size_t home = point_bin[i];
    std::optional<double> z;
    for (std::size_t r = 0; !z && r <= bin_count / 2; ++r) {
      // Closest populated bin, checking the clockwise side first.
      z = interpolate_in_bin(bins, cloud, (home + bin_count - r) % bin_count, cloud.beam[i]);
      if (!z) z = interpolate_in_bin(bins, cloud, (home + r) % bin_count, cloud.beam[i]);
    }
    z_hat.push_back(*z);
  }
  return z_hat;
}

Reconstruction nearest_neighbor_sub(const SparseFrame& frame, NearestMode mode) {
  const auto observed = frame.observed_indices();
  if (observed.empty()) throw ConfigError("nearest_neighbor_sub: no observed points");
  const PointCloud& cloud = frame.cloud();
  std::vector<std::array<double, 2>> pts;
  pts.reserve(observed.size());
  for (std::size_t i : observed) pts.push_back({cloud.points[i].x, cloud.points[i].y});
  const KdTree<2> tree(std::move(pts));

  Reconstruction rec;
  for (std::size_t i : frame.dropped_indices()) {
    const RawPoint& p = cloud.points[i];
    const RawPoint& q = cloud.points[observed[tree.nearest({p.x, p.y}).index]];
    if (mode == NearestMode::full_point) {
      rec.points.push_back({q.x, q.y, q.z});
    } else {
      rec.points.push_back({p.x, p.y, q.z});
    }
  }
  return rec;
}

}  // namespace baselines
}  // namespace beamgat
