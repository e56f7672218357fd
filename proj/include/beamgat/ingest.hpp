#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace beamgat {

namespace metrics {
class GroundTruth;
}

/// One LiDAR return: x forward, y left, z up (meters), reflectance in [0, 1].
struct RawPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double r = 0.0;

  friend bool operator==(const RawPoint&, const RawPoint&) = default;
};

inline constexpr int kHdl64Beams = 64;
inline constexpr double kHdl64ElevMinDeg = -24.8;
inline constexpr double kHdl64ElevMaxDeg = 2.0;

/// Raw sensor frame. `beam` is either empty (indices not yet estimated) or
/// has one entry per point in [0, num_beams - 1].
struct PointCloud {
  std::vector<RawPoint> points;
  std::vector<int> beam;
  int num_beams = kHdl64Beams;

  std::size_t size() const { return points.size(); }
  bool has_beams() const { return !points.empty() && beam.size() == points.size(); }
  /// Throws ConfigError unless beam indices are set and in range.
  void check_beams() const;
};

// ---------------------------------------------------------------------------
// KITTI velodyne .bin

struct KittiReadResult {
  PointCloud cloud;
  std::size_t skipped_non_finite = 0;
};

/// Decodes 16-byte records of four little-endian float32 (x, y, z, r).
/// Non-finite records are skipped and counted; reflectance is clamped to [0,1].
KittiReadResult read_kitti_bin(const std::filesystem::path& path);
KittiReadResult decode_kitti_bin(std::span<const std::byte> bytes);

void write_kitti_bin(const std::filesystem::path& path, const PointCloud& cloud);
std::vector<std::byte> encode_kitti_bin(const PointCloud& cloud);

// ---------------------------------------------------------------------------
// Beam estimation

struct BeamModel {
  int num_beams = kHdl64Beams;
  double elev_min_deg = kHdl64ElevMinDeg;
  double elev_max_deg = kHdl64ElevMaxDeg;
};

struct BeamEstimate {
  PointCloud cloud;
  /// Points at the sensor origin; these get beam 0.
  std::vector<std::size_t> origin_points;
};

/// Quantizes elevation atan2(z, hypot(x, y)) uniformly over the vertical FOV.
BeamEstimate estimate_beams(PointCloud cloud, const BeamModel& model = {});

/// Beam index for a single elevation angle (degrees), clamped to the stack.
int beam_for_elevation(double elevation_deg, const BeamModel& model);

// ---------------------------------------------------------------------------
// Stratified sampling

/// Splits `target` over groups proportionally to `counts` by largest remainder
/// (ties to the lower group index). Every non-empty group receives at least
/// one slot when target >= number of non-empty groups. Quotas never exceed
/// counts and sum to min(target, sum(counts)).
std::vector<std::size_t> proportional_quotas(std::span<const std::size_t> counts,
                                             std::size_t target);

/// Per-beam proportional subsample, uniform without replacement inside each
/// beam, preserving the original relative order.
PointCloud stratified_sample(const PointCloud& cloud, std::size_t target, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Beam dropout

/// Drops every beam with `beam % n == offset`.
struct EveryNth {
  int n = 4;
  int offset = 0;

  bool drops(int beam) const { return beam % n == offset; }
};

/// A frame after dropout. Dropped points keep (x, y) but their z is removed
/// from every public field; the true z is reachable only through
/// metrics::GroundTruth.
class SparseFrame {
 public:
  SparseFrame() = default;

  /// `cloud` has z already zeroed at dropped points.
  const PointCloud& cloud() const { return cloud_; }
  const std::vector<bool>& dropped_mask() const { return dropped_; }
  const std::vector<double>& z_masked() const { return z_masked_; }

  std::size_t size() const { return cloud_.size(); }
  bool dropped(std::size_t i) const { return dropped_[i]; }
  std::vector<std::size_t> dropped_indices() const;
  std::vector<std::size_t> observed_indices() const;
  std::size_t num_dropped() const;

 private:
  friend SparseFrame apply_beam_dropout(const PointCloud&, const EveryNth&);
  friend SparseFrame make_sparse_frame(const PointCloud&, std::vector<bool>);
  friend class metrics::GroundTruth;

  PointCloud cloud_;
  std::vector<bool> dropped_;
  std::vector<double> z_truth_;
  std::vector<double> z_masked_;
};

/// Throws ConfigError when the pattern drops no point or every point.
SparseFrame apply_beam_dropout(const PointCloud& cloud, const EveryNth& pattern);

/// Frame with an explicit drop mask (tests, custom patterns). Any mask is
/// accepted, including none or all dropped.
SparseFrame make_sparse_frame(const PointCloud& cloud, std::vector<bool> dropped);

}  // namespace beamgat
