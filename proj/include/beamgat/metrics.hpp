#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "beamgat/reconstruction.hpp"

namespace beamgat::metrics {

/// The only accessor for ground-truth z of a SparseFrame.
class GroundTruth {
 public:
  static const std::vector<double>& z(const SparseFrame& frame) { return frame.z_truth_; }
  /// True (x, y, z) of dropped points, in dropped_indices() order.
  static std::vector<Point3> dropped_points(const SparseFrame& frame);
  static std::vector<double> dropped_z(const SparseFrame& frame);
  /// Every point of the frame with its true z.
  static std::vector<Point3> all_points(const SparseFrame& frame);
};

/// sqrt(mean((z_hat - z)^2)). Throws ConfigError on empty or mismatched input.
double rmse_z(std::span<const double> z_hat, std::span<const double> z_truth);

/// sqrt(mean(|p_hat - p|^2 / 3)), the per-coordinate RMSE over x, y, z.
double rmse_xyz(std::span<const Point3> reconstructed, std::span<const Point3> truth);

/// 0.5 * (mean_a min_b |a - b| + mean_b min_a |a - b|), kd-tree accelerated.
double chamfer(std::span<const Point3> a, std::span<const Point3> b);

enum class ChamferScope {
  dropped_only,  // reconstructed vs true dropped points
  full_cloud,    // observed + reconstructed vs the complete true frame
};

struct EvalReport {
  std::string frame;
  std::string method;
  std::size_t k = 0;
  double rmse_z = 0.0;
  double rmse_xyz = 0.0;
  double chamfer = 0.0;
  double train_s = 0.0;
  double infer_s = 0.0;
  std::size_t n_dropped = 0;
};

/// Scores a reconstruction of the frame's dropped points.
EvalReport evaluate(const SparseFrame& frame, const Reconstruction& rec,
                    ChamferScope scope = ChamferScope::dropped_only);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample SD (n - 1); 0 for a single value
};

MeanSd mean_sd(std::span<const double> values);

struct AggregateRow {
  std::string method;
  std::size_t k = 0;
  std::size_t frames = 0;
  MeanSd rmse_z, rmse_xyz, chamfer, train_s, infer_s;
};

/// Groups reports by (method, k), preserving first-appearance order.
std::vector<AggregateRow> aggregate(std::span<const EvalReport> reports);

inline constexpr const char* kReportHeader = "frame,method,k,rmse_z,rmse_xyz,chamfer,train_s,infer_s,n_dropped";

void write_report_csv(const std::filesystem::path& path, std::span<const EvalReport> reports);
std::vector<EvalReport> read_report_csv(const std::filesystem::path& path);
void write_summary_csv(const std::filesystem::path& path, std::span<const AggregateRow> rows);

/// X-Z profile rows `x,z_truth,z_pred,dropped`: every `stride`-th dropped point
/// (always including the first) plus all observed points, whose z_pred is their
/// observed z. `z_hat` holds one value per dropped point.
void write_xz_projection(const std::filesystem::path& path, const SparseFrame& frame,
                         std::span<const double> z_hat, std::size_t stride = 15);

/// Reconstructed dropped points as `index,x,y,z` (index into the frame).
void write_predictions_csv(const std::filesystem::path& path, const SparseFrame& frame,
                           const Reconstruction& rec);
Reconstruction read_predictions_csv(const std::filesystem::path& path);

}  // namespace beamgat::metrics
