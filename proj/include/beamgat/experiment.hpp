#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "beamgat/baselines.hpp"
#include "beamgat/graph.hpp"
#include "beamgat/metrics.hpp"
#include "beamgat/model.hpp"
#include "beamgat/trainer.hpp"

namespace beamgat::experiment {

// ---------------------------------------------------------------------------
// Synthetic scanner

enum class SceneKind { plane, sinusoid, wall_ground };

std::string_view to_string(SceneKind k);
SceneKind scene_kind_from_string(std::string_view s);

struct SyntheticSceneSpec {
  SceneKind kind = SceneKind::sinusoid;
  double extent = 40.0;          // max horizontal range, meters
  std::size_t points = 4096;     // approximate target point count
  double noise_sigma = 0.0;      // Gaussian z noise, meters
  std::uint64_t seed = 0;
  double ground_z = -1.7;        // sensor mounted 1.7 m above ground
  double amplitude = 0.5;        // sinusoid amplitude, meters
  double wavelength = 8.0;       // sinusoid wavelength, meters
  double wall_distance = 12.0;   // wall_ground: wall plane x = wall_distance
  double wall_height = 3.0;      // wall top, meters above z = 0
  /// Raw scan size relative to `points`; the raw scan is then stratified
  /// down to `points`, as real frames are (~120k -> 50k).
  double oversample = 2.4;
  /// Horizontal field of view, degrees, centered on +x. Narrow sectors give
  /// small scenes the along-ring density of a full-resolution scan.
  double azimuth_fov_deg = 360.0;
  /// Per-beam random azimuth offset within one firing step.
  bool beam_azimuth_offsets = true;
  BeamModel beams{};

  void validate() const;
};

/// Terrain height z(x, y) of the scene's ground surface.
double ground_height(const SyntheticSceneSpec& spec, double x, double y);

/// Simulates a spinning scanner at the origin: beam b fires at the center of
/// its elevation bin over M evenly spaced azimuths (optionally shifted per
/// beam), M chosen so the raw hit count is about oversample * points. Rays
/// that leave the extent are skipped; the raw scan is then stratified down to
/// `points`. Beam indices are exact by construction.
PointCloud synthesize_scene(const SyntheticSceneSpec& spec);

// ---------------------------------------------------------------------------
// Experiment harness

enum class Method { linear, nn, nn_z, simple_gcn, gat_baseline, superior_gat };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);
bool is_learned(Method m);

struct ModelOverrides {
  std::size_t heads = 4;
  std::size_t head_width = 16;
  std::size_t ffn_hidden = 128;
  std::size_t decoder_hidden = 32;
  std::size_t gat_baseline_layers = 3;
  std::size_t gcn_layers = 2;
  model::Activation activation = model::Activation::leaky_relu;
  model::ResidualInput residual_input = model::ResidualInput::projection;
};

struct ExperimentConfig {
  /// Directory of KITTI .bin frames; when empty a synthetic scene is used.
  std::filesystem::path input;
  SyntheticSceneSpec synthetic;
  std::size_t frames = 1;
  std::size_t sample_target = 50000;
  EveryNth dropout{4, 0};
  std::vector<std::size_t> ks{10};
  std::vector<Method> methods{Method::linear, Method::nn, Method::superior_gat};
  ModelOverrides model;
  train::TrainConfig train;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  std::size_t workers = 1;

  KnnMetric knn_metric = KnnMetric::planar;
  bool beam_edges = false;
  std::size_t interp_bins = 360;
  metrics::ChamferScope chamfer_scope = metrics::ChamferScope::dropped_only;
  std::size_t xz_stride = 15;
  /// When false every timing column is written as 0 so reruns are byte-identical.
  bool record_timing = true;
  bool save_params = false;

  void validate() const;
};

model::ModelConfig model_config_for(const ExperimentConfig& config, Method method, std::uint64_t seed);

struct ExperimentResult {
  std::vector<metrics::EvalReport> reports;
  std::vector<metrics::AggregateRow> summary;
  std::vector<std::string> warnings;
};

/// Runs every frame x k x method, writes report.csv, summary.csv and per-run
/// predictions / loss histories / X-Z profiles under out_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Output file stem of one run, e.g. `syn000_superior_gat_k10`.
std::string run_stem(std::string_view frame, Method method, std::size_t k);

}  // namespace beamgat::experiment
