#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "beamgat/model.hpp"

namespace beamgat::train {

enum class Supervision {
  /// Each epoch hides z of a random beam-stratified subset of observed nodes
  /// and regresses it. Dropped nodes never enter the loss.
  masked_observed,
  /// Ablation only: fits the dropped nodes' ground truth directly. Leaks the
  /// evaluation targets into training.
  transductive_leaking,
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  std::size_t epochs = 200;
  AdamConfig adam;
  double mask_fraction = 0.25;
  std::uint64_t seed = 0;
  /// Stop after this many epochs without a new best training loss; 0 disables.
  std::size_t patience = 30;
  /// Fit the model's input_scale/output_affine buffers to the frame first.
  bool normalize = true;
  Supervision supervision = Supervision::masked_observed;

  void validate() const;
};

/// First and second moments aligned with ParamSet::entries().
struct AdamState {
  std::vector<ad::Tensor> m;
  std::vector<ad::Tensor> v;
  std::size_t step = 0;
};

/// Bias-corrected Adam update of every trainable entry. `grads` is aligned
/// with params.entries(); entries for buffers are ignored.
void adam_step(model::ParamSet& params, std::span<const ad::Tensor> grads, AdamState& state,
               const AdamConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double elapsed_ms = 0.0;
};

struct TrainResult {
  model::ParamSet params;  // lowest training loss seen
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double wall_s = 0.0;
};

/// Sets input_scale from the RMS planar radius and the RMS of observed z, and
/// output_affine from the mean/SD of observed z. Uses no dropped-point truth.
void fit_normalization(model::ParamSet& params, const SparseFrame& frame);

/// Supervision nodes for one epoch: round(fraction * observed) observed nodes
/// (at least one), split over beams proportionally.
std::vector<std::size_t> supervision_nodes(const SparseFrame& frame, double fraction, std::uint64_t seed,
                                           std::size_t epoch);

TrainResult train_frame(const SparseFrame& frame, const Graph& graph, const model::ModelConfig& model_config,
                        const TrainConfig& config);

struct Prediction {
  std::vector<double> z_dropped;  // dropped_indices() order
  double wall_s = 0.0;
};

/// One forward pass with the frame's own masking.
Prediction predict_dropped(const SparseFrame& frame, const Graph& graph, const model::ModelConfig& model_config,
                           const model::ParamSet& params);

/// `epoch,loss,elapsed_ms`; elapsed written as 0 when `with_timing` is false.
void write_loss_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history,
                            bool with_timing = true);

}  // namespace beamgat::train
