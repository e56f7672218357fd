#include "beamgat/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/os.h>

#include "beamgat/errors.hpp"
#include "beamgat/metrics.hpp"

namespace beamgat::train {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(mask_fraction > 0.0 && mask_fraction < 1.0)) {
    throw ConfigError(fmt::format("mask_fraction must lie in (0, 1), got {}", mask_fraction));
  }
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

void fit_normalization(model::ParamSet& params, const SparseFrame& frame) {
  const PointCloud& cloud = frame.cloud();
  double xy2 = 0.0;
  for (const RawPoint& p : cloud.points) xy2 += p.x * p.x + p.y * p.y;
  const double s_xy = std::sqrt(xy2 / (2.0 * static_cast<double>(cloud.size())));

  const auto observed = frame.observed_indices();
  if (observed.empty()) throw ConfigError("frame has no observed points");
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i : observed) {
    sum += frame.z_masked()[i];
    sum2 += frame.z_masked()[i] * frame.z_masked()[i];
  }
  const double n = static_cast<double>(observed.size());
  const double mean = sum / n;
  const double rms = std::sqrt(sum2 / n);
  const double sd = std::sqrt(std::max(0.0, sum2 / n - mean * mean));

  ad::Tensor& scale = params.at(model::kInputScale);
  scale[0] = scale[1] = s_xy > 0.0 ? 1.0 / s_xy : 1.0;
  scale[2] = rms > 0.0 ? 1.0 / rms : 1.0;
  scale[3] = 1.0;
  ad::Tensor& affine = params.at(model::kOutputAffine);
  affine[0] = sd > 1e-9 ? sd : 1.0;
  affine[1] = mean;
}

std::vector<std::size_t> supervision_nodes(const SparseFrame& frame, double fraction, std::uint64_t seed,
                                           std::size_t epoch) {
  const PointCloud& cloud = frame.cloud();
  std::vector<std::vector<std::size_t>> by_beam(static_cast<std::size_t>(cloud.num_beams));
  std::size_t n_observed = 0;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.dropped(i)) continue;
    by_beam[static_cast<std::size_t>(cloud.beam[i])].push_back(i);
    ++n_observed;
  }
  if (n_observed == 0) throw ConfigError("frame has no observed points");
  const auto target = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_observed))));
  std::vector<std::size_t> counts;
  for (const auto& b : by_beam) counts.push_back(b.size());
  const auto quota = proportional_quotas(counts, target);

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < by_beam.size(); ++b) {
    auto& m = by_beam[b];
    for (std::size_t i = 0; i < quota[b]; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, m.size() - 1);
      std::swap(m[i], m[pick(rng)]);
    }
    out.insert(out.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(quota[b]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

TrainResult train_frame(const SparseFrame& frame, const Graph& graph, const model::ModelConfig& model_config,
                        const TrainConfig& config) {
  config.validate();
  model_config.validate();
  if (graph.num_nodes != frame.size()) throw ConfigError("graph was not built from this frame");
  if (frame.num_dropped() == frame.size()) throw ConfigError("frame has no observed points");

  const auto t0 = Clock::now();
  TrainResult result;
  model::ParamSet params = model::init_params(model_config, model_config.seed);
  if (config.normalize) fit_normalization(params, frame);
  const model::GraphIndex index(graph);
  AdamState adam;

  // Fixed targets for the leaking ablation.
  std::vector<std::size_t> transductive_nodes;
  std::vector<double> transductive_z;
  if (config.supervision == Supervision::transductive_leaking) {
    transductive_nodes = frame.dropped_indices();
    transductive_z = metrics::GroundTruth::dropped_z(frame);
  }

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> nodes;
    std::vector<double> targets;
    NodeFeatures features = graph.features;
    if (config.supervision == Supervision::masked_observed) {
      nodes = supervision_nodes(frame, config.mask_fraction, config.seed, epoch);
      for (std::size_t i : nodes) {
        if (frame.dropped(i)) throw std::logic_error("dropped node selected for supervision");
        targets.push_back(frame.z_masked()[i]);
        features.at(i, NodeFeatures::kZ) = 0.0;
      }
    } else {
      nodes = transductive_nodes;
      targets = transductive_z;
    }

    ad::Tape tape;
    const model::BoundParams bound(tape, params);
    const ad::Var z_hat = model::forward(model_config, index, features, bound);
    const ad::Var picked = ad::gather_rows(z_hat, ad::make_index(nodes));
    const ad::Var loss = ad::mse_loss(picked, tape.constant(ad::Tensor({targets.size(), 1}, targets)));
    const double loss_value = loss.value()[0];
    if (!std::isfinite(loss_value)) {
      throw NumericError(fmt::format("non-finite training loss at epoch {}", epoch));
    }
    tape.backward(loss);

    if (loss_value < best) {
      best = loss_value;
      result.best_epoch = epoch;
      result.params = params;
    }
    std::vector<ad::Tensor> grads;
    grads.reserve(params.entries().size());
    for (const auto& e : params.entries()) grads.push_back(tape.grad(bound(e.name)));
    adam_step(params, grads, adam, config.adam);

    result.history.push_back({epoch, loss_value, seconds_since(t0) * 1e3});
    if (config.patience > 0 && epoch - result.best_epoch >= config.patience) break;
  }
  result.wall_s = seconds_since(t0);
  return result;
}

Prediction predict_dropped(const SparseFrame& frame, const Graph& graph, const model::ModelConfig& model_config,
                           const model::ParamSet& params) {
  const auto t0 = Clock::now();
  const auto z = model::predict(model_config, graph, graph.features, params);
  Prediction out;
  for (std::size_t i : frame.dropped_indices()) out.z_dropped.push_back(z[i]);
  out.wall_s = seconds_since(t0);
  return out;
}

void write_loss_history_csv(const std::filesystem::path& path, std::span<const EpochRecord> history,
                            bool with_timing) {
  auto out = fmt::output_file(path.string());
  out.print("epoch,loss,elapsed_ms\n");
  for (const auto& r : history) out.print("{},{},{}\n", r.epoch, r.loss, with_timing ? r.elapsed_ms : 0.0);
}

}  // namespace beamgat::train
