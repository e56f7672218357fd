#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "beamgat/errors.hpp"
#include "beamgat/experiment.hpp"

namespace beamgat::experiment {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

enum SeedStream : std::uint64_t { kScene = 1, kSample = 2, kModel = 3, kTrain = 4 };

struct FrameSource {
  std::string name;
  fs::path path;  // empty for synthetic frames
  std::size_t index = 0;
};

std::vector<FrameSource> list_frames(const ExperimentConfig& config) {
  std::vector<FrameSource> out;
  if (config.input.empty()) {
    for (std::size_t f = 0; f < config.frames; ++f) out.push_back({fmt::format("syn{:03}", f), {}, f});
    return out;
  }
  std::vector<fs::path> files;
  if (fs::is_regular_file(config.input)) {
    files.push_back(config.input);
  } else if (fs::is_directory(config.input)) {
    for (const auto& e : fs::directory_iterator(config.input)) {
      if (e.path().extension() == ".bin") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    throw IoError(fmt::format("input '{}' is neither a .bin file nor a directory", config.input.string()));
  }
  if (config.frames > 0 && files.size() > config.frames) files.resize(config.frames);
  for (std::size_t f = 0; f < files.size(); ++f) out.push_back({files[f].stem().string(), files[f], f});
  return out;
}

PointCloud load_cloud(const ExperimentConfig& config, const FrameSource& src) {
  PointCloud cloud;
  if (src.path.empty()) {
    SyntheticSceneSpec spec = config.synthetic;
    spec.seed = derive_seed(config.seed, src.index, kScene);
    cloud = synthesize_scene(spec);
  } else {
    cloud = estimate_beams(read_kitti_bin(src.path).cloud, config.synthetic.beams).cloud;
  }
  if (cloud.size() > config.sample_target) {
    cloud = stratified_sample(cloud, config.sample_target, derive_seed(config.seed, src.index, kSample));
  }
  return cloud;
}

struct FrameOutcome {
  std::vector<metrics::EvalReport> reports;
  std::vector<std::string> warnings;
};

class FrameRunner {
 public:
  FrameRunner(const ExperimentConfig& config, const FrameSource& src, const SparseFrame& frame)
      : config_(config), src_(src), frame_(frame) {}

  void run(FrameOutcome& out) {
    for (Method m : config_.methods) {
      if (!is_learned(m)) out.reports.push_back(run_baseline(m));
    }
    for (std::size_t k : config_.ks) {
      if (std::none_of(config_.methods.begin(), config_.methods.end(), is_learned)) break;
      if (k >= frame_.size()) {
        out.warnings.push_back(fmt::format("frame {}: k={} needs more than {} points, skipped", src_.name, k,
                                           frame_.size()));
        continue;
      }
      const auto t0 = Clock::now();
      const Graph graph = build_graph(frame_, {k, config_.knn_metric, config_.beam_edges});
      const double graph_s = seconds_since(t0);
      for (Method m : config_.methods) {
        if (is_learned(m)) out.reports.push_back(run_learned(m, k, graph, graph_s));
      }
    }
  }

 private:
  metrics::EvalReport finish(Method m, std::size_t k, const Reconstruction& rec, std::span<const double> z_hat,
                             double train_s, double infer_s) {
    metrics::EvalReport r = metrics::evaluate(frame_, rec, config_.chamfer_scope);
    r.frame = src_.name;
    r.method = std::string(to_string(m));
    r.k = k;
    r.train_s = config_.record_timing ? train_s : 0.0;
    r.infer_s = config_.record_timing ? infer_s : 0.0;
    const std::string stem = run_stem(src_.name, m, k);
    metrics::write_predictions_csv(config_.out_dir / "pred" / (stem + ".csv"), frame_, rec);
    metrics::write_xz_projection(config_.out_dir / "xz" / (stem + ".csv"), frame_, z_hat, config_.xz_stride);
    return r;
  }

  metrics::EvalReport run_baseline(Method m) {
    const auto t0 = Clock::now();
    Reconstruction rec;
    if (m == Method::linear) {
      rec = z_only_reconstruction(frame_, baselines::linear_interp(frame_, config_.interp_bins));
    } else {
      rec = baselines::nearest_neighbor_sub(
          frame_, m == Method::nn ? baselines::NearestMode::full_point : baselines::NearestMode::z_only);
    }
    const double infer_s = seconds_since(t0);
    std::vector<double> z_hat(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) z_hat[i] = rec.points[i][2];
    return finish(m, 0, rec, z_hat, 0.0, infer_s);
  }

  metrics::EvalReport run_learned(Method m, std::size_t k, const Graph& graph, double graph_s) {
    const auto mcfg = model_config_for(config_, m, derive_seed(config_.seed, src_.index, kModel));
    train::TrainConfig tcfg = config_.train;
    tcfg.seed = derive_seed(config_.seed, src_.index, kTrain);

    const train::TrainResult trained = train::train_frame(frame_, graph, mcfg, tcfg);
    const train::Prediction pred = train::predict_dropped(frame_, graph, mcfg, trained.params);

    const std::string stem = run_stem(src_.name, m, k);
    train::write_loss_history_csv(config_.out_dir / "loss" / (stem + ".csv"), trained.history,
                                  config_.record_timing);
    if (config_.save_params) {
      model::save_checkpoint(config_.out_dir / "params" / (stem + ".json"), mcfg, trained.params);
    }
    const Reconstruction rec = z_only_reconstruction(frame_, pred.z_dropped);
    return finish(m, k, rec, pred.z_dropped, trained.wall_s, graph_s + pred.wall_s);
  }

  const ExperimentConfig& config_;
  const FrameSource& src_;
  const SparseFrame& frame_;
};

void process_frame(const ExperimentConfig& config, const FrameSource& src, FrameOutcome& out) {
  PointCloud cloud;
  try {
    cloud = load_cloud(config, src);
  } catch (const IoError& e) {
    out.warnings.push_back(fmt::format("frame {} skipped: {}", src.name, e.what()));
    return;
  } catch (const FormatError& e) {
    out.warnings.push_back(fmt::format("frame {} skipped: {}", src.name, e.what()));
    return;
  }
  const SparseFrame frame = apply_beam_dropout(cloud, config.dropout);
  FrameRunner(config, src, frame).run(out);
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::linear: return "linear";
    case Method::nn: return "nn";
    case Method::nn_z: return "nn_z";
    case Method::simple_gcn: return "simple_gcn";
    case Method::gat_baseline: return "gat_baseline";
    case Method::superior_gat: return "superior_gat";
  }
  return "?";
}

Method method_from_string(std::string_view s) {
  for (Method m : {Method::linear, Method::nn, Method::nn_z, Method::simple_gcn, Method::gat_baseline,
                   Method::superior_gat}) {
    if (s == to_string(m)) return m;
  }
  if (s == "gcn") return Method::simple_gcn;
  if (s == "gat") return Method::gat_baseline;
  throw ConfigError(fmt::format("unknown method '{}'", s));
}

bool is_learned(Method m) {
  return m == Method::simple_gcn || m == Method::gat_baseline || m == Method::superior_gat;
}

std::string run_stem(std::string_view frame, Method method, std::size_t k) {
  if (!is_learned(method)) return fmt::format("{}_{}", frame, to_string(method));
  return fmt::format("{}_{}_k{}", frame, to_string(method), k);
}

model::ModelConfig model_config_for(const ExperimentConfig& config, Method method, std::uint64_t seed) {
  model::ModelConfig cfg;
  switch (method) {
    case Method::superior_gat:
      cfg = model::ModelConfig::defaults(model::Architecture::superior_gat);
      break;
    case Method::gat_baseline:
      cfg = model::ModelConfig::defaults(model::Architecture::gat_baseline);
      cfg.layers = config.model.gat_baseline_layers;
      break;
    case Method::simple_gcn:
      cfg = model::ModelConfig::defaults(model::Architecture::simple_gcn);
      cfg.layers = config.model.gcn_layers;
      break;
    default:
      throw ConfigError(fmt::format("method '{}' has no model", to_string(method)));
  }
  cfg.heads = config.model.heads;
  cfg.head_width = config.model.head_width;
  cfg.ffn_hidden = config.model.ffn_hidden;
  cfg.decoder_hidden = config.model.decoder_hidden;
  cfg.activation = config.model.activation;
  cfg.residual_input = config.model.residual_input;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("method list is empty");
  if (ks.empty()) throw ConfigError("k list is empty");
  for (std::size_t k : ks) {
    if (k < 1) throw ConfigError("k must be >= 1");
  }
  if (input.empty()) {
    synthetic.validate();
    if (frames < 1) throw ConfigError("synthetic input needs >= 1 frame");
  }
  if (sample_target < 1) throw ConfigError("sample target must be >= 1");
  if (dropout.n < 1 || dropout.offset < 0 || dropout.offset >= dropout.n) {
    throw ConfigError(fmt::format("invalid dropout pattern n={} offset={}", dropout.n, dropout.offset));
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (xz_stride < 1) throw ConfigError("xz stride must be >= 1");
  if (interp_bins < 8) throw ConfigError("interpolation needs >= 8 azimuth bins");
  if (out_dir.empty()) throw ConfigError("output directory is empty");
  train.validate();
  for (Method m : methods) {
    if (is_learned(m)) model_config_for(*this, m, 0);
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  for (const char* sub : {"pred", "xz", "loss"}) fs::create_directories(config.out_dir / sub);
  if (config.save_params) fs::create_directories(config.out_dir / "params");

  const std::vector<FrameSource> sources = list_frames(config);
  std::vector<FrameOutcome> outcomes(sources.size());
  std::vector<std::exception_ptr> errors(sources.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t f = next++; f < sources.size(); f = next++) {
      try {
        process_frame(config, sources[f], outcomes[f]);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  const std::size_t width = std::min(config.workers, std::max<std::size_t>(1, sources.size()));
  if (width <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < width; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentResult result;
  for (auto& o : outcomes) {
    result.reports.insert(result.reports.end(), o.reports.begin(), o.reports.end());
    result.warnings.insert(result.warnings.end(), o.warnings.begin(), o.warnings.end());
  }
  metrics::write_report_csv(config.out_dir / "report.csv", result.reports);
  if (!result.reports.empty()) result.summary = metrics::aggregate(result.reports);
  metrics::write_summary_csv(config.out_dir / "summary.csv", result.summary);
  return result;
}

}  // namespace beamgat::experiment
