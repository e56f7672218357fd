// beamgat: run beam-dropout reconstruction experiments from the command line.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "beamgat/errors.hpp"
#include "beamgat/experiment.hpp"

namespace {

using namespace beamgat;
using experiment::ExperimentConfig;

int emit_error(const char* kind, const std::string& message, int code) {
  const nlohmann::json line = {{"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << line.dump() << '\n';
  return code;
}

int exit_code_for(const Error& e) {
  const std::string kind = e.kind();
  if (kind == "config") return 2;
  if (kind == "io" || kind == "format") return 3;
  if (kind == "numeric") return 4;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  ExperimentConfig cfg;
  std::string scene = "sinusoid";
  std::vector<std::string> methods{"linear", "nn", "superior_gat"};
  std::string activation = "leaky_relu";
  std::string residual = "projection";
  std::string chamfer_scope = "dropped";
  std::string supervision = "masked";
  std::string knn_metric = "planar";
  std::string dump_synthetic;
  bool no_timing = false;
  bool quiet = false;

  CLI::App app{"Beam-dropout z reconstruction benchmark"};
  app.set_config("--config", "", "Config file (TOML/INI) mirroring the flags");
  app.allow_config_extras(false);

  app.add_option("--input", cfg.input, "Directory of KITTI .bin frames (or one .bin file)");
  app.add_option("--synthetic", scene, "Synthetic scene kind: plane | sinusoid | wall_ground")
      ->capture_default_str();
  app.add_option("--k", cfg.ks, "Neighborhood sizes")->delimiter(',')->capture_default_str();
  app.add_option("--methods", methods,
                 "Methods: linear, nn, nn_z, simple_gcn, gat_baseline, superior_gat")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--frames", cfg.frames, "Frame limit (synthetic: frame count; 0 = all .bin files)")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "Experiment seed")->capture_default_str();
  app.add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
  app.add_option("--epochs", cfg.train.epochs, "Training epochs per frame")->capture_default_str();
  app.add_option("--sample-target", cfg.sample_target, "Stratified points per frame")->capture_default_str();
  app.add_option("--dropout-nth", cfg.dropout.n, "Drop every n-th beam")->capture_default_str();
  app.add_option("--dropout-offset", cfg.dropout.offset, "Dropped beams satisfy beam % n == offset")
      ->capture_default_str();
  app.add_option("--workers", cfg.workers, "Concurrent frames")->capture_default_str();

  app.add_option("--scene-points", cfg.synthetic.points, "Synthetic scene point count")->capture_default_str();
  app.add_option("--scene-extent", cfg.synthetic.extent, "Synthetic scene range (m)")->capture_default_str();
  app.add_option("--scene-fov", cfg.synthetic.azimuth_fov_deg, "Synthetic horizontal field of view (deg)")
      ->capture_default_str();
  app.add_option("--scene-noise", cfg.synthetic.noise_sigma, "Synthetic z noise sigma (m)")->capture_default_str();
  app.add_option("--dump-synthetic", dump_synthetic, "Write the first synthetic frame as a .bin and exit");

  app.add_option("--lr", cfg.train.adam.learning_rate, "Adam learning rate")->capture_default_str();
  app.add_option("--mask-fraction", cfg.train.mask_fraction, "Observed nodes re-masked per epoch")
      ->capture_default_str();
  app.add_option("--patience", cfg.train.patience, "Early-stop patience in epochs (0 disables)")
      ->capture_default_str();
  app.add_option("--supervision", supervision, "masked | transductive (leaks targets; ablation only)")
      ->capture_default_str();
  app.add_option("--heads", cfg.model.heads, "Attention heads")->capture_default_str();
  app.add_option("--head-width", cfg.model.head_width, "Features per head")->capture_default_str();
  app.add_option("--ffn-hidden", cfg.model.ffn_hidden, "FFN hidden width")->capture_default_str();
  app.add_option("--decoder-hidden", cfg.model.decoder_hidden, "Decoder hidden width")->capture_default_str();
  app.add_option("--activation", activation, "leaky_relu | elu")->capture_default_str();
  app.add_option("--residual-input", residual, "projection | zero_pad")->capture_default_str();
  app.add_option("--knn-metric", knn_metric, "planar | masked_3d")->capture_default_str();
  app.add_flag("--beam-edges", cfg.beam_edges, "Add intra-beam and adjacent-beam edges");
  app.add_option("--interp-bins", cfg.interp_bins, "Azimuth bins for linear interpolation")
      ->capture_default_str();
  app.add_option("--chamfer", chamfer_scope, "dropped | full")->capture_default_str();
  app.add_option("--xz-stride", cfg.xz_stride, "Stride over dropped points in X-Z profiles")
      ->capture_default_str();
  app.add_flag("--no-timing", no_timing, "Write zeros in timing columns (byte-reproducible output)");
  app.add_flag("--save-params", cfg.save_params, "Write trained parameters as JSON");
  app.add_flag("-q,--quiet", quiet, "Print nothing on success");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return emit_error("usage", e.what(), 2);
  }

  try {
    cfg.synthetic.kind = experiment::scene_kind_from_string(scene);
    cfg.methods.clear();
    for (const auto& m : methods) cfg.methods.push_back(experiment::method_from_string(m));
    cfg.model.activation = activation == "elu" ? model::Activation::elu
                           : activation == "leaky_relu"
                               ? model::Activation::leaky_relu
                               : throw ConfigError(fmt::format("unknown activation '{}'", activation));
    cfg.model.residual_input = residual == "zero_pad" ? model::ResidualInput::zero_pad
                               : residual == "projection"
                                   ? model::ResidualInput::projection
                                   : throw ConfigError(fmt::format("unknown residual input '{}'", residual));
    cfg.knn_metric = knn_metric == "masked_3d" ? KnnMetric::masked_3d
                     : knn_metric == "planar"  ? KnnMetric::planar
                                               : throw ConfigError(fmt::format("unknown metric '{}'", knn_metric));
    cfg.chamfer_scope = chamfer_scope == "full"      ? metrics::ChamferScope::full_cloud
                        : chamfer_scope == "dropped" ? metrics::ChamferScope::dropped_only
                                                     : throw ConfigError("--chamfer must be dropped or full");
    cfg.train.supervision = supervision == "transductive" ? train::Supervision::transductive_leaking
                            : supervision == "masked"
                                ? train::Supervision::masked_observed
                                : throw ConfigError("--supervision must be masked or transductive");
    cfg.record_timing = !no_timing;

    if (!dump_synthetic.empty()) {
      cfg.synthetic.seed = cfg.seed;
      write_kitti_bin(dump_synthetic, experiment::synthesize_scene(cfg.synthetic));
      return 0;
    }

    const auto result = experiment::run_experiment(cfg);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    if (!quiet) {
      fmt::print("{:<14} {:>3} {:>6} {:>18} {:>18} {:>18} {:>10}\n", "method", "k", "frames", "rmse_z",
                 "rmse_xyz", "chamfer", "time_s");
      for (const auto& r : result.summary) {
        fmt::print("{:<14} {:>3} {:>6} {:>8.4f} ± {:<7.4f} {:>8.4f} ± {:<7.4f} {:>8.4f} ± {:<7.4f} {:>10.3f}\n",
                   r.method, r.k, r.frames, r.rmse_z.mean, r.rmse_z.sd, r.rmse_xyz.mean, r.rmse_xyz.sd,
                   r.chamfer.mean, r.chamfer.sd, r.train_s.mean + r.infer_s.mean);
      }
      fmt::print("wrote {}\n", (cfg.out_dir / "report.csv").string());
    }
    return 0;
  } catch (const Error& e) {
    return emit_error(e.kind(), e.what(), exit_code_for(e));
  } catch (const std::exception& e) {
    return emit_error("internal", e.what(), 1);
  }
}
