#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "beamgat/errors.hpp"
#include "beamgat/experiment.hpp"

using namespace beamgat;
using namespace beamgat::experiment;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("beamgat_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c;
  c.synthetic.kind = SceneKind::plane;
  c.synthetic.points = 800;
  c.synthetic.extent = 20;
  c.methods = {Method::linear, Method::nn};
  c.out_dir = out;
  c.record_timing = false;
  c.model.heads = 2;
  c.model.head_width = 4;
  c.model.ffn_hidden = 16;
  c.model.decoder_hidden = 8;
  c.train.epochs = 5;
  return c;
}

struct RunOutput {
  int status;
  std::string text;
};

RunOutput run_cli(const std::string& args) {
  const std::string cmd = std::string(BEAMGAT_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string text;
  std::array<char, 512> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) text += buf.data();
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), text};
}

}  // namespace

TEST(Synthetic, PlaneSitsAtGroundHeight) {
  SyntheticSceneSpec s;
  s.kind = SceneKind::plane;
  s.points = 2000;
  const PointCloud c = synthesize_scene(s);
  EXPECT_NEAR(static_cast<double>(c.size()), 2000.0, 1.0);
  ASSERT_TRUE(c.has_beams());
  for (const auto& p : c.points) {
    EXPECT_NEAR(p.z, -1.7, 1e-9);
    EXPECT_LE(std::hypot(p.x, p.y), s.extent + 1e-9);
  }
}

TEST(Synthetic, DeterministicAndSeedSensitive) {
  SyntheticSceneSpec s;
  s.points = 1000;
  const PointCloud a = synthesize_scene(s);
  EXPECT_EQ(a.points, synthesize_scene(s).points);
  s.seed = 1;
  EXPECT_NE(a.points, synthesize_scene(s).points);
}

TEST(Synthetic, SinusoidPointsLieOnTerrain) {
  SyntheticSceneSpec s;
  s.points = 1500;
  s.seed = 5;
  for (const auto& p : synthesize_scene(s).points) EXPECT_NEAR(p.z, ground_height(s, p.x, p.y), 1e-6);
}

TEST(Synthetic, FieldOfViewLimitsAzimuth) {
  SyntheticSceneSpec s;
  s.points = 1000;
  s.azimuth_fov_deg = 30;
  for (const auto& p : synthesize_scene(s).points) EXPECT_LE(std::abs(std::atan2(p.y, p.x)), 15.0 * M_PI / 180 + 1e-9);
}

TEST(Synthetic, LinearInterpExactOnPlaneBoundedOnSinusoid) {
  SyntheticSceneSpec s;
  s.kind = SceneKind::plane;
  s.points = 3000;
  const SparseFrame plane = apply_beam_dropout(synthesize_scene(s), {4, 0});
  const auto zp = baselines::linear_interp(plane);
  EXPECT_LT(metrics::rmse_z(zp, metrics::GroundTruth::dropped_z(plane)), 1e-9);

  s.kind = SceneKind::sinusoid;
  const SparseFrame sin = apply_beam_dropout(synthesize_scene(s), {4, 0});
  const double r = metrics::rmse_z(baselines::linear_interp(sin), metrics::GroundTruth::dropped_z(sin));
  EXPECT_GT(r, 0.0);
  EXPECT_LT(r, s.amplitude);
}

TEST(Experiment, BaselineSmokeRun) {
  const auto out = scratch("smoke");
  const auto res = run_experiment(small_config(out));
  ASSERT_EQ(res.reports.size(), 2u);
  EXPECT_EQ(res.reports[0].method, "linear");
  EXPECT_EQ(res.reports[1].method, "nn");
  EXPECT_TRUE(fs::exists(out / "report.csv"));
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
  EXPECT_TRUE(fs::exists(out / "pred" / "syn000_linear.csv"));
  EXPECT_TRUE(fs::exists(out / "xz" / "syn000_nn.csv"));
  EXPECT_EQ(metrics::read_report_csv(out / "report.csv").size(), 2u);
}

TEST(Experiment, KSweepRowsAndOutputs) {
  const auto out = scratch("ksweep");
  auto cfg = small_config(out);
  cfg.methods = {Method::superior_gat};
  cfg.ks = {5, 10, 15, 20};
  cfg.save_params = true;
  const auto res = run_experiment(cfg);
  ASSERT_EQ(res.reports.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(res.reports[i].k, cfg.ks[i]);
  EXPECT_TRUE(fs::exists(out / "loss" / "syn000_superior_gat_k15.csv"));
  EXPECT_TRUE(fs::exists(out / "params" / "syn000_superior_gat_k20.json"));
}

TEST(Experiment, RerunIsByteIdentical) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto cfg = small_config(a);
  cfg.synthetic.kind = SceneKind::sinusoid;
  cfg.methods = {Method::linear, Method::simple_gcn, Method::superior_gat};
  cfg.frames = 2;
  run_experiment(cfg);
  cfg.out_dir = b;
  cfg.workers = 2;
  run_experiment(cfg);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 10u);
}

TEST(Experiment, MetricsReproduceFromDumpedPredictions) {
  const auto dir = scratch("reverify_in");
  SyntheticSceneSpec s;
  s.points = 1200;
  s.seed = 8;
  write_kitti_bin(dir / "frame.bin", synthesize_scene(s));
  const auto out = scratch("reverify");
  auto cfg = small_config(out);
  cfg.input = dir / "frame.bin";
  cfg.methods = {Method::linear, Method::nn, Method::superior_gat};
  const auto res = run_experiment(cfg);
  ASSERT_EQ(res.reports.size(), 3u);

  const SparseFrame frame =
      apply_beam_dropout(estimate_beams(read_kitti_bin(dir / "frame.bin").cloud).cloud, cfg.dropout);
  const auto reports = metrics::read_report_csv(out / "report.csv");
  for (const auto& r : reports) {
    const auto rec = metrics::read_predictions_csv(
        out / "pred" / (run_stem(r.frame, method_from_string(r.method), r.k) + ".csv"));
    const auto again = metrics::evaluate(frame, rec);
    EXPECT_EQ(again.rmse_z, r.rmse_z) << r.method;
    EXPECT_EQ(again.rmse_xyz, r.rmse_xyz) << r.method;
    EXPECT_EQ(again.chamfer, r.chamfer) << r.method;
  }
}

TEST(Experiment, UnreadableFrameIsSkippedWithWarning) {
  const auto dir = scratch("frames");
  SyntheticSceneSpec s;
  s.kind = SceneKind::plane;
  s.points = 600;
  write_kitti_bin(dir / "000000.bin", synthesize_scene(s));
  {
    std::ofstream bad(dir / "000001.bin", std::ios::binary);
    bad << std::string(17, 'x');
  }
  auto cfg = small_config(scratch("frames_out"));
  cfg.input = dir;
  cfg.frames = 0;
  const auto res = run_experiment(cfg);
  EXPECT_EQ(res.reports.size(), 2u);
  ASSERT_EQ(res.warnings.size(), 1u);
  EXPECT_NE(res.warnings[0].find("000001"), std::string::npos);
}

TEST(Experiment, ConfigValidation) {
  auto cfg = small_config(scratch("invalid"));
  cfg.methods.clear();
  EXPECT_THROW(run_experiment(cfg), ConfigError);
  cfg = small_config(scratch("invalid"));
  cfg.dropout = {4, 4};
  EXPECT_THROW(run_experiment(cfg), ConfigError);
  cfg = small_config(scratch("invalid"));
  cfg.input = "/nonexistent/beamgat";
  EXPECT_THROW(run_experiment(cfg), IoError);
  EXPECT_EQ(run_stem("syn000", Method::nn, 10), "syn000_nn");
  EXPECT_EQ(run_stem("syn000", Method::gat_baseline, 10), "syn000_gat_baseline_k10");
  EXPECT_EQ(method_from_string("gcn"), Method::simple_gcn);
  EXPECT_THROW(method_from_string("bogus"), ConfigError);
}

TEST(Cli, ErrorsAreSingleJsonLines) {
  auto r = run_cli("--methods bogus --out " + scratch("cli_bad").string());
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(r.text.rfind("{\"error\":{\"kind\":\"config\"", 0), 0u) << r.text;
  r = run_cli("--input /nonexistent/dir --out " + scratch("cli_io").string());
  EXPECT_EQ(r.status, 3);
  EXPECT_NE(r.text.find("\"kind\":\"io\""), std::string::npos);
  r = run_cli("--no-such-flag");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.text.find("\"kind\":\"usage\""), std::string::npos);
}

TEST(Cli, RunsFromFlagsAndConfigFile) {
  const auto out = scratch("cli_ok");
  auto r = run_cli("--synthetic plane --scene-points 600 --methods linear,nn --k 5 --no-timing -q --out " +
                   out.string());
  EXPECT_EQ(r.status, 0) << r.text;
  EXPECT_EQ(metrics::read_report_csv(out / "report.csv").size(), 2u);

  const auto out2 = scratch("cli_cfg");
  const auto cfg = out2 / "run.toml";
  {
    std::ofstream f(cfg);
    f << "synthetic = \"plane\"\nscene-points = 600\nmethods = [\"linear\"]\nno-timing = true\nout = \""
      << (out2 / "res").string() << "\"\n";
  }
  r = run_cli("-q --config " + cfg.string());
  EXPECT_EQ(r.status, 0) << r.text;
  EXPECT_EQ(metrics::read_report_csv(out2 / "res" / "report.csv").size(), 1u);
}
