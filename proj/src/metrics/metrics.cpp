#include "beamgat/metrics.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/os.h>

#include "beamgat/errors.hpp"
#include "beamgat/spatial_index.hpp"

namespace beamgat::metrics {

std::vector<Point3> GroundTruth::dropped_points(const SparseFrame& frame) {
  std::vector<Point3> out;
  for (std::size_t i : frame.dropped_indices()) {
    const RawPoint& p = frame.cloud().points[i];
    out.push_back({p.x, p.y, frame.z_truth_[i]});
  }
  return out;
}

std::vector<double> GroundTruth::dropped_z(const SparseFrame& frame) {
  std::vector<double> out;
  for (std::size_t i : frame.dropped_indices()) out.push_back(frame.z_truth_[i]);
  return out;
}

std::vector<Point3> GroundTruth::all_points(const SparseFrame& frame) {
  std::vector<Point3> out;
  out.reserve(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const RawPoint& p = frame.cloud().points[i];
    out.push_back({p.x, p.y, frame.z_truth_[i]});
  }
  return out;
}

double rmse_z(std::span<const double> z_hat, std::span<const double> z_truth) {
  if (z_hat.empty() || z_hat.size() != z_truth.size()) {
    throw ConfigError(fmt::format("rmse_z: sizes {} and {}", z_hat.size(), z_truth.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < z_hat.size(); ++i) acc += (z_hat[i] - z_truth[i]) * (z_hat[i] - z_truth[i]);
  return std::sqrt(acc / static_cast<double>(z_hat.size()));
}

double rmse_xyz(std::span<const Point3> reconstructed, std::span<const Point3> truth) {
  if (reconstructed.empty() || reconstructed.size() != truth.size()) {
    throw ConfigError(fmt::format("rmse_xyz: sizes {} and {}", reconstructed.size(), truth.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) acc += KdTree<3>::dist2(reconstructed[i], truth[i]);
  return std::sqrt(acc / (3.0 * static_cast<double>(truth.size())));
}

namespace {

double mean_nearest(std::span<const Point3> from, const KdTree<3>& to) {
  double acc = 0.0;
  for (const Point3& p : from) acc += std::sqrt(to.nearest(p).dist2);
  return acc / static_cast<double>(from.size());
}

}  // namespace

double chamfer(std::span<const Point3> a, std::span<const Point3> b) {
  if (a.empty() || b.empty()) throw ConfigError("chamfer: empty point set");
  const KdTree<3> tree_a(std::vector<Point3>(a.begin(), a.end()));
  const KdTree<3> tree_b(std::vector<Point3>(b.begin(), b.end()));
  return 0.5 * (mean_nearest(a, tree_b) + mean_nearest(b, tree_a));
}

EvalReport evaluate(const SparseFrame& frame, const Reconstruction& rec, ChamferScope scope) {
  const auto truth = GroundTruth::dropped_points(frame);
  if (rec.size() != truth.size()) throw ConfigError("reconstruction must cover every dropped point");
  EvalReport r;
  r.n_dropped = truth.size();
  std::vector<double> z_hat, z_true;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    z_hat.push_back(rec.points[i][2]);
    z_true.push_back(truth[i][2]);
  }
  r.rmse_z = rmse_z(z_hat, z_true);
  r.rmse_xyz = rmse_xyz(rec.points, truth);
  if (scope == ChamferScope::dropped_only) {
    r.chamfer = chamfer(rec.points, truth);
  } else {
    std::vector<Point3> full;
    for (std::size_t i : frame.observed_indices()) {
      const RawPoint& p = frame.cloud().points[i];
      full.push_back({p.x, p.y, p.z});
    }
    full.insert(full.end(), rec.points.begin(), rec.points.end());
    r.chamfer = chamfer(full, GroundTruth::all_points(frame));
  }
  return r;
}

MeanSd mean_sd(std::span<const double> values) {
  if (values.empty()) throw ConfigError("mean_sd: no values");
  MeanSd m;
  for (double v : values) m.mean += v;
  m.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return m;
}

std::vector<AggregateRow> aggregate(std::span<const EvalReport> reports) {
  if (reports.empty()) throw ConfigError("aggregate: no reports");
  std::vector<std::pair<std::string, std::size_t>> keys;
  std::map<std::pair<std::string, std::size_t>, std::vector<const EvalReport*>> groups;
  for (const auto& r : reports) {
    auto key = std::make_pair(r.method, r.k);
    auto& g = groups[key];
    if (g.empty()) keys.push_back(key);
    g.push_back(&r);
  }
  std::vector<AggregateRow> rows;
  for (const auto& key : keys) {
    const auto& g = groups[key];
    auto column = [&](double EvalReport::*field) {
      std::vector<double> v;
      for (const EvalReport* r : g) v.push_back(r->*field);
      return mean_sd(v);
    };
    rows.push_back({key.first, key.second, g.size(), column(&EvalReport::rmse_z), column(&EvalReport::rmse_xyz),
                    column(&EvalReport::chamfer), column(&EvalReport::train_s), column(&EvalReport::infer_s)});
  }
  return rows;
}

void write_report_csv(const std::filesystem::path& path, std::span<const EvalReport> reports) {
  auto out = fmt::output_file(path.string());
  out.print("{}\n", kReportHeader);
  for (const auto& r : reports) {
    out.print("{},{},{},{},{},{},{},{},{}\n", r.frame, r.method, r.k, r.rmse_z, r.rmse_xyz, r.chamfer, r.train_s,
              r.infer_s, r.n_dropped);
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

std::vector<EvalReport> read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read report: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) throw FormatError("unexpected report header in " + path.string());
  std::vector<EvalReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 9) throw FormatError("malformed report row: " + line);
    out.push_back({c[0], c[1], std::stoul(c[2]), std::stod(c[3]), std::stod(c[4]), std::stod(c[5]), std::stod(c[6]),
                   std::stod(c[7]), std::stoul(c[8])});
  }
  return out;
}

void write_summary_csv(const std::filesystem::path& path, std::span<const AggregateRow> rows) {
  auto out = fmt::output_file(path.string());
  out.print(
      "method,k,frames,rmse_z_mean,rmse_z_sd,rmse_xyz_mean,rmse_xyz_sd,chamfer_mean,chamfer_sd,"
      "train_s_mean,train_s_sd,infer_s_mean,infer_s_sd\n");
  for (const auto& r : rows) {
    out.print("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.method, r.k, r.frames, r.rmse_z.mean, r.rmse_z.sd,
              r.rmse_xyz.mean, r.rmse_xyz.sd, r.chamfer.mean, r.chamfer.sd, r.train_s.mean, r.train_s.sd,
              r.infer_s.mean, r.infer_s.sd);
  }
}

void write_xz_projection(const std::filesystem::path& path, const SparseFrame& frame,
                         std::span<const double> z_hat, std::size_t stride) {
  if (stride == 0) throw ConfigError("xz projection stride must be >= 1");
  const auto& z = GroundTruth::z(frame);
  const auto dropped = frame.dropped_indices();
  if (z_hat.size() != dropped.size()) throw ConfigError("one prediction per dropped point required");
  auto out = fmt::output_file(path.string());
  out.print("x,z_truth,z_pred,dropped\n");
  for (std::size_t t = 0; t < dropped.size(); t += stride) {
    out.print("{},{},{},1\n", frame.cloud().points[dropped[t]].x, z[dropped[t]], z_hat[t]);
  }
  for (std::size_t i : frame.observed_indices()) {
    out.print("{},{},{},0\n", frame.cloud().points[i].x, z[i], z[i]);
  }
}

void write_predictions_csv(const std::filesystem::path& path, const SparseFrame& frame, const Reconstruction& rec) {
  const auto dropped = frame.dropped_indices();
  if (rec.size() != dropped.size()) throw ConfigError("reconstruction must cover every dropped point");
  auto out = fmt::output_file(path.string());
  out.print("index,x,y,z\n");
  for (std::size_t t = 0; t < dropped.size(); ++t) {
    out.print("{},{},{},{}\n", dropped[t], rec.points[t][0], rec.points[t][1], rec.points[t][2]);
  }
}

Reconstruction read_predictions_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read predictions: " + path.string());
  std::string line;
  std::getline(in, line);
  Reconstruction rec;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 4) throw FormatError("malformed prediction row: " + line);
    rec.points.push_back({std::stod(c[1]), std::stod(c[2]), std::stod(c[3])});
  }
  return rec;
}

}  // namespace beamgat::metrics
