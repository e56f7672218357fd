#include "beamgat/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include <fmt/format.h>
#include <fmt/os.h>

#include "beamgat/errors.hpp"
#include "beamgat/spatial_index.hpp"

namespace beamgat {

std::vector<std::size_t> Graph::edge_targets() const {
  std::vector<std::size_t> dst(num_edges());
  for (std::size_t i = 0; i < num_nodes; ++i) {
    std::fill(dst.begin() + static_cast<std::ptrdiff_t>(row_offsets[i]),
              dst.begin() + static_cast<std::ptrdiff_t>(row_offsets[i + 1]), i);
  }
  return dst;
}

void Graph::validate() const {
  if (row_offsets.size() != num_nodes + 1 || row_offsets.front() != 0 ||
      row_offsets.back() != neighbor_ids.size()) {
    throw ConfigError("graph: malformed row offsets");
  }
  std::vector<std::size_t> row;
  for (std::size_t i = 0; i < num_nodes; ++i) {
    if (row_offsets[i + 1] <= row_offsets[i]) throw ConfigError(fmt::format("graph: row {} is empty", i));
    row.assign(neighbor_ids.begin() + static_cast<std::ptrdiff_t>(row_offsets[i]),
               neighbor_ids.begin() + static_cast<std::ptrdiff_t>(row_offsets[i + 1]));
    std::sort(row.begin(), row.end());
    if (row.back() >= num_nodes) throw ConfigError(fmt::format("graph: row {} has out-of-range id", i));
    if (std::adjacent_find(row.begin(), row.end()) != row.end()) {
      throw ConfigError(fmt::format("graph: row {} has a duplicate neighbor", i));
    }
  }
  if (features.rows != num_nodes) throw ConfigError("graph: feature rows != num_nodes");
}

NodeFeatures build_features(const SparseFrame& frame) {
  const PointCloud& cloud = frame.cloud();
  cloud.check_beams();
  NodeFeatures f;
  f.rows = cloud.size();
  f.data.resize(f.rows * NodeFeatures::kWidth);
  const double beam_scale = cloud.num_beams > 1 ? 1.0 / (cloud.num_beams - 1) : 0.0;
  for (std::size_t i = 0; i < f.rows; ++i) {
    f.at(i, NodeFeatures::kX) = cloud.points[i].x;
    f.at(i, NodeFeatures::kY) = cloud.points[i].y;
    f.at(i, NodeFeatures::kZ) = frame.z_masked()[i];
    f.at(i, NodeFeatures::kBeam) = cloud.beam[i] * beam_scale;
  }
  return f;
}

Graph graph_from_rows(const std::vector<std::vector<std::size_t>>& rows, NodeFeatures features) {
  Graph g;
  g.num_nodes = rows.size();
  g.row_offsets.assign(1, 0);
  for (const auto& r : rows) {
    g.neighbor_ids.insert(g.neighbor_ids.end(), r.begin(), r.end());
    g.row_offsets.push_back(g.neighbor_ids.size());
  }
  g.features = std::move(features);
  g.validate();
  return g;
}

namespace {

template <std::size_t Dim>
std::vector<std::vector<std::size_t>> knn_rows(std::vector<std::array<double, Dim>> pts, std::size_t k) {
  const std::size_t n = pts.size();
  KdTree<Dim> tree(std::move(pts));
  std::vector<std::vector<std::size_t>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto hits = tree.knn(tree.point(i), k, i);
    auto& row = rows[i];
    row.reserve(k + 1);
    row.push_back(i);
    for (const Neighbor& h : hits) row.push_back(h.index);
  }
  return rows;
}

}  // namespace

Graph build_knn_graph(const SparseFrame& frame, std::size_t k, KnnMetric metric) {
  const std::size_t n = frame.size();
  if (k < 1) throw ConfigError("k must be >= 1");
  if (k >= n) throw ConfigError(fmt::format("k = {} requires more than {} points", k, n));

  NodeFeatures features = build_features(frame);
  std::vector<std::vector<std::size_t>> rows;
  if (metric == KnnMetric::planar) {
    std::vector<std::array<double, 2>> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = {features.at(i, 0), features.at(i, 1)};
    rows = knn_rows(std::move(pts), k);
  } else {
    std::vector<std::array<double, 3>> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = {features.at(i, 0), features.at(i, 1), features.at(i, 2)};
    rows = knn_rows(std::move(pts), k);
  }
  return graph_from_rows(rows, std::move(features));
}

namespace {

// Azimuth in [0, 2*pi).
double azimuth(const RawPoint& p) {
  const double a = std::atan2(p.y, p.x);
  return a < 0.0 ? a + 2.0 * std::numbers::pi : a;
}

double azimuth_gap(double a, double b) {
  const double d = std::fabs(a - b);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

}  // namespace

Graph add_beam_edges(const Graph& graph, const SparseFrame& frame) {
  const PointCloud& cloud = frame.cloud();
  cloud.check_beams();
  if (cloud.size() != graph.num_nodes) throw ConfigError("add_beam_edges: frame/graph size mismatch");

  std::vector<std::vector<std::size_t>> rows(graph.num_nodes);
  for (std::size_t i = 0; i < graph.num_nodes; ++i) {
    rows[i].assign(graph.neighbor_ids.begin() + static_cast<std::ptrdiff_t>(graph.row_offsets[i]),
                   graph.neighbor_ids.begin() + static_cast<std::ptrdiff_t>(graph.row_offsets[i + 1]));
  }
  auto link = [&](std::size_t src, std::size_t dst) {
    auto& r = rows[dst];
    if (std::find(r.begin(), r.end(), src) == r.end()) r.push_back(src);
  };

  // Members of each beam sorted by (azimuth, index).
  std::vector<std::vector<std::size_t>> by_beam(static_cast<std::size_t>(cloud.num_beams));
  for (std::size_t i = 0; i < cloud.size(); ++i) by_beam[static_cast<std::size_t>(cloud.beam[i])].push_back(i);
  std::vector<double> az(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) az[i] = azimuth(cloud.points[i]);
  for (auto& members : by_beam) {
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return az[a] < az[b] || (az[a] == az[b] && a < b);
    });
    for (std::size_t t = 1; t < members.size(); ++t) {
      link(members[t - 1], members[t]);
      link(members[t], members[t - 1]);
    }
  }

  auto nearest_in_beam = [&](const std::vector<std::size_t>& members, double a) {
    // members sorted by azimuth; check the insertion neighbors, with wrap-around.
    auto it = std::lower_bound(members.begin(), members.end(), a,
                               [&](std::size_t m, double v) { return az[m] < v; });
    const std::size_t n = members.size();
    const std::size_t hi = static_cast<std::size_t>(it - members.begin()) % n;
    const std::size_t lo = (hi + n - 1) % n;
    const double g_hi = azimuth_gap(az[members[hi]], a);
    const double g_lo = azimuth_gap(az[members[lo]], a);
    if (g_lo < g_hi || (g_lo == g_hi && members[lo] < members[hi])) return members[lo];
    return members[hi];
  };

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const int b = cloud.beam[i];
    for (int nb : {b - 1, b + 1}) {
      if (nb < 0 || nb >= cloud.num_beams) continue;
      const auto& members = by_beam[static_cast<std::size_t>(nb)];
      if (members.empty()) continue;
      const std::size_t j = nearest_in_beam(members, az[i]);
      link(j, i);
      link(i, j);
    }
  }

  NodeFeatures features = graph.features;
  return graph_from_rows(rows, std::move(features));
}

Graph build_graph(const SparseFrame& frame, const GraphOptions& options) {
  Graph g = build_knn_graph(frame, options.k, options.metric);
  if (options.beam_edges) g = add_beam_edges(g, frame);
  return g;
}

void write_edge_list_csv(const std::filesystem::path& path, const Graph& graph) {
  auto out = fmt::output_file(path.string());
  out.print("src,dst,dist\n");
  for (std::size_t i = 0; i < graph.num_nodes; ++i) {
    for (std::size_t e = graph.row_offsets[i]; e < graph.row_offsets[i + 1]; ++e) {
      const std::size_t j = graph.neighbor_ids[e];
      const double dx = graph.features.at(i, 0) - graph.features.at(j, 0);
      const double dy = graph.features.at(i, 1) - graph.features.at(j, 1);
      out.print("{},{},{}\n", j, i, std::hypot(dx, dy));
    }
  }
}

}  // namespace beamgat
