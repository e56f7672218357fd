#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "beamgat/ingest.hpp"

namespace beamgat {

/// Row-major [N, 4] node features: x, y, masked z, beam / (B - 1).
struct NodeFeatures {
  static constexpr std::size_t kWidth = 4;
  static constexpr std::size_t kX = 0, kY = 1, kZ = 2, kBeam = 3;

  std::size_t rows = 0;
  std::vector<double> data;

  double at(std::size_t i, std::size_t c) const { return data[i * kWidth + c]; }
  double& at(std::size_t i, std::size_t c) { return data[i * kWidth + c]; }
};

/// Directed graph in CSR form. Row i lists the source nodes j of edges j -> i.
struct Graph {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> row_offsets;   // N + 1
  std::vector<std::size_t> neighbor_ids;  // E
  NodeFeatures features;

  std::size_t num_edges() const { return neighbor_ids.size(); }
  std::size_t degree(std::size_t i) const { return row_offsets[i + 1] - row_offsets[i]; }
  /// Destination node of every edge, aligned with neighbor_ids.
  std::vector<std::size_t> edge_targets() const;
  /// Throws ConfigError if the CSR invariants do not hold.
  void validate() const;
};

enum class KnnMetric {
  planar,     // Euclidean distance in (x, y)
  masked_3d,  // Euclidean distance in (x, y, masked z)
};

struct GraphOptions {
  std::size_t k = 10;
  KnnMetric metric = KnnMetric::planar;
  bool beam_edges = false;
};

NodeFeatures build_features(const SparseFrame& frame);

/// k nearest other nodes per row plus a self-loop. Ties break toward the
/// lower point index. Requires 1 <= k < N.
Graph build_knn_graph(const SparseFrame& frame, std::size_t k,
                      KnnMetric metric = KnnMetric::planar);

/// Chains each beam in azimuth order and links every point with its
/// azimuth-nearest point in beams b - 1 and b + 1 (both directions). Edges
/// already present are not duplicated.
Graph add_beam_edges(const Graph& graph, const SparseFrame& frame);

Graph build_graph(const SparseFrame& frame, const GraphOptions& options);

/// Rebuilds a graph from explicit per-row source lists (tests and tools).
Graph graph_from_rows(const std::vector<std::vector<std::size_t>>& rows, NodeFeatures features);

/// Debug dump: one `src,dst,dist` line per edge, planar distance.
void write_edge_list_csv(const std::filesystem::path& path, const Graph& graph);

}  // namespace beamgat
