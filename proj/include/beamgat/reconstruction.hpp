#pragma once

#include <array>
#include <span>
#include <vector>

#include "beamgat/ingest.hpp"

namespace beamgat {

using Point3 = std::array<double, 3>;

/// One reconstructed point per dropped point, in SparseFrame::dropped_indices()
/// order.
struct Reconstruction {
  std::vector<Point3> points;

  std::size_t size() const { return points.size(); }
};

/// Keeps each dropped point's (x, y) and attaches the estimated z.
Reconstruction z_only_reconstruction(const SparseFrame& frame, std::span<const double> z_hat);

}  // namespace beamgat
