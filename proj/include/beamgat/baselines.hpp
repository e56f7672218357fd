#pragma once

#include <cstddef>
#include <vector>

#include "beamgat/reconstruction.hpp"

namespace beamgat::baselines {

/// Interpolates z across the beam stack inside azimuth bins: for each bin
/// and beam the observed point nearest the bin center represents that beam;
/// a dropped point takes the linear blend (against beam index) of the
/// nearest observed beams below and above it. With only one side available
/// the nearest observed beam's z is copied; a bin with no observed beam
/// borrows from the closest populated bin. Returns one z per dropped point.
std::vector<double> linear_interp(const SparseFrame& frame, std::size_t bin_count = 360);

enum class NearestMode {
  full_point,  // substitute the neighbor's (x, y, z)
  z_only,      // keep (x, y), copy the neighbor's z
};

/// Replaces each dropped point by its nearest observed point in the (x, y) plane.
Reconstruction nearest_neighbor_sub(const SparseFrame& frame, NearestMode mode = NearestMode::full_point);

}  // namespace beamgat::baselines
