#include <algorithm>
#include <cmath>
#include <numbers>

#include "beamgat/errors.hpp"
#include "beamgat/ingest.hpp"

namespace beamgat {

void PointCloud::check_beams() const {
  if (beam.size() != points.size()) {
    throw ConfigError("beam indices not set (" + std::to_string(beam.size()) + " for " +
                      std::to_string(points.size()) + " points)");
  }
  for (int b : beam) {
    if (b < 0 || b >= num_beams) {
      throw ConfigError("beam index " + std::to_string(b) + " outside [0, " +
                        std::to_string(num_beams - 1) + "]");
    }
  }
}

int beam_for_elevation(double elevation_deg, const BeamModel& model) {
  const double t = (elevation_deg - model.elev_min_deg) / (model.elev_max_deg - model.elev_min_deg);
  const double b = std::floor(t * model.num_beams);
  return static_cast<int>(std::clamp(b, 0.0, static_cast<double>(model.num_beams - 1)));
}

BeamEstimate estimate_beams(PointCloud cloud, const BeamModel& model) {
  if (model.num_beams < 2) throw ConfigError("num_beams must be >= 2");
  if (!(model.elev_min_deg < model.elev_max_deg)) throw ConfigError("elev_min must be < elev_max");

  BeamEstimate est;
  cloud.num_beams = model.num_beams;
  cloud.beam.assign(cloud.size(), 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const RawPoint& p = cloud.points[i];
    if (p.x == 0.0 && p.y == 0.0 && p.z == 0.0) {
      est.origin_points.push_back(i);
      continue;
    }
    const double elev = std::atan2(p.z, std::hypot(p.x, p.y)) * 180.0 / std::numbers::pi;
    cloud.beam[i] = beam_for_elevation(elev, model);
  }
  est.cloud = std::move(cloud);
  return est;
}

}  // namespace beamgat
