#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "beamgat/errors.hpp"
#include "beamgat/experiment.hpp"

namespace beamgat::experiment {

namespace {

constexpr double kMarchStep = 0.2;  // horizontal meters between sign checks
constexpr int kBisections = 60;
constexpr std::size_t kTrialAzimuths = 90;

struct Phases {
  double azimuth = 0.0;
  double wave_x = 0.0;
  double wave_y = 0.0;
};

Phases draw_phases(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  Phases p;
  p.azimuth = u(rng);
  p.wave_x = u(rng);
  p.wave_y = u(rng);
  return p;
}

double terrain(const SyntheticSceneSpec& spec, const Phases& ph, double x, double y) {
  if (spec.kind != SceneKind::sinusoid) return spec.ground_z;
  const double w = 2.0 * std::numbers::pi / spec.wavelength;
  return spec.ground_z + spec.amplitude * std::sin(w * x + ph.wave_x) * std::cos(w * y + ph.wave_y);
}

struct Hit {
  bool ok = false;
  RawPoint p;
};

// Ray from the origin with unit direction (cx, cy, sz), where (cx, cy) is the
// horizontal component. Parametrized by horizontal range r.
Hit cast_ray(const SyntheticSceneSpec& spec, const Phases& ph, double elev, double azim) {
  const double ca = std::cos(azim), sa = std::sin(azim);
  const double slope = std::tan(elev);  // dz per horizontal meter
  auto f = [&](double r) { return r * slope - terrain(spec, ph, r * ca, r * sa); };

  Hit best;
  double best_r = spec.extent + 1.0;

  double r0 = 0.0, f0 = f(0.0);
  while (r0 < spec.extent) {
    const double r1 = std::min(spec.extent, r0 + kMarchStep);
    const double f1 = f(r1);
    if ((f0 > 0.0) != (f1 > 0.0) || f1 == 0.0) {
      double lo = r0, hi = r1;
      for (int i = 0; i < kBisections; ++i) {
        const double mid = 0.5 * (lo + hi);
        if ((f(mid) > 0.0) == (f0 > 0.0)) lo = mid; else hi = mid;
      }
      const double r = 0.5 * (lo + hi);
      best_r = r;
      best.ok = true;
      best.p = {r * ca, r * sa, terrain(spec, ph, r * ca, r * sa), 0.0};
      break;
    }
    r0 = r1;
    f0 = f1;
  }

  if (spec.kind == SceneKind::wall_ground && ca > 0.0) {
    const double r = spec.wall_distance / ca;
    const double z = r * slope;
    if (r <= spec.extent && r < best_r && z <= spec.wall_height && z >= spec.ground_z) {
      best.ok = true;
      best.p = {spec.wall_distance, r * sa, z, 0.0};
    }
  }
  if (best.ok) best.p.r = std::clamp(1.0 - std::hypot(best.p.x, best.p.y) / spec.extent, 0.0, 1.0);
  return best;
}

double beam_elevation(const BeamModel& m, int b) {
  const double step = (m.elev_max_deg - m.elev_min_deg) / m.num_beams;
  return (m.elev_min_deg + (b + 0.5) * step) * std::numbers::pi / 180.0;
}

}  // namespace

std::string_view to_string(SceneKind k) {
  switch (k) {
    case SceneKind::plane: return "plane";
    case SceneKind::sinusoid: return "sinusoid";
    case SceneKind::wall_ground: return "wall_ground";
  }
  return "?";
}

SceneKind scene_kind_from_string(std::string_view s) {
  if (s == "plane") return SceneKind::plane;
  if (s == "sinusoid" || s == "sinusoidal") return SceneKind::sinusoid;
  if (s == "wall_ground" || s == "wall-ground") return SceneKind::wall_ground;
  throw ConfigError(fmt::format("unknown scene kind '{}'", s));
}

void SyntheticSceneSpec::validate() const {
  if (points < 100) throw ConfigError(fmt::format("synthetic scene needs >= 100 points, got {}", points));
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("noise sigma must be >= 0");
  if (!(extent > 0.0) || !std::isfinite(extent)) throw ConfigError("scene extent must be > 0");
  if (!(wavelength > 0.0)) throw ConfigError("sinusoid wavelength must be > 0");
  if (!(ground_z < 0.0)) throw ConfigError("ground must lie below the sensor");
  if (beams.num_beams < 2) throw ConfigError("scanner needs >= 2 beams");
  if (!(oversample >= 1.0)) throw ConfigError("oversample must be >= 1");
  if (!(azimuth_fov_deg > 0.0 && azimuth_fov_deg <= 360.0)) throw ConfigError("azimuth fov must lie in (0, 360]");
}

double ground_height(const SyntheticSceneSpec& spec, double x, double y) {
  return terrain(spec, draw_phases(spec.seed), x, y);
}

PointCloud synthesize_scene(const SyntheticSceneSpec& spec) {
  spec.validate();
  const Phases ph = draw_phases(spec.seed);
  const int B = spec.beams.num_beams;

  const double fov = spec.azimuth_fov_deg * std::numbers::pi / 180.0;
  const bool full_circle = spec.azimuth_fov_deg >= 360.0;
  const double start = full_circle ? ph.azimuth : -0.5 * fov;

  std::size_t trial_hits = 0;
  for (std::size_t a = 0; a < kTrialAzimuths; ++a) {
    const double az = start + fov * static_cast<double>(a) / kTrialAzimuths;
    for (int b = 0; b < B; ++b) trial_hits += cast_ray(spec, ph, beam_elevation(spec.beams, b), az).ok;
  }
  if (trial_hits == 0) throw ConfigError("synthetic scanner: no ray hits the scene");
  const double per_azimuth = static_cast<double>(trial_hits) / kTrialAzimuths;
  const auto azimuths = static_cast<std::size_t>(std::ceil(spec.oversample * static_cast<double>(spec.points) / per_azimuth)) + 1;
  const double step = fov / static_cast<double>(azimuths);

  std::mt19937_64 offset_rng(spec.seed ^ 0x5851f42d4c957f2dULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> beam_offset(static_cast<std::size_t>(B), 0.0);
  if (spec.beam_azimuth_offsets) {
    for (auto& o : beam_offset) o = unit(offset_rng) * step;
  }

  PointCloud cloud;
  cloud.num_beams = B;
  std::mt19937_64 noise_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int b = 0; b < B; ++b) {
    const double elev = beam_elevation(spec.beams, b);
    for (std::size_t a = 0; a < azimuths; ++a) {
      const double az = start + beam_offset[static_cast<std::size_t>(b)] + step * static_cast<double>(a);
      Hit h = cast_ray(spec, ph, elev, az);
      if (!h.ok) continue;
      if (spec.noise_sigma > 0.0) h.p.z += spec.noise_sigma * noise(noise_rng);
      cloud.points.push_back(h.p);
      cloud.beam.push_back(b);
    }
  }
  if (cloud.size() > spec.points) cloud = stratified_sample(cloud, spec.points, spec.seed);
  return cloud;
}

}  // namespace beamgat::experiment
