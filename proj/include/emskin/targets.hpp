#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "emskin/errors.hpp"
#include "emskin/forward.hpp"
#include "emskin/scenario.hpp"

namespace emskin {

// ---------------------------------------------------------------------------
// Pencil beam
// ---------------------------------------------------------------------------

/// Gaussian spot in direction-cosine space. beamwidth is the 1/e radius in
/// (u, v) units; a nonpositive value means "use the aperture diffraction
/// width lambda / (P * cell)", resolved by the caller.
struct PencilBeamSpec {
  double theta_refl_rad = 0.0;
  double phi_refl_rad = 0.0;
  double beamwidth = 0.0;
};

/// Target field for a steered pencil beam: amplitude
/// exp(-dist_uv^2 / bw^2), rescaled so the nearest grid sample to the target
/// direction has amplitude exactly 1; uniform zero phase; polarized along
/// `axis` (default: broadside TE axis, +y).
inline FieldVector pencil_beam_target(const PencilBeamSpec& spec, const ObservationDomain& obs,
                                      const CVec2& axis = CVec2(0.0, 1.0)) {
  if (obs.kind != ObservationKind::angular_grid)
    throw ValidationError("targets: pencil beam needs an angular observation grid");
  if (!(spec.beamwidth > 0.0)) throw ValidationError("targets: beamwidth must be > 0");
  if (spec.theta_refl_rad < obs.row_axis.front() - 1e-12 ||
      spec.theta_refl_rad > obs.row_axis.back() + 1e-12 ||
      spec.phi_refl_rad < obs.col_axis.front() - 1e-12 ||
      spec.phi_refl_rad > obs.col_axis.back() + 1e-12)
    throw ValidationError("targets: target direction outside the observation grid range");

  const double u0 = std::sin(spec.theta_refl_rad) * std::cos(spec.phi_refl_rad);
  const double v0 = std::sin(spec.theta_refl_rad) * std::sin(spec.phi_refl_rad);
  const int m_count = obs.size();
  Eigen::ArrayXd amp(m_count);
  for (int m = 0; m < m_count; ++m) {
    const auto [u, v] = obs.direction_cosines(m);
    const double d2 = (u - u0) * (u - u0) + (v - v0) * (v - v0);
    amp(m) = std::exp(-d2 / (spec.beamwidth * spec.beamwidth));
  }
  amp /= amp.maxCoeff();  // peak 1 at the sample nearest the target direction

  FieldVector t(m_count);
  t.x = (amp * axis(0)).matrix();
  t.y = (amp * axis(1)).matrix();
  return t;
}

/// Index of the grid sample nearest a direction, in direction-cosine metric.
inline int nearest_sample(const ObservationDomain& obs, double theta_rad, double phi_rad) {
  const double u0 = std::sin(theta_rad) * std::cos(phi_rad);
  const double v0 = std::sin(theta_rad) * std::sin(phi_rad);
  int best = 0;
  double best_d2 = std::numeric_limits<double>::max();
  for (int m = 0; m < obs.size(); ++m) {
    const auto [u, v] = obs.direction_cosines(m);
    const double d2 = (u - u0) * (u - u0) + (v - v0) * (v - v0);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = m;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Contoured coverage
// ---------------------------------------------------------------------------

struct Polygon {
  std::vector<Eigen::Vector2d> vertices;
};

struct ContourSpec {
  std::vector<Polygon> polygons;
  double inside_amplitude = 1.0;
  double outside_amplitude = 0.0;
  double edge_smoothing_m = 0.0;
};

namespace detail {

/// Even-odd ray crossing test.
inline bool point_in_polygon(const Polygon& poly, double x, double y) {
  bool inside = false;
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const bool cross = (v[i].y() > y) != (v[j].y() > y);
    if (cross) {
      const double x_at = v[j].x() + (v[i].x() - v[j].x()) * (y - v[j].y()) / (v[i].y() - v[j].y());
      if (x < x_at) inside = !inside;
    }
  }
  return inside;
}

inline double distance_to_segment(double px, double py, const Eigen::Vector2d& a,
                                  const Eigen::Vector2d& b) {
  const Eigen::Vector2d p(px, py);
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

/// Signed distance to the polygon boundary: positive inside.
inline double signed_distance(const Polygon& poly, double x, double y) {
  double d = std::numeric_limits<double>::max();
  const auto& v = poly.vertices;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++)
    d = std::min(d, distance_to_segment(x, y, v[j], v[i]));
  return point_in_polygon(poly, x, y) ? d : -d;
}

}  // namespace detail

/// Mask amplitude of one polygon at a floor point: inside/outside value with
/// a linear ramp of width edge_smoothing_m centered on the boundary.
inline double contour_mask(const Polygon& poly, const ContourSpec& spec, double x, double y) {
  const double sd = detail::signed_distance(poly, x, y);
  double t;
  if (spec.edge_smoothing_m > 0.0)
    t = std::clamp(sd / spec.edge_smoothing_m + 0.5, 0.0, 1.0);
  else
    t = sd >= 0.0 ? 1.0 : 0.0;
  return spec.outside_amplitude + (spec.inside_amplitude - spec.outside_amplitude) * t;
}

/// Coverage target on a floor plane: per-sample amplitude is the pointwise
/// maximum of the per-polygon masks (so unions compose as max); uniform zero
/// phase; polarized along `axis`.
inline FieldVector contour_target(const ContourSpec& spec, const ObservationDomain& obs,
                                  const CVec2& axis = CVec2(0.0, 1.0)) {
  if (obs.kind != ObservationKind::floor_plane)
    throw ValidationError("targets: contour target needs a floor-plane observation domain");
  if (spec.polygons.empty()) throw ValidationError("targets: contour needs at least one polygon");
  for (const auto& p : spec.polygons)
    if (p.vertices.size() < 3)
      throw ValidationError("targets: degenerate polygon (fewer than 3 vertices)");
  if (spec.inside_amplitude < 0.0 || spec.outside_amplitude < 0.0)
    throw ValidationError("targets: amplitudes must be >= 0");

  const int m_count = obs.size();
  Eigen::ArrayXd amp(m_count);
  for (int m = 0; m < m_count; ++m) {
    const double x = obs.samples[m].position.x();
    const double y = obs.samples[m].position.y();
    double a = spec.outside_amplitude;
    for (const auto& poly : spec.polygons) a = std::max(a, contour_mask(poly, spec, x, y));
    amp(m) = a;
  }

  FieldVector t(m_count);
  t.x = (amp * axis(0)).matrix();
  t.y = (amp * axis(1)).matrix();
  return t;
}

}  // namespace emskin
