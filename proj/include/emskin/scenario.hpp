#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "emskin/constants.hpp"
#include "emskin/errors.hpp"

namespace emskin {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using CVec2 = Eigen::Vector2cd;

// ---------------------------------------------------------------------------
// Incident plane wave
// ---------------------------------------------------------------------------

struct IncidentWave {
  double frequency_hz = 0.0;
  double theta_inc_rad = 0.0;
  double phi_inc_rad = 0.0;
  cplx e_te{0.0, 0.0};  // TE complex amplitude [V/m]
  cplx e_tm{0.0, 0.0};  // TM complex amplitude [V/m]

  double k0() const {
    if (!(frequency_hz > 0.0)) throw ValidationError("incident wave: frequency must be > 0");
    return 2.0 * pi * frequency_hz / c0;
  }
  double wavelength() const { return c0 / frequency_hz; }
};

/// Incident wave vector: -k0 [sin(t)cos(p), sin(t)sin(p), cos(t)].
/// The wave travels toward -z and hits the skin plane z = 0 from above.
inline Vec3 wave_vector(double theta_inc, double phi_inc, double k0) {
  if (!(k0 > 0.0)) throw ValidationError("wave_vector: k0 must be > 0");
  const double st = std::sin(theta_inc), ct = std::cos(theta_inc);
  const double cp = std::cos(phi_inc), sp = std::sin(phi_inc);
  return -k0 * Vec3(st * cp, st * sp, ct);
}

struct PolarizationBasis {
  Vec3 e_te;  // unit vector, always in the skin plane
  Vec3 e_tm;  // unit vector, orthogonal to e_te and to k_inc
};

/// TE/TM unit vectors: e_te = (k_inc x z)/|.|, e_tm = (e_te x k_inc)/|.|.
/// The cross products vanish at normal incidence; there the convention
/// e_te = y, e_tm = x is pinned.
inline PolarizationBasis polarization_basis(const Vec3& k_inc) {
  const double k = k_inc.norm();
  if (!(k > 0.0)) throw ValidationError("polarization_basis: |k_inc| must be > 0");
  const Vec3 zhat = Vec3::UnitZ();
  Vec3 te = k_inc.cross(zhat);
  if (te.norm() < 1e-9 * k) {
    return PolarizationBasis{Vec3::UnitY(), Vec3::UnitX()};
  }
  te.normalize();
  Vec3 tm = te.cross(k_inc).normalized();
  return PolarizationBasis{te, tm};
}

/// Plane-wave field (E_TE e_te + E_TM e_tm) exp(-j k_inc . r).
inline CVec3 incident_field_at(const IncidentWave& wave, const PolarizationBasis& basis,
                               const Vec3& r) {
  const Vec3 k_inc = wave_vector(wave.theta_inc_rad, wave.phi_inc_rad, wave.k0());
  const cplx phase = std::exp(cplx(0.0, -k_inc.dot(r)));
  return (wave.e_te * basis.e_te.cast<cplx>() + wave.e_tm * basis.e_tm.cast<cplx>()) * phase;
}

// ---------------------------------------------------------------------------
// EMS aperture grid
// ---------------------------------------------------------------------------

/// Regular P x Q lattice of meta-atom centers with spacing cell_size_m.
/// Coordinates are skin-local: the aperture lies in z = 0 centered on the
/// origin, with outward normal +z; center_height_m is the distance from the
/// skin to the floor plane and is used when building floor-plane observation
/// domains.
struct EmsGrid {
  int p_count = 0;
  int q_count = 0;
  double cell_size_m = 0.0;
  double center_height_m = 0.0;

  void validate() const {
    if (p_count < 1 || q_count < 1) throw ValidationError("grid: counts must be >= 1");
    if (!(cell_size_m > 0.0)) throw ValidationError("grid: cell size must be > 0");
  }

  int atom_count() const { return p_count * q_count; }
  double aperture_area() const {
    return p_count * cell_size_m * q_count * cell_size_m;
  }

  /// Atom center r_pq, 0-based indices, row-major over (p, q).
  Vec3 atom_center(int p, int q) const {
    const double x = (p - 0.5 * (p_count - 1)) * cell_size_m;
    const double y = (q - 0.5 * (q_count - 1)) * cell_size_m;
    return Vec3(x, y, 0.0);
  }
  int atom_index(int p, int q) const { return p * q_count + q; }
};

// ---------------------------------------------------------------------------
// Observation domain
// ---------------------------------------------------------------------------

enum class ObservationKind { angular_grid, floor_plane };

struct ObservationSample {
  Vec3 position;   // point relative to the skin center (unit direction for angular grids)
  double distance; // spherical-spreading distance r (1 for angular grids)
  Vec3 direction;  // unit vector from the skin center
};

/// Far-field angular grid on the reflection half-space, unit-radius
/// normalization (r = 1 in the spreading factor).
struct AngularGridSpec {
  double theta_min_rad = 0.0;
  double theta_max_rad = 0.0;
  int theta_count = 0;
  double phi_min_rad = 0.0;
  double phi_max_rad = 0.0;
  int phi_count = 0;
};

/// Rectangle of true 3-D points on a plane parallel to the skin at distance
/// `height_m`, sampled on an nx x ny grid. Distances are exact
/// skin-center-to-point lengths.
struct FloorPlaneSpec {
  double x_min_m = 0.0, x_max_m = 0.0;
  int x_count = 0;
  double y_min_m = 0.0, y_max_m = 0.0;
  int y_count = 0;
  double height_m = 0.0;
};

namespace detail {
inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = a;
    return v;
  }
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}
}  // namespace detail

/// Sample ordering is row-major and stable: rows iterate theta (or y),
/// columns iterate phi (or x).
struct ObservationDomain {
  ObservationKind kind = ObservationKind::angular_grid;
  std::vector<ObservationSample> samples;
  std::vector<double> row_axis;  // theta values [rad] or y values [m]
  std::vector<double> col_axis;  // phi values [rad] or x values [m]
  double plane_height_m = 0.0;   // floor planes only

  int size() const { return static_cast<int>(samples.size()); }
  int rows() const { return static_cast<int>(row_axis.size()); }
  int cols() const { return static_cast<int>(col_axis.size()); }
  int sample_index(int row, int col) const { return row * cols() + col; }

  /// Direction cosines (u, v) of sample m; angular grids only.
  std::pair<double, double> direction_cosines(int m) const {
    return {samples[m].direction.x(), samples[m].direction.y()};
  }
};

inline ObservationDomain build_observation(const AngularGridSpec& spec) {
  if (spec.theta_count < 1 || spec.phi_count < 1)
    throw ValidationError("observation: angular grid counts must be >= 1");
  if (spec.theta_min_rad > spec.theta_max_rad || spec.phi_min_rad > spec.phi_max_rad)
    throw ValidationError("observation: angular grid ranges must be nondecreasing");
  if (spec.theta_min_rad < 0.0 || spec.theta_max_rad > pi / 2 + 1e-12)
    throw ValidationError("observation: theta must lie in [0, pi/2] (reflection half-space)");

  ObservationDomain obs;
  obs.kind = ObservationKind::angular_grid;
  obs.row_axis = detail::linspace(spec.theta_min_rad, spec.theta_max_rad, spec.theta_count);
  obs.col_axis = detail::linspace(spec.phi_min_rad, spec.phi_max_rad, spec.phi_count);
  obs.samples.reserve(static_cast<std::size_t>(spec.theta_count) * spec.phi_count);
  for (double th : obs.row_axis) {
    const double st = std::sin(th), ct = std::cos(th);
    for (double ph : obs.col_axis) {
      const Vec3 dir(st * std::cos(ph), st * std::sin(ph), ct);
      obs.samples.push_back(ObservationSample{dir, 1.0, dir});
    }
  }
  return obs;
}

inline ObservationDomain build_observation(const FloorPlaneSpec& spec) {
  if (spec.x_count < 1 || spec.y_count < 1)
    throw ValidationError("observation: floor grid counts must be >= 1");
  if (spec.x_min_m > spec.x_max_m || spec.y_min_m > spec.y_max_m)
    throw ValidationError("observation: floor extents must be nondecreasing");
  if (!(spec.height_m > 0.0))
    throw ValidationError("observation: floor height must be > 0");

  ObservationDomain obs;
  obs.kind = ObservationKind::floor_plane;
  obs.plane_height_m = spec.height_m;
  obs.row_axis = detail::linspace(spec.y_min_m, spec.y_max_m, spec.y_count);
  obs.col_axis = detail::linspace(spec.x_min_m, spec.x_max_m, spec.x_count);
  obs.samples.reserve(static_cast<std::size_t>(spec.x_count) * spec.y_count);
  for (double y : obs.row_axis) {
    for (double x : obs.col_axis) {
      const Vec3 p(x, y, spec.height_m);
      const double r = p.norm();
      obs.samples.push_back(ObservationSample{p, r, p / r});
    }
  }
  return obs;
}

}  // namespace emskin
