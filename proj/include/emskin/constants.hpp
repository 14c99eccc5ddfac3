#pragma once

namespace emskin {

inline constexpr double pi = 3.14159265358979323846;

/// Speed of light in vacuum [m/s].
inline constexpr double c0 = 299792458.0;

/// Free-space intrinsic impedance [Ohm].
inline constexpr double zeta0 = 376.730313668;

inline constexpr double deg2rad(double deg) { return deg * pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / pi; }

}  // namespace emskin
