#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emskin/constants.hpp"
#include "emskin/errors.hpp"
#include "emskin/forward.hpp"
#include "emskin/scenario.hpp"

namespace emskin {

// ---------------------------------------------------------------------------
// Comparison metrics
// ---------------------------------------------------------------------------

/// Local power improvement of field e1 over reference e2:
/// per sample (|e1|^2 - |e2|^2) / max_over_samples |e2|^2.
struct PowerMap {
  Eigen::ArrayXd values;
  double p_max = 0.0;
  int peak_index = 0;
};

inline PowerMap power_improvement_map(const FieldVector& e1, const FieldVector& e2) {
  if (e1.size() != e2.size())
    throw ValidationError("analysis: fields live on different observation domains");
  const Eigen::ArrayXd p1 = e1.x.array().abs2() + e1.y.array().abs2();
  const Eigen::ArrayXd p2 = e2.x.array().abs2() + e2.y.array().abs2();
  const double ref = p2.maxCoeff();
  if (!(ref > 0.0)) throw ValidationError("analysis: reference field is zero");

  PowerMap map;
  map.values = (p1 - p2) / ref;
  map.p_max = map.values.maxCoeff(&map.peak_index);
  return map;
}

/// Field ratio in dB at one sample: 20 log10(|e1| / |e2|).
inline double delta_e_db(const FieldVector& e1, const FieldVector& e2, int sample) {
  if (sample < 0 || sample >= e1.size() || e1.size() != e2.size())
    throw ValidationError("analysis: sample index out of range");
  const double m1 = std::hypot(std::abs(e1.x(sample)), std::abs(e1.y(sample)));
  const double m2 = std::hypot(std::abs(e2.x(sample)), std::abs(e2.y(sample)));
  if (!(m2 > 0.0)) throw ValidationError("analysis: zero reference field at the sample");
  return 20.0 * std::log10(m1 / m2);
}

/// Magnitudes along the grid column nearest phi_cut, theta ascending.
inline std::vector<std::pair<double, double>> field_cut(const FieldVector& e,
                                                        const ObservationDomain& obs,
                                                        double phi_cut_rad) {
  if (obs.kind != ObservationKind::angular_grid)
    throw ValidationError("analysis: field cuts need an angular grid");
  if (e.size() != obs.size()) throw ValidationError("analysis: field length mismatch");
  if (phi_cut_rad < obs.col_axis.front() - 1e-12 || phi_cut_rad > obs.col_axis.back() + 1e-12)
    throw ValidationError("analysis: cut is outside the grid's phi range");

  // Snap to the nearest column; first wins on ties.
  int col = 0;
  double best = std::numeric_limits<double>::max();
  for (int c = 0; c < obs.cols(); ++c) {
    const double d = std::abs(obs.col_axis[c] - phi_cut_rad);
    if (d < best) {
      best = d;
      col = c;
    }
  }
  const Eigen::ArrayXd mag = e.magnitude();
  std::vector<std::pair<double, double>> cut;
  cut.reserve(obs.rows());
  for (int r = 0; r < obs.rows(); ++r)
    cut.emplace_back(obs.row_axis[r], mag(obs.sample_index(r, col)));
  return cut;
}

// ---------------------------------------------------------------------------
// Map export
// ---------------------------------------------------------------------------

namespace detail {
inline std::string fmt15(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}
}  // namespace detail

/// Grid CSV: header row of column-axis values (phi [deg] or x [m]), first
/// column the row-axis values (theta [deg] or y [m]), body values at 15
/// significant digits. A `<path>.meta.json` sidecar records the domain and
/// the peak.
inline void write_map_csv(const Eigen::ArrayXd& values, const ObservationDomain& obs,
                          const std::string& path, const std::string& quantity,
                          const std::string& config_hash = "") {
  if (values.size() != obs.size())
    throw ValidationError("analysis: map length does not match the observation domain");
  const bool angular = obs.kind == ObservationKind::angular_grid;
  const double row_unit = angular ? 180.0 / pi : 1.0;

  std::ofstream out(path);
  if (!out) throw ValidationError("analysis: cannot open '" + path + "' for writing");
  for (int c = 0; c < obs.cols(); ++c) out << "," << detail::fmt15(obs.col_axis[c] * row_unit);
  out << "\n";
  for (int r = 0; r < obs.rows(); ++r) {
    out << detail::fmt15(obs.row_axis[r] * row_unit);
    for (int c = 0; c < obs.cols(); ++c)
      out << "," << detail::fmt15(values(obs.sample_index(r, c)));
    out << "\n";
  }
  out.close();

  int peak = 0;
  const double vmax = values.maxCoeff(&peak);
  nlohmann::json meta;
  meta["quantity"] = quantity;
  meta["domain"]["kind"] = angular ? "angular" : "floor";
  meta["domain"]["rows"] = obs.rows();
  meta["domain"]["cols"] = obs.cols();
  meta["domain"]["row_axis"] = angular ? "theta_deg" : "y_m";
  meta["domain"]["col_axis"] = angular ? "phi_deg" : "x_m";
  meta["peak"]["value"] = vmax;
  const int pr = peak / obs.cols(), pc = peak % obs.cols();
  if (angular) {
    meta["peak"]["theta_deg"] = obs.row_axis[pr] * row_unit;
    meta["peak"]["phi_deg"] = obs.col_axis[pc] * row_unit;
  } else {
    meta["peak"]["y_m"] = obs.row_axis[pr];
    meta["peak"]["x_m"] = obs.col_axis[pc];
  }
  if (!config_hash.empty()) meta["config_hash"] = config_hash;
  std::ofstream mout(path + ".meta.json");
  if (!mout) throw ValidationError("analysis: cannot open '" + path + ".meta.json' for writing");
  mout << meta.dump(2) << "\n";
}

/// Re-import of a map CSV written by write_map_csv (values only).
inline Eigen::ArrayXd read_map_csv(const std::string& path, int& rows, int& cols) {
  std::ifstream in(path);
  if (!in) throw ValidationError("analysis: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("analysis: empty map file");
  cols = 0;
  for (char ch : line)
    if (ch == ',') ++cols;
  std::vector<double> vals;
  rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    std::size_t start = line.find(',');
    if (start == std::string::npos) throw ValidationError("analysis: malformed map row");
    int got = 0;
    while (start != std::string::npos) {
      const std::size_t next = line.find(',', start + 1);
      vals.push_back(std::stod(line.substr(start + 1, next - start - 1)));
      ++got;
      start = next;
    }
    if (got != cols) throw ValidationError("analysis: ragged map row");
  }
  return Eigen::Map<Eigen::ArrayXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace emskin
