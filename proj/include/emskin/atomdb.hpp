#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "emskin/constants.hpp"
#include "emskin/errors.hpp"
#include "emskin/scenario.hpp"

namespace emskin {

// ---------------------------------------------------------------------------
// Reflection database
// ---------------------------------------------------------------------------

/// Diagonal TE/TM reflection matrix of one meta-atom under local periodicity.
struct ReflectionMatrix {
  cplx gamma_te{0.0, 0.0};
  cplx gamma_tm{0.0, 0.0};

  bool operator==(const ReflectionMatrix&) const = default;
};

/// Parametric single-layer substrate response: Lorentzian magnitude dip at
/// the resonant patch side plus a monotone arctan phase transition through
/// it. Material constants (eps_r, tan_delta, thickness) document the modeled
/// substrate; the response is set by the remaining parameters.
struct SubstrateModel {
  std::string name;
  double eps_r = 0.0;
  double tan_delta = 0.0;
  double thickness_m = 0.0;
  double resonance_d_m = 0.0;   // patch side of the magnitude dip
  double dip_db = 0.0;          // |Gamma| in dB at resonance, <= floor_loss_db
  double dip_width_m = 0.0;     // Lorentzian half-width
  double phase_span_rad = 0.0;  // total reflection-phase span over the sampled range
  double floor_loss_db = 0.0;   // |Gamma| in dB far from resonance, <= 0

  void validate() const {
    if (!(dip_width_m > 0.0)) throw ValidationError("substrate: dip width must be > 0");
    if (floor_loss_db > 0.0) throw ValidationError("substrate: floor loss must be <= 0 dB");
    if (dip_db > floor_loss_db) throw ValidationError("substrate: dip must be <= floor loss");
    if (!(phase_span_rad > 0.0)) throw ValidationError("substrate: phase span must be > 0");
  }
};

/// Conductive-ink patch on plain paper; lossy and thin, with a deep
/// reflection dip near d = 1.4 mm.
inline SubstrateModel paper_substrate() {
  SubstrateModel m;
  m.name = "paper";
  m.eps_r = 3.2;
  m.tan_delta = 7.7e-2;
  m.thickness_m = 2.08e-3;
  m.resonance_d_m = 1.4e-3;
  m.dip_db = -23.5;
  m.dip_width_m = 4.0e-4;
  m.phase_span_rad = 4.8;
  m.floor_loss_db = -0.5;
  return m;
}

/// ISOLA 370HR laminate; low-loss comparison substrate.
inline SubstrateModel isola_substrate() {
  SubstrateModel m;
  m.name = "isola";
  m.eps_r = 3.92;
  m.tan_delta = 2.5e-2;
  m.thickness_m = 7.11e-4;
  m.resonance_d_m = 1.27e-3;
  m.dip_db = -11.7;
  m.dip_width_m = 8.0e-4;
  m.phase_span_rad = 5.4;
  m.floor_loss_db = -0.2;
  return m;
}

inline std::optional<SubstrateModel> substrate_preset(const std::string& name) {
  if (name == "paper") return paper_substrate();
  if (name == "isola") return isola_substrate();
  return std::nullopt;
}

struct IncidenceKey {
  double theta_inc_rad = 0.0;
  double phi_inc_rad = 0.0;
  double frequency_hz = 0.0;
};

struct DbEntry {
  double descriptor_m = 0.0;  // patch side d^(1)
  ReflectionMatrix gamma;

  bool operator==(const DbEntry&) const = default;
};

/// Printing precision of a typical office inkjet (1200 dpi).
inline constexpr double default_descriptor_step_m = 1e-4;

inline double quantize_descriptor(double d, double step = default_descriptor_step_m) {
  return std::round(d / step) * step;
}

/// Sorted single-incidence table d -> Gamma(d, k_inc). Immutable once built;
/// safe for concurrent reads.
class AtomDatabase {
 public:
  AtomDatabase() = default;
  AtomDatabase(std::vector<DbEntry> entries, std::optional<IncidenceKey> key,
               double step = default_descriptor_step_m)
      : entries_(std::move(entries)), key_(key), step_(step) {
    validate();
  }

  const std::vector<DbEntry>& entries() const { return entries_; }
  const std::optional<IncidenceKey>& incidence() const { return key_; }
  double descriptor_step() const { return step_; }
  int size() const { return static_cast<int>(entries_.size()); }

  /// Exact-match lookup of a quantized descriptor (entries within half a
  /// quantization step are the same printed geometry).
  const ReflectionMatrix& lookup(double d) const {
    const double dq = quantize_descriptor(d, step_);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), dq - 0.5 * step_,
                               [](const DbEntry& e, double v) { return e.descriptor_m < v; });
    if (it == entries_.end() || std::abs(it->descriptor_m - dq) >= 0.5 * step_) {
      std::ostringstream os;
      os << "atomdb: descriptor " << d << " not present in database";
      throw ValidationError(os.str());
    }
    return it->gamma;
  }

  bool operator==(const AtomDatabase& other) const { return entries_ == other.entries_; }

  void validate() const {
    if (entries_.size() < 2) throw ValidationError("atomdb: database needs at least 2 entries");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& e = entries_[i];
      if (std::abs(e.gamma.gamma_te) > 1.0 + 1e-12 || std::abs(e.gamma.gamma_tm) > 1.0 + 1e-12)
        throw ValidationError("atomdb: |Gamma| > 1 violates passivity at entry " +
                              std::to_string(i + 1));
      if (i > 0 && !(entries_[i - 1].descriptor_m < e.descriptor_m))
        throw ValidationError("atomdb: descriptors must be strictly increasing at entry " +
                              std::to_string(i + 1));
    }
  }

 private:
  std::vector<DbEntry> entries_;
  std::optional<IncidenceKey> key_;
  double step_ = default_descriptor_step_m;
};

/// Tabulates Gamma(d) for d in {0, step, ..., <= cell_size}.
///
/// Magnitude: |Gamma|_dB(d) = floor + (dip - floor) / (1 + ((d - d_res)/w)^2).
/// Phase: monotone arctan sigmoid centered at d_res, rescaled to span exactly
/// phase_span_rad over the sampled range. The TM column mirrors TE (square
/// patch at normal incidence).
inline AtomDatabase generate_synthetic_db(const SubstrateModel& model, double cell_size_m,
                                          double step_m, const IncidenceKey& incidence) {
  model.validate();
  if (!(step_m > 0.0) || !(step_m < cell_size_m))
    throw ValidationError("atomdb: need 0 < step < cell size");

  const int n = static_cast<int>(std::floor(cell_size_m / step_m + 1e-9));
  const double d_last = n * step_m;
  const auto sig = [&](double d) { return std::atan((d - model.resonance_d_m) / model.dip_width_m); };
  const double s0 = sig(0.0), s1 = sig(d_last);
  if (!(s1 > s0)) throw ValidationError("atomdb: phase parameterization is not monotone");

  std::vector<DbEntry> entries(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double d = quantize_descriptor(i * step_m, step_m);
    const double x = (d - model.resonance_d_m) / model.dip_width_m;
    const double mag_db = model.floor_loss_db + (model.dip_db - model.floor_loss_db) / (1.0 + x * x);
    const double phase = 0.5 * model.phase_span_rad -
                         model.phase_span_rad * (sig(d) - s0) / (s1 - s0);
    const cplx g = std::polar(std::pow(10.0, mag_db / 20.0), phase);
    entries[i] = DbEntry{d, ReflectionMatrix{g, g}};
  }
  return AtomDatabase(std::move(entries), incidence, step_m);
}

// ---------------------------------------------------------------------------
// CSV persistence
// ---------------------------------------------------------------------------

inline constexpr const char* db_csv_header = "d_m,gamma_te_re,gamma_te_im,gamma_tm_re,gamma_tm_im";

inline void save_db(const AtomDatabase& db, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("atomdb: cannot open '" + path + "' for writing");
  out << db_csv_header << "\n";
  char buf[160];
  for (const auto& e : db.entries()) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", e.descriptor_m,
                  e.gamma.gamma_te.real(), e.gamma.gamma_te.imag(), e.gamma.gamma_tm.real(),
                  e.gamma.gamma_tm.imag());
    out << buf;
  }
}

/// Parses the database CSV. When cell_size_m is given, descriptors outside
/// [0, cell] are rejected. Errors carry 1-based line numbers.
inline AtomDatabase load_db(const std::string& path, std::optional<double> cell_size_m = {},
                            double step = default_descriptor_step_m) {
  std::ifstream in(path);
  if (!in) throw ValidationError("atomdb: cannot open '" + path + "'");

  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ValidationError("atomdb: empty database in '" + path + "'");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != db_csv_header)
    throw ValidationError("atomdb: line 1: expected header '" + std::string(db_csv_header) + "'");

  std::vector<DbEntry> entries;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double f[5];
    char trailing;
    const int got = std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf%c", &f[0], &f[1], &f[2], &f[3],
                                &f[4], &trailing);
    if (got != 5)
      throw ValidationError("atomdb: line " + std::to_string(lineno) + ": malformed row '" + line +
                            "'");
    DbEntry e{f[0], ReflectionMatrix{cplx(f[1], f[2]), cplx(f[3], f[4])}};
    if (e.descriptor_m < 0.0 || (cell_size_m && e.descriptor_m > *cell_size_m + 1e-12))
      throw ValidationError("atomdb: line " + std::to_string(lineno) +
                            ": descriptor out of [0, cell] range");
    if (!entries.empty()) {
      if (e.descriptor_m == entries.back().descriptor_m)
        throw ValidationError("atomdb: line " + std::to_string(lineno) + ": duplicate descriptor");
      if (e.descriptor_m < entries.back().descriptor_m)
        throw ValidationError("atomdb: line " + std::to_string(lineno) +
                              ": descriptors not ascending");
    }
    entries.push_back(e);
  }
  if (entries.empty()) throw ValidationError("atomdb: empty database in '" + path + "'");
  return AtomDatabase(std::move(entries), std::nullopt, step);
}

// ---------------------------------------------------------------------------
// Induced equivalent current
// ---------------------------------------------------------------------------

/// Transverse current factors (A, B) at an atom center such that the induced
/// current for a reflection matrix Gamma is J = Gamma_TE * A + Gamma_TM * B.
///
/// Built from the Love currents of the reflected wave: the reflected field at
/// the surface is Gamma applied in the TE/TM basis with the mirrored wave
/// vector k_r, J^e = z x H_r, J^m = -z x E_r, and the combined quantity
/// J = z x [zeta0 (z x J^e) + J^m]. A sign audit at Gamma_TE = -1 (ideal
/// conductor, broadside) gives J = -2 e_te: electric and magnetic halves add.
struct CurrentFactors {
  CVec2 a;  // TE factor
  CVec2 b;  // TM factor
};

inline CurrentFactors induced_current_factors(const IncidentWave& wave,
                                              const PolarizationBasis& basis, const Vec3& r_pq) {
  const double k0 = wave.k0();
  const Vec3 k_inc = wave_vector(wave.theta_inc_rad, wave.phi_inc_rad, k0);
  const Vec3 khat_i = k_inc / k0;
  const Vec3 zhat = Vec3::UnitZ();
  const Vec3 khat_r = khat_i - 2.0 * khat_i.dot(zhat) * zhat;  // specular mirror
  const Vec3 e_tm_r = basis.e_te.cross(khat_r).normalized();

  // TE/TM amplitudes of the incident field at the atom center.
  const cplx phase = std::exp(cplx(0.0, -k_inc.dot(r_pq)));
  const cplx a_te = wave.e_te * phase;
  const cplx a_tm = wave.e_tm * phase;

  const auto combine = [&](const CVec3& e_r) -> CVec2 {
    const CVec3 h_r = (1.0 / zeta0) * khat_r.cast<cplx>().cross(e_r);
    const CVec3 j_e = zhat.cast<cplx>().cross(h_r);
    const CVec3 j_m = -zhat.cast<cplx>().cross(e_r);
    const CVec3 j = zhat.cast<cplx>().cross(zeta0 * zhat.cast<cplx>().cross(j_e) + j_m);
    return CVec2(j.x(), j.y());
  };

  return CurrentFactors{combine(a_te * basis.e_te.cast<cplx>()),
                        combine(a_tm * e_tm_r.cast<cplx>())};
}

inline CVec2 induced_current(const ReflectionMatrix& gamma, const CurrentFactors& f) {
  return gamma.gamma_te * f.a + gamma.gamma_tm * f.b;
}

/// Transverse (x, y) equivalent current induced at atom center r_pq for
/// descriptor d, with Gamma looked up in the database.
inline CVec2 induced_current(double d, const AtomDatabase& db, const IncidentWave& wave,
                             const PolarizationBasis& basis, const Vec3& r_pq) {
  return induced_current(db.lookup(d), induced_current_factors(wave, basis, r_pq));
}

}  // namespace emskin
