#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "emskin/atomdb.hpp"
#include "emskin/constants.hpp"
#include "emskin/errors.hpp"
#include "emskin/scenario.hpp"
#include "emskin/synthesis.hpp"
#include "emskin/targets.hpp"

namespace emskin {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Run configuration (strict JSON schema, version 1)
// ---------------------------------------------------------------------------

struct TargetConfig {
  std::string kind;  // "pencil" | "contour"
  PencilBeamSpec pencil;
  ContourSpec contour;
  std::string polygons_file;  // optional external polygon list
};

struct AtomsConfig {
  std::string substrate;     // preset name, or empty when loading from file
  std::string database_path; // CSV path, or empty when generating
  double step_m = default_descriptor_step_m;
};

struct ObservationConfig {
  ObservationKind kind = ObservationKind::angular_grid;
  AngularGridSpec angular;
  FloorPlaneSpec floor;
};

struct RunConfig {
  IncidentWave wave;
  EmsGrid grid;
  ObservationConfig observation;
  AtomsConfig atoms;
  TargetConfig target;
  SynthesisConfig synthesis;
  std::uint64_t seed = 0;
};

namespace detail {

inline void require_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!j.is_object()) throw ValidationError("config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ValidationError("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config: bad type for '" + key + "'");
  }
}

template <typename T>
T get_required(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError("config: missing '" + key + "' in " + where);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("config: bad type for '" + key + "' in " + where);
  }
}

inline cplx get_complex(const json& j, const std::string& key, cplx fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ValidationError("config: '" + key + "' must be [re, im]");
  return cplx(v[0].get<double>(), v[1].get<double>());
}

}  // namespace detail

inline Polygon parse_polygon(const json& j) {
  if (!j.is_array() || j.size() < 3)
    throw ValidationError("config: a polygon needs at least 3 [x, y] vertices");
  Polygon poly;
  for (const auto& v : j) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ValidationError("config: polygon vertices must be [x_m, y_m] pairs");
    poly.vertices.emplace_back(v[0].get<double>(), v[1].get<double>());
  }
  return poly;
}

inline std::vector<Polygon> load_polygons(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open polygon file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config: polygon file '" + path + "': " + e.what());
  }
  if (!j.is_array()) throw ValidationError("config: polygon file must hold a list of polygons");
  std::vector<Polygon> polys;
  for (const auto& p : j) polys.push_back(parse_polygon(p));
  return polys;
}

inline RunConfig parse_config(const json& j) {
  using namespace detail;
  require_keys(j, {"version", "scenario", "atoms", "target", "synthesis", "seed"}, "config");
  if (get_required<int>(j, "version", "config") != 1)
    throw ValidationError("config: unsupported version (expected 1)");

  RunConfig cfg;
  const json& sc = j.at("scenario");
  require_keys(sc, {"frequency_hz", "incidence", "grid", "observation"}, "scenario");
  cfg.wave.frequency_hz = get_required<double>(sc, "frequency_hz", "scenario");
  if (!(cfg.wave.frequency_hz > 0.0)) throw ValidationError("config: frequency must be > 0");

  {
    const json& inc = sc.at("incidence");
    require_keys(inc, {"theta_deg", "phi_deg", "e_te", "e_tm"}, "incidence");
    cfg.wave.theta_inc_rad = deg2rad(get_or<double>(inc, "theta_deg", 0.0));
    cfg.wave.phi_inc_rad = deg2rad(get_or<double>(inc, "phi_deg", 0.0));
    cfg.wave.e_te = get_complex(inc, "e_te", cplx(1.0, 0.0));
    cfg.wave.e_tm = get_complex(inc, "e_tm", cplx(0.0, 0.0));
  }
  {
    const json& g = sc.at("grid");
    require_keys(g, {"p", "q", "cell_m", "height_m"}, "grid");
    cfg.grid.p_count = get_required<int>(g, "p", "grid");
    cfg.grid.q_count = get_required<int>(g, "q", "grid");
    cfg.grid.cell_size_m = get_required<double>(g, "cell_m", "grid");
    cfg.grid.center_height_m = get_or<double>(g, "height_m", 0.0);
    cfg.grid.validate();
  }
  {
    const json& o = sc.at("observation");
    const std::string kind = get_required<std::string>(o, "kind", "observation");
    if (kind == "angular") {
      require_keys(o, {"kind", "theta_deg", "theta_count", "phi_deg", "phi_count"}, "observation");
      cfg.observation.kind = ObservationKind::angular_grid;
      const auto th = get_required<std::vector<double>>(o, "theta_deg", "observation");
      const auto ph = get_required<std::vector<double>>(o, "phi_deg", "observation");
      if (th.size() != 2 || ph.size() != 2)
        throw ValidationError("config: observation ranges must be [min, max]");
      cfg.observation.angular = AngularGridSpec{
          deg2rad(th[0]), deg2rad(th[1]), get_required<int>(o, "theta_count", "observation"),
          deg2rad(ph[0]), deg2rad(ph[1]), get_required<int>(o, "phi_count", "observation")};
    } else if (kind == "floor") {
      require_keys(o, {"kind", "x_m", "x_count", "y_m", "y_count", "height_m"}, "observation");
      cfg.observation.kind = ObservationKind::floor_plane;
      const auto xr = get_required<std::vector<double>>(o, "x_m", "observation");
      const auto yr = get_required<std::vector<double>>(o, "y_m", "observation");
      if (xr.size() != 2 || yr.size() != 2)
        throw ValidationError("config: observation extents must be [min, max]");
      cfg.observation.floor =
          FloorPlaneSpec{xr[0], xr[1], get_required<int>(o, "x_count", "observation"),
                         yr[0], yr[1], get_required<int>(o, "y_count", "observation"),
                         get_or<double>(o, "height_m", cfg.grid.center_height_m)};
    } else {
      throw ValidationError("config: observation kind must be 'angular' or 'floor'");
    }
  }
  {
    const json& a = j.at("atoms");
    require_keys(a, {"substrate", "database", "step_m"}, "atoms");
    cfg.atoms.substrate = get_or<std::string>(a, "substrate", "");
    cfg.atoms.database_path = get_or<std::string>(a, "database", "");
    cfg.atoms.step_m = get_or<double>(a, "step_m", default_descriptor_step_m);
    if (cfg.atoms.substrate.empty() == cfg.atoms.database_path.empty())
      throw ValidationError("config: atoms need exactly one of 'substrate' or 'database'");
    if (!cfg.atoms.substrate.empty() && !substrate_preset(cfg.atoms.substrate))
      throw ValidationError("config: unknown substrate preset '" + cfg.atoms.substrate + "'");
  }
  {
    const json& t = j.at("target");
    const std::string kind = get_required<std::string>(t, "kind", "target");
    cfg.target.kind = kind;
    if (kind == "pencil") {
      require_keys(t, {"kind", "theta_deg", "phi_deg", "beamwidth"}, "target");
      cfg.target.pencil.theta_refl_rad = deg2rad(get_required<double>(t, "theta_deg", "target"));
      cfg.target.pencil.phi_refl_rad = deg2rad(get_required<double>(t, "phi_deg", "target"));
      cfg.target.pencil.beamwidth = get_or<double>(t, "beamwidth", 0.0);
    } else if (kind == "contour") {
      require_keys(t, {"kind", "polygons", "polygons_file", "inside", "outside", "smoothing_m"},
                   "target");
      if (t.contains("polygons") == t.contains("polygons_file"))
        throw ValidationError("config: contour needs exactly one of 'polygons' or 'polygons_file'");
      if (t.contains("polygons"))
        for (const auto& p : t.at("polygons")) cfg.target.contour.polygons.push_back(parse_polygon(p));
      else
        cfg.target.polygons_file = get_required<std::string>(t, "polygons_file", "target");
      cfg.target.contour.inside_amplitude = get_or<double>(t, "inside", 1.0);
      cfg.target.contour.outside_amplitude = get_or<double>(t, "outside", 0.0);
      cfg.target.contour.edge_smoothing_m = get_or<double>(t, "smoothing_m", 0.0);
    } else {
      throw ValidationError("config: target kind must be 'pencil' or 'contour'");
    }
  }
  {
    const json& s = j.value("synthesis", json::object());
    require_keys(s, {"eta_svd", "eta_phi", "max_outer", "ns_mode_cap", "target_scale", "pso"},
                 "synthesis");
    cfg.synthesis.eta_svd = get_or<double>(s, "eta_svd", 1e-1);
    cfg.synthesis.eta_phi = get_or<double>(s, "eta_phi", 1e-4);
    cfg.synthesis.max_outer = get_or<int>(s, "max_outer", 10000);
    cfg.synthesis.ns_mode_cap = get_or<int>(s, "ns_mode_cap", 200);
    cfg.synthesis.target_scale = get_or<double>(s, "target_scale", 0.0);
    const json& p = s.value("pso", json::object());
    require_keys(p, {"swarm", "inertia", "cognitive", "social", "iterations", "velocity_clamp",
                     "beta_bound"},
                 "pso");
    cfg.synthesis.pso.swarm_size = get_or<int>(p, "swarm", 40);
    cfg.synthesis.pso.inertia = get_or<double>(p, "inertia", 0.7298);
    cfg.synthesis.pso.cognitive = get_or<double>(p, "cognitive", 1.49618);
    cfg.synthesis.pso.social = get_or<double>(p, "social", 1.49618);
    cfg.synthesis.pso.iterations = get_or<int>(p, "iterations", 50);
    cfg.synthesis.pso.velocity_clamp = get_or<double>(p, "velocity_clamp", 0.5);
    cfg.synthesis.pso.beta_bound = get_or<double>(p, "beta_bound", 1.0);
    cfg.synthesis.validate();
  }
  cfg.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
  cfg.synthesis.seed = cfg.seed;
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

/// Canonical re-serialization used for hashing and for embedding in results.
inline json config_to_json(const RunConfig& cfg) {
  json j;
  j["version"] = 1;
  j["seed"] = cfg.seed;
  json& sc = j["scenario"];
  sc["frequency_hz"] = cfg.wave.frequency_hz;
  sc["incidence"] = {{"theta_deg", rad2deg(cfg.wave.theta_inc_rad)},
                     {"phi_deg", rad2deg(cfg.wave.phi_inc_rad)},
                     {"e_te", {cfg.wave.e_te.real(), cfg.wave.e_te.imag()}},
                     {"e_tm", {cfg.wave.e_tm.real(), cfg.wave.e_tm.imag()}}};
  sc["grid"] = {{"p", cfg.grid.p_count},
                {"q", cfg.grid.q_count},
                {"cell_m", cfg.grid.cell_size_m},
                {"height_m", cfg.grid.center_height_m}};
  if (cfg.observation.kind == ObservationKind::angular_grid) {
    const auto& a = cfg.observation.angular;
    sc["observation"] = {{"kind", "angular"},
                         {"theta_deg", {rad2deg(a.theta_min_rad), rad2deg(a.theta_max_rad)}},
                         {"theta_count", a.theta_count},
                         {"phi_deg", {rad2deg(a.phi_min_rad), rad2deg(a.phi_max_rad)}},
                         {"phi_count", a.phi_count}};
  } else {
    const auto& f = cfg.observation.floor;
    sc["observation"] = {{"kind", "floor"},      {"x_m", {f.x_min_m, f.x_max_m}},
                         {"x_count", f.x_count}, {"y_m", {f.y_min_m, f.y_max_m}},
                         {"y_count", f.y_count}, {"height_m", f.height_m}};
  }
  json& at = j["atoms"];
  if (!cfg.atoms.substrate.empty()) at["substrate"] = cfg.atoms.substrate;
  if (!cfg.atoms.database_path.empty()) at["database"] = cfg.atoms.database_path;
  at["step_m"] = cfg.atoms.step_m;
  json& tg = j["target"];
  tg["kind"] = cfg.target.kind;
  if (cfg.target.kind == "pencil") {
    tg["theta_deg"] = rad2deg(cfg.target.pencil.theta_refl_rad);
    tg["phi_deg"] = rad2deg(cfg.target.pencil.phi_refl_rad);
    tg["beamwidth"] = cfg.target.pencil.beamwidth;
  } else {
    if (!cfg.target.polygons_file.empty()) {
      tg["polygons_file"] = cfg.target.polygons_file;
    } else {
      json polys = json::array();
      for (const auto& p : cfg.target.contour.polygons) {
        json poly = json::array();
        for (const auto& v : p.vertices) poly.push_back({v.x(), v.y()});
        polys.push_back(poly);
      }
      tg["polygons"] = polys;
    }
    tg["inside"] = cfg.target.contour.inside_amplitude;
    tg["outside"] = cfg.target.contour.outside_amplitude;
    tg["smoothing_m"] = cfg.target.contour.edge_smoothing_m;
  }
  json& sy = j["synthesis"];
  sy["eta_svd"] = cfg.synthesis.eta_svd;
  sy["eta_phi"] = cfg.synthesis.eta_phi;
  sy["max_outer"] = cfg.synthesis.max_outer;
  sy["ns_mode_cap"] = cfg.synthesis.ns_mode_cap;
  sy["target_scale"] = cfg.synthesis.target_scale;
  sy["pso"] = {{"swarm", cfg.synthesis.pso.swarm_size},
               {"inertia", cfg.synthesis.pso.inertia},
               {"cognitive", cfg.synthesis.pso.cognitive},
               {"social", cfg.synthesis.pso.social},
               {"iterations", cfg.synthesis.pso.iterations},
               {"velocity_clamp", cfg.synthesis.pso.velocity_clamp},
               {"beta_bound", cfg.synthesis.pso.beta_bound}};
  return j;
}

/// FNV-1a 64-bit over the canonical config dump.
inline std::string config_hash(const RunConfig& cfg) {
  const std::string s = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace emskin
