#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "emskin/analysis.hpp"
#include "emskin/config.hpp"
#include "emskin/errors.hpp"
#include "emskin/rng.hpp"
#include "emskin/synthesis.hpp"
#include "emskin/targets.hpp"

namespace emskin {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config -> problem pieces
// ---------------------------------------------------------------------------

inline ObservationDomain build_observation(const ObservationConfig& oc) {
  return oc.kind == ObservationKind::angular_grid ? build_observation(oc.angular)
                                                  : build_observation(oc.floor);
}

inline AtomDatabase build_database(const RunConfig& cfg) {
  if (!cfg.atoms.database_path.empty())
    return load_db(cfg.atoms.database_path, cfg.grid.cell_size_m, cfg.atoms.step_m);
  const auto model = substrate_preset(cfg.atoms.substrate);
  if (!model) throw ValidationError("runner: unknown substrate preset '" + cfg.atoms.substrate + "'");
  return generate_synthetic_db(
      *model, cfg.grid.cell_size_m, cfg.atoms.step_m,
      IncidenceKey{cfg.wave.theta_inc_rad, cfg.wave.phi_inc_rad, cfg.wave.frequency_hz});
}

/// Transverse complex polarization axis of the incident TE mode.
inline CVec2 te_axis(const PolarizationBasis& basis) {
  CVec2 a(basis.e_te.x(), basis.e_te.y());
  const double n = a.norm();
  return n > 0.0 ? CVec2(a / n) : CVec2(0.0, 1.0);
}

inline FieldVector build_target(const RunConfig& cfg, const ObservationDomain& obs,
                                const PolarizationBasis& basis) {
  if (cfg.target.kind == "pencil") {
    PencilBeamSpec spec = cfg.target.pencil;
    if (!(spec.beamwidth > 0.0))
      spec.beamwidth = cfg.wave.wavelength() / (cfg.grid.p_count * cfg.grid.cell_size_m);
    return pencil_beam_target(spec, obs, te_axis(basis));
  }
  ContourSpec spec = cfg.target.contour;
  if (!cfg.target.polygons_file.empty()) spec.polygons = load_polygons(cfg.target.polygons_file);
  return contour_target(spec, obs, te_axis(basis));
}

// ---------------------------------------------------------------------------
// Result export
// ---------------------------------------------------------------------------

struct RunSummary {
  double p_max = 0.0;
  double cost_final = 0.0;
  double cost_pi = 0.0;
  double delta_e_db_at_target = 0.0;  // pencil targets
  double mean_inside_power_opt = 0.0; // contour targets
  double mean_inside_power_pi = 0.0;
  int s_th = 0;
  int peak_row = 0, peak_col = 0;
  std::string out_dir;
};

namespace detail {

inline json layout_to_json(const Eigen::ArrayXd& layout, const EmsGrid& grid) {
  json rows = json::array();
  for (int p = 0; p < grid.p_count; ++p) {
    json row = json::array();
    for (int q = 0; q < grid.q_count; ++q) row.push_back(layout(grid.atom_index(p, q)));
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::ArrayXd layout_from_json(const json& rows, const EmsGrid& grid) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != grid.p_count)
    throw ValidationError("runner: layout row count does not match the grid");
  Eigen::ArrayXd layout(grid.atom_count());
  for (int p = 0; p < grid.p_count; ++p) {
    const auto& row = rows[p];
    if (!row.is_array() || static_cast<int>(row.size()) != grid.q_count)
      throw ValidationError("runner: layout column count does not match the grid");
    for (int q = 0; q < grid.q_count; ++q) layout(grid.atom_index(p, q)) = row[q].get<double>();
  }
  return layout;
}

inline void write_layout_csv(const Eigen::ArrayXd& layout, const EmsGrid& grid,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("runner: cannot open '" + path + "' for writing");
  char buf[40];
  for (int p = 0; p < grid.p_count; ++p) {
    for (int q = 0; q < grid.q_count; ++q) {
      std::snprintf(buf, sizeof(buf), "%.15g", layout(grid.atom_index(p, q)));
      out << (q ? "," : "") << buf;
    }
    out << "\n";
  }
}

inline void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("runner: cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

}  // namespace detail

/// Mean |E|^2 over the floor samples inside any of the polygons.
inline double mean_inside_power(const FieldVector& e, const ObservationDomain& obs,
                                const std::vector<Polygon>& polygons) {
  double acc = 0.0;
  int count = 0;
  for (int m = 0; m < obs.size(); ++m) {
    const double x = obs.samples[m].position.x();
    const double y = obs.samples[m].position.y();
    bool inside = false;
    for (const auto& poly : polygons)
      if (detail::point_in_polygon(poly, x, y)) {
        inside = true;
        break;
      }
    if (!inside) continue;
    acc += std::norm(e.x(m)) + std::norm(e.y(m));
    ++count;
  }
  if (count == 0) throw ValidationError("runner: no observation samples inside the polygons");
  return acc / count;
}

/// Full synthesize command: run the alternating design and write result JSON,
/// the PI baseline, spectrum CSV, field maps, the power-improvement map, and
/// fabrication layout CSVs into out_dir.
inline RunSummary run_synthesize(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const std::string hash = config_hash(cfg);

  const PolarizationBasis basis =
      polarization_basis(wave_vector(cfg.wave.theta_inc_rad, cfg.wave.phi_inc_rad, cfg.wave.k0()));
  const ObservationDomain obs = build_observation(cfg.observation);
  const AtomDatabase db = build_database(cfg);
  const FieldVector target_raw = build_target(cfg, obs, basis);

  const SynthesisProblem prob =
      prepare_problem(cfg.grid, cfg.wave, basis, obs, db, target_raw, cfg.synthesis);
  const SynthesisResult res = run_alternating(prob, db, cfg.synthesis);

  write_spectrum_csv(prob.dec, (fs::path(out_dir) / "spectrum.csv").string());

  const PowerMap pmap = power_improvement_map(res.field_opt, res.field_pi);
  write_map_csv(res.field_opt.magnitude(), obs, (fs::path(out_dir) / "field_opt.csv").string(),
                "field_magnitude", hash);
  write_map_csv(res.field_pi.magnitude(), obs, (fs::path(out_dir) / "field_pi.csv").string(),
                "field_magnitude", hash);
  write_map_csv(pmap.values, obs, (fs::path(out_dir) / "power_improvement.csv").string(),
                "power_improvement", hash);
  detail::write_layout_csv(res.layout_opt, cfg.grid,
                           (fs::path(out_dir) / "layout_opt.csv").string());
  detail::write_layout_csv(res.layout_pi, cfg.grid, (fs::path(out_dir) / "layout_pi.csv").string());

  RunSummary summary;
  summary.p_max = pmap.p_max;
  summary.cost_final = res.cost_final;
  summary.cost_pi = res.cost_pi;
  summary.s_th = res.s_th;
  summary.peak_row = pmap.peak_index / obs.cols();
  summary.peak_col = pmap.peak_index % obs.cols();
  summary.out_dir = out_dir;

  json metrics;
  metrics["p_max"] = pmap.p_max;
  if (obs.kind == ObservationKind::angular_grid) {
    metrics["peak_theta_deg"] = rad2deg(obs.row_axis[summary.peak_row]);
    metrics["peak_phi_deg"] = rad2deg(obs.col_axis[summary.peak_col]);
  } else {
    metrics["peak_y_m"] = obs.row_axis[summary.peak_row];
    metrics["peak_x_m"] = obs.col_axis[summary.peak_col];
  }
  if (cfg.target.kind == "pencil") {
    const int tgt =
        nearest_sample(obs, cfg.target.pencil.theta_refl_rad, cfg.target.pencil.phi_refl_rad);
    summary.delta_e_db_at_target = delta_e_db(res.field_opt, res.field_pi, tgt);
    metrics["delta_e_db_at_target"] = summary.delta_e_db_at_target;
  } else {
    const auto polys = cfg.target.polygons_file.empty() ? cfg.target.contour.polygons
                                                        : load_polygons(cfg.target.polygons_file);
    summary.mean_inside_power_opt = mean_inside_power(res.field_opt, obs, polys);
    summary.mean_inside_power_pi = mean_inside_power(res.field_pi, obs, polys);
    metrics["mean_inside_power_opt"] = summary.mean_inside_power_opt;
    metrics["mean_inside_power_pi"] = summary.mean_inside_power_pi;
  }

  const json cfg_json = config_to_json(cfg);
  json trace = json::array();
  for (const auto& rec : res.cost_trace)
    trace.push_back({{"n", rec.outer_index}, {"phase", rec.phase}, {"cost", rec.cost}});

  json result;
  result["version"] = 1;
  result["kind"] = "optimized";
  result["config_hash"] = hash;
  result["config"] = cfg_json;
  result["seed"] = cfg.seed;
  result["s_th"] = res.s_th;
  result["mode_count"] = res.mode_count;
  result["optimized_modes"] = res.optimized_modes;
  result["termination"] = res.termination;
  result["outer_phases"] = res.outer_phases;
  result["target_scale"] = res.target_scale;
  result["cost_pi"] = res.cost_pi;
  result["cost_final"] = res.cost_final;
  result["cost_trace"] = trace;
  result["layout_m"] = detail::layout_to_json(res.layout_opt, cfg.grid);
  json beta = json::array();
  for (Eigen::Index s = 0; s < res.beta_opt.size(); ++s)
    beta.push_back({res.beta_opt(s).real(), res.beta_opt(s).imag()});
  result["beta"] = beta;
  result["metrics"] = metrics;
  detail::write_json_file(result, (fs::path(out_dir) / "result.json").string());

  json baseline;
  baseline["version"] = 1;
  baseline["kind"] = "pi_baseline";
  baseline["config_hash"] = hash;
  baseline["config"] = cfg_json;
  baseline["seed"] = cfg.seed;
  baseline["s_th"] = res.s_th;
  baseline["cost_final"] = res.cost_pi;
  baseline["layout_m"] = detail::layout_to_json(res.layout_pi, cfg.grid);
  detail::write_json_file(baseline, (fs::path(out_dir) / "result_pi.json").string());

  std::printf("P_max = %.6g (%.2f%%)  Phi_final = %.6g  s_th = %d  termination = %s\n",
              pmap.p_max, 100.0 * pmap.p_max, res.cost_final, res.s_th, res.termination.c_str());
  return summary;
}

/// Recomputes fields and maps from a stored result (no re-optimization).
inline void run_analyze(const std::string& result_path, const std::string& out_dir) {
  std::ifstream in(result_path);
  if (!in) throw ValidationError("runner: cannot open '" + result_path + "'");
  json result;
  try {
    in >> result;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("runner: invalid result JSON: ") + e.what());
  }
  if (!result.contains("config") || !result.contains("layout_m"))
    throw ValidationError("runner: result file lacks config or layout");

  const RunConfig cfg = parse_config(result.at("config"));
  const std::string hash = config_hash(cfg);
  fs::create_directories(out_dir);

  const PolarizationBasis basis =
      polarization_basis(wave_vector(cfg.wave.theta_inc_rad, cfg.wave.phi_inc_rad, cfg.wave.k0()));
  const ObservationDomain obs = build_observation(cfg.observation);
  const AtomDatabase db = build_database(cfg);
  const Eigen::ArrayXd layout = detail::layout_from_json(result.at("layout_m"), cfg.grid);

  RadiationOperator op(cfg.grid, obs, cfg.wave.k0(), cfg.synthesis.threads);
  const FieldVector field =
      op.radiate(layout_current(layout, db, cfg.wave, basis, cfg.grid, cfg.synthesis.threads));
  write_map_csv(field.magnitude(), obs, (fs::path(out_dir) / "field_recomputed.csv").string(),
                "field_magnitude", hash);
  std::printf("recomputed field map for %s\n", result_path.c_str());
}

/// Aperture or elevation sweep; each entry runs in its own subdirectory with
/// a seed derived from (master seed, value index). Returns false when any
/// entry failed.
inline bool run_sweep(const std::string& kind, const RunConfig& base,
                      const std::vector<double>& values, const std::string& out_dir,
                      std::vector<RunSummary>* summaries = nullptr) {
  if (values.empty()) throw ValidationError("runner: sweep needs a nonempty value list");
  if (kind != "aperture" && kind != "angle")
    throw ValidationError("runner: sweep kind must be 'aperture' or 'angle'");
  if (kind == "angle" && base.target.kind != "pencil")
    throw ValidationError("runner: angle sweeps need a pencil target");

  fs::create_directories(out_dir);
  std::ofstream summary_csv(fs::path(out_dir) / "summary.csv");
  summary_csv << "value,p_max,phi_final,delta_e_db_at_target\n";

  bool all_ok = true;
  for (std::size_t i = 0; i < values.size(); ++i) {
    RunConfig cfg = base;
    cfg.seed = hash_stream(base.seed, {static_cast<std::uint64_t>(i)});
    cfg.synthesis.seed = cfg.seed;
    std::string label;
    if (kind == "aperture") {
      const int p = static_cast<int>(values[i]);
      if (p < 1) throw ValidationError("runner: aperture values must be positive atom counts");
      cfg.grid.p_count = p;
      cfg.grid.q_count = p;
      label = "P" + std::to_string(p);
    } else {
      cfg.target.pencil.theta_refl_rad = deg2rad(values[i]);
      label = "theta" + std::to_string(values[i]);
    }
    const std::string run_dir = (fs::path(out_dir) / ("run_" + label)).string();
    try {
      const RunSummary s = run_synthesize(cfg, run_dir);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%.15g,%.15g,%.15g,%.15g\n", values[i], s.p_max,
                    s.cost_final, s.delta_e_db_at_target);
      summary_csv << buf;
      if (summaries) summaries->push_back(s);
    } catch (const std::exception& e) {
      all_ok = false;
      summary_csv << values[i] << ",failed,failed,failed\n";
      std::fprintf(stderr, "sweep entry %g failed: %s\n", values[i], e.what());
    }
  }
  return all_ok;
}

}  // namespace emskin
