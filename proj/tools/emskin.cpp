// Command-line front end: meta-atom database generation and validation,
// layout synthesis, parameter sweeps, and map recomputation.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emskin/runner.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_validation = 2;

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

emskin::RunConfig load_run_config(const CommonFlags& flags) {
  emskin::RunConfig cfg = emskin::load_config(flags.config_path);
  if (flags.seed) {
    cfg.seed = *flags.seed;
    cfg.synthesis.seed = *flags.seed;
  }
  cfg.synthesis.threads = std::max(1, flags.threads);
  return cfg;
}

int run_atomdb_generate(const std::string& substrate, const emskin::SubstrateModel& custom,
                        bool use_custom, double cell, double step, double theta_deg,
                        double phi_deg, double freq, const std::string& out_path) {
  emskin::SubstrateModel model;
  if (use_custom) {
    model = custom;
  } else {
    const auto preset = emskin::substrate_preset(substrate);
    if (!preset) throw emskin::ValidationError("unknown substrate preset '" + substrate + "'");
    model = *preset;
  }
  const emskin::IncidenceKey key{emskin::deg2rad(theta_deg), emskin::deg2rad(phi_deg), freq};
  const emskin::AtomDatabase db = emskin::generate_synthetic_db(model, cell, step, key);
  emskin::save_db(db, out_path);
  double min_te_db = 0.0;
  for (const auto& e : db.entries())
    min_te_db = std::min(min_te_db, 20.0 * std::log10(std::abs(e.gamma.gamma_te)));
  std::printf("wrote %d entries to %s (min |Gamma_TE| = %.2f dB)\n", db.size(), out_path.c_str(),
              min_te_db);
  return exit_ok;
}

int run_atomdb_validate(const std::string& path, std::optional<double> cell) {
  const emskin::AtomDatabase db = emskin::load_db(path, cell);
  std::printf("%s: %d entries, OK\n", path.c_str(), db.size());
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Static passive electromagnetic skin synthesis"};
  app.require_subcommand(1);

  CommonFlags flags;

  // --- atomdb ---
  auto* atomdb = app.add_subcommand("atomdb", "Generate or validate reflection databases");
  atomdb->require_subcommand(1);

  auto* gen = atomdb->add_subcommand("generate", "Tabulate a synthetic substrate response");
  std::string substrate = "paper", db_out = "atomdb.csv";
  double cell = 0.0, step = emskin::default_descriptor_step_m;
  double theta_inc = 0.0, phi_inc = 0.0, freq = 5.5e9;
  emskin::SubstrateModel custom;
  custom.name = "custom";
  bool use_custom = false;
  gen->add_option("--substrate", substrate, "Preset name: paper | isola");
  gen->add_option("--cell", cell, "Unit cell size [m]")->required();
  gen->add_option("--step", step, "Descriptor step (printing precision) [m]");
  gen->add_option("--theta-inc", theta_inc, "Incidence theta [deg]");
  gen->add_option("--phi-inc", phi_inc, "Incidence phi [deg]");
  gen->add_option("--freq", freq, "Frequency [Hz]");
  gen->add_option("-o,--out", db_out, "Output CSV path");
  auto* custom_group = gen->add_option_group("custom-model", "Explicit model parameters");
  custom_group->add_option("--eps-r", custom.eps_r);
  custom_group->add_option("--tan-delta", custom.tan_delta);
  custom_group->add_option("--thickness", custom.thickness_m);
  custom_group->add_option("--resonance", custom.resonance_d_m);
  custom_group->add_option("--dip-db", custom.dip_db);
  custom_group->add_option("--dip-width", custom.dip_width_m);
  custom_group->add_option("--phase-span", custom.phase_span_rad);
  custom_group->add_option("--floor-db", custom.floor_loss_db);
  gen->callback([&] { use_custom = custom_group->count_all() > 0; });

  auto* val = atomdb->add_subcommand("validate", "Check an existing database file");
  std::string db_path;
  double val_cell = 0.0;
  val->add_option("file", db_path, "Database CSV")->required();
  val->add_option("--cell", val_cell, "Unit cell size [m] for range checks");

  // --- synthesize ---
  auto* synth = app.add_subcommand("synthesize", "Run the alternating layout synthesis");
  synth->add_option("--config", flags.config_path, "Run configuration JSON")->required();
  synth->add_option("--out", flags.out_dir, "Output directory");
  synth->add_option("--seed", flags.seed, "Override the config seed");
  synth->add_option("--threads", flags.threads, "Worker threads");

  // --- sweep ---
  auto* sweep = app.add_subcommand("sweep", "Run a synthesis per value and summarize");
  std::string sweep_kind;
  std::vector<double> sweep_values;
  sweep->add_option("kind", sweep_kind, "aperture | angle")->required();
  sweep->add_option("--config", flags.config_path, "Run configuration JSON")->required();
  sweep->add_option("--values", sweep_values, "Sweep values (P counts or theta degrees)")
      ->delimiter(',');
  sweep->add_option("--out", flags.out_dir, "Output directory");
  sweep->add_option("--seed", flags.seed, "Override the config master seed");
  sweep->add_option("--threads", flags.threads, "Worker threads");

  // --- analyze ---
  auto* analyze = app.add_subcommand("analyze", "Recompute maps from a stored result");
  std::string result_path;
  analyze->add_option("result", result_path, "result.json produced by synthesize")->required();
  analyze->add_option("--out", flags.out_dir, "Output directory");
  analyze->add_option("--threads", flags.threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_validation;
  }

  try {
    if (gen->parsed()) {
      if (use_custom) custom.validate();
      return run_atomdb_generate(substrate, custom, use_custom, cell, step, theta_inc, phi_inc,
                                 freq, db_out);
    }
    if (val->parsed())
      return run_atomdb_validate(db_path,
                                 val_cell > 0.0 ? std::optional<double>(val_cell) : std::nullopt);
    if (synth->parsed()) {
      emskin::run_synthesize(load_run_config(flags), flags.out_dir);
      return exit_ok;
    }
    if (sweep->parsed()) {
      if (sweep_values.empty())
        throw emskin::ValidationError("sweep: --values must list at least one value");
      const bool ok =
          emskin::run_sweep(sweep_kind, load_run_config(flags), sweep_values, flags.out_dir);
      return ok ? exit_ok : exit_runtime;
    }
    if (analyze->parsed()) {
      emskin::run_analyze(result_path, flags.out_dir);
      return exit_ok;
    }
  } catch (const emskin::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_validation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_runtime;
  }
  return exit_validation;
}
