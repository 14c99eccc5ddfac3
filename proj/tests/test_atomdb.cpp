#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "emskin/atomdb.hpp"

using namespace emskin;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double cell = 0.5 * (c0 / 5.5e9);
const IncidenceKey broadside{0.0, 0.0, 5.5e9};

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("synthetic database magnitude anchors") {
  SECTION("paper substrate dips to -23.5 dB at d ~ 1.4 mm") {
    const auto db = generate_synthetic_db(paper_substrate(), cell, 1e-4, broadside);
    double min_db = 0.0, at_d = 0.0;
    for (const auto& e : db.entries()) {
      const double g_db = 20.0 * std::log10(std::abs(e.gamma.gamma_te));
      if (g_db < min_db) {
        min_db = g_db;
        at_d = e.descriptor_m;
      }
    }
    CHECK_THAT(min_db, WithinAbs(-23.5, 0.05));
    CHECK_THAT(at_d, WithinAbs(1.4e-3, 1e-4));
  }

  SECTION("ISOLA substrate never drops below -11.7 dB") {
    const auto db = generate_synthetic_db(isola_substrate(), cell, 1e-4, broadside);
    for (const auto& e : db.entries())
      REQUIRE(20.0 * std::log10(std::abs(e.gamma.gamma_te)) >= -11.7 - 1e-9);
  }
}

TEST_CASE("synthetic database grid and phase structure") {
  const auto db = generate_synthetic_db(paper_substrate(), 0.02725, 1e-4, broadside);
  // floor(cell/step) + 1 entries
  CHECK((db.size() == 273 || db.size() == 274));

  SECTION("passivity") {
    for (const auto& e : db.entries()) {
      REQUIRE(std::abs(e.gamma.gamma_te) <= 1.0);
      REQUIRE(std::abs(e.gamma.gamma_tm) <= 1.0);
    }
  }

  SECTION("phase is strictly monotone and spans the configured range") {
    double prev = std::arg(db.entries().front().gamma.gamma_te);
    double span = 0.0;
    for (int i = 1; i < db.size(); ++i) {
      double ph = std::arg(db.entries()[i].gamma.gamma_te);
      // arg() wraps at pi; accumulate unwrapped steps
      double step = ph - prev;
      if (step > pi) step -= 2.0 * pi;
      if (step < -pi) step += 2.0 * pi;
      REQUIRE(step < 0.0);
      span += step;
      prev = ph;
    }
    CHECK_THAT(std::abs(span), WithinRel(paper_substrate().phase_span_rad, 0.01));
  }

  SECTION("TM mirrors TE") {
    for (const auto& e : db.entries()) REQUIRE(e.gamma.gamma_te == e.gamma.gamma_tm);
  }

  SECTION("lookup never fails for quantized in-range descriptors") {
    for (int i = 0; i < db.size(); ++i) {
      const double d = quantize_descriptor(i * 1e-4 + 3e-5);
      REQUIRE_NOTHROW(db.lookup(d));
    }
    CHECK_THROWS_AS(db.lookup(0.9), ValidationError);
  }
}

TEST_CASE("database CSV round trip and validation") {
  SECTION("save then load reproduces the database exactly") {
    const auto db = generate_synthetic_db(paper_substrate(), 10e-4, 1e-4, broadside);
    REQUIRE(db.size() == 11);
    const auto path = temp_path("emskin_db_roundtrip.csv");
    save_db(db, path);
    const auto loaded = load_db(path);
    REQUIRE(loaded == db);
  }

  SECTION("empty file") {
    const auto path = temp_path("emskin_db_empty.csv");
    std::ofstream(path).close();
    CHECK_THROWS_WITH(load_db(path), Catch::Matchers::ContainsSubstring("empty database"));
  }

  SECTION("header only counts as empty") {
    const auto path = temp_path("emskin_db_header.csv");
    std::ofstream(path) << db_csv_header << "\n";
    CHECK_THROWS_WITH(load_db(path), Catch::Matchers::ContainsSubstring("empty database"));
  }

  SECTION("descriptor out of range names the row") {
    const auto path = temp_path("emskin_db_range.csv");
    std::ofstream(path) << db_csv_header << "\n0.0001,0.5,0,0.5,0\n0.9,0.5,0,0.5,0\n";
    CHECK_THROWS_WITH(load_db(path, 0.027), Catch::Matchers::ContainsSubstring("line 3"));
  }

  SECTION("unsorted descriptors rejected") {
    const auto path = temp_path("emskin_db_unsorted.csv");
    std::ofstream(path) << db_csv_header << "\n0.002,0.5,0,0.5,0\n0.001,0.5,0,0.5,0\n";
    CHECK_THROWS_WITH(load_db(path), Catch::Matchers::ContainsSubstring("not ascending"));
  }

  SECTION("duplicate descriptor rejected") {
    const auto path = temp_path("emskin_db_dup.csv");
    std::ofstream(path) << db_csv_header << "\n0.001,0.5,0,0.5,0\n0.001,0.4,0,0.4,0\n";
    CHECK_THROWS_WITH(load_db(path), Catch::Matchers::ContainsSubstring("duplicate"));
  }

  SECTION("malformed row rejected with its line number") {
    const auto path = temp_path("emskin_db_malformed.csv");
    std::ofstream(path) << db_csv_header << "\n0.001,0.5,0,0.5,0\nnot,a,row\n";
    CHECK_THROWS_WITH(load_db(path), Catch::Matchers::ContainsSubstring("line 3"));
  }

  SECTION("passivity violation rejected") {
    const auto path = temp_path("emskin_db_passivity.csv");
    std::ofstream(path) << db_csv_header << "\n0.001,1.5,0,0.5,0\n0.002,0.5,0,0.5,0\n";
    CHECK_THROWS_AS(load_db(path), ValidationError);
  }
}

TEST_CASE("induced current from the Love construction") {
  IncidentWave wave;
  wave.frequency_hz = 5.5e9;
  wave.e_te = cplx(1.0, 0.0);
  const auto basis =
      polarization_basis(wave_vector(wave.theta_inc_rad, wave.phi_inc_rad, wave.k0()));

  // Two-entry database holding an ideal conductor at d = 0.
  const std::vector<DbEntry> entries{
      DbEntry{0.0, ReflectionMatrix{cplx(-1.0, 0.0), cplx(-1.0, 0.0)}},
      DbEntry{1e-4, ReflectionMatrix{cplx(0.0, 0.0), cplx(0.0, 0.0)}}};
  const AtomDatabase db(entries, broadside);

  SECTION("ideal conductor at broadside: J = -2 along the TE axis") {
    const CVec2 j = induced_current(0.0, db, wave, basis, Vec3(0, 0, 0));
    CHECK_THAT(std::abs(j(0)), WithinAbs(0.0, 1e-14));
    CHECK_THAT(j(1).real(), WithinAbs(-2.0, 1e-12));
    CHECK_THAT(j(1).imag(), WithinAbs(0.0, 1e-14));
    CHECK_THAT(j.norm(), WithinRel(2.0, 1e-12));
  }

  SECTION("zero reflection gives zero current") {
    const CVec2 j = induced_current(1e-4, db, wave, basis, Vec3(0.1, -0.2, 0.0));
    CHECK(j.norm() == 0.0);
  }

  SECTION("linear in the incident amplitudes") {
    IncidentWave scaled = wave;
    const cplx c(0.3, -1.7);
    scaled.e_te *= c;
    const Vec3 r(0.05, 0.02, 0.0);
    const CVec2 j1 = induced_current(0.0, db, wave, basis, r);
    const CVec2 j2 = induced_current(0.0, db, scaled, basis, r);
    REQUIRE((j2 - c * j1).norm() < 1e-12 * j2.norm());
  }

  SECTION("oblique incidence: linearity across both amplitudes") {
    IncidentWave obl;
    obl.frequency_hz = 5.5e9;
    obl.theta_inc_rad = deg2rad(25.0);
    obl.phi_inc_rad = deg2rad(60.0);
    const auto ob = polarization_basis(wave_vector(obl.theta_inc_rad, obl.phi_inc_rad, obl.k0()));
    const Vec3 r(0.03, -0.04, 0.0);

    IncidentWave te_only = obl, tm_only = obl, both = obl;
    te_only.e_te = cplx(1.0, 0.0);
    tm_only.e_tm = cplx(1.0, 0.0);
    both.e_te = cplx(0.4, 0.1);
    both.e_tm = cplx(-0.2, 0.9);

    const CVec2 j_te = induced_current(0.0, db, te_only, ob, r);
    const CVec2 j_tm = induced_current(0.0, db, tm_only, ob, r);
    const CVec2 j_both = induced_current(0.0, db, both, ob, r);
    REQUIRE((j_both - (both.e_te * j_te + both.e_tm * j_tm)).norm() < 1e-12 * j_both.norm());
  }
}
