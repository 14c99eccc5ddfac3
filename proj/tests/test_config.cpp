#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "emskin/config.hpp"

using namespace emskin;

namespace {

json valid_config() {
  return json{
      {"version", 1},
      {"seed", 4242},
      {"scenario",
       {{"frequency_hz", 5.5e9},
        {"incidence", {{"theta_deg", 0.0}, {"phi_deg", 0.0}, {"e_te", {1.0, 0.0}}, {"e_tm", {0.0, 0.0}}}},
        {"grid", {{"p", 5}, {"q", 5}, {"cell_m", 0.0272538}, {"height_m", 5.0}}},
        {"observation",
         {{"kind", "angular"},
          {"theta_deg", {6.0, 48.0}},
          {"theta_count", 22},
          {"phi_deg", {-180.0, 180.0}},
          {"phi_count", 121}}}}},
      {"atoms", {{"substrate", "paper"}, {"step_m", 1e-4}}},
      {"target", {{"kind", "pencil"}, {"theta_deg", 30.0}, {"phi_deg", -45.0}, {"beamwidth", 0.0}}},
      {"synthesis",
       {{"eta_svd", 0.1},
        {"eta_phi", 1e-4},
        {"max_outer", 4},
        {"ns_mode_cap", 20},
        {"target_scale", 0.0},
        {"pso", {{"swarm", 12}, {"iterations", 5}}}}}};
}

}  // namespace

TEST_CASE("config parsing") {
  SECTION("a valid document parses with defaults applied") {
    const RunConfig cfg = parse_config(valid_config());
    CHECK(cfg.wave.frequency_hz == 5.5e9);
    CHECK(cfg.grid.p_count == 5);
    CHECK(cfg.seed == 4242);
    CHECK(cfg.synthesis.seed == 4242);
    CHECK(cfg.synthesis.pso.swarm_size == 12);
    CHECK(cfg.synthesis.pso.inertia == 0.7298);  // default preserved
    CHECK(cfg.target.pencil.theta_refl_rad == deg2rad(30.0));
  }

  SECTION("unknown keys are rejected everywhere") {
    json j = valid_config();
    j["typo_key"] = 1;
    CHECK_THROWS_AS(parse_config(j), ValidationError);

    j = valid_config();
    j["scenario"]["grid"]["extra"] = true;
    CHECK_THROWS_AS(parse_config(j), ValidationError);

    j = valid_config();
    j["synthesis"]["pso"]["omega"] = 0.5;
    CHECK_THROWS_AS(parse_config(j), ValidationError);
  }

  SECTION("version must be 1") {
    json j = valid_config();
    j["version"] = 2;
    CHECK_THROWS_AS(parse_config(j), ValidationError);
    j.erase("version");
    CHECK_THROWS_AS(parse_config(j), ValidationError);
  }

  SECTION("schema rejects out-of-range thresholds") {
    json j = valid_config();
    j["synthesis"]["eta_svd"] = 0.0;
    CHECK_THROWS_AS(parse_config(j), ValidationError);
    j = valid_config();
    j["synthesis"]["eta_svd"] = 1.0;
    CHECK_THROWS_AS(parse_config(j), ValidationError);
  }

  SECTION("atoms require exactly one source") {
    json j = valid_config();
    j["atoms"] = {{"step_m", 1e-4}};
    CHECK_THROWS_AS(parse_config(j), ValidationError);
    j["atoms"] = {{"substrate", "paper"}, {"database", "x.csv"}};
    CHECK_THROWS_AS(parse_config(j), ValidationError);
    j["atoms"] = {{"substrate", "mylar"}};
    CHECK_THROWS_AS(parse_config(j), ValidationError);
  }

  SECTION("complex amplitudes must be [re, im] pairs") {
    json j = valid_config();
    j["scenario"]["incidence"]["e_te"] = 1.0;
    CHECK_THROWS_AS(parse_config(j), ValidationError);
  }

  SECTION("contour targets parse polygons inline") {
    json j = valid_config();
    j["scenario"]["observation"] = {{"kind", "floor"},  {"x_m", {0.0, 10.0}}, {"x_count", 21},
                                    {"y_m", {-10.0, 0.0}}, {"y_count", 21},   {"height_m", 10.0}};
    j["target"] = {{"kind", "contour"},
                   {"polygons", {{{2.0, -4.0}, {5.0, -4.0}, {5.0, -1.0}}}},
                   {"inside", 1.0},
                   {"outside", 0.05},
                   {"smoothing_m", 0.25}};
    const RunConfig cfg = parse_config(j);
    REQUIRE(cfg.target.contour.polygons.size() == 1);
    REQUIRE(cfg.target.contour.polygons[0].vertices.size() == 3);
    CHECK(cfg.observation.kind == ObservationKind::floor_plane);
    CHECK(cfg.observation.floor.height_m == 10.0);
  }
}

TEST_CASE("config hashing is canonical") {
  const RunConfig a = parse_config(valid_config());
  const RunConfig b = parse_config(valid_config());
  CHECK(config_hash(a) == config_hash(b));

  json j = valid_config();
  j["seed"] = 4243;
  CHECK(config_hash(parse_config(j)) != config_hash(a));

  // Round trip through the canonical serialization preserves the hash.
  const RunConfig c = parse_config(config_to_json(a));
  CHECK(config_hash(c) == config_hash(a));
}

TEST_CASE("polygon file loading") {
  const auto path = (std::filesystem::temp_directory_path() / "emskin_polys.json").string();
  std::ofstream(path) << "[[[0,0],[1,0],[1,1],[0,1]],[[2,2],[3,2],[2.5,3]]]";
  const auto polys = load_polygons(path);
  REQUIRE(polys.size() == 2);
  REQUIRE(polys[0].vertices.size() == 4);
  REQUIRE(polys[1].vertices.size() == 3);

  std::ofstream(path) << "{\"not\": \"a list\"}";
  CHECK_THROWS_AS(load_polygons(path), ValidationError);

  std::ofstream(path) << "[[[0,0],[1,0]]]";
  CHECK_THROWS_AS(load_polygons(path), ValidationError);
}
