#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fraktur/config.hpp"
#include "fraktur/errors.hpp"
#include "fraktur/io.hpp"
#include "fraktur/scenario.hpp"
#include "test_support.hpp"

using namespace fraktur;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing: sections, comments, types") {
  const std::string text =
      "# heading comment\n"
      "name = demo   ; trailing comment\n"
      "\n"
      "[mesh]\n"
      "n = 12\n"
      "scale = 2.5e-1\n"
      "[solver]\n"
      "polish = off\n"
      "seed = 18446744073709551615\n";
  const ConfigMap cfg = parse_config_text(text, "demo.cfg");
  CHECK(cfg.get_string("name") == "demo");
  CHECK(cfg.get_int("mesh.n") == 12);
  CHECK(cfg.get_double("mesh.scale") == 0.25);
  CHECK(cfg.get_bool_or("solver.polish", true) == false);
  CHECK(cfg.get_u64_or("solver.seed", 0) == 18446744073709551615ull);
  CHECK(cfg.line_of("mesh.n") == 5);
  cfg.reject_unconsumed();
}

TEST_CASE("config parsing failures carry line numbers") {
  CHECK_THROWS_AS(parse_config_text("just a bare token\n", "x.cfg"), ConfigError);

  try {
    parse_config_text("a = 1\nb = oops_not_a_number\n", "x.cfg").get_double("b");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }

  try {
    parse_config_text("a = 1\na = 2\n", "x.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() >= 1);
  }

  // unknown keys are rejected with their location
  const ConfigMap cfg = parse_config_text("known = 1\nmystery_knob = 3\n", "x.cfg");
  (void)cfg.get_int("known");
  try {
    cfg.reject_unconsumed();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("mystery_knob") != std::string::npos);
  }

  // missing required key
  CHECK_THROWS_AS(parse_config_text("", "x.cfg").get_string("name"), ConfigError);
}

TEST_CASE("scenario construction from config text") {
  const std::string text =
      "name = little_pull\n"
      "mesh_n = 3\n"
      "tagging = left_dirichlet_right_neumann\n"
      "t_final = 1.0\n"
      "steps = 4\n"
      "load = ramp\n"
      "load_magnitude = 0.5\n"
      "phi0 = band\n"
      "band_value = 0.1\n"
      "band_lo = 0.4\n"
      "band_hi = 0.6\n"
      "etas = 4,2,1\n";
  const ScenarioConfig sc = scenario_from_config(parse_config_text(text, "p.cfg"));
  CHECK(sc.name == "little_pull");
  CHECK(sc.mesh_n == 3);
  CHECK(sc.steps == 4);
  CHECK(sc.load_kind == "ramp");
  CHECK(sc.load_magnitude == 0.5);
  CHECK(sc.etas == std::vector<int>{4, 2, 1});

  ScenarioInstance inst(sc);
  const auto& mesh = inst.problem.fem.mesh();
  // band rows at y in [0.4, 0.6] are seeded, everything else intact
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const double y = mesh.nodes[i].y();
    if (y >= 0.4 - 1e-12 && y <= 0.6 + 1e-12)
      CHECK(inst.phi0[i] == 0.1);
    else
      CHECK(inst.phi0[i] == 1.0);
  }
  // ramp: zero at t=0, magnitude at t=T, linear in between
  CHECK(inst.control.q[0].norm() == 0.0);
  CHECK(inst.control.q[4].maxCoeff() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(inst.control.q[2].maxCoeff() == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("scenario validation rejects bad values with locations") {
  auto build = [](const std::string& text) {
    return scenario_from_config(parse_config_text(text, "bad.cfg"));
  };
  CHECK_THROWS_AS(build("mesh_n = 0\n"), ConfigError);
  CHECK_THROWS_AS(build("steps = -2\n"), ConfigError);
  CHECK_THROWS_AS(build("load = sideways\n"), ConfigError);
  CHECK_THROWS_AS(build("tagging = nonsense\n"), ConfigError);
  CHECK_THROWS_AS(build("phi0 = band\nband_lo = 0.7\nband_hi = 0.2\n"), ConfigError);
  CHECK_THROWS_AS(build("eps = -1\n"), ConfigError);
  CHECK_THROWS_AS(build("etas = 4,x\n"), ConfigError);
  // sectioned or simply unknown keys fail loudly
  CHECK_THROWS_AS(build("typo_knob = 1\n"), ConfigError);
}

TEST_CASE("load schedules") {
  CHECK(load_shape("zero", 0.7, 1.0) == 0.0);
  CHECK(load_shape("constant", 0.0, 1.0) == 1.0);
  CHECK(load_shape("ramp", 0.25, 1.0) == 0.25);
  CHECK(load_shape("updown", 0.25, 1.0) == 0.5);
  CHECK(load_shape("updown", 0.5, 1.0) == 1.0);
  CHECK(load_shape("updown", 0.75, 1.0) == 0.5);
  CHECK(load_shape("updown", 1.0, 1.0) == 0.0);
}

TEST_CASE("g17 formatting is round-trip exact") {
  for (double v : {0.1, 1.0 / 3.0, 2.5e-17, -3.14159265358979, 0.0, 1e300}) {
    const std::string s = format_g17(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("csv writer emits the exact grid of values") {
  const std::string dir = std::filesystem::temp_directory_path().string() + "/fraktur_test_csv";
  ensure_directory(dir);
  const std::string path = dir + "/t.csv";
  {
    CsvWriter w(path, {"a", "b"});
    w.row({1.5, 2.0 / 3.0});
    w.row({-0.0, 1e-300});
    w.close();
  }
  const std::string got = slurp(path);
  const std::string expect = "a,b\n" + format_g17(1.5) + "," + format_g17(2.0 / 3.0) + "\n" +
                             format_g17(-0.0) + "," + format_g17(1e-300) + "\n";
  CHECK(got == expect);
  std::filesystem::remove_all(dir);
}

TEST_CASE("vtk snapshots carry mesh, displacement, phase and multiplier") {
  auto pb = testsup::make_problem(2, 2);
  const auto& fem = pb->fem;
  const std::string dir = std::filesystem::temp_directory_path().string() + "/fraktur_test_vtk";
  ensure_directory(dir);
  const std::string path = dir + "/s.vtk";

  Vec u = Vec::Zero(fem.n_vector());
  for (int i = 0; i < u.size(); ++i) u[i] = 0.01 * (i + 1);
  Vec phi = Vec::Ones(fem.n_scalar()) * 0.5;
  Vec l2 = Vec::Zero(fem.n_scalar());
  write_vtk_step(path, fem, u, phi, &l2);

  const std::string text = slurp(path);
  CHECK(text.rfind("# vtk DataFile Version 3.0", 0) == 0);
  CHECK(text.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(text.find("POINTS " + std::to_string(fem.mesh().num_nodes())) != std::string::npos);
  CHECK(text.find("VECTORS displacement") != std::string::npos);
  CHECK(text.find("SCALARS phase") != std::string::npos);
  CHECK(text.find("SCALARS rate_multiplier") != std::string::npos);

  // rerunning produces the identical byte stream
  const std::string path2 = dir + "/s2.vtk";
  write_vtk_step(path2, fem, u, phi, &l2);
  CHECK(slurp(path2) == text);
  std::filesystem::remove_all(dir);
}
