#pragma once

#include <string>
#include <vector>

#include "fraktur/config.hpp"
#include "fraktur/lower_kkt.hpp"
#include "fraktur/model.hpp"

namespace fraktur {

// A fully validated run description: mesh/time resolution, material data,
// initial phase field, boundary load schedule, solver knobs, and the
// tracking-problem data used by the control driver.
struct ScenarioConfig {
  std::string name = "scenario";

  int mesh_n = 8;
  TaggingScheme tagging = TaggingScheme::LeftDirichletRightNeumann;
  double t_final = 1.0;
  int steps = 10;
  PhysParams phys;
  NeumannForce force;

  std::string phi0_kind = "constant";  // constant | band
  double phi0_value = 1.0;
  double band_value = 0.05;
  double band_lo = 0.45;
  double band_hi = 0.55;

  std::string load_kind = "zero";  // zero | constant | ramp | updown
  double load_magnitude = 0.0;

  PdasOptions pdas;

  // control problem data
  double alpha = 1e-4;
  double target_magnitude = 0.0;  // reference load level the tracking target is generated from
  double gtol = 1e-8;
  int control_max_iters = 200;
  int control_max_linesearch = 40;

  std::vector<int> etas = {4, 2, 1};
  double probe_tol_rel = 1e-8;
  unsigned long long seed = 0;
};

ScenarioConfig scenario_from_config(const ConfigMap& cfg);

// Normalized time profile of the boundary load, in [0, 1].
double load_shape(const std::string& kind, double t, double t_final);

Vec build_phi0(const ScenarioConfig& sc, const Mesh2D& mesh);
Control build_control(const ScenarioConfig& sc, const FemSystem& fem, const TimeGrid& tg);

// Owns the assembled problem plus the scenario's initial data and load.
struct ScenarioInstance {
  ScenarioConfig cfg;
  Problem problem;
  Vec phi0;
  Control control;

  explicit ScenarioInstance(ScenarioConfig sc);
  ScenarioInstance(const ScenarioInstance&) = delete;
  ScenarioInstance& operator=(const ScenarioInstance&) = delete;
};

// Shipped run descriptions (mirrored by the files under scenarios/).
ScenarioConfig preset_zero_force();
ScenarioConfig preset_pull();
ScenarioConfig preset_precracked();
ScenarioConfig preset_control_recovery();

}  // namespace fraktur
