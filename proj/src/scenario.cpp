#include "fraktur/scenario.hpp"

#include <cmath>
#include <sstream>

#include "fraktur/errors.hpp"

namespace fraktur {

namespace {

std::vector<int> parse_int_list(const ConfigMap& cfg, const std::string& key,
                                std::vector<int> fallback) {
  if (!cfg.has(key)) return fallback;
  const std::string raw = cfg.get_string(key);
  std::vector<int> out;
  std::istringstream in(raw);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ConfigError(cfg.path + ": key '" + key + "' expects comma-separated integers, got '" +
                            raw + "'",
                        cfg.line_of(key));
    }
  }
  if (out.empty())
    throw ConfigError(cfg.path + ": key '" + key + "' is empty", cfg.line_of(key));
  return out;
}

}  // namespace

double load_shape(const std::string& kind, double t, double t_final) {
  if (kind == "zero") return 0.0;
  if (kind == "constant") return 1.0;
  if (kind == "ramp") return t / t_final;
  // tent profile: up over the first half, back down over the second
  const double s = t / t_final;
  return s <= 0.5 ? 2.0 * s : 2.0 * (1.0 - s);
}

ScenarioConfig scenario_from_config(const ConfigMap& cfg) {
  ScenarioConfig sc;
  sc.name = cfg.get_string_or("name", sc.name);

  sc.mesh_n = cfg.get_int_or("mesh_n", sc.mesh_n);
  if (sc.mesh_n < 1)
    throw ConfigError(cfg.path + ": mesh_n must be >= 1", cfg.line_of("mesh_n"));

  const std::string tagging = cfg.get_string_or("tagging", "left_dirichlet_right_neumann");
  try {
    sc.tagging = parse_tagging_scheme(tagging);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.path + ": " + e.what(), cfg.line_of("tagging"));
  }

  sc.t_final = cfg.get_double_or("t_final", sc.t_final);
  if (!(sc.t_final > 0.0))
    throw ConfigError(cfg.path + ": t_final must be > 0", cfg.line_of("t_final"));
  sc.steps = cfg.get_int_or("steps", sc.steps);
  if (sc.steps < 1)
    throw ConfigError(cfg.path + ": steps must be >= 1", cfg.line_of("steps"));

  sc.phys.eps = cfg.get_double_or("eps", sc.phys.eps);
  sc.phys.kappa = cfg.get_double_or("kappa", sc.phys.kappa);
  sc.phys.mu = cfg.get_double_or("mu", sc.phys.mu);
  sc.phys.lambda = cfg.get_double_or("lambda", sc.phys.lambda);
  sc.phys.g_c = cfg.get_double_or("g_c", sc.phys.g_c);
  try {
    sc.phys.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.path + ": " + e.what());
  }

  const std::string force_mode = cfg.get_string_or("force_mode", "constant_dir");
  if (force_mode == "constant_dir") {
    sc.force.mode = NeumannForce::Mode::ConstantDir;
    sc.force.dir[0] = cfg.get_double_or("force_dir_x", 1.0);
    sc.force.dir[1] = cfg.get_double_or("force_dir_y", 0.0);
    const double len = sc.force.dir.norm();
    if (!(len > 0.0))
      throw ConfigError(cfg.path + ": force direction must be nonzero",
                        cfg.line_of("force_dir_x"));
    sc.force.dir /= len;
  } else if (force_mode == "outward_normal") {
    sc.force = NeumannForce::normal();
  } else {
    throw ConfigError(cfg.path + ": unknown force_mode '" + force_mode + "'",
                      cfg.line_of("force_mode"));
  }

  sc.phi0_kind = cfg.get_string_or("phi0", "constant");
  if (sc.phi0_kind != "constant" && sc.phi0_kind != "band")
    throw ConfigError(cfg.path + ": phi0 must be 'constant' or 'band', got '" + sc.phi0_kind + "'",
                      cfg.line_of("phi0"));
  sc.phi0_value = cfg.get_double_or("phi0_value", sc.phi0_value);
  sc.band_value = cfg.get_double_or("band_value", sc.band_value);
  sc.band_lo = cfg.get_double_or("band_lo", sc.band_lo);
  sc.band_hi = cfg.get_double_or("band_hi", sc.band_hi);
  for (double v : {sc.phi0_value, sc.band_value})
    if (!(v >= 0.0 && v <= 1.0))
      throw ConfigError(cfg.path + ": initial phase values must lie in [0,1]",
                        cfg.line_of(sc.phi0_kind == "band" ? "band_value" : "phi0_value"));
  if (!(sc.band_lo <= sc.band_hi))
    throw ConfigError(cfg.path + ": band_lo must be <= band_hi", cfg.line_of("band_lo"));

  sc.load_kind = cfg.get_string_or("load", "zero");
  if (sc.load_kind != "zero" && sc.load_kind != "constant" && sc.load_kind != "ramp" &&
      sc.load_kind != "updown")
    throw ConfigError(cfg.path + ": unknown load kind '" + sc.load_kind + "'",
                      cfg.line_of("load"));
  sc.load_magnitude = cfg.get_double_or("load_magnitude", sc.load_magnitude);

  sc.pdas.tol = cfg.get_double_or("pdas_tol", sc.pdas.tol);
  sc.pdas.max_newton = cfg.get_int_or("pdas_max_newton", sc.pdas.max_newton);
  sc.pdas.max_outer = cfg.get_int_or("pdas_max_outer", sc.pdas.max_outer);
  sc.pdas.c_active = cfg.get_double_or("pdas_c_active", sc.pdas.c_active);
  sc.pdas.monolithic_polish = cfg.get_bool_or("monolithic_polish", sc.pdas.monolithic_polish);
  if (!(sc.pdas.tol > 0.0))
    throw ConfigError(cfg.path + ": pdas_tol must be > 0", cfg.line_of("pdas_tol"));

  sc.alpha = cfg.get_double_or("alpha", sc.alpha);
  if (!(sc.alpha > 0.0))
    throw ConfigError(cfg.path + ": alpha must be > 0", cfg.line_of("alpha"));
  sc.target_magnitude = cfg.get_double_or("target_magnitude", sc.target_magnitude);
  sc.gtol = cfg.get_double_or("gtol", sc.gtol);
  sc.control_max_iters = cfg.get_int_or("control_max_iters", sc.control_max_iters);
  sc.control_max_linesearch = cfg.get_int_or("control_max_linesearch", sc.control_max_linesearch);
  sc.etas = parse_int_list(cfg, "etas", sc.etas);
  sc.probe_tol_rel = cfg.get_double_or("probe_tol_rel", sc.probe_tol_rel);
  sc.seed = cfg.get_u64_or("seed", sc.seed);

  cfg.reject_unconsumed();
  return sc;
}

Vec build_phi0(const ScenarioConfig& sc, const Mesh2D& mesh) {
  const int np = static_cast<int>(mesh.nodes.size());
  Vec phi0 = Vec::Constant(np, sc.phi0_value);
  if (sc.phi0_kind == "band") {
    for (int i = 0; i < np; ++i) {
      const double y = mesh.nodes[i][1];
      if (y >= sc.band_lo - 1e-12 && y <= sc.band_hi + 1e-12) phi0[i] = sc.band_value;
    }
  }
  return phi0;
}

Control build_control(const ScenarioConfig& sc, const FemSystem& fem, const TimeGrid& tg) {
  Control c = Control::zero(fem, tg);
  for (int m = 0; m <= tg.steps; ++m) {
    const double level = sc.load_magnitude * load_shape(sc.load_kind, tg.node(m), tg.t_final);
    c.q[m] = Vec::Constant(fem.n_gamma(), level);
  }
  return c;
}

ScenarioInstance::ScenarioInstance(ScenarioConfig sc)
    : cfg(std::move(sc)),
      problem(build_unit_square_mesh(cfg.mesh_n, cfg.tagging), cfg.force,
              TimeGrid(cfg.t_final, cfg.steps), cfg.phys),
      phi0(build_phi0(cfg, problem.fem.mesh())),
      control(build_control(cfg, problem.fem, problem.time)) {}

ScenarioConfig preset_zero_force() {
  ScenarioConfig sc;
  sc.name = "zero_force";
  sc.mesh_n = 4;
  sc.steps = 4;
  sc.load_kind = "zero";
  sc.load_magnitude = 0.0;
  return sc;
}

ScenarioConfig preset_pull() {
  ScenarioConfig sc;
  sc.name = "pull";
  sc.mesh_n = 6;
  sc.steps = 8;
  sc.load_kind = "ramp";
  sc.load_magnitude = 0.85;
  return sc;
}

ScenarioConfig preset_precracked() {
  ScenarioConfig sc;
  sc.name = "precracked";
  sc.mesh_n = 6;
  sc.steps = 6;
  sc.tagging = TaggingScheme::BottomDirichletTopNeumann;
  sc.force.dir = Eigen::Vector2d(0.0, 1.0);
  sc.phi0_kind = "band";
  sc.phi0_value = 1.0;
  sc.band_value = 0.05;
  sc.band_lo = 0.45;
  sc.band_hi = 0.55;
  sc.load_kind = "constant";
  sc.load_magnitude = 0.3;
  return sc;
}

ScenarioConfig preset_control_recovery() {
  ScenarioConfig sc;
  sc.name = "control_recovery";
  sc.mesh_n = 4;
  sc.steps = 4;
  sc.load_kind = "constant";
  sc.load_magnitude = 0.0;  // the control solver owns the load; scenario load stays zero
  sc.target_magnitude = 0.4;
  sc.alpha = 1e-4;
  return sc;
}

}  // namespace fraktur
