#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "fraktur/config.hpp"
#include "fraktur/control.hpp"
#include "fraktur/errors.hpp"
#include "fraktur/io.hpp"
#include "fraktur/probe.hpp"
#include "fraktur/scenario.hpp"

namespace {

using namespace fraktur;

struct Args {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
};

ScenarioConfig load_scenario(const Args& a) {
  ScenarioConfig sc = scenario_from_config(parse_config_file(a.config));
  if (a.seed_given) sc.seed = a.seed;
  return sc;
}

// The last stdout line of every run: RESULT key=value ...
class ResultLine {
 public:
  ResultLine& add(const std::string& key, double v) { return raw(key, format_g17(v)); }
  ResultLine& add(const std::string& key, int v) { return raw(key, std::to_string(v)); }
  ResultLine& add(const std::string& key, bool v) { return raw(key, v ? "1" : "0"); }
  ResultLine& raw(const std::string& key, const std::string& v) {
    line_ += " " + key + "=" + v;
    return *this;
  }
  void print() const { std::printf("RESULT%s\n", line_.c_str()); }

 private:
  std::string line_;
};

// ---------------------------------------------------------------------------
// forward

int run_forward(const Args& a) {
  const ScenarioConfig sc = load_scenario(a);
  ScenarioInstance inst(sc);
  const PdasResult res = pdas_forward_solve(inst.problem, inst.phi0, inst.control, sc.pdas);

  ensure_directory(a.out);
  for (int m = 0; m <= sc.steps; ++m) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%04d.vtk", m);
    write_vtk_step(a.out + "/" + name, inst.problem.fem, res.state.u[m], res.state.phi[m],
                   m > 0 ? &res.mult.l2[m - 1] : nullptr);
  }
  CsvWriter log(a.out + "/forward_log.csv",
                {"step", "outer", "newton_iters", "active_count", "residual", "energy"});
  for (const auto& e : res.log)
    log.row({static_cast<double>(e.step), static_cast<double>(e.outer),
             static_cast<double>(e.newton_iters), static_cast<double>(e.active_count), e.residual,
             e.energy});
  log.close();

  std::printf("forward: %s, %d time steps on a %dx%d mesh\n", sc.name.c_str(), sc.steps,
              sc.mesh_n, sc.mesh_n);
  std::printf("%6s %7s %8s %12s %14s\n", "step", "newton", "active", "residual", "energy");
  for (std::size_t k = 0; k < res.log.size(); ++k) {
    const auto& e = res.log[k];
    const bool last_of_step = k + 1 == res.log.size() || res.log[k + 1].step != e.step;
    if (last_of_step)
      std::printf("%6d %7d %8d %12.3e %14.6e\n", e.step, e.newton_iters, e.active_count,
                  e.residual, e.energy);
  }
  if (res.monolithic_applied)
    std::printf("space-time corrector engaged: %d iterations (sweep residual %.3e)\n",
                res.monolithic_iters, res.residual_sequential.max_component());

  const double f = energy(inst.problem, res.state, inst.control);
  ResultLine rl;
  rl.add("converged", res.converged)
      .add("steps", sc.steps)
      .add("energy", f)
      .add("kkt_max", res.residual.max_component())
      .add("comp_nodal", res.residual.comp_nodal)
      .add("monolithic", res.monolithic_applied)
      .print();
  return res.converged ? 0 : 1;
}

// ---------------------------------------------------------------------------
// check

struct Sweep {
  std::vector<double> h, err;
  double order = 0.0;
  bool exact = false;
};

template <class F>
Sweep sweep_fd(F&& eval, double deriv, double h0 = 1e-2, int levels = 6) {
  Sweep s;
  const double scale = std::max(1.0, std::abs(deriv));
  double h = h0;
  for (int k = 0; k < levels; ++k, h *= 0.5) {
    const double fd = (eval(h) - eval(-h)) / (2.0 * h);
    s.h.push_back(h);
    s.err.push_back(std::abs(fd - deriv));
  }
  s.exact = true;
  for (double e : s.err) s.exact = s.exact && e <= 1e-12 * scale;
  for (int k = 0; k + 1 < levels; ++k) {
    if (s.err[k] <= 1e-13 * scale || s.err[k + 1] <= 1e-13 * scale) continue;
    s.order = std::max(s.order, std::log2(s.err[k] / s.err[k + 1]));
  }
  return s;
}

void print_sweep(const char* title, const Sweep& s) {
  std::printf("%s\n", title);
  std::printf("  %-12s %-14s %s\n", "h", "error", "order");
  for (std::size_t k = 0; k < s.h.size(); ++k) {
    if (k == 0)
      std::printf("  %-12.4e %-14.5e %s\n", s.h[k], s.err[k], "-");
    else
      std::printf("  %-12.4e %-14.5e %.3f\n", s.h[k], s.err[k],
                  s.err[k] > 0.0 && s.err[k - 1] > 0.0 ? std::log2(s.err[k - 1] / s.err[k]) : 0.0);
  }
  if (s.exact)
    std::printf("  exact to roundoff\n");
  else
    std::printf("  observed order %.3f\n", s.order);
}

// <psi C e(u1), e(u2)> over space-time, psi a nodal field constant in time
double coupling_form(const Problem& pb, const Vec& psi, const SpaceTimeState& s1,
                     const SpaceTimeState& s2) {
  const auto& fem = pb.fem;
  const Eigen::Matrix3d D = fem.elasticity_voigt(pb.phys);
  double acc = 0.0;
  for (int m = 0; m <= pb.time.steps; ++m) {
    double space = 0.0;
    for (int e = 0; e < static_cast<int>(fem.elements().size()); ++e) {
      const auto& el = fem.elements()[e];
      const double psibar = (psi[el.v[0]] + psi[el.v[1]] + psi[el.v[2]]) / 3.0;
      space += psibar * el.area *
               fem.element_strain(e, s1.u[m]).dot(D * fem.element_strain(e, s2.u[m]));
    }
    acc += pb.time.weight(m) * space;
  }
  return acc;
}

int run_check(const Args& a) {
  const ScenarioConfig sc = load_scenario(a);
  ScenarioInstance inst(sc);
  const Problem& pb = inst.problem;
  std::mt19937_64 rng(sc.seed);

  const int points = 3;
  double grad_order = 0.0, hess_order = 0.0, aprime_order = 0.0;
  bool grad_exact = true, hess_exact = true, aprime_exact = true;
  for (int pt = 0; pt < points; ++pt) {
    const SpaceTimeState s = random_state(pb.fem, pb.time, rng);
    const Control c = random_control(pb.fem, pb.time, rng);
    const Direction d = random_direction(pb.fem, pb.time, rng);
    const Direction w = random_direction(pb.fem, pb.time, rng);

    const Sweep sg = sweep_fd([&](double h) { return energy(pb, add_scaled(s, d, h), c); },
                              gradient(pb, s, c).apply(d));
    const Sweep sh = sweep_fd([&](double h) { return gradient(pb, add_scaled(s, d, h), c).apply(w); },
                              hessian_form(pb, s, d, w));

    LowerMultiplier l = LowerMultiplier::zero(pb.fem, pb.time);
    YDirection yd = YDirection::zero(pb.fem, pb.time);
    yd.dq = random_control(pb.fem, pb.time, rng);
    yd.du = random_direction(pb.fem, pb.time, rng);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < yd.dl.l1.size(); ++i) yd.dl.l1[i] = gauss(rng);
    for (auto& v : yd.dl.l2)
      for (int i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    const Sweep sa = sweep_fd(
        [&](double h) {
          Control ch = c;
          for (int m = 0; m <= pb.time.steps; ++m) ch.q[m] += h * yd.dq.q[m];
          LowerMultiplier lh = l;
          lh.l1 += h * yd.dl.l1;
          for (int m = 0; m < pb.time.steps; ++m) lh.l2[m] += h * yd.dl.l2[m];
          return semilinear_a(pb, ch, add_scaled(s, yd.du, h), lh).apply(w);
        },
        a_prime_action(pb, c, s, yd).apply(w));

    if (pt == 0) {
      print_sweep("energy gradient vs central differences", sg);
      print_sweep("Hessian form vs gradient differences", sh);
      print_sweep("stationarity-map derivative vs central differences", sa);
    }
    grad_order = std::max(grad_order, sg.order);
    hess_order = std::max(hess_order, sh.order);
    aprime_order = std::max(aprime_order, sa.order);
    grad_exact = grad_exact && sg.exact;
    hess_exact = hess_exact && sh.exact;
    aprime_exact = aprime_exact && sa.exact;
  }
  const bool orders_ok = (grad_exact || grad_order >= 1.9) && (hess_exact || hess_order >= 1.9) &&
                         (aprime_exact || aprime_order >= 1.9);

  // boundedness of the coupling form and the space-time embeddings
  double coupling_const = 0.0, linf_const = 0.0;
  bool embed_ok = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20; ++k) {
    const SpaceTimeState s1 = random_state(pb.fem, pb.time, rng);
    const SpaceTimeState s2 = random_state(pb.fem, pb.time, rng);
    Vec psi = Vec::Zero(pb.fem.n_scalar());
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < psi.size(); ++i) psi[i] = gauss(rng);

    const double y1 = norm_Y(pb, s1), y2 = norm_Y(pb, s2);
    coupling_const = std::max(
        coupling_const,
        std::abs(coupling_form(pb, psi, s1, s2)) /
            (psi.cwiseAbs().maxCoeff() * y1 * y2));
    double linf = 0.0;
    for (const Vec& phi : s1.phi) linf = std::max(linf, phi.cwiseAbs().maxCoeff());
    linf_const = std::max(linf_const, linf / y1);

    const double lhs = std::max(spacetime_l2_phi(pb, s1), spacetime_l2_grad_phi(pb, s1));
    worst_margin = std::min(worst_margin, y1 - lhs);
    embed_ok = embed_ok && lhs <= y1 + 1e-12;
  }
  std::printf("coupling form bound: |<psi C e(u1), e(u2)>| <= C |psi|_inf |u1|_Y |u2|_Y,"
              " observed C = %.6e\n", coupling_const);
  std::printf("phase sup bound: |phi|_inf <= C |u|_Y, observed C = %.6e\n", linf_const);
  std::printf("space-time embedding max(|phi|, |grad phi|)_L2 <= |u|_Y: %s (margin %.3e)\n",
              embed_ok ? "holds" : "VIOLATED", worst_margin);

  const bool pass = orders_ok && embed_ok;
  ResultLine rl;
  rl.add("grad_order", grad_exact ? 2.0 : grad_order)
      .add("hess_order", hess_exact ? 2.0 : hess_order)
      .add("aprime_order", aprime_exact ? 2.0 : aprime_order)
      .add("coupling_const", coupling_const)
      .add("linf_const", linf_const)
      .add("embed_ok", embed_ok)
      .add("pass", pass)
      .print();
  return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// counterexamples

int run_counterexamples(const Args& a) {
  const ScenarioConfig sc = load_scenario(a);
  ScenarioInstance inst(sc);
  const PdasResult res = pdas_forward_solve(inst.problem, inst.phi0, inst.control, sc.pdas);

  const Suff1Report s1 =
      suff1_counterexample(inst.problem, res.state, inst.control, inst.phi0, res.mult);
  std::printf("flat direction (0, phi - phi(0)):\n");
  std::printf("  f'(Phi) = %.6e   multiplier pairing = %.6e   |Phi|_Y = %.6e\n", s1.fprime,
              s1.pairing, s1.norm_Y);
  std::printf("  first-order growth f(u + Phi) >= f(u) + delta |Phi|_Y fails for every delta > 0\n");

  const Suff2Report s2 = suff2_counterexample(inst.problem, res.state, res.mult, sc.etas);
  std::printf("bump carrier: node %d, height %.6e, %zu intervals\n", s2.bump.node, s2.bump.height,
              s2.bump.J.size());
  std::printf("ramp family Phi_eta = (0, -f_eta Psi): curvature-to-norm collapse\n");
  std::printf("  %-5s %-12s %-14s %-14s %-14s %-12s %-12s\n", "eta", "measure", "norm_sq",
              "lower_bound", "curvature", "ratio", "pairing");
  ensure_directory(a.out);
  CsvWriter csv(a.out + "/counterexamples.csv",
                {"eta_intervals", "eta_measure", "norm_sq", "lower_bound", "rate_part", "curvature",
                 "ratio", "pairing"});
  for (const auto& row : s2.rows) {
    std::printf("  %-5d %-12.4e %-14.6e %-14.6e %-14.6e %-12.4e %-12.4e\n", row.eta_intervals,
                row.eta_measure, row.norm_sq, row.lower_bound, row.curvature, row.ratio,
                row.pairing);
    csv.row({static_cast<double>(row.eta_intervals), row.eta_measure, row.norm_sq, row.lower_bound,
             row.rate_part, row.curvature, row.ratio, row.pairing});
  }
  csv.close();

  ResultLine rl;
  rl.add("suff1_fprime", s1.fprime)
      .add("suff1_norm", s1.norm_Y)
      .add("bump_height", s2.bump.height)
      .add("bump_node", s2.bump.node)
      .add("eta_rows", static_cast<int>(s2.rows.size()))
      .add("ratio_first", s2.rows.front().ratio)
      .add("ratio_last", s2.rows.back().ratio)
      .print();
  return 0;
}

// ---------------------------------------------------------------------------
// control

int run_control(const Args& a) {
  const ScenarioConfig sc = load_scenario(a);
  ScenarioInstance inst(sc);
  const Problem& pb = inst.problem;

  // tracking data: the target is the final phase field generated by the
  // steady reference load, so the reference control is exactly recoverable
  const Vec qref = Vec::Constant(pb.fem.n_gamma(), sc.target_magnitude);
  const Control cref = Control::constant_in_time(pb.fem, pb.time, qref);
  const PdasResult truth = pdas_forward_solve(pb, inst.phi0, cref, sc.pdas);

  ControlProblemSpec spec;
  spec.alpha = sc.alpha;
  spec.phi_d = truth.state.phi[pb.time.steps];
  spec.q_r = qref;

  SolveControlOptions opts;
  opts.gtol = sc.gtol;
  opts.max_iter = sc.control_max_iters;
  opts.max_linesearch = sc.control_max_linesearch;
  opts.pdas = sc.pdas;
  const SolveControlResult res = solve_control(pb, inst.phi0, spec, opts);

  ensure_directory(a.out);
  CsvWriter hist(a.out + "/control_history.csv", {"iter", "J", "grad_norm", "step", "comp_held"});
  for (const auto& row : res.history)
    hist.row({static_cast<double>(row.iter), row.J, row.grad_norm, row.step,
              row.comp_held ? 1.0 : 0.0});
  hist.close();
  {
    std::vector<std::string> header = {"step", "time"};
    for (int i = 0; i < pb.fem.n_gamma(); ++i) header.push_back("q" + std::to_string(i));
    CsvWriter qcsv(a.out + "/control_q.csv", header);
    for (int m = 0; m <= pb.time.steps; ++m) {
      std::vector<double> row = {static_cast<double>(m), pb.time.node(m)};
      for (int i = 0; i < pb.fem.n_gamma(); ++i) row.push_back(res.q.q[m][i]);
      qcsv.row(row);
    }
    qcsv.close();
  }
  CsvWriter kcsv(a.out + "/control_kkt.csv",
                 {"kktn1", "kktn2", "kktn3", "kktn4", "kktn5", "kktn6", "kktn7", "kktn8",
                  "kktn8_rel"});
  kcsv.row({res.kkt.kktn1, res.kkt.kktn2, res.kkt.kktn3, res.kkt.kktn4, res.kkt.kktn5,
            res.kkt.kktn6, res.kkt.kktn7, res.kkt.kktn8, res.kkt.kktn8_rel});
  kcsv.close();

  std::printf("control: %zu iterations, J = %.6e, |grad| = %.3e\n", res.history.size() - 1,
              res.history.back().J, res.history.back().grad_norm);
  std::printf("first-order system residuals:\n");
  std::printf("  feasibility   1: %.3e  2: %.3e  3: %.3e  4: %.3e\n", res.kkt.kktn1, res.kkt.kktn2,
              res.kkt.kktn3, res.kkt.kktn4);
  std::printf("  dual signs    5: %.3e  6: %.3e\n", res.kkt.kktn5, res.kkt.kktn6);
  std::printf("  stationarity  7: %.3e   complementarity 8: %.3e (rel %.3e)\n", res.kkt.kktn7,
              res.kkt.kktn8, res.kkt.kktn8_rel);

  double num = 0.0, den = 0.0;
  for (int m = 1; m <= pb.time.steps; ++m) {
    num += (res.q.q[m] - qref).squaredNorm();
    den += qref.squaredNorm();
  }
  const double recovery_rel = den > 0.0 ? std::sqrt(num / den) : 0.0;
  std::printf("reference-load recovery: relative error %.3e over the loaded nodes\n", recovery_rel);

  ResultLine rl;
  rl.add("converged", res.converged)
      .add("iters", static_cast<int>(res.history.size()) - 1)
      .add("J", res.history.back().J)
      .add("grad_norm", res.history.back().grad_norm)
      .add("comp_held", res.complementarity_held)
      .add("kktn7", res.kkt.kktn7)
      .add("kktn8_rel", res.kkt.kktn8_rel)
      .add("recovery_rel", recovery_rel)
      .print();
  if (res.line_search_failed) {
    std::fprintf(stderr, "control: line search stalled; best iterate saved to %s\n",
                 a.out.c_str());
    return 4;
  }
  return res.converged ? 0 : 1;
}

// ---------------------------------------------------------------------------
// probe

int run_probe(const Args& a) {
  const ScenarioConfig sc = load_scenario(a);
  ScenarioInstance inst(sc);
  const PdasResult res = pdas_forward_solve(inst.problem, inst.phi0, inst.control, sc.pdas);
  const ProbeReport rep = regularity_probe(inst.problem, res.state, sc.probe_tol_rel);

  std::printf("regularity probe at the forward solution:\n");
  std::printf("  infsup_A          = %.10e\n", rep.infsup_A);
  std::printf("  infsup_A_u        = %.10e\n", rep.infsup_A_u);
  std::printf("  infsup_B          = %.10e\n", rep.infsup_B);
  std::printf("  korn_kappa_bound  = %.10e\n", rep.korn_kappa_bound);
  std::printf("  sigma_max         = %.10e\n", rep.sigma_max);
  if (rep.degenerate_zero_strain) std::printf("  degenerate: strain vanishes identically\n");
  if (rep.degenerate_zero_phase) std::printf("  degenerate: phase field vanishes identically\n");
  std::printf("  verdict: %s\n", rep.north_ok ? "non-degenerate (north_ok)" : "DEGENERATE");

  ResultLine rl;
  rl.add("north_ok", rep.north_ok)
      .add("infsup_A", rep.infsup_A)
      .add("infsup_B", rep.infsup_B)
      .add("infsup_A_u", rep.infsup_A_u)
      .add("korn_kappa_bound", rep.korn_kappa_bound)
      .add("sigma_max", rep.sigma_max)
      .add("degenerate_zero_strain", rep.degenerate_zero_strain)
      .add("degenerate_zero_phase", rep.degenerate_zero_phase)
      .print();
  return rep.north_ok ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"space-time phase-field fracture: forward solves, derivative checks, "
               "sufficiency counterexamples, optimal control, regularity probe"};
  app.require_subcommand(1);

  Args args;
  int (*runner)(const Args&) = nullptr;
  for (const auto& [name, fn, help] :
       {std::tuple{"forward", &run_forward, "solve the constrained forward problem, write VTK/CSV"},
        std::tuple{"check", &run_check, "finite-difference orders and form bounds"},
        std::tuple{"counterexamples", &run_counterexamples,
                   "refute first- and second-order sufficiency at the solution"},
        std::tuple{"control", &run_control, "track a reference-generated target, recover the load"},
        std::tuple{"probe", &run_probe, "non-degeneracy of the constraint linearization"}}) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "scenario file")->required();
    sub->add_option("--out", args.out, "output directory");
    sub->add_option("--seed", args.seed, "override the scenario seed")
        ->each([&](const std::string&) { args.seed_given = true; });
    sub->callback([&runner, fn = fn]() { runner = fn; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    return runner(args);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const Inapplicable& e) {
    std::fprintf(stderr, "inapplicable: %s\n", e.what());
    ResultLine rl;
    rl.raw("status", "inapplicable").print();
    return 3;
  } catch (const LineSearchFailure& e) {
    std::fprintf(stderr, "line search failure: %s\n", e.what());
    return 4;
  } catch (const SolverFailure& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
