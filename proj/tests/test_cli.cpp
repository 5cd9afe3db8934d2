#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path& work_root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "fraktur_cli_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

RunResult run_cli(const std::string& args, const std::string& tag) {
  const fs::path out_file = work_root() / (tag + ".out");
  const fs::path err_file = work_root() / (tag + ".err");
  const std::string cmd = std::string(FRAKTUR_BIN) + " " + args + " > " + out_file.string() +
                          " 2> " + err_file.string();
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

std::string scenario(const std::string& name) {
  return std::string(SCENARIO_DIR) + "/" + name + ".cfg";
}

std::string last_line(const std::string& text) {
  std::string t = text;
  while (!t.empty() && (t.back() == '\n' || t.back() == '\r')) t.pop_back();
  const auto pos = t.find_last_of('\n');
  return pos == std::string::npos ? t : t.substr(pos + 1);
}

}  // namespace

TEST_CASE("forward run: exit 0, RESULT line, VTK and CSV artifacts") {
  const fs::path out = work_root() / "fwd";
  const RunResult r =
      run_cli("forward --config " + scenario("pull") + " --out " + out.string(), "fwd");
  CHECK(r.exit_code == 0);
  const std::string rl = last_line(r.out);
  CHECK(rl.rfind("RESULT ", 0) == 0);
  CHECK(rl.find("converged=1") != std::string::npos);
  CHECK(fs::exists(out / "step_0000.vtk"));
  CHECK(fs::exists(out / "step_0008.vtk"));
  CHECK(fs::exists(out / "forward_log.csv"));
}

TEST_CASE("reruns are byte-identical") {
  const fs::path o1 = work_root() / "det1", o2 = work_root() / "det2";
  const RunResult r1 =
      run_cli("forward --config " + scenario("precracked") + " --out " + o1.string(), "det1");
  const RunResult r2 =
      run_cli("forward --config " + scenario("precracked") + " --out " + o2.string(), "det2");
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r2.exit_code == 0);
  CHECK(r1.out == r2.out);
  CHECK(slurp(o1 / "forward_log.csv") == slurp(o2 / "forward_log.csv"));
  CHECK(slurp(o1 / "step_0006.vtk") == slurp(o2 / "step_0006.vtk"));
}

TEST_CASE("malformed config: exit 2 with a line diagnostic") {
  const fs::path cfg = work_root() / "broken.cfg";
  {
    std::ofstream f(cfg);
    f << "mesh_n = 4\nbogus_knob = 1\n";
  }
  const RunResult r = run_cli("forward --config " + cfg.string(), "broken");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("line 2") != std::string::npos);
  CHECK(r.err.find("bogus_knob") != std::string::npos);

  const RunResult r2 = run_cli("forward --config " + (work_root() / "missing.cfg").string(),
                               "missing");
  CHECK(r2.exit_code == 2);
}

TEST_CASE("counterexamples without crack growth: exit 3") {
  const fs::path out = work_root() / "cx0";
  const RunResult r = run_cli(
      "counterexamples --config " + scenario("zero_force") + " --out " + out.string(), "cx0");
  CHECK(r.exit_code == 3);
  CHECK(last_line(r.out).rfind("RESULT", 0) == 0);
  CHECK(last_line(r.out).find("status=inapplicable") != std::string::npos);
}

TEST_CASE("counterexamples on the growing crack: tables and exit 0") {
  const fs::path out = work_root() / "cx1";
  const RunResult r = run_cli(
      "counterexamples --config " + scenario("pull") + " --out " + out.string(), "cx1");
  CHECK(r.exit_code == 0);
  const std::string rl = last_line(r.out);
  CHECK(rl.rfind("RESULT ", 0) == 0);
  CHECK(rl.find("eta_rows=3") != std::string::npos);
  CHECK(fs::exists(out / "counterexamples.csv"));
  // the printed table has one line per eta
  CHECK(r.out.find("ramp family") != std::string::npos);
}

TEST_CASE("starved control line search: exit 4 with history saved") {
  const fs::path out = work_root() / "ls";
  const RunResult r = run_cli(
      "control --config " + scenario("linesearch_starved") + " --out " + out.string(), "ls");
  CHECK(r.exit_code == 4);
  CHECK(fs::exists(out / "control_history.csv"));
  CHECK(fs::exists(out / "control_q.csv"));
}

TEST_CASE("control recovery run: exit 0 and small recovery error") {
  const fs::path out = work_root() / "ctrl";
  const RunResult r = run_cli(
      "control --config " + scenario("control_recovery") + " --out " + out.string(), "ctrl");
  CHECK(r.exit_code == 0);
  const std::string rl = last_line(r.out);
  CHECK(rl.find("converged=1") != std::string::npos);
  CHECK(fs::exists(out / "control_history.csv"));
  CHECK(fs::exists(out / "control_kkt.csv"));

  // parse recovery_rel from the RESULT line
  const auto pos = rl.find("recovery_rel=");
  REQUIRE(pos != std::string::npos);
  const double rec = std::stod(rl.substr(pos + std::string("recovery_rel=").size()));
  CHECK(rec <= 0.05);
}

TEST_CASE("probe: degenerate exit 5, loaded exit 0") {
  const RunResult r0 = run_cli("probe --config " + scenario("zero_force"), "probe0");
  CHECK(r0.exit_code == 5);
  CHECK(last_line(r0.out).find("north_ok=0") != std::string::npos);

  const RunResult r1 = run_cli("probe --config " + scenario("pull"), "probe1");
  CHECK(r1.exit_code == 0);
  CHECK(last_line(r1.out).find("north_ok=1") != std::string::npos);
}

TEST_CASE("derivative check command passes on a small instance") {
  const fs::path cfg = work_root() / "check_small.cfg";
  {
    std::ofstream f(cfg);
    f << "name = check_small\nmesh_n = 3\nsteps = 3\nseed = 7\n";
  }
  const RunResult r = run_cli("check --config " + cfg.string(), "check");
  CHECK(r.exit_code == 0);
  const std::string rl = last_line(r.out);
  CHECK(rl.rfind("RESULT ", 0) == 0);
  CHECK(rl.find("pass=1") != std::string::npos);
  // the sweep tables show at least four h rows each
  CHECK(r.out.find("observed order") != std::string::npos);
}
