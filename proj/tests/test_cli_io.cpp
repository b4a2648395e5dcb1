// Tests for the config parser, the CSV/JSON trajectory sinks, and the
// command-line driver (run in-process with captured streams).

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "tdvi/cli.hpp"
#include "tdvi/config.hpp"
#include "tdvi/errors.hpp"
#include "tdvi/io.hpp"
#include "tdvi/lagrangian.hpp"
#include "tdvi/problems.hpp"
#include "tdvi/stepper.hpp"
#include "test_helpers.hpp"

namespace {

using namespace tdvi;

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    out.push_back(line);
  }
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(item);
  }
  return out;
}

// Strict double parse: the whole field must be consumed.
double parse_double(const std::string& text) {
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  REQUIRE(end == text.c_str() + text.size());
  return value;
}

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "tdvi_cli_io_scratch";
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out << text;
  REQUIRE(out.good());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Runs the CLI entry point in-process with argv[0] prepended and both
// standard streams captured, so test output stays clean.
int run_cli(const std::vector<std::string>& args, std::string* out = nullptr,
            std::string* err = nullptr) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("tdvi");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(storage.size());
  for (const auto& s : storage) {
    argv.push_back(s.c_str());
  }

  std::ostringstream captured_out, captured_err;
  std::streambuf* old_out = std::cout.rdbuf(captured_out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(captured_err.rdbuf());
  int code = -1;
  try {
    code = cli_main(static_cast<int>(argv.size()), argv.data());
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  if (out != nullptr) {
    *out = captured_out.str();
  }
  if (err != nullptr) {
    *err = captured_err.str();
  }
  return code;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

TEST_CASE("config: a minimal file yields the documented defaults") {
  const RunConfig rc = parse_config("problem = harmonic_oscillator\n");
  CHECK(rc.problem_name == "harmonic_oscillator");
  CHECK(rc.problem_params.empty());
  CHECK(rc.mode == StepMode::Fixed);
  CHECK(rc.n_steps == 100);
  CHECK(rc.solver.newton_tol == 1e-10);
  CHECK(rc.solver.max_newton_iters == 50);
  CHECK(rc.solver.min_h == 1e-8);
  CHECK(rc.solver.max_h == 1e2);
  CHECK(rc.solver.damping);
  CHECK(rc.symplecticity_every == 10);
  CHECK(rc.generators.empty());
  CHECK(rc.output_path.empty());
  CHECK(rc.output_format == "csv");
}

TEST_CASE("config: comments, blank lines, CRLF endings, and repeated keys") {
  const std::string text =
      "# full-line comment\r\n"
      "\r\n"
      "  problem = free_particle   # trailing comment\r\n"
      "mode=adaptive\r\n"
      "n_steps = 7\r\n"
      "n_steps = 9\r\n";
  const RunConfig rc = parse_config(text);
  CHECK(rc.problem_name == "free_particle");
  CHECK(rc.mode == StepMode::Adaptive);
  CHECK(rc.n_steps == 9);  // the later assignment wins
}

TEST_CASE("config: every mode string maps to the matching stepper mode") {
  CHECK(parse_config("problem = harmonic_oscillator\nmode = fixed\n").mode == StepMode::Fixed);
  CHECK(parse_config("problem = harmonic_oscillator\nmode = adaptive\n").mode ==
        StepMode::Adaptive);
  CHECK(parse_config("problem = harmonic_oscillator\nmode = kmo\n").mode == StepMode::Kmo);
  CHECK_THROWS_AS(parse_config("problem = harmonic_oscillator\nmode = euler\n"), ValidationError);
}

TEST_CASE("config: malformed lines raise ParseError naming the line") {
  try {
    static_cast<void>(parse_config("problem = free_particle\nthis line has no equals sign\n"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(contains(e.what(), "line 2"));
  }

  try {
    static_cast<void>(parse_config("= 3\n"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(contains(e.what(), "line 1"));
    CHECK(contains(e.what(), "empty key"));
  }
}

TEST_CASE("config: rejected keys and values raise ValidationError") {
  CHECK_THROWS_AS(parse_config("problem = free_particle\nfrobnicate = 1\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("n_steps = 4\n"), ValidationError);  // missing problem
  CHECK_THROWS_AS(parse_config("problem = free_particle\nn_steps = 0\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("problem = free_particle\nn_steps = 2.5\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("problem = free_particle\nsolver.newton_tol = -1\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_config("problem = free_particle\nsolver.min_h = 1\nsolver.max_h = 0.5\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_config("problem = free_particle\nsolver.damping = maybe\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_config("problem = free_particle\ndiagnostics.symplecticity_every = -1\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_config("problem = free_particle\noutput.format = xml\n"), ValidationError);
}

TEST_CASE("config: referenced names are resolved at parse time") {
  CHECK_THROWS_AS(parse_config("problem = rigid_body\n"), UnknownProblem);
  // Bad problem parameters surface immediately, not at run time.
  CHECK_THROWS_AS(parse_config("problem = harmonic_oscillator\nproblem.k = -1\n"),
                  ValidationError);
  // kmo needs an autonomous problem.
  CHECK_THROWS_AS(parse_config("problem = forced_particle\nmode = kmo\n"), ValidationError);
  CHECK_NOTHROW(parse_config("problem = harmonic_oscillator\nmode = kmo\n"));
  // Generator labels must exist on the problem.
  CHECK_THROWS_AS(
      parse_config("problem = harmonic_oscillator\ndiagnostics.generators = rotation\n"),
      ValidationError);
}

TEST_CASE("config: problem parameter overrides reach the resolved problem") {
  const RunConfig rc = parse_config("problem = harmonic_oscillator\nproblem.k = 4\n");
  REQUIRE(rc.problem_params.at("k") == "4");
  const ProblemSpec problem = resolve_problem(rc);
  // L(0, [1], [0]) = -k/2 = -2 exactly for k = 4.
  CHECK(eval_lagrangian(problem.model, 0.0, test::vec({1.0}), test::vec({0.0})) == -2.0);
}

TEST_CASE("config: the generator filter keeps the listed labels in config order") {
  const RunConfig rc = parse_config(
      "problem = central_force_2d\n"
      "diagnostics.generators = time_translation, rotation\n");
  const ProblemSpec filtered = resolve_problem(rc);
  REQUIRE(filtered.generators.size() == 2);
  CHECK(filtered.generators[0].label == "time_translation");
  CHECK(filtered.generators[1].label == "rotation");

  // Without a filter the problem's declared order is preserved.
  const ProblemSpec full = resolve_problem(parse_config("problem = central_force_2d\n"));
  REQUIRE(full.generators.size() == 2);
  CHECK(full.generators[0].label == "rotation");
  CHECK(full.generators[1].label == "time_translation");
}

// ---------------------------------------------------------------------------
// CSV sink
// ---------------------------------------------------------------------------

TEST_CASE("csv: header and single-row layout for a one-segment run") {
  const ProblemSpec problem = builtin("free_particle");
  const Trajectory traj = run_trajectory(problem, StepMode::Fixed, SolverConfig{}, 1);
  REQUIRE(!traj.failure);

  std::ostringstream os;
  emit_csv(traj, os);
  const auto rows = lines(os.str());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "k,t,q_1,h,E_d,energy_residual,J_time_translation,newton_iters,final_residual");

  const auto f = fields(rows[1]);
  REQUIRE(f.size() == 9);
  CHECK(f[0] == "0");
  CHECK(parse_double(f[1]) == 0.0);   // t0
  CHECK(parse_double(f[2]) == 0.0);   // q0
  CHECK(parse_double(f[3]) == 0.1);   // h0 round-trips through %.17g
  CHECK(parse_double(f[4]) == doctest::Approx(0.5).epsilon(1e-12));   // E_d of v = 1
  CHECK(parse_double(f[5]) == 0.0);   // no window before segment 0
  CHECK(parse_double(f[6]) == doctest::Approx(-0.5).epsilon(1e-12));  // J_time = -E_d
  CHECK(f[7] == "0");                 // seeded segment: no Newton solve
  CHECK(parse_double(f[8]) == 0.0);
}

TEST_CASE("csv: no momentum columns when the problem declares no generators") {
  const ProblemSpec problem = builtin("td_oscillator");
  const Trajectory traj = run_trajectory(problem, StepMode::Fixed, SolverConfig{}, 2);
  std::ostringstream os;
  emit_csv(traj, os);
  const auto rows = lines(os.str());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "k,t,q_1,h,E_d,energy_residual,newton_iters,final_residual");
  CHECK(fields(rows[1]).size() == 8);
}

TEST_CASE("csv: every numeric field round-trips through the text exactly") {
  const ProblemSpec problem = builtin("harmonic_oscillator");
  const Trajectory traj = run_trajectory(problem, StepMode::Adaptive, SolverConfig{}, 15);
  REQUIRE(!traj.failure);

  std::ostringstream os;
  emit_csv(traj, os);
  const auto rows = lines(os.str());
  REQUIRE(rows.size() == static_cast<std::size_t>(traj.segments()) + 1);

  for (int k = 0; k < traj.segments(); ++k) {
    const auto f = fields(rows[k + 1]);
    REQUIRE(f.size() == 9);
    CHECK(std::stoi(f[0]) == k);
    CHECK(parse_double(f[1]) == traj.points[k].t);
    CHECK(parse_double(f[2]) == traj.points[k].q[0]);
    CHECK(parse_double(f[3]) == traj.h_series[k]);
    CHECK(parse_double(f[4]) == traj.Ed_series[k]);
    CHECK(parse_double(f[5]) == traj.energy_residual_series[k]);
    CHECK(parse_double(f[6]) == traj.momentum_series[0][k]);
    CHECK(std::stoi(f[7]) == traj.stats_series[k].iterations);
    CHECK(parse_double(f[8]) == traj.stats_series[k].final_residual);
  }
}

TEST_CASE("csv: identical runs serialize identically") {
  const SolverConfig cfg;
  std::string first, second;
  for (std::string* target : {&first, &second}) {
    const ProblemSpec problem = builtin("forced_particle", {{"c_tx", "0.3"}});
    const Trajectory traj = run_trajectory(problem, StepMode::Adaptive, cfg, 10);
    REQUIRE(!traj.failure);
    std::ostringstream os;
    emit_csv(traj, os);
    *target = os.str();
  }
  CHECK(first == second);
}

// ---------------------------------------------------------------------------
// JSON sink
// ---------------------------------------------------------------------------

TEST_CASE("json: document structure and exact value round-trip") {
  const ProblemSpec problem = builtin("central_force_2d");
  const Trajectory traj = run_trajectory(problem, StepMode::Fixed, SolverConfig{}, 4);
  REQUIRE(!traj.failure);

  std::ostringstream os;
  emit_json(traj, os);
  const auto doc = nlohmann::json::parse(os.str());

  CHECK(doc.at("segments").get<int>() == 4);
  const auto labels = doc.at("generator_labels").get<std::vector<std::string>>();
  REQUIRE(labels.size() == 2);
  CHECK(labels[0] == "rotation");
  CHECK(labels[1] == "time_translation");

  const auto& rows = doc.at("rows");
  REQUIRE(rows.size() == 4);
  for (int k = 0; k < 4; ++k) {
    const auto& row = rows[k];
    CHECK(row.at("k").get<int>() == k);
    CHECK(row.at("t").get<double>() == traj.points[k].t);
    REQUIRE(row.at("q").size() == 2);
    CHECK(row.at("q")[0].get<double>() == traj.points[k].q[0]);
    CHECK(row.at("q")[1].get<double>() == traj.points[k].q[1]);
    CHECK(row.at("h").get<double>() == traj.h_series[k]);
    CHECK(row.at("E_d").get<double>() == traj.Ed_series[k]);
    CHECK(row.at("energy_residual").get<double>() == traj.energy_residual_series[k]);
    CHECK(row.at("J_rotation").get<double>() == traj.momentum_series[0][k]);
    CHECK(row.at("J_time_translation").get<double>() == traj.momentum_series[1][k]);
    CHECK(row.at("newton_iters").get<int>() == traj.stats_series[k].iterations);
    CHECK(row.at("final_residual").get<double>() == traj.stats_series[k].final_residual);
  }

  CHECK(doc.at("final_point").at("t").get<double>() == traj.points.back().t);
  REQUIRE(doc.at("final_point").at("q").size() == 2);
  CHECK(doc.at("final_point").at("q")[0].get<double>() == traj.points.back().q[0]);
  CHECK(doc.at("final_point").at("q")[1].get<double>() == traj.points.back().q[1]);
  CHECK(doc.at("boundary_energies").at("t0").get<double>() == traj.energy_t0);
  CHECK(doc.at("boundary_energies").at("tN").get<double>() == traj.energy_tN);
  CHECK(doc.at("failure").is_null());
}

TEST_CASE("json: a failed run records the failure and keeps the partial rows") {
  const ProblemSpec problem = builtin("free_particle");
  const Trajectory traj = run_trajectory(problem, StepMode::Adaptive, SolverConfig{}, 10);
  REQUIRE(traj.failure);

  std::ostringstream os;
  emit_json(traj, os);
  const auto doc = nlohmann::json::parse(os.str());
  CHECK(doc.at("segments").get<int>() == 1);  // only the seeded segment survives
  CHECK(doc.at("rows").size() == 1);
  REQUIRE(!doc.at("failure").is_null());
  CHECK(doc.at("failure").at("step_index").get<int>() == 1);
  CHECK(doc.at("failure").at("kind").get<std::string>() == "SingularJacobian");
  CHECK(!doc.at("failure").at("message").get<std::string>().empty());
}

TEST_CASE("emit: format dispatch and sink failure") {
  const ProblemSpec problem = builtin("free_particle");
  const Trajectory traj = run_trajectory(problem, StepMode::Fixed, SolverConfig{}, 1);

  std::ostringstream via_emit, direct;
  emit(traj, "csv", via_emit);
  emit_csv(traj, direct);
  CHECK(via_emit.str() == direct.str());

  std::ostringstream as_json;
  emit(traj, "json", as_json);
  const auto parsed = nlohmann::json::parse(as_json.str(), nullptr, /*allow_exceptions=*/false);
  CHECK(!parsed.is_discarded());

  std::ostringstream sink;
  CHECK_THROWS_AS(emit(traj, "xml", sink), ValidationError);

  std::ostringstream broken;
  broken.setstate(std::ios::badbit);
  CHECK_THROWS_AS(emit(traj, "csv", broken), std::ios_base::failure);
}

// ---------------------------------------------------------------------------
// Command-line driver
// ---------------------------------------------------------------------------

TEST_CASE("cli: list-problems prints the whole catalogue") {
  std::string out;
  CHECK(run_cli({"list-problems"}, &out) == 0);
  for (const std::string& name : builtin_names()) {
    CHECK(contains(out, name));
  }
  CHECK(contains(out, "generators: rotation time_translation"));
}

TEST_CASE("cli: run integrates the configured problem and writes the sink") {
  const auto dir = scratch_dir();
  const auto csv_path = dir / "ho_run.csv";
  const auto cfg_path = dir / "ho_run.cfg";
  write_text(cfg_path, "problem = harmonic_oscillator\n"
                       "mode = fixed\n"
                       "n_steps = 5\n"
                       "output.path = " + csv_path.string() + "\n"
                       "output.format = csv\n");

  std::string out;
  CHECK(run_cli({"run", "--config", cfg_path.string()}, &out) == 0);
  CHECK(contains(out, "problem: harmonic_oscillator"));
  CHECK(contains(out, "segments: 5 of 5"));
  CHECK(contains(out, "wrote " + csv_path.string()));

  const auto rows = lines(read_text(csv_path));
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] ==
        "k,t,q_1,h,E_d,energy_residual,J_time_translation,newton_iters,final_residual");
}

TEST_CASE("cli: run writes JSON when configured") {
  const auto dir = scratch_dir();
  const auto json_path = dir / "ho_run.json";
  const auto cfg_path = dir / "ho_run_json.cfg";
  write_text(cfg_path, "problem = harmonic_oscillator\n"
                       "n_steps = 3\n"
                       "output.path = " + json_path.string() + "\n"
                       "output.format = json\n");

  CHECK(run_cli({"run", "--config", cfg_path.string()}) == 0);
  const auto doc = nlohmann::json::parse(read_text(json_path));
  CHECK(doc.at("segments").get<int>() == 3);
  CHECK(doc.at("failure").is_null());
}

TEST_CASE("cli: diagnose reports invariance and symplecticity checks") {
  const auto dir = scratch_dir();
  const auto cfg_path = dir / "ho_diag.cfg";
  write_text(cfg_path, "problem = harmonic_oscillator\n"
                       "mode = adaptive\n"
                       "n_steps = 12\n"
                       "diagnostics.symplecticity_every = 5\n");

  std::string out;
  CHECK(run_cli({"diagnose", "--config", cfg_path.string()}, &out) == 0);
  CHECK(contains(out, "invariance defect [time_translation]"));
  CHECK(contains(out, "symplecticity: 3 segment(s) sampled (every 5)"));

  const auto off_path = dir / "ho_diag_off.cfg";
  write_text(off_path, "problem = harmonic_oscillator\n"
                       "n_steps = 4\n"
                       "diagnostics.symplecticity_every = 0\n");
  CHECK(run_cli({"diagnose", "--config", off_path.string()}, &out) == 0);
  CHECK(contains(out, "symplecticity: disabled"));
}

TEST_CASE("cli: configuration problems exit 2 before any integration") {
  const auto dir = scratch_dir();
  std::string err;

  CHECK(run_cli({"run", "--config", (dir / "does_not_exist.cfg").string()}, nullptr, &err) == 2);
  CHECK(contains(err, "cannot read config file"));

  const auto kmo_path = dir / "kmo_td.cfg";
  write_text(kmo_path, "problem = forced_particle\nmode = kmo\n");
  CHECK(run_cli({"run", "--config", kmo_path.string()}, nullptr, &err) == 2);
  CHECK(contains(err, "[ValidationError]"));

  const auto unknown_path = dir / "unknown_problem.cfg";
  write_text(unknown_path, "problem = rigid_body\n");
  CHECK(run_cli({"run", "--config", unknown_path.string()}, nullptr, &err) == 2);
  CHECK(contains(err, "[UnknownProblem]"));

  const auto broken_path = dir / "broken.cfg";
  write_text(broken_path, "problem = free_particle\nnot a key value pair\n");
  CHECK(run_cli({"run", "--config", broken_path.string()}, nullptr, &err) == 2);
  CHECK(contains(err, "[ParseError]"));
  CHECK(contains(err, "line 2"));
}

TEST_CASE("cli: a singular adaptive system exits 3 and keeps the partial sink") {
  const auto dir = scratch_dir();
  const auto csv_path = dir / "free_partial.csv";
  const auto cfg_path = dir / "free_adaptive.cfg";
  write_text(cfg_path, "problem = free_particle\n"
                       "mode = adaptive\n"
                       "n_steps = 8\n"
                       "output.path = " + csv_path.string() + "\n");

  std::string out;
  CHECK(run_cli({"run", "--config", cfg_path.string()}, &out) == 3);
  CHECK(contains(out, "FAILED at segment 1"));
  CHECK(contains(out, "[SingularJacobian]"));

  const auto rows = lines(read_text(csv_path));
  REQUIRE(rows.size() == 2);  // header + the seeded segment
  CHECK(rows[0].starts_with("k,t"));
}

TEST_CASE("cli: usage errors exit 2 and --help exits 0") {
  std::string out, err;
  CHECK(run_cli({"run"}, &out, &err) == 2);               // missing --config
  CHECK(run_cli({"frobnicate"}, &out, &err) == 2);        // unknown subcommand
  CHECK(run_cli({}, &out, &err) == 2);                    // missing subcommand
  CHECK(run_cli({"--help"}, &out, &err) == 0);
  CHECK(contains(out, "converge"));
}

TEST_CASE("cli: converge measures the fixed-step order") {
  std::string out;
  CHECK(run_cli({"converge", "--problem", "harmonic_oscillator", "--h", "0.1,0.05", "--t-end",
                 "1"},
                &out) == 0);
  const auto pos = out.find("observed order: ");
  REQUIRE(pos != std::string::npos);
  const double order = parse_double(out.substr(pos + 16, out.find('\n', pos) - pos - 16));
  CHECK(order > 1.8);
  CHECK(order < 2.2);

  // The free particle is reproduced to reference accuracy; no order is fit.
  CHECK(run_cli({"converge", "--problem", "free_particle", "--h", "0.1,0.05"}, &out) == 0);
  CHECK(contains(out, "order not measurable"));
}

TEST_CASE("cli: converge argument validation exits 2") {
  std::string err;
  CHECK(run_cli({"converge", "--problem", "harmonic_oscillator", "--h", "0.1"}, nullptr, &err) ==
        2);
  CHECK(contains(err, "at least two step sizes"));

  // Steps must divide the requested span.
  CHECK(run_cli({"converge", "--problem", "harmonic_oscillator", "--h", "0.3,0.15"}, nullptr,
                &err) == 2);

  CHECK(run_cli({"converge", "--problem", "harmonic_oscillator", "--param", "massive", "--h",
                 "0.1,0.05"},
                nullptr, &err) == 2);
  CHECK(contains(err, "KEY=VALUE"));
}
