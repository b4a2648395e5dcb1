#include "tdvi/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "tdvi/config.hpp"
#include "tdvi/errors.hpp"
#include "tdvi/geometry.hpp"
#include "tdvi/io.hpp"
#include "tdvi/stepper.hpp"

namespace tdvi {

namespace {

std::string sci(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", value);
  return buf;
}

std::string num(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot read config file '" + path + "'");
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

double max_deviation(const std::vector<double>& series) {
  double dev = 0.0;
  for (const double v : series) {
    dev = std::max(dev, std::abs(v - series.front()));
  }
  return dev;
}

double max_abs(const std::vector<double>& series) {
  double m = 0.0;
  for (const double v : series) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

SegmentState segment_at(const Trajectory& traj, int k) {
  return {traj.points[k].t, traj.points[k].q, traj.points[k + 1].t, traj.points[k + 1].q};
}

void print_summary(const RunConfig& rc, const ProblemSpec& problem, const Trajectory& traj) {
  std::cout << "problem: " << rc.problem_name << " (dim " << problem.model.dim << "), mode "
            << to_string(rc.mode) << "\n";
  std::cout << "segments: " << traj.segments() << " of " << rc.n_steps << ", time span ["
            << num(traj.points.front().t) << ", " << num(traj.points.back().t) << "]\n";
  std::cout << "E_d: first " << num(traj.Ed_series.front()) << ", last "
            << num(traj.Ed_series.back()) << ", max |drift| " << sci(max_deviation(traj.Ed_series))
            << "\n";
  std::cout << "energy residual: max " << sci(max_abs(traj.energy_residual_series)) << "\n";
  std::cout << "boundary energies: E(t0) = " << num(traj.energy_t0)
            << ", E(tN) = " << num(traj.energy_tN) << "\n";
  for (std::size_t g = 0; g < traj.generator_labels.size(); ++g) {
    std::cout << "J_" << traj.generator_labels[g] << ": first "
              << num(traj.momentum_series[g].front()) << ", max |deviation| "
              << sci(max_deviation(traj.momentum_series[g])) << "\n";
  }
  int max_iters = 0;
  double worst_residual = 0.0;
  for (const StepStats& s : traj.stats_series) {
    max_iters = std::max(max_iters, s.iterations);
    worst_residual = std::max(worst_residual, s.final_residual);
  }
  std::cout << "newton: max iterations " << max_iters << ", worst final residual "
            << sci(worst_residual) << "\n";
  if (traj.failure) {
    std::cout << "FAILED at segment " << traj.failure->step_index << " ["
              << traj.failure->kind << "]: " << traj.failure->message << "\n";
  }
}

void print_diagnostics(const RunConfig& rc, const ProblemSpec& problem, const Trajectory& traj) {
  const DiscreteLagrangian ld = midpoint_discretize(problem.model);
  std::cout << "diagnostics:\n";

  for (const SymmetryGenerator& gen : problem.generators) {
    double worst = 0.0;
    for (int k = 0; k < traj.segments(); ++k) {
      worst = std::max(worst, std::abs(invariance_defect(ld, segment_at(traj, k), gen)));
    }
    std::cout << "  invariance defect [" << gen.label << "]: max " << sci(worst) << "\n";
  }

  if (rc.symplecticity_every <= 0) {
    std::cout << "  symplecticity: disabled (diagnostics.symplecticity_every = 0)\n";
    return;
  }
  const FlowMap flow = make_adaptive_flow(ld, rc.solver);
  int sampled = 0;
  int skipped = 0;
  std::string skip_kind;
  double worst = 0.0;
  for (int k = 0; k < traj.segments(); k += rc.symplecticity_every) {
    ++sampled;
    try {
      worst = std::max(worst, symplecticity_defect(ld, flow, segment_at(traj, k)));
    } catch (const Error& e) {
      ++skipped;
      skip_kind = e.kind();
    }
  }
  std::cout << "  symplecticity: " << sampled << " segment(s) sampled (every "
            << rc.symplecticity_every << ")";
  if (skipped > 0) {
    std::cout << ", " << skipped << " skipped [" << skip_kind << "]";
  }
  if (sampled > skipped) {
    std::cout << ", max defect " << sci(worst);
  }
  std::cout << "\n";
}

int do_run(const std::string& config_path, bool diagnose) {
  const RunConfig rc = parse_config(read_file(config_path));
  const ProblemSpec problem = resolve_problem(rc);
  const Trajectory traj = run_trajectory(problem, rc.mode, rc.solver, rc.n_steps);

  if (!rc.output_path.empty()) {
    std::ofstream out(rc.output_path, std::ios::binary);
    if (!out) {
      throw ValidationError("config key 'output.path': cannot open '" + rc.output_path +
                            "' for writing");
    }
    emit(traj, rc.output_format, out);
  }

  print_summary(rc, problem, traj);
  if (diagnose) {
    print_diagnostics(rc, problem, traj);
  }
  if (!rc.output_path.empty()) {
    std::cout << "wrote " << rc.output_path << " (" << rc.output_format << ", "
              << traj.segments() << " rows)\n";
  }
  return traj.failure ? 3 : 0;
}

int do_converge(const std::string& problem_name, const std::vector<std::string>& param_args,
                const std::string& h_arg, double t_end) {
  std::map<std::string, std::string> params;
  for (const std::string& arg : param_args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError("--param expects KEY=VALUE, got '" + arg + "'");
    }
    params[arg.substr(0, eq)] = arg.substr(eq + 1);
  }
  const ProblemSpec problem = builtin(problem_name, params);

  std::vector<double> h_list;
  std::stringstream ss(h_arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double h = std::stod(item, &used);
      if (used != item.size() || !(h > 0)) {
        throw std::invalid_argument(item);
      }
      h_list.push_back(h);
    } catch (const std::exception&) {
      throw ValidationError("--h expects comma-separated positive numbers, got '" + item + "'");
    }
  }
  if (h_list.size() < 2) {
    throw ValidationError("--h needs at least two step sizes to measure an order");
  }

  const ConvergenceStudy study =
      convergence_order(problem, StepMode::Fixed, h_list, t_end, SolverConfig{});

  std::cout << "problem: " << problem_name << ", fixed mode, t in ["
            << num(problem.t0) << ", " << num(t_end) << "]\n";
  std::cout << "        h     end-state error\n";
  char buf[64];
  for (std::size_t i = 0; i < study.h.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%9.6g     %.6e", study.h[i], study.error[i]);
    std::cout << buf << "\n";
  }
  if (study.exact) {
    std::cout << "errors at reference accuracy; order not measurable\n";
  } else {
    std::snprintf(buf, sizeof(buf), "observed order: %.3f", study.observed_order);
    std::cout << buf << "\n";
  }
  return 0;
}

int do_list() {
  for (const std::string& name : builtin_names()) {
    const ProblemSpec spec = builtin(name);
    std::cout << name << " (dim " << spec.model.dim << ", "
              << (spec.model.autonomous ? "autonomous" : "time-dependent") << ")\n";
    std::cout << "  " << spec.notes << "\n";
    if (!spec.generators.empty()) {
      std::cout << "  generators:";
      for (const SymmetryGenerator& g : spec.generators) {
        std::cout << ' ' << g.label;
      }
      std::cout << "\n";
    }
  }
  return 0;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    std::cerr << "config error [ParseError]: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "config error [ValidationError]: " << e.what() << "\n";
    return 2;
  } catch (const UnknownProblem& e) {
    std::cerr << "config error [UnknownProblem]: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "runtime error [" << e.kind() << "]: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"adaptive variational integrator for time-dependent Lagrangian systems"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "integrate a configured problem and write its trajectory");
  run->add_option("--config", run_config, "path to a key=value config file")->required();

  std::string diag_config;
  auto* diag = app.add_subcommand(
      "diagnose", "run, then report invariance, momentum, and symplecticity checks");
  diag->add_option("--config", diag_config, "path to a key=value config file")->required();

  std::string conv_problem;
  std::vector<std::string> conv_params;
  std::string conv_h = "0.1,0.05,0.025,0.0125";
  double conv_t_end = 1.0;
  auto* conv = app.add_subcommand(
      "converge", "measure the fixed-step convergence order against a high-accuracy reference");
  conv->set_help_flag("--help", "print this help message and exit");  // frees -h for --h
  conv->add_option("--problem", conv_problem, "builtin problem name")->required();
  conv->add_option("--param", conv_params, "problem parameter override KEY=VALUE (repeatable)");
  conv->add_option("--h", conv_h, "comma-separated step sizes (each must divide the span)");
  conv->add_option("--t-end", conv_t_end, "end of the integration span (default 1.0)");

  auto* list = app.add_subcommand("list-problems", "print the builtin problem catalogue");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) {
    return guarded([&] { return do_run(run_config, false); });
  }
  if (diag->parsed()) {
    return guarded([&] { return do_run(diag_config, true); });
  }
  if (conv->parsed()) {
    return guarded([&] { return do_converge(conv_problem, conv_params, conv_h, conv_t_end); });
  }
  if (list->parsed()) {
    return guarded([&] { return do_list(); });
  }
  return 2;  // unreachable: require_subcommand(1)
}

}  // namespace tdvi
