#include "tdvi/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tdvi/errors.hpp"

namespace tdvi {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double require_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(value)) {
      throw std::invalid_argument(text);
    }
    return value;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' is not a finite number: '" + text + "'");
  }
}

int require_int(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const long value = std::stol(text, &used);
    if (used != text.size() || value < std::numeric_limits<int>::min() ||
        value > std::numeric_limits<int>::max()) {
      throw std::invalid_argument(text);
    }
    return static_cast<int>(value);
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "' is not an integer: '" + text + "'");
  }
}

bool require_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") {
    return true;
  }
  if (text == "false" || text == "0") {
    return false;
  }
  throw ValidationError("config key '" + key + "' must be true or false: '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) {
      items.push_back(item);
    }
  }
  return items;
}

void assign(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "problem") {
    cfg.problem_name = value;
  } else if (key.starts_with("problem.")) {
    cfg.problem_params[key.substr(8)] = value;
  } else if (key == "mode") {
    if (value == "adaptive") {
      cfg.mode = StepMode::Adaptive;
    } else if (value == "fixed") {
      cfg.mode = StepMode::Fixed;
    } else if (value == "kmo") {
      cfg.mode = StepMode::Kmo;
    } else {
      throw ValidationError("config key 'mode' must be adaptive, fixed, or kmo: '" + value + "'");
    }
  } else if (key == "n_steps") {
    cfg.n_steps = require_int(key, value);
  } else if (key == "solver.newton_tol") {
    cfg.solver.newton_tol = require_double(key, value);
  } else if (key == "solver.max_newton_iters") {
    cfg.solver.max_newton_iters = require_int(key, value);
  } else if (key == "solver.fd_eps") {
    cfg.solver.fd_eps = require_double(key, value);
  } else if (key == "solver.min_h") {
    cfg.solver.min_h = require_double(key, value);
  } else if (key == "solver.max_h") {
    cfg.solver.max_h = require_double(key, value);
  } else if (key == "solver.damping") {
    cfg.solver.damping = require_bool(key, value);
  } else if (key == "diagnostics.symplecticity_every") {
    cfg.symplecticity_every = require_int(key, value);
  } else if (key == "diagnostics.generators") {
    cfg.generators = split_list(value);
  } else if (key == "output.path") {
    cfg.output_path = value;
  } else if (key == "output.format") {
    if (value != "csv" && value != "json") {
      throw ValidationError("config key 'output.format' must be csv or json: '" + value + "'");
    }
    cfg.output_format = value;
  } else {
    throw ValidationError("unknown config key '" + key + "'");
  }
}

void check_ranges(const RunConfig& cfg) {
  if (cfg.problem_name.empty()) {
    throw ValidationError("missing required config key 'problem'");
  }
  if (cfg.n_steps < 1) {
    throw ValidationError("config key 'n_steps' must be at least 1");
  }
  if (!(cfg.solver.newton_tol > 0)) {
    throw ValidationError("config key 'solver.newton_tol' must be positive");
  }
  if (cfg.solver.max_newton_iters < 1) {
    throw ValidationError("config key 'solver.max_newton_iters' must be at least 1");
  }
  if (!(cfg.solver.fd_eps > 0)) {
    throw ValidationError("config key 'solver.fd_eps' must be positive");
  }
  if (!(cfg.solver.min_h > 0)) {
    throw ValidationError("config key 'solver.min_h' must be positive");
  }
  if (!(cfg.solver.max_h > cfg.solver.min_h)) {
    throw ValidationError("config key 'solver.max_h' must exceed solver.min_h");
  }
  if (cfg.symplecticity_every < 0) {
    throw ValidationError("config key 'diagnostics.symplecticity_every' must be non-negative");
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << "line " << line_number << ": expected key=value, got '" << line << "'";
      throw ParseError(os.str());
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      std::ostringstream os;
      os << "line " << line_number << ": empty key";
      throw ParseError(os.str());
    }
    assign(cfg, key, value);
  }
  check_ranges(cfg);

  // Resolve every referenced name now so a returned config cannot fail later.
  const ProblemSpec probe = builtin(cfg.problem_name, cfg.problem_params);
  if (cfg.mode == StepMode::Kmo && !probe.model.autonomous) {
    throw ValidationError("config key 'mode': kmo requires an autonomous problem, but '" +
                          cfg.problem_name + "' is time-dependent");
  }
  for (const auto& label : cfg.generators) {
    const bool known = std::any_of(probe.generators.begin(), probe.generators.end(),
                                   [&](const SymmetryGenerator& g) { return g.label == label; });
    if (!known) {
      throw ValidationError("config key 'diagnostics.generators': problem '" + cfg.problem_name +
                            "' declares no generator labeled '" + label + "'");
    }
  }
  return cfg;
}

ProblemSpec resolve_problem(const RunConfig& cfg) {
  ProblemSpec spec = builtin(cfg.problem_name, cfg.problem_params);
  if (!cfg.generators.empty()) {
    std::vector<SymmetryGenerator> kept;
    for (const auto& label : cfg.generators) {
      const auto it = std::find_if(spec.generators.begin(), spec.generators.end(),
                                   [&](const SymmetryGenerator& g) { return g.label == label; });
      if (it == spec.generators.end()) {
        throw ValidationError("config key 'diagnostics.generators': problem '" + cfg.problem_name +
                              "' declares no generator labeled '" + label + "'");
      }
      kept.push_back(*it);
    }
    spec.generators = std::move(kept);
  }
  return spec;
}

}  // namespace tdvi
