#include "tdvi/problems.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "tdvi/errors.hpp"

namespace tdvi {

namespace {

// ---------------------------------------------------------------------------
// Override parsing
// ---------------------------------------------------------------------------

double parse_scalar(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) {
      ++used;
    }
    if (used != text.size() || !std::isfinite(value)) {
      throw std::invalid_argument(text);
    }
    return value;
  } catch (const std::exception&) {
    throw ValidationError("problem parameter '" + key + "' is not a finite number: '" + text +
                          "'");
  }
}

Vector parse_vector(const std::string& key, const std::string& text, int dim) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    values.push_back(parse_scalar(key, item));
  }
  if (static_cast<int>(values.size()) != dim) {
    std::ostringstream os;
    os << "problem parameter '" << key << "' needs " << dim << " comma-separated values";
    throw ValidationError(os.str());
  }
  Vector v(dim);
  for (int i = 0; i < dim; ++i) {
    v[i] = values[i];
  }
  return v;
}

/// Typed view over the override map; rejects keys nobody consumed.
class Params {
 public:
  Params(const std::map<std::string, std::string>& raw) : raw_(raw) {}

  double scalar(const std::string& key, double fallback) {
    used_.insert(key);
    const auto it = raw_.find(key);
    return it == raw_.end() ? fallback : parse_scalar(key, it->second);
  }

  Vector vector(const std::string& key, Vector fallback) {
    used_.insert(key);
    const auto it = raw_.find(key);
    return it == raw_.end() ? std::move(fallback)
                            : parse_vector(key, it->second, static_cast<int>(fallback.size()));
  }

  void finish() const {
    for (const auto& [key, value] : raw_) {
      if (!used_.contains(key)) {
        throw ValidationError("unknown problem parameter '" + key + "'");
      }
    }
  }

 private:
  const std::map<std::string, std::string>& raw_;
  std::set<std::string> used_;
};

// Common initial data handled once per builtin.
void apply_initial(Params& p, ProblemSpec& spec) {
  spec.t0 = p.scalar("t0", spec.t0);
  spec.h0 = p.scalar("h0", spec.h0);
  spec.q0 = p.vector("q0", spec.q0);
  spec.v0 = p.vector("v0", spec.v0);
  if (!(spec.h0 > 0)) {
    throw ValidationError("problem parameter 'h0' must be positive");
  }
}

SymmetryGenerator time_translation() {
  SymmetryGenerator gen;
  gen.label = "time_translation";
  gen.xi_time = [](double, const Vector&) { return 1.0; };
  gen.xi_config = [](double, const Vector& q) { return Vector(Vector::Zero(q.size())); };
  return gen;
}

// ---------------------------------------------------------------------------
// Builtins
// ---------------------------------------------------------------------------

ProblemSpec make_free_particle(Params& p) {
  const double m = p.scalar("m", 1.0);
  if (!(m > 0)) {
    throw ValidationError("problem parameter 'm' must be positive");
  }
  ProblemSpec spec;
  spec.model.dim = 1;
  spec.model.label = "free_particle";
  spec.model.autonomous = true;
  spec.model.lag = [m](double, const Vector&, const Vector& v) { return 0.5 * m * v.squaredNorm(); };
  spec.model.d_t = [](double, const Vector&, const Vector&) { return 0.0; };
  spec.model.d_q = [](double, const Vector& q, const Vector&) {
    return Vector(Vector::Zero(q.size()));
  };
  spec.model.d_v = [m](double, const Vector&, const Vector& v) { return Vector(m * v); };
  spec.q0 = Vector::Zero(1);
  spec.v0 = Vector::Ones(1);
  apply_initial(p, spec);
  spec.generators.push_back(time_translation());
  const double t0 = spec.t0;
  const Vector q0 = spec.q0;
  const Vector v0 = spec.v0;
  spec.exact_solution = [t0, q0, v0](double t) {
    return StatePoint{t, q0 + (t - t0) * v0, v0};
  };
  spec.notes = "uniform motion; the adaptive and kmo systems are singular by design";
  return spec;
}

ProblemSpec make_harmonic_oscillator(Params& p) {
  const double m = p.scalar("m", 1.0);
  const double k = p.scalar("k", 1.0);
  if (!(m > 0) || !(k > 0)) {
    throw ValidationError("problem parameters 'm' and 'k' must be positive");
  }
  ProblemSpec spec;
  spec.model.dim = 1;
  spec.model.label = "harmonic_oscillator";
  spec.model.autonomous = true;
  spec.model.lag = [m, k](double, const Vector& q, const Vector& v) {
    return 0.5 * m * v.squaredNorm() - 0.5 * k * q.squaredNorm();
  };
  spec.model.d_t = [](double, const Vector&, const Vector&) { return 0.0; };
  spec.model.d_q = [k](double, const Vector& q, const Vector&) { return Vector(-k * q); };
  spec.model.d_v = [m](double, const Vector&, const Vector& v) { return Vector(m * v); };
  spec.q0 = Vector::Ones(1);
  spec.v0 = Vector::Zero(1);
  apply_initial(p, spec);
  spec.generators.push_back(time_translation());
  const double t0 = spec.t0;
  const double q0 = spec.q0[0];
  const double v0 = spec.v0[0];
  const double omega = std::sqrt(k / m);
  spec.exact_solution = [t0, q0, v0, omega](double t) {
    const double s = t - t0;
    Vector q(1), v(1);
    q[0] = q0 * std::cos(omega * s) + (v0 / omega) * std::sin(omega * s);
    v[0] = -q0 * omega * std::sin(omega * s) + v0 * std::cos(omega * s);
    return StatePoint{t, q, v};
  };
  spec.notes = "closed-form solution; energy-conserving steps stay on the level set";
  return spec;
}

// Shared family L = (m/2) v^2 - V(t, x) with
// V(t, x) = c_tx * t * x + (k/2) (1 + eps sin(omega t)) x^2.
ProblemSpec make_particle_in_potential(Params& p, const std::string& label, double def_c_tx,
                                       double def_eps) {
  const double m = p.scalar("m", 1.0);
  const double c_tx = p.scalar("c_tx", def_c_tx);
  const double k = p.scalar("k", 1.0);
  const double eps = p.scalar("eps", def_eps);
  const double om = p.scalar("omega", 1.0);
  if (!(m > 0)) {
    throw ValidationError("problem parameter 'm' must be positive");
  }
  ProblemSpec spec;
  spec.model.dim = 1;
  spec.model.label = label;
  spec.model.autonomous = false;
  spec.model.lag = [m, c_tx, k, eps, om](double t, const Vector& q, const Vector& v) {
    const double x = q[0];
    const double V = c_tx * t * x + 0.5 * k * (1.0 + eps * std::sin(om * t)) * x * x;
    return 0.5 * m * v.squaredNorm() - V;
  };
  spec.model.d_t = [c_tx, k, eps, om](double t, const Vector& q, const Vector&) {
    const double x = q[0];
    return -(c_tx * x + 0.5 * k * eps * om * std::cos(om * t) * x * x);
  };
  spec.model.d_q = [c_tx, k, eps, om](double t, const Vector& q, const Vector&) {
    Vector g(1);
    g[0] = -(c_tx * t + k * (1.0 + eps * std::sin(om * t)) * q[0]);
    return g;
  };
  spec.model.d_v = [m](double, const Vector&, const Vector& v) { return Vector(m * v); };
  spec.q0 = Vector::Ones(1);
  spec.v0 = Vector::Zero(1);
  apply_initial(p, spec);
  spec.notes = "driven 1D particle; no continuous symmetry is declared";
  return spec;
}

ProblemSpec make_central_force(Params& p) {
  const double m = p.scalar("m", 1.0);
  const double mu = p.scalar("mu", 1.0);
  if (!(m > 0) || !(mu > 0)) {
    throw ValidationError("problem parameters 'm' and 'mu' must be positive");
  }
  ProblemSpec spec;
  spec.model.dim = 2;
  spec.model.label = "central_force_2d";
  spec.model.autonomous = true;
  spec.model.lag = [m, mu](double, const Vector& q, const Vector& v) {
    return 0.5 * m * v.squaredNorm() + mu / q.norm();
  };
  spec.model.d_t = [](double, const Vector&, const Vector&) { return 0.0; };
  spec.model.d_q = [mu](double, const Vector& q, const Vector&) {
    const double r = q.norm();
    return Vector(-mu * q / (r * r * r));
  };
  spec.model.d_v = [m](double, const Vector&, const Vector& v) { return Vector(m * v); };
  spec.q0 = Vector(2);
  spec.q0 << 1.0, 0.0;
  spec.v0 = Vector(2);
  spec.v0 << 0.0, 1.0;
  spec.h0 = 0.05;
  apply_initial(p, spec);
  SymmetryGenerator rot;
  rot.label = "rotation";
  rot.xi_config = [](double, const Vector& q) {
    Vector xi(2);
    xi << -q[1], q[0];
    return xi;
  };
  spec.generators.push_back(rot);
  spec.generators.push_back(time_translation());
  spec.notes = "attractive inverse-square force; defaults start a circular orbit";
  return spec;
}

ProblemSpec make_two_body(Params& p) {
  const double m1 = p.scalar("m1", 1.0);
  const double m2 = p.scalar("m2", 2.0);
  const double k = p.scalar("k", 1.0);
  const double rest = p.scalar("rest_length", 1.0);
  if (!(m1 > 0) || !(m2 > 0) || !(k > 0)) {
    throw ValidationError("problem parameters 'm1', 'm2', 'k' must be positive");
  }
  ProblemSpec spec;
  spec.model.dim = 2;
  spec.model.label = "two_body_1d";
  spec.model.autonomous = true;
  spec.model.lag = [m1, m2, k, rest](double, const Vector& q, const Vector& v) {
    const double stretch = q[1] - q[0] - rest;
    return 0.5 * (m1 * v[0] * v[0] + m2 * v[1] * v[1]) - 0.5 * k * stretch * stretch;
  };
  spec.model.d_t = [](double, const Vector&, const Vector&) { return 0.0; };
  spec.model.d_q = [k, rest](double, const Vector& q, const Vector&) {
    const double stretch = q[1] - q[0] - rest;
    Vector g(2);
    g << k * stretch, -k * stretch;
    return g;
  };
  spec.model.d_v = [m1, m2](double, const Vector&, const Vector& v) {
    Vector g(2);
    g << m1 * v[0], m2 * v[1];
    return g;
  };
  spec.q0 = Vector(2);
  spec.q0 << 0.0, 1.0;
  spec.v0 = Vector(2);
  spec.v0 << 0.3, -0.2;
  spec.h0 = 0.05;
  apply_initial(p, spec);
  SymmetryGenerator trans;
  trans.label = "translation";
  trans.xi_config = [](double, const Vector&) { return Vector(Vector::Ones(2)); };
  spec.generators.push_back(trans);
  spec.generators.push_back(time_translation());
  spec.notes = "two masses joined by a spring on a line; total momentum is conserved";
  return spec;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"free_particle", "harmonic_oscillator", "td_oscillator",
          "forced_particle", "central_force_2d", "two_body_1d"};
}

ProblemSpec builtin(const std::string& name, const std::map<std::string, std::string>& overrides) {
  Params p(overrides);
  ProblemSpec spec;
  if (name == "free_particle") {
    spec = make_free_particle(p);
  } else if (name == "harmonic_oscillator") {
    spec = make_harmonic_oscillator(p);
  } else if (name == "td_oscillator") {
    spec = make_particle_in_potential(p, name, 0.0, 0.1);
  } else if (name == "forced_particle") {
    spec = make_particle_in_potential(p, name, 0.0, 0.1);
  } else if (name == "central_force_2d") {
    spec = make_central_force(p);
  } else if (name == "two_body_1d") {
    spec = make_two_body(p);
  } else {
    throw UnknownProblem("no builtin problem named '" + name + "'");
  }
  p.finish();
  return spec;
}

Eigen::Vector2d forced_particle_reference_residual(const Potential1D& V, double mass,
                                                   const Window& w) {
  w.validate();
  if (w.q_prev.size() != 1 || w.q_cur.size() != 1 || w.q_next.size() != 1) {
    throw EvaluationError("reference residual is defined for 1D windows only");
  }
  const double hk = w.h_next();
  const double hk1 = w.h_prev();
  const double vk = (w.q_next[0] - w.q_cur[0]) / hk;
  const double vk1 = (w.q_cur[0] - w.q_prev[0]) / hk1;
  const double tmk = 0.5 * (w.t_next + w.t_cur);
  const double tmk1 = 0.5 * (w.t_cur + w.t_prev);
  const double xmk = 0.5 * (w.q_next[0] + w.q_cur[0]);
  const double xmk1 = 0.5 * (w.q_cur[0] + w.q_prev[0]);

  auto energy = [&](double t, double x, double v) {
    return 0.5 * mass * v * v + V.value(t, x);
  };

  Eigen::Vector2d r;
  r[0] = mass * (vk - vk1) + 0.5 * (hk * V.d_x(tmk, xmk) + hk1 * V.d_x(tmk1, xmk1));
  r[1] = energy(tmk, xmk, vk) - energy(tmk1, xmk1, vk1) -
         0.5 * (hk * V.d_t(tmk, xmk) + hk1 * V.d_t(tmk1, xmk1));
  return r;
}

}  // namespace tdvi
