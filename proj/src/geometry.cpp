#include "tdvi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tdvi/errors.hpp"

namespace tdvi {

namespace {

// FD step for geometric probes, per the fixed convention scale * max(1, |x|).
double geo_step(double x, double scale = 1e-6) {
  const double s = scale * std::max(1.0, std::abs(x));
  volatile double xp = x + s;
  return (xp - x);
}

}  // namespace

Vector pack_segment(const SegmentState& s) {
  const int n = static_cast<int>(s.q0.size());
  Vector x(2 * n + 2);
  x[0] = s.t0;
  x.segment(1, n) = s.q0;
  x[n + 1] = s.t1;
  x.segment(n + 2, n) = s.q1;
  return x;
}

SegmentState unpack_segment(const Vector& x, int dim) {
  if (x.size() != 2 * dim + 2) {
    throw EvaluationError("packed segment has wrong length");
  }
  SegmentState s;
  s.t0 = x[0];
  s.q0 = x.segment(1, dim);
  s.t1 = x[dim + 1];
  s.q1 = x.segment(dim + 2, dim);
  return s;
}

Covector theta_minus(const DiscreteLagrangian& ld, const SegmentState& s) {
  const int n = ld.dim;
  const GradBlocks g = grad_blocks(ld, s);
  const double h = s.h();
  Covector th = Covector::Zero(2 * n + 2);
  th[0] = h * g.d_t0 - eval_discrete(ld, s);
  th.segment(1, n) = h * g.d_q0;
  return th;
}

Covector theta_plus(const DiscreteLagrangian& ld, const SegmentState& s) {
  const int n = ld.dim;
  const GradBlocks g = grad_blocks(ld, s);
  const double h = s.h();
  Covector th = Covector::Zero(2 * n + 2);
  th[n + 1] = h * g.d_t1 + eval_discrete(ld, s);
  th.segment(n + 2, n) = h * g.d_q1;
  return th;
}

Matrix omega_matrix(const DiscreteLagrangian& ld, const SegmentState& s) {
  const int n = ld.dim;
  const int m = 2 * n + 2;
  const Vector x0 = pack_segment(s);

  // d_i theta_j by central differences of the one-form components.
  Matrix dtheta(m, m);
  Vector x = x0;
  for (int i = 0; i < m; ++i) {
    const double st = geo_step(x0[i]);
    x[i] = x0[i] + st;
    const Covector up = theta_minus(ld, unpack_segment(x, n));
    x[i] = x0[i] - st;
    const Covector dn = theta_minus(ld, unpack_segment(x, n));
    x[i] = x0[i];
    dtheta.row(i) = ((up - dn) / (2 * st)).transpose();
  }
  return dtheta - dtheta.transpose();
}

FlowMap make_adaptive_flow(const DiscreteLagrangian& ld, SolverConfig cfg) {
  cfg.newton_tol = std::min(cfg.newton_tol, 1e-13);
  return [ld, cfg](const SegmentState& prev) { return step_adaptive(ld, prev, cfg).next; };
}

Matrix flow_jacobian(const FlowMap& flow, const SegmentState& s, double probe_scale) {
  const int n = static_cast<int>(s.q0.size());
  const int m = 2 * n + 2;
  const Vector x0 = pack_segment(s);

  Matrix jac(m, m);
  Vector x = x0;
  for (int j = 0; j < m; ++j) {
    const double st = geo_step(x0[j], probe_scale);
    x[j] = x0[j] + st;
    const Vector up = pack_segment(flow(unpack_segment(x, n)));
    x[j] = x0[j] - st;
    const Vector dn = pack_segment(flow(unpack_segment(x, n)));
    x[j] = x0[j];
    jac.col(j) = (up - dn) / (2 * st);
  }
  return jac;
}

double symplecticity_defect(const DiscreteLagrangian& ld, const FlowMap& flow,
                            const SegmentState& s) {
  const Matrix jac = flow_jacobian(flow, s);
  const Matrix omega_here = omega_matrix(ld, s);
  const Matrix omega_next = omega_matrix(ld, flow(s));
  const Matrix defect = jac.transpose() * omega_next * jac - omega_here;
  return defect.cwiseAbs().maxCoeff();
}

std::pair<double, double> boundary_energies(const DiscreteLagrangian& ld, const Trajectory& traj) {
  if (traj.segments() < 1) {
    throw EvaluationError("boundary energies need at least one segment");
  }
  const auto& p = traj.points;
  const SegmentState first{p[0].t, p[0].q, p[1].t, p[1].q};
  const SegmentState last{p[p.size() - 2].t, p[p.size() - 2].q, p.back().t, p.back().q};
  const GradBlocks g = grad_blocks(ld, first);
  const double e_first = discrete_energy(ld, first.t0, first.q0, first.h(), first.q1);
  const double e_last = discrete_energy(ld, last.t0, last.q0, last.h(), last.q1);
  return {first.h() * (g.d_t0 + g.d_t1) + e_first, e_last};
}

double momentum_map(const DiscreteLagrangian& ld, const SegmentState& s,
                    const SymmetryGenerator& gen) {
  const GradBlocks g = grad_blocks(ld, s);
  const double h = s.h();
  double value = 0.0;
  if (gen.xi_time) {
    value += (eval_discrete(ld, s) + h * g.d_t1) * gen.xi_time(s.t1, s.q1);
  }
  if (gen.xi_config) {
    value += h * g.d_q1.dot(gen.xi_config(s.t1, s.q1));
  }
  return value;
}

double invariance_defect(const DiscreteLagrangian& ld, const SegmentState& s,
                         const SymmetryGenerator& gen) {
  auto moved = [&](double eps) {
    SegmentState m = s;
    if (gen.xi_time) {
      m.t0 += eps * gen.xi_time(s.t0, s.q0);
      m.t1 += eps * gen.xi_time(s.t1, s.q1);
    }
    if (gen.xi_config) {
      m.q0 += eps * gen.xi_config(s.t0, s.q0);
      m.q1 += eps * gen.xi_config(s.t1, s.q1);
    }
    return m.h() * eval_discrete(ld, m);
  };
  const double scale = std::max({1.0, std::abs(s.t0), std::abs(s.t1), s.q0.lpNorm<Eigen::Infinity>(),
                                 s.q1.lpNorm<Eigen::Infinity>()});
  const double eps = 1e-6 * scale;
  return (moved(eps) - moved(-eps)) / (2 * eps);
}

ConvergenceStudy convergence_order(const ProblemSpec& problem, StepMode mode,
                                   std::span<const double> h_list, double t_end,
                                   const SolverConfig& cfg) {
  if (mode != StepMode::Fixed) {
    throw ValidationError("convergence studies are defined for fixed mode only");
  }
  if (h_list.empty()) {
    throw ValidationError("convergence study needs at least one step size");
  }
  const double span = t_end - problem.t0;
  if (!(span > 0)) {
    throw ValidationError("convergence study needs t_end > t0");
  }

  // High-accuracy endpoint reference; RK4 at this resolution is far below the
  // second-order errors being measured.
  const int ref_steps = std::max(4000, static_cast<int>(std::ceil(span * 4000)));
  const Vector q_ref =
      reference_solve(problem.model, problem.t0, problem.q0, problem.v0, t_end, ref_steps)
          .back()
          .q;

  ConvergenceStudy study;
  for (const double h : h_list) {
    const double ratio = span / h;
    const int n_segments = static_cast<int>(std::llround(ratio));
    if (n_segments < 2 || std::abs(ratio - n_segments) > 1e-9 * ratio) {
      std::ostringstream os;
      os << "step size " << h << " does not divide the interval [t0, t_end]";
      throw ValidationError(os.str());
    }
    ProblemSpec p = problem;
    p.h0 = h;
    const Trajectory traj = run_trajectory(p, StepMode::Fixed, cfg, n_segments);
    if (traj.failure) {
      throw NewtonDivergence("convergence run failed at h=" + std::to_string(h) + ": " +
                             traj.failure->message);
    }
    study.h.push_back(h);
    study.error.push_back((traj.points.back().q - q_ref).lpNorm<Eigen::Infinity>());
  }

  study.exact =
      std::all_of(study.error.begin(), study.error.end(), [](double e) { return e <= 1e-12; });
  if (study.exact || study.h.size() < 2) {
    study.observed_order = std::numeric_limits<double>::quiet_NaN();
    return study;
  }

  // Least-squares slope of log(error) against log(h).
  const auto n = static_cast<double>(study.h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < study.h.size(); ++i) {
    const double x = std::log(study.h[i]);
    const double y = std::log(std::max(study.error[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  study.observed_order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return study;
}

}  // namespace tdvi
