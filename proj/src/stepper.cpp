#include "tdvi/stepper.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "tdvi/errors.hpp"
#include "tdvi/geometry.hpp"

namespace tdvi {

namespace {

double fd_step(double eps, double x) {
  const double s = eps * std::max(1.0, std::abs(x));
  volatile double xp = x + s;
  return (xp - x);
}

constexpr int kMaxHalvings = 30;
constexpr double kSingularRatio = 1e-8;

struct NewtonOutcome {
  Vector u;
  StepStats stats;
};

// Damped Newton with a central-difference Jacobian. The Jacobian is rank
// tested every iteration (SVD) — including at a point that already satisfies
// the residual, so a returned solution is always certified locally unique; a
// ratio below kSingularRatio raises SingularJacobian rather than
// regularizing. Residual evaluations that throw during the line search only
// reject the candidate.
NewtonOutcome newton_solve(const std::function<Vector(const Vector&)>& residual, Vector u,
                           const SolverConfig& cfg) {
  NewtonOutcome out;
  const int m = static_cast<int>(u.size());
  Vector f = residual(u);
  double fnorm = f.lpNorm<Eigen::Infinity>();

  for (int iter = 0; iter < cfg.max_newton_iters; ++iter) {
    Matrix jac(m, m);
    Vector up = u;
    for (int j = 0; j < m; ++j) {
      const double s = fd_step(cfg.fd_eps, u[j]);
      up[j] = u[j] + s;
      const Vector fp = residual(up);
      up[j] = u[j] - s;
      const Vector fm = residual(up);
      up[j] = u[j];
      jac.col(j) = (fp - fm) / (2 * s);
    }

    Eigen::JacobiSVD<Matrix> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv[0];
    const double smin = sv[sv.size() - 1];
    out.stats.jacobian_condition_estimate = (smin > 0) ? smax / smin : INFINITY;
    if (smax == 0.0 || !(smin >= kSingularRatio * smax)) {
      std::ostringstream os;
      os << "step linearization rank-deficient (singular value ratio "
         << (smax > 0 ? smin / smax : 0.0) << ")";
      throw SingularJacobian(os.str());
    }

    if (fnorm <= cfg.newton_tol) {
      out.u = std::move(u);
      out.stats.iterations = iter;
      out.stats.final_residual = fnorm;
      return out;
    }
    const Vector delta = svd.solve(-f);

    if (!cfg.damping) {
      u += delta;
      f = residual(u);
      fnorm = f.lpNorm<Eigen::Infinity>();
      out.stats.iterations = iter + 1;
      continue;
    }

    double lambda = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= kMaxHalvings; ++bt) {
      const Vector cand = u + lambda * delta;
      try {
        Vector fc = residual(cand);
        const double cnorm = fc.lpNorm<Eigen::Infinity>();
        if (std::isfinite(cnorm) && (cnorm < fnorm || cnorm <= cfg.newton_tol)) {
          u = cand;
          f = std::move(fc);
          fnorm = cnorm;
          accepted = true;
          out.stats.backtracks += bt;
          break;
        }
      } catch (const Error&) {
        // Candidate left the admissible region; shorten the step.
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "line search failed to reduce the residual (" << fnorm << ") after "
         << kMaxHalvings << " halvings";
      throw NewtonDivergence(os.str());
    }
    out.stats.iterations = iter + 1;
  }

  if (fnorm <= cfg.newton_tol) {
    out.u = std::move(u);
    out.stats.final_residual = fnorm;
    return out;
  }
  std::ostringstream os;
  os << "Newton did not reach tol " << cfg.newton_tol << " in " << cfg.max_newton_iters
     << " iterations (residual " << fnorm << ")";
  throw NewtonDivergence(os.str());
}

void check_h_band(double h, const SolverConfig& cfg) {
  if (!(h >= cfg.min_h) || !(h <= cfg.max_h)) {
    std::ostringstream os;
    os << "solved step duration " << h << " outside [" << cfg.min_h << ", " << cfg.max_h << "]";
    throw NonMonotoneTime(os.str());
  }
}

}  // namespace

Vector del_residual(const DiscreteLagrangian& ld, const Window& w) {
  w.validate();
  const int n = ld.dim;
  const SegmentState sk = w.next_segment();   // segment k
  const SegmentState sk1 = w.prev_segment();  // segment k-1
  const double hk = sk.h();
  const double hk1 = sk1.h();
  const GradBlocks gk = grad_blocks(ld, sk);
  const GradBlocks gk1 = grad_blocks(ld, sk1);

  Vector r(n + 1);
  r.head(n) = hk * gk.d_q0 + hk1 * gk1.d_q1;
  r[n] = hk * gk.d_t0 - eval_discrete(ld, sk) + hk1 * gk1.d_t1 + eval_discrete(ld, sk1);
  return r;
}

double energy_form_residual(const DiscreteLagrangian& ld, const Window& w) {
  w.validate();
  const SegmentState sk = w.next_segment();
  const SegmentState sk1 = w.prev_segment();
  const double hk = sk.h();
  const double ek = discrete_energy(ld, sk.t0, sk.q0, hk, sk.q1);
  const double ek1 = discrete_energy(ld, sk1.t0, sk1.q0, sk1.h(), sk1.q1);
  const GradBlocks gk = grad_blocks(ld, sk);
  // (D1 + D3)(k) is the explicit time derivative of the reparametrized L_d.
  return (ek - ek1) / hk + gk.d_t0 + gk.d_t1;
}

StepResult step_adaptive(const DiscreteLagrangian& ld, const SegmentState& prev,
                         const SolverConfig& cfg) {
  prev.validate();
  const int n = ld.dim;
  if (segment_degenerate(ld, prev)) {
    throw SingularJacobian("two-point existence block is singular at the previous segment");
  }

  auto residual = [&](const Vector& u) {
    Window w;
    w.t_prev = prev.t0;
    w.q_prev = prev.q0;
    w.t_cur = prev.t1;
    w.q_cur = prev.q1;
    w.t_next = u[0];
    w.q_next = u.tail(n);
    return del_residual(ld, w);
  };

  // Predictor: carry the previous duration and solve the position block alone
  // (loosely) at that fixed duration. A bare linear extrapolation leaves a
  // position residual of order h * force, outside the full system's basin of
  // quadratic convergence; the warm start reduces it to the O(h^3) energy
  // mismatch that only the duration can absorb.
  Vector u0(1 + n);
  u0[0] = prev.t1 + prev.h();
  int warm_iters = 0;
  try {
    SolverConfig warm_cfg = cfg;
    warm_cfg.newton_tol = std::max(cfg.newton_tol, 1e-6);
    FixedStepResult warm = step_fixed(ld, prev, u0[0], warm_cfg);
    u0.tail(n) = std::move(warm.q_next);
    warm_iters = warm.stats.iterations;
  } catch (const Error&) {
    u0.tail(n) = 2.0 * prev.q1 - prev.q0;
  }

  NewtonOutcome sol = newton_solve(residual, std::move(u0), cfg);
  sol.stats.iterations += warm_iters;
  const double h = sol.u[0] - prev.t1;
  check_h_band(h, cfg);

  StepResult out;
  out.next = SegmentState{prev.t1, prev.q1, sol.u[0], sol.u.tail(n)};
  out.next.validate();
  out.stats = sol.stats;
  return out;
}

FixedStepResult step_fixed(const DiscreteLagrangian& ld, const SegmentState& prev, double t_next,
                           const SolverConfig& cfg) {
  prev.validate();
  const int n = ld.dim;
  if (!(t_next > prev.t1)) {
    throw NonMonotoneTime("fixed step requires t_next > t1 of the previous segment");
  }
  check_h_band(t_next - prev.t1, cfg);

  auto residual = [&](const Vector& q) {
    Window w;
    w.t_prev = prev.t0;
    w.q_prev = prev.q0;
    w.t_cur = prev.t1;
    w.q_cur = prev.q1;
    w.t_next = t_next;
    w.q_next = q;
    return Vector(del_residual(ld, w).head(n));
  };

  Vector u0 = 2.0 * prev.q1 - prev.q0;
  NewtonOutcome sol = newton_solve(residual, std::move(u0), cfg);

  FixedStepResult out;
  out.q_next = std::move(sol.u);
  out.stats = sol.stats;
  return out;
}

AutonomousDiscreteLagrangian autonomous_reduce(const DiscreteLagrangian& ld) {
  if (!ld.source || !ld.source->autonomous) {
    throw ValidationError("autonomous reduction requires an autonomous source model");
  }
  AutonomousDiscreteLagrangian ad;
  ad.dim = ld.dim;
  ad.fd_eps = ld.fd_eps;
  // Evaluate at t0 = 0; the source has no explicit time dependence.
  ad.eval = [ld](const Vector& q0, const Vector& q1, double h) {
    if (!(h > 0)) {
      throw NonMonotoneTime("autonomous two-point Lagrangian requires h > 0");
    }
    return ld.eval(0.0, q0, h, q1);
  };
  if (ld.analytic_grad) {
    ad.analytic_grad = [ld](const Vector& q0, const Vector& q1, double h) {
      if (!(h > 0)) {
        throw NonMonotoneTime("autonomous two-point gradient requires h > 0");
      }
      const GradBlocks g = ld.analytic_grad(0.0, q0, h, q1);
      return AutoGradBlocks{g.d_q0, g.d_q1, g.d_t1};
    };
  }
  return ad;
}

namespace {

AutoGradBlocks auto_grad(const AutonomousDiscreteLagrangian& ad, const Vector& q0,
                         const Vector& q1, double h) {
  if (ad.analytic_grad) {
    return ad.analytic_grad(q0, q1, h);
  }
  AutoGradBlocks g;
  const int n = ad.dim;
  g.d_q0.resize(n);
  g.d_q1.resize(n);
  Vector qp = q0;
  for (int i = 0; i < n; ++i) {
    const double s = fd_step(ad.fd_eps, q0[i]);
    qp[i] = q0[i] + s;
    const double up = ad.eval(qp, q1, h);
    qp[i] = q0[i] - s;
    const double dn = ad.eval(qp, q1, h);
    qp[i] = q0[i];
    g.d_q0[i] = (up - dn) / (2 * s);
  }
  Vector qn = q1;
  for (int i = 0; i < n; ++i) {
    const double s = fd_step(ad.fd_eps, q1[i]);
    qn[i] = q1[i] + s;
    const double up = ad.eval(q0, qn, h);
    qn[i] = q1[i] - s;
    const double dn = ad.eval(q0, qn, h);
    qn[i] = q1[i];
    g.d_q1[i] = (up - dn) / (2 * s);
  }
  {
    const double s = fd_step(ad.fd_eps, h);
    g.d_h = (ad.eval(q0, q1, h + s) - ad.eval(q0, q1, h - s)) / (2 * s);
  }
  return g;
}

}  // namespace

double discrete_energy(const AutonomousDiscreteLagrangian& ad, const Vector& q0, const Vector& q1,
                       double h) {
  if (!(h > 0)) {
    throw NonMonotoneTime("discrete energy requires h > 0");
  }
  const AutoGradBlocks g = auto_grad(ad, q0, q1, h);
  return -ad.eval(q0, q1, h) - h * g.d_h;
}

KmoResult kmo_step(const AutonomousDiscreteLagrangian& ad, const Vector& q_prev,
                   const Vector& q_cur, double h_prev, const SolverConfig& cfg) {
  const int n = ad.dim;
  if (!(h_prev > 0)) {
    throw NonMonotoneTime("kmo step requires h_prev > 0");
  }

  // Trailing-segment quantities are fixed during the solve.
  const AutoGradBlocks g_prev = auto_grad(ad, q_prev, q_cur, h_prev);
  const double e_prev = discrete_energy(ad, q_prev, q_cur, h_prev);

  auto residual = [&](const Vector& u) {
    const double h = u[n];
    if (!(h > 0)) {
      throw NonMonotoneTime("trial step duration must stay positive");
    }
    const Vector q_next = u.head(n);
    const AutoGradBlocks g = auto_grad(ad, q_cur, q_next, h);
    Vector r(n + 1);
    r.head(n) = h * g.d_q0 + h_prev * g_prev.d_q1;
    r[n] = discrete_energy(ad, q_cur, q_next, h) - e_prev;
    return r;
  };

  // Same warm start as the adaptive step: position block first at the carried
  // duration, so the full solve starts inside the contraction basin.
  Vector u0(n + 1);
  u0[n] = h_prev;
  int warm_iters = 0;
  try {
    auto pos_residual = [&](const Vector& q) {
      const AutoGradBlocks g = auto_grad(ad, q_cur, q, h_prev);
      return Vector(h_prev * g.d_q0 + h_prev * g_prev.d_q1);
    };
    SolverConfig warm_cfg = cfg;
    warm_cfg.newton_tol = std::max(cfg.newton_tol, 1e-6);
    NewtonOutcome warm = newton_solve(pos_residual, Vector(2.0 * q_cur - q_prev), warm_cfg);
    u0.head(n) = std::move(warm.u);
    warm_iters = warm.stats.iterations;
  } catch (const Error&) {
    u0.head(n) = 2.0 * q_cur - q_prev;
  }

  NewtonOutcome sol = newton_solve(residual, std::move(u0), cfg);
  sol.stats.iterations += warm_iters;
  check_h_band(sol.u[n], cfg);

  KmoResult out;
  out.q_next = sol.u.head(n);
  out.h = sol.u[n];
  out.stats = sol.stats;
  return out;
}

SegmentState initialize(const LagrangianModel& model, const DiscreteLagrangian& ld, double t0,
                        const Vector& q0, const Vector& v0, double h0, const SolverConfig& cfg) {
  if (ld.dim != model.dim) {
    throw EvaluationError("discretization dimension does not match the model");
  }
  if (!(h0 >= cfg.min_h) || !(h0 <= cfg.max_h)) {
    throw NonMonotoneTime("initial step duration outside [min_h, max_h]");
  }
  // Substep count sized so the RK4 local error over [t0, t0+h0] stays below
  // 1e-12: global error ~ (h0/m)^4 * h0.
  const int substeps =
      std::max(32, static_cast<int>(std::ceil(h0 * std::pow(h0 / 1e-14, 0.25))));
  const auto path = reference_solve(model, t0, q0, v0, t0 + h0, substeps);
  SegmentState seg{t0, q0, t0 + h0, path.back().q};
  seg.validate();
  return seg;
}

Trajectory run_trajectory(const ProblemSpec& problem, StepMode mode, const SolverConfig& cfg,
                          int n_steps, const std::function<void(int, const Trajectory&)>& on_segment) {
  if (n_steps < 1) {
    throw ValidationError("n_steps must be at least 1");
  }
  const DiscreteLagrangian ld = midpoint_discretize(problem.model);

  Trajectory traj;
  traj.generator_labels.reserve(problem.generators.size());
  for (const auto& gen : problem.generators) {
    traj.generator_labels.push_back(gen.label);
  }
  traj.momentum_series.resize(problem.generators.size());

  AutonomousDiscreteLagrangian reduced;
  if (mode == StepMode::Kmo) {
    reduced = autonomous_reduce(ld);  // throws ValidationError if non-autonomous
  }

  auto record_segment = [&](const SegmentState& seg, const StepStats& stats) {
    const int k = static_cast<int>(traj.h_series.size());
    traj.points.push_back(seg.right());
    traj.h_series.push_back(seg.h());
    traj.Ed_series.push_back(discrete_energy(ld, seg.t0, seg.q0, seg.h(), seg.q1));
    if (k == 0) {
      traj.energy_residual_series.push_back(0.0);
    } else {
      const auto& p = traj.points;
      Window w;
      w.t_prev = p[k - 1].t;
      w.q_prev = p[k - 1].q;
      w.t_cur = seg.t0;
      w.q_cur = seg.q0;
      w.t_next = seg.t1;
      w.q_next = seg.q1;
      traj.energy_residual_series.push_back(energy_form_residual(ld, w));
    }
    for (std::size_t g = 0; g < problem.generators.size(); ++g) {
      traj.momentum_series[g].push_back(momentum_map(ld, seg, problem.generators[g]));
    }
    traj.stats_series.push_back(stats);
    if (on_segment) {
      on_segment(k, traj);
    }
  };

  SegmentState seg =
      initialize(problem.model, ld, problem.t0, problem.q0, problem.v0, problem.h0, cfg);
  traj.points.push_back(seg.left());
  record_segment(seg, StepStats{});

  for (int k = 1; k < n_steps; ++k) {
    try {
      switch (mode) {
        case StepMode::Fixed: {
          const double t_next = problem.t0 + (k + 1) * problem.h0;
          FixedStepResult r = step_fixed(ld, seg, t_next, cfg);
          seg = SegmentState{seg.t1, seg.q1, t_next, std::move(r.q_next)};
          record_segment(seg, r.stats);
          break;
        }
        case StepMode::Adaptive: {
          StepResult r = step_adaptive(ld, seg, cfg);
          seg = std::move(r.next);
          record_segment(seg, r.stats);
          break;
        }
        case StepMode::Kmo: {
          KmoResult r = kmo_step(reduced, seg.q0, seg.q1, seg.h(), cfg);
          seg = SegmentState{seg.t1, seg.q1, seg.t1 + r.h, std::move(r.q_next)};
          record_segment(seg, r.stats);
          break;
        }
      }
    } catch (const Error& e) {
      traj.failure = TrajectoryFailure{k, std::string(e.kind()), e.what()};
      break;
    }
  }

  const auto [e0, eN] = boundary_energies(ld, traj);
  traj.energy_t0 = e0;
  traj.energy_tN = eN;
  traj.validate();
  return traj;
}

}  // namespace tdvi
