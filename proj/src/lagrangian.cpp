#include "tdvi/lagrangian.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>

#include "tdvi/errors.hpp"

namespace tdvi {

namespace {

// Representable central-difference step about x.
double fd_step(double eps, double x) {
  const double s = eps * std::max(1.0, std::abs(x));
  volatile double xp = x + s;
  return (xp - x);
}

std::string format_probe(double t, const Vector& q, const Vector& v) {
  std::ostringstream os;
  os << "t=" << t << ", q=[" << q.transpose() << "], v=[" << v.transpose() << "]";
  return os.str();
}

}  // namespace

double eval_lagrangian(const LagrangianModel& model, double t, const Vector& q, const Vector& v) {
  if (!model.lag) {
    throw EvaluationError("model has no Lagrangian callback");
  }
  if (q.size() != model.dim || v.size() != model.dim) {
    throw EvaluationError("argument dimension does not match model.dim");
  }
  const double value = model.lag(t, q, v);
  if (!std::isfinite(value)) {
    throw EvaluationError("Lagrangian evaluated to a non-finite value at " +
                          format_probe(t, q, v));
  }
  return value;
}

Partials partials(const LagrangianModel& model, double t, const Vector& q, const Vector& v) {
  Partials p;
  const double eps = model.fd_eps;
  if (model.d_t) {
    p.d_t = model.d_t(t, q, v);
  } else {
    const double s = fd_step(eps, t);
    p.d_t = (eval_lagrangian(model, t + s, q, v) - eval_lagrangian(model, t - s, q, v)) / (2 * s);
  }
  if (model.d_q) {
    p.d_q = model.d_q(t, q, v);
  } else {
    p.d_q.resize(model.dim);
    Vector qp = q;
    for (int i = 0; i < model.dim; ++i) {
      const double s = fd_step(eps, q[i]);
      qp[i] = q[i] + s;
      const double up = eval_lagrangian(model, t, qp, v);
      qp[i] = q[i] - s;
      const double dn = eval_lagrangian(model, t, qp, v);
      qp[i] = q[i];
      p.d_q[i] = (up - dn) / (2 * s);
    }
  }
  if (model.d_v) {
    p.d_v = model.d_v(t, q, v);
  } else {
    p.d_v.resize(model.dim);
    Vector vp = v;
    for (int i = 0; i < model.dim; ++i) {
      const double s = fd_step(eps, v[i]);
      vp[i] = v[i] + s;
      const double up = eval_lagrangian(model, t, q, vp);
      vp[i] = v[i] - s;
      const double dn = eval_lagrangian(model, t, q, vp);
      vp[i] = v[i];
      p.d_v[i] = (up - dn) / (2 * s);
    }
  }
  if (!std::isfinite(p.d_t) || !p.d_q.allFinite() || !p.d_v.allFinite() ||
      p.d_q.size() != model.dim || p.d_v.size() != model.dim) {
    throw EvaluationError("Lagrangian partials non-finite or mis-sized at " +
                          format_probe(t, q, v));
  }
  return p;
}

double continuous_energy(const LagrangianModel& model, double t, const Vector& q, const Vector& v) {
  const Partials p = partials(model, t, q, v);
  return v.dot(p.d_v) - eval_lagrangian(model, t, q, v);
}

Vector acceleration(const LagrangianModel& model, double t, const Vector& q, const Vector& v) {
  const int n = model.dim;
  // Second derivatives of L in v are formed by differencing the first
  // partials; the step uses the cube root of machine epsilon, the optimal
  // choice when the differenced quantity is analytic.
  const double eps2 = std::cbrt(std::numeric_limits<double>::epsilon());

  auto dv_at = [&](double tt, const Vector& qq, const Vector& vv) {
    return partials(model, tt, qq, vv).d_v;
  };

  Matrix vv_hessian(n, n);
  Vector vp = v;
  for (int j = 0; j < n; ++j) {
    const double s = fd_step(eps2, v[j]);
    vp[j] = v[j] + s;
    const Vector up = dv_at(t, q, vp);
    vp[j] = v[j] - s;
    const Vector dn = dv_at(t, q, vp);
    vp[j] = v[j];
    vv_hessian.col(j) = (up - dn) / (2 * s);
  }

  const double st = fd_step(eps2, t);
  const Vector tv_cross = (dv_at(t + st, q, v) - dv_at(t - st, q, v)) / (2 * st);

  // (d2L/dq dv) . v as a directional derivative along v in q.
  const double vnorm = v.norm();
  Vector qv_dot = Vector::Zero(n);
  if (vnorm > 0) {
    const double s = eps2 * std::max(1.0, q.norm() / vnorm);
    qv_dot = (dv_at(t, q + s * v, v) - dv_at(t, q - s * v, v)) / (2 * s);
  }

  const Vector rhs = partials(model, t, q, v).d_q - tv_cross - qv_dot;

  Eigen::FullPivLU<Matrix> lu(vv_hessian);
  lu.setThreshold(1e-10);
  if (!lu.isInvertible()) {
    throw DegenerateLagrangian("velocity Hessian numerically singular at " +
                               std::to_string(t));
  }
  Vector a = lu.solve(rhs);
  if (!a.allFinite()) {
    throw EvaluationError("acceleration solve produced non-finite values");
  }
  return a;
}

std::vector<StatePoint> reference_solve(const LagrangianModel& model, double t0, const Vector& q0,
                                        const Vector& v0, double t_end, int steps) {
  if (steps < 1) {
    throw EvaluationError("reference_solve requires at least one step");
  }
  if (!(t_end > t0)) {
    throw NonMonotoneTime("reference_solve requires t_end > t0");
  }
  const double h = (t_end - t0) / steps;
  std::vector<StatePoint> out;
  out.reserve(steps + 1);
  Vector q = q0;
  Vector v = v0;
  out.push_back({t0, q, v});
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const Vector k1q = v;
    const Vector k1v = acceleration(model, t, q, v);
    const Vector k2q = v + 0.5 * h * k1v;
    const Vector k2v = acceleration(model, t + 0.5 * h, q + 0.5 * h * k1q, v + 0.5 * h * k1v);
    const Vector k3q = v + 0.5 * h * k2v;
    const Vector k3v = acceleration(model, t + 0.5 * h, q + 0.5 * h * k2q, v + 0.5 * h * k2v);
    const Vector k4q = v + h * k3v;
    const Vector k4v = acceleration(model, t + h, q + h * k3q, v + h * k3v);
    q += (h / 6.0) * (k1q + 2 * k2q + 2 * k3q + k4q);
    v += (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v);
    if (!q.allFinite() || !v.allFinite()) {
      throw EvaluationError("reference solve diverged at step " + std::to_string(k));
    }
    out.push_back({t0 + (k + 1) * h, q, v});
  }
  return out;
}

}  // namespace tdvi
