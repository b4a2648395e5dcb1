#include "tdvi/discretization.hpp"

#include <Eigen/SVD>
#include <array>
#include <cmath>
#include <sstream>

#include "tdvi/errors.hpp"

namespace tdvi {

namespace {

double fd_step(double eps, double x) {
  const double s = eps * std::max(1.0, std::abs(x));
  volatile double xp = x + s;
  return (xp - x);
}

// Step scale for differencing first derivatives into second derivatives.
const double kSecondDerivEps = std::cbrt(std::numeric_limits<double>::epsilon());

double raw_eval(const DiscreteLagrangian& ld, double t0, const Vector& q0, double t1,
                const Vector& q1) {
  if (t1 == t0) {
    throw ZeroTimeStep("two-point Lagrangian evaluated with t1 == t0");
  }
  const double value = ld.eval(t0, q0, t1, q1);
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << "two-point Lagrangian non-finite at t0=" << t0 << ", t1=" << t1;
    throw EvaluationError(os.str());
  }
  return value;
}

GradBlocks raw_grad(const DiscreteLagrangian& ld, double t0, const Vector& q0, double t1,
                    const Vector& q1) {
  if (t1 == t0) {
    throw ZeroTimeStep("two-point gradient requested with t1 == t0");
  }
  if (ld.analytic_grad) {
    GradBlocks g = ld.analytic_grad(t0, q0, t1, q1);
    if (!std::isfinite(g.d_t0) || !std::isfinite(g.d_t1) || !g.d_q0.allFinite() ||
        !g.d_q1.allFinite()) {
      throw EvaluationError("analytic two-point gradient non-finite");
    }
    return g;
  }
  GradBlocks g;
  const double eps = ld.fd_eps;
  const int n = ld.dim;
  {
    const double s = fd_step(eps, t0);
    g.d_t0 = (raw_eval(ld, t0 + s, q0, t1, q1) - raw_eval(ld, t0 - s, q0, t1, q1)) / (2 * s);
  }
  {
    const double s = fd_step(eps, t1);
    g.d_t1 = (raw_eval(ld, t0, q0, t1 + s, q1) - raw_eval(ld, t0, q0, t1 - s, q1)) / (2 * s);
  }
  g.d_q0.resize(n);
  g.d_q1.resize(n);
  Vector qa = q0;
  for (int i = 0; i < n; ++i) {
    const double s = fd_step(eps, q0[i]);
    qa[i] = q0[i] + s;
    const double up = raw_eval(ld, t0, qa, t1, q1);
    qa[i] = q0[i] - s;
    const double dn = raw_eval(ld, t0, qa, t1, q1);
    qa[i] = q0[i];
    g.d_q0[i] = (up - dn) / (2 * s);
  }
  Vector qb = q1;
  for (int i = 0; i < n; ++i) {
    const double s = fd_step(eps, q1[i]);
    qb[i] = q1[i] + s;
    const double up = raw_eval(ld, t0, q0, t1, qb);
    qb[i] = q1[i] - s;
    const double dn = raw_eval(ld, t0, q0, t1, qb);
    qb[i] = q1[i];
    g.d_q1[i] = (up - dn) / (2 * s);
  }
  return g;
}

}  // namespace

DiscreteLagrangian midpoint_discretize(const LagrangianModel& model) {
  auto src = std::make_shared<const LagrangianModel>(model);
  DiscreteLagrangian ld;
  ld.dim = src->dim;
  ld.source = src;
  ld.fd_eps = src->fd_eps;
  ld.eval = [src](double t0, const Vector& q0, double t1, const Vector& q1) {
    if (t1 == t0) {
      throw ZeroTimeStep("midpoint rule evaluated with t1 == t0");
    }
    const Vector v = (q1 - q0) / (t1 - t0);
    return eval_lagrangian(*src, 0.5 * (t0 + t1), 0.5 * (q0 + q1), v);
  };
  if (src->has_analytic_partials()) {
    ld.analytic_grad = [src](double t0, const Vector& q0, double t1, const Vector& q1) {
      if (t1 == t0) {
        throw ZeroTimeStep("midpoint gradient requested with t1 == t0");
      }
      const double h = t1 - t0;
      const double tm = 0.5 * (t0 + t1);
      const Vector qm = 0.5 * (q0 + q1);
      const Vector v = (q1 - q0) / h;
      const Partials p = partials(*src, tm, qm, v);
      const double pv_v = p.d_v.dot(v);
      GradBlocks g;
      g.d_t0 = 0.5 * p.d_t + pv_v / h;
      g.d_t1 = 0.5 * p.d_t - pv_v / h;
      g.d_q0 = 0.5 * p.d_q - p.d_v / h;
      g.d_q1 = 0.5 * p.d_q + p.d_v / h;
      return g;
    };
  }
  return ld;
}

double eval_discrete(const DiscreteLagrangian& ld, const SegmentState& s) {
  s.validate();
  return raw_eval(ld, s.t0, s.q0, s.t1, s.q1);
}

GradBlocks grad_blocks(const DiscreteLagrangian& ld, const SegmentState& s) {
  s.validate();
  return raw_grad(ld, s.t0, s.q0, s.t1, s.q1);
}

Matrix barD12_matrix(const DiscreteLagrangian& ld, const SegmentState& s) {
  s.validate();
  const int n = ld.dim;
  // y-gradient of the weighted summand W = (t1 - t0) L_d, as a function of the
  // left slot x = (t0, q0): dW/dt1 = L_d + h D3, dW/dq1 = h D4.
  auto y_grad = [&](double t0, const Vector& q0) {
    const GradBlocks g = raw_grad(ld, t0, q0, s.t1, s.q1);
    const double w = raw_eval(ld, t0, q0, s.t1, s.q1);
    const double h = s.t1 - t0;
    Vector out(1 + n);
    out[0] = w + h * g.d_t1;
    out.tail(n) = h * g.d_q1;
    return out;
  };

  Matrix m(1 + n, 1 + n);
  {
    const double st = fd_step(kSecondDerivEps, s.t0);
    m.row(0) = ((y_grad(s.t0 + st, s.q0) - y_grad(s.t0 - st, s.q0)) / (2 * st)).transpose();
  }
  Vector qp = s.q0;
  for (int i = 0; i < n; ++i) {
    const double sq = fd_step(kSecondDerivEps, s.q0[i]);
    qp[i] = s.q0[i] + sq;
    const Vector up = y_grad(s.t0, qp);
    qp[i] = s.q0[i] - sq;
    const Vector dn = y_grad(s.t0, qp);
    qp[i] = s.q0[i];
    m.row(1 + i) = ((up - dn) / (2 * sq)).transpose();
  }
  return m;
}

bool segment_degenerate(const DiscreteLagrangian& ld, const SegmentState& s) {
  const Matrix m = barD12_matrix(ld, s);
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double largest = sv[0];
  const double smallest = sv[sv.size() - 1];
  return !(smallest >= 1e-8 * largest) || largest == 0.0;
}

double discrete_energy(const DiscreteLagrangian& ld, double t, const Vector& x, double h,
                       const Vector& y) {
  if (!(h > 0)) {
    throw NonMonotoneTime("discrete energy requires h > 0");
  }
  const GradBlocks g = raw_grad(ld, t, x, t + h, y);
  return -raw_eval(ld, t, x, t + h, y) - h * g.d_t1;
}

double action_sum(const DiscreteLagrangian& ld, std::span<const ExtendedPoint> points) {
  if (points.size() < 2) {
    throw EvaluationError("action sum needs at least two points");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < points.size(); ++k) {
    const double h = points[k + 1].t - points[k].t;
    if (!(h > 0)) {
      throw NonMonotoneTime("action sum requires strictly increasing times");
    }
    sum += h * raw_eval(ld, points[k].t, points[k].q, points[k + 1].t, points[k + 1].q);
  }
  return sum;
}

Vector action_point_gradient(const DiscreteLagrangian& ld, std::span<const ExtendedPoint> points,
                             int k) {
  if (k <= 0 || k + 1 >= static_cast<int>(points.size())) {
    throw EvaluationError("action gradient requires an interior point index");
  }
  const int n = ld.dim;
  // Only the two adjacent segments depend on point k.
  const ExtendedPoint& a = points[k - 1];
  const ExtendedPoint& b = points[k];
  const ExtendedPoint& c = points[k + 1];
  auto local = [&](double t, const Vector& q) {
    const std::array<ExtendedPoint, 3> tri{{a, {t, q}, c}};
    return action_sum(ld, std::span<const ExtendedPoint>(tri.data(), tri.size()));
  };

  Vector grad(1 + n);
  Vector qp = b.q;
  for (int i = 0; i < n; ++i) {
    const double s = fd_step(ld.fd_eps, b.q[i]);
    qp[i] = b.q[i] + s;
    const double up = local(b.t, qp);
    qp[i] = b.q[i] - s;
    const double dn = local(b.t, qp);
    qp[i] = b.q[i];
    grad[i] = (up - dn) / (2 * s);
  }
  {
    const double s = fd_step(ld.fd_eps, b.t);
    grad[n] = (local(b.t + s, b.q) - local(b.t - s, b.q)) / (2 * s);
  }
  return grad;
}

}  // namespace tdvi
