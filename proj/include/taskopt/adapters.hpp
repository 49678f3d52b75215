#pragma once

/**
 * @file
 * @brief The native algorithms: operator-splitting QP, quasi-Newton (BFGS) for unconstrained
 * problems and SQP for everything else.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "taskopt/solver.hpp"

namespace taskopt {

namespace detail {

/// Symmetric matrix with eigenvalues replaced by max(|ev|, 1e-4 * largest |ev|); identity if all vanish.
inline Eigen::MatrixXd clamp_positive_definite(const Eigen::MatrixXd & h)
{
  const Eigen::Index n = h.rows();
  if (n == 0 || !h.allFinite()) { return Eigen::MatrixXd::Identity(n, n); }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (h + h.transpose()));
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(top > 1e-12)) { return Eigen::MatrixXd::Identity(n, n); }
  const Eigen::VectorXd ev = es.eigenvalues().cwiseAbs().cwiseMax(std::max(1e-12, 1e-4 * top));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/**
 * @brief Powell-damped BFGS update of B in place.
 *
 * Returns false when the raw curvature s'y was not positive.
 */
inline bool damped_bfgs_update(Eigen::MatrixXd & b, const Eigen::VectorXd & s, const Eigen::VectorXd & y)
{
  const Eigen::VectorXd bs = b * s;
  const double sbs = s.dot(bs);
  const double sy = s.dot(y);
  if (!(sbs > 0) || !std::isfinite(sy)) { return false; }
  Eigen::VectorXd r = y;
  if (sy < 0.2 * sbs) {
    const double theta = 0.8 * sbs / (sbs - sy);
    r = theta * y + (1.0 - theta) * bs;
  }
  b += r * r.transpose() / s.dot(r) - bs * bs.transpose() / sbs;
  b = 0.5 * (b + b.transpose());
  return sy > 0;
}

inline double inf_norm_or_zero(const Eigen::VectorXd & v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace detail

/// Quadratic cost with linear (or no) constraints.
class QpAdapter : public SolverAdapter
{
public:
  std::string name() const override { return "qp"; }

  void initialize(const Problem & problem, const SolverOptions & options) override
  {
    const ProblemType t = problem.type();
    if (t != ProblemType::UnconstrainedQP && t != ProblemType::LinearConstrainedQP) {
      throw SolverError(std::string("the QP solver does not accept ") + to_string(t) + " problems");
    }
    problem_ = &problem;
    options_ = options;
    options_.qp.record_history = true;
  }

  AdapterResult solve(const Eigen::VectorXd & x0, const Eigen::VectorXd & p) override
  {
    const Problem & pr = *problem_;
    const int n = pr.n_x();
    const LinearConstraints lin = pr.linear_constraints(p);
    QpData d;
    d.P = pr.hessian(x0, p);
    d.q = pr.gradient(Eigen::VectorXd::Zero(n), p);
    const double inf = std::numeric_limits<double>::infinity();
    const int nk = pr.n_k();
    const int na = pr.n_a();
    d.C.resize(nk + na, n);
    d.C << lin.M, lin.A;
    d.l.resize(nk + na);
    d.u.resize(nk + na);
    d.l << -lin.c, -lin.b;
    d.u << Eigen::VectorXd::Constant(nk, inf), -lin.b;

    AdapterResult out;
    if (!d.P.allFinite() || !d.q.allFinite() || !d.C.allFinite()) {
      out.x = x0;
      out.reason = "non-finite problem data";
      stats_ = {};
      return out;
    }
    const QpResult r = solve_qp(d, options_.qp, x0);
    out.x = r.x;
    out.iterations = r.iterations;
    out.converged = r.status == QpStatus::Solved;
    out.reason = to_string(r.status);
    multipliers_ = r.y;
    stats_.iterations = r.iterations;
    stats_.objective_history = r.objective_history;
    stats_.step_norm_history = r.step_history;
    // f = 1/2 x'Px + q'x + f(0)
    const double offset = pr.objective(Eigen::VectorXd::Zero(n), p);
    for (double & v : stats_.objective_history) { v += offset; }
    return out;
  }

  Stats statistics() const override { return stats_; }

  /// Multipliers of the stacked rows [k; a] from the last solve.
  const Eigen::VectorXd & multipliers() const noexcept { return multipliers_; }

private:
  const Problem * problem_ = nullptr;
  SolverOptions options_;
  Stats stats_;
  Eigen::VectorXd multipliers_;
};

/// Damped BFGS with Armijo backtracking, for problems without constraints.
class BfgsAdapter : public SolverAdapter
{
public:
  std::string name() const override { return "bfgs"; }

  void initialize(const Problem & problem, const SolverOptions & options) override
  {
    const ProblemType t = problem.type();
    if (t != ProblemType::UnconstrainedQP && t != ProblemType::UnconstrainedNLP) {
      throw SolverError(std::string("the BFGS solver does not accept ") + to_string(t) + " problems");
    }
    problem_ = &problem;
    options_ = options;
  }

  AdapterResult solve(const Eigen::VectorXd & x0, const Eigen::VectorXd & p) override
  {
    const Problem & pr = *problem_;
    const SolverOptions & o = options_;
    AdapterResult out;
    stats_ = {};
    Eigen::VectorXd x = x0;
    double f = pr.objective(x, p);
    Eigen::VectorXd g = pr.gradient(x, p);
    stats_.objective_history.push_back(f);
    stats_.step_norm_history.push_back(0.0);
    if (!std::isfinite(f) || !g.allFinite()) {
      out.x = x;
      out.reason = "non-finite evaluation at the seed";
      return out;
    }
    Eigen::MatrixXd b = detail::clamp_positive_definite(pr.hessian(x, p));
    int curvature_failures = 0;
    out.reason = "max-iterations";
    for (int it = 1; it <= o.max_iterations; ++it) {
      if (detail::inf_norm_or_zero(g) <= o.kkt_tolerance) {
        out.converged = true;
        out.reason = "gradient tolerance";
        break;
      }
      Eigen::LLT<Eigen::MatrixXd> llt(b);
      if (llt.info() != Eigen::Success) {
        b.setIdentity();
        llt.compute(b);
      }
      Eigen::VectorXd d = -llt.solve(g);
      double slope = g.dot(d);
      if (!(slope < 0)) {
        d = -g;
        slope = -g.squaredNorm();
      }
      double alpha = 1.0;
      double f_new = f;
      bool accepted = false;
      for (int bt = 0; bt <= o.max_backtracks; ++bt) {
        f_new = pr.objective(x + alpha * d, p);
        if (std::isfinite(f_new) && f_new <= f + o.armijo * alpha * slope) {
          accepted = true;
          break;
        }
        alpha *= o.backtrack;
      }
      if (!accepted) {
        out.reason = "line search failed";
        break;
      }
      const Eigen::VectorXd s = alpha * d;
      const Eigen::VectorXd x_new = x + s;
      const Eigen::VectorXd g_new = pr.gradient(x_new, p);
      if (!g_new.allFinite()) {
        out.reason = "non-finite gradient";
        break;
      }
      curvature_failures = detail::damped_bfgs_update(b, s, g_new - g) ? 0 : curvature_failures + 1;
      if (curvature_failures >= 2) {
        b.setIdentity();
        curvature_failures = 0;
      }
      x = x_new;
      f = f_new;
      g = g_new;
      stats_.iterations = it;
      stats_.objective_history.push_back(f);
      stats_.step_norm_history.push_back(detail::inf_norm_or_zero(s));
      if (detail::inf_norm_or_zero(s) <= o.step_tolerance) {
        out.converged = detail::inf_norm_or_zero(g) <= std::sqrt(o.kkt_tolerance);
        out.reason = out.converged ? "step tolerance" : "stalled";
        break;
      }
    }
    out.x = x;
    out.iterations = stats_.iterations;
    return out;
  }

  Stats statistics() const override { return stats_; }

private:
  const Problem * problem_ = nullptr;
  SolverOptions options_;
  Stats stats_;
};

/**
 * @brief Sequential quadratic programming with a damped-BFGS Lagrangian Hessian and an l1 merit
 * function.
 *
 * Constraint rows are ordered [k; g; a; h]; multipliers follow the QP convention
 * grad f + J'y = 0 with y <= 0 on active inequalities.
 */
class SqpAdapter : public SolverAdapter
{
public:
  std::string name() const override { return "sqp"; }

  void initialize(const Problem & problem, const SolverOptions & options) override
  {
    problem_ = &problem;
    options_ = options;
  }

  AdapterResult solve(const Eigen::VectorXd & x0, const Eigen::VectorXd & p) override
  {
    const Problem & pr = *problem_;
    const SolverOptions & o = options_;
    const int n = pr.n_x();
    const int nk = pr.n_k(), ng = pr.n_g(), na = pr.n_a(), nh = pr.n_h();
    const int n_in = nk + ng;
    const int m = n_in + na + nh;
    const LinearConstraints lin = pr.linear_constraints(p);

    AdapterResult out;
    stats_ = {};
    Point cur = evaluate(x0, p, lin);
    stats_.objective_history.push_back(cur.f);
    stats_.step_norm_history.push_back(0.0);
    if (!cur.finite) {
      out.x = x0;
      out.reason = "non-finite evaluation at the seed";
      return out;
    }

    Eigen::MatrixXd b = detail::clamp_positive_definite(pr.hessian(x0, p));
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    double mu = 1.0;
    int curvature_failures = 0;
    const double inf = std::numeric_limits<double>::infinity();
    out.reason = "max-iterations";

    for (int it = 1; it <= o.max_iterations; ++it) {
      if (kkt_residual(cur, y, n_in) <= o.kkt_tolerance) {
        out.converged = true;
        out.reason = "KKT tolerance";
        break;
      }

      QpData d;
      d.P = b;
      d.q = cur.grad;
      d.C = cur.jac;
      d.l.resize(m);
      d.u.resize(m);
      d.l << -cur.c;
      d.u << Eigen::VectorXd::Constant(n_in, inf), -cur.c.tail(na + nh);
      QpResult r = solve_qp(d, o.qp, std::nullopt, y);
      Eigen::VectorXd step;
      Eigen::VectorXd y_qp;
      double model_violation = 0.0;  // l1 violation left in the linearization
      if (r.status == QpStatus::Solved) {
        step = r.x;
        y_qp = r.y;
      } else {
        if (!elastic_step(cur, b, std::max(mu, 1.0) * 1e3, nk, ng, na, nh, step, y_qp, model_violation)) {
          out.reason = std::string("QP subproblem failed (") + to_string(r.status) + ")";
          break;
        }
      }

      mu = std::max(mu, 1.1 * detail::inf_norm_or_zero(y_qp) + 1e-6);
      const double step_norm = detail::inf_norm_or_zero(step);
      if (step_norm <= o.step_tolerance) {
        y = y_qp;
        if (cur.violation_max <= o.kkt_tolerance) {
          out.converged = true;
          out.reason = "step tolerance";
        } else {
          out.reason = "locally infeasible";
        }
        break;
      }

      const double phi0 = cur.f + mu * cur.violation_l1;
      double slope = cur.grad.dot(step) - mu * (cur.violation_l1 - model_violation);
      if (!(slope < 0)) { slope = -1e-12; }
      double alpha = 1.0;
      bool accepted = false;
      Point next;
      for (int bt = 0; bt <= o.max_backtracks; ++bt) {
        next = evaluate(cur.x + alpha * step, p, lin);
        if (next.finite && next.f + mu * next.violation_l1 <= phi0 + o.armijo * alpha * slope) {
          accepted = true;
          break;
        }
        alpha *= o.backtrack;
      }
      if (!accepted) {
        y = y_qp;
        if (kkt_residual(cur, y, n_in) <= o.kkt_tolerance) {
          out.converged = true;
          out.reason = "KKT tolerance";
        } else {
          out.reason = "line search failed";
        }
        break;
      }

      const Eigen::VectorXd s = next.x - cur.x;
      const Eigen::VectorXd dl = (next.grad + next.jac.transpose() * y_qp) - (cur.grad + cur.jac.transpose() * y_qp);
      curvature_failures = detail::damped_bfgs_update(b, s, dl) ? 0 : curvature_failures + 1;
      if (curvature_failures >= 2) {
        b.setIdentity();
        curvature_failures = 0;
      }
      cur = std::move(next);
      y = y_qp;
      stats_.iterations = it;
      stats_.objective_history.push_back(cur.f);
      stats_.step_norm_history.push_back(detail::inf_norm_or_zero(s));
    }
    if (!out.converged && out.reason == "max-iterations" && kkt_residual(cur, y, n_in) <= o.kkt_tolerance) {
      out.converged = true;
      out.reason = "KKT tolerance";
    }
    multipliers_ = y;
    out.x = cur.x;
    out.iterations = stats_.iterations;
    return out;
  }

  Stats statistics() const override { return stats_; }

  /// Multipliers of the stacked rows [k; g; a; h] from the last solve.
  const Eigen::VectorXd & multipliers() const noexcept { return multipliers_; }

private:
  struct Point
  {
    Eigen::VectorXd x;
    double f = 0.0;
    Eigen::VectorXd grad;
    Eigen::VectorXd c;    // [k; g; a; h]
    Eigen::MatrixXd jac;  // [M; Jg; A; Jh]
    double violation_l1 = 0.0;
    double violation_max = 0.0;
    bool finite = false;
  };

  Point evaluate(const Eigen::VectorXd & x, const Eigen::VectorXd & p, const LinearConstraints & lin) const
  {
    const Problem & pr = *problem_;
    Point pt;
    pt.x = x;
    pt.f = pr.objective(x, p);
    pt.grad = pr.gradient(x, p);
    const auto [jg, jh] = pr.nonlinear_jacobians(x, p);
    const ConstraintValues cv = pr.constraints(x, p);
    const int nk = pr.n_k(), ng = pr.n_g(), na = pr.n_a(), nh = pr.n_h();
    pt.c.resize(nk + ng + na + nh);
    pt.c << cv.k, cv.g, cv.a, cv.h;
    pt.jac.resize(nk + ng + na + nh, pr.n_x());
    pt.jac << lin.M, jg, lin.A, jh;
    for (int i = 0; i < pt.c.size(); ++i) {
      const double v = i < nk + ng ? std::max(0.0, -pt.c(i)) : std::abs(pt.c(i));
      pt.violation_l1 += v;
      pt.violation_max = std::max(pt.violation_max, v);
    }
    pt.finite = std::isfinite(pt.f) && pt.grad.allFinite() && pt.c.allFinite() && pt.jac.allFinite();
    return pt;
  }

  static double kkt_residual(const Point & pt, const Eigen::VectorXd & y, int n_in)
  {
    double res = std::max(detail::inf_norm_or_zero(pt.grad + pt.jac.transpose() * y), pt.violation_max);
    for (int i = 0; i < n_in; ++i) {
      res = std::max(res, std::max(0.0, y(i)));
      res = std::max(res, std::abs(y(i) * pt.c(i)));
    }
    return res;
  }

  /**
   * @brief Elastic subproblem: nonlinear rows get non-negative slacks priced at `weight`.
   *
   * Linear rows stay hard; failure here means the linear constraints themselves are infeasible.
   */
  bool elastic_step(const Point & pt, const Eigen::MatrixXd & b, double weight, int nk, int ng, int na, int nh,
                    Eigen::VectorXd & step, Eigen::VectorXd & y_out, double & model_violation) const
  {
    const int n = static_cast<int>(pt.x.size());
    const int ns = ng + 2 * nh;
    const int m = nk + ng + na + nh;
    const double inf = std::numeric_limits<double>::infinity();
    QpData d;
    d.P = Eigen::MatrixXd::Zero(n + ns, n + ns);
    d.P.topLeftCorner(n, n) = b;
    d.q.resize(n + ns);
    d.q << pt.grad, Eigen::VectorXd::Constant(ns, weight);
    d.C = Eigen::MatrixXd::Zero(m + ns, n + ns);
    d.C.topLeftCorner(m, n) = pt.jac;
    for (int i = 0; i < ng; ++i) { d.C(nk + i, n + i) = 1.0; }
    for (int i = 0; i < nh; ++i) {
      d.C(nk + ng + na + i, n + ng + i) = 1.0;
      d.C(nk + ng + na + i, n + ng + nh + i) = -1.0;
    }
    d.C.bottomRightCorner(ns, ns).setIdentity();
    d.l.resize(m + ns);
    d.u.resize(m + ns);
    d.l << -pt.c, Eigen::VectorXd::Zero(ns);
    d.u << Eigen::VectorXd::Constant(nk + ng, inf), -pt.c.tail(na + nh), Eigen::VectorXd::Constant(ns, inf);
    const QpResult r = solve_qp(d, options_.qp);
    if (r.status != QpStatus::Solved) { return false; }
    step = r.x.head(n);
    y_out = r.y.head(m);
    model_violation = r.x.tail(ns).sum();
    return true;
  }

  const Problem * problem_ = nullptr;
  SolverOptions options_;
  Stats stats_;
  Eigen::VectorXd multipliers_;
};

}  // namespace taskopt
