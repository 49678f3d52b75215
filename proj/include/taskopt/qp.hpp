#pragma once

/**
 * @file
 * @brief Dense operator-splitting (ADMM) solver for convex quadratic programs
 *
 *   min 1/2 x'Px + q'x   s.t.   l <= Cx <= u
 *
 * following the OSQP iteration: Ruiz equilibration, per-row penalties, over-relaxation,
 * adaptive penalty updates, infeasibility certificates and active-set polishing. Multipliers
 * satisfy Px + q + C'y = 0 with y <= 0 on rows at their lower bound and y >= 0 at the upper.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "taskopt/error.hpp"

namespace taskopt {

struct QpSettings
{
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  int max_iterations = 4000;
  double eps_abs = 1e-8;
  double eps_rel = 1e-8;
  double eps_primal_infeasible = 1e-7;
  double eps_dual_infeasible = 1e-7;
  bool adaptive_rho = true;
  int adaptive_rho_interval = 25;
  double adaptive_rho_tolerance = 5.0;
  int scaling_iterations = 10;
  bool polish = true;
  int polish_interval = 25;
  double polish_delta = 1e-9;
  int polish_refinements = 5;
  bool record_history = false;

  void validate() const
  {
    if (!(rho > 0) || !(sigma > 0) || !(eps_abs > 0) || !(eps_rel >= 0) || !(eps_primal_infeasible > 0) ||
        !(eps_dual_infeasible > 0) || !(polish_delta > 0)) {
      throw ValueError("QP settings: penalties and tolerances must be positive");
    }
    if (!(alpha > 0 && alpha < 2)) { throw ValueError("QP settings: relaxation must lie in (0, 2)"); }
    if (max_iterations < 1 || adaptive_rho_interval < 1 || polish_interval < 1) {
      throw ValueError("QP settings: iteration counts must be positive");
    }
  }
};

enum class QpStatus { Solved, MaxIterations, PrimalInfeasible, DualInfeasible, NonConvex };

inline const char * to_string(QpStatus s) noexcept
{
  switch (s) {
  case QpStatus::Solved: return "solved";
  case QpStatus::MaxIterations: return "max-iterations";
  case QpStatus::PrimalInfeasible: return "primal-infeasible";
  case QpStatus::DualInfeasible: return "dual-infeasible";
  default: return "non-convex";
  }
}

struct QpData
{
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd C;
  Eigen::VectorXd l;
  Eigen::VectorXd u;
};

struct QpResult
{
  QpStatus status = QpStatus::MaxIterations;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  int iterations = 0;
  bool polished = false;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  std::vector<double> objective_history;  // filled when record_history is set
  std::vector<double> step_history;
};

namespace detail {

inline double inf_norm(const Eigen::VectorXd & v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Bound violation max(l - v, v - u, 0), infinity-norm.
inline double bound_violation(const Eigen::VectorXd & v, const Eigen::VectorXd & l, const Eigen::VectorXd & u)
{
  double out = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) { out = std::max({out, l(i) - v(i), v(i) - u(i)}); }
  return out;
}

class AdmmQp
{
public:
  AdmmQp(const QpData & data, const QpSettings & settings) : d_(data), s_(settings)
  {
    s_.validate();
    n_ = static_cast<int>(d_.q.size());
    m_ = static_cast<int>(d_.l.size());
    if (d_.P.rows() != n_ || d_.P.cols() != n_ || d_.C.rows() != m_ || (m_ > 0 && d_.C.cols() != n_) ||
        d_.u.size() != m_) {
      throw ShapeError("QP data dimensions are inconsistent");
    }
    if (m_ == 0) { d_.C.resize(0, n_); }
    for (int i = 0; i < m_; ++i) {
      if (!(d_.l(i) <= d_.u(i))) { throw ValueError("QP bounds: l > u in row " + std::to_string(i)); }
    }
    scale();
  }

  QpResult solve(const std::optional<Eigen::VectorXd> & x0, const std::optional<Eigen::VectorXd> & y0)
  {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m_);
    if (x0 && x0->size() == n_) { x = D_.cwiseInverse().cwiseProduct(*x0); }
    if (y0 && y0->size() == m_) { y = cost_scale_ * E_.cwiseInverse().cwiseProduct(*y0); }
    Eigen::VectorXd z = (Cs_ * x).cwiseMax(ls_).cwiseMin(us_);

    set_rho(s_.rho);
    if (!factor()) { return non_convex(); }

    QpResult result;
    auto record = [&](const Eigen::VectorXd & xs, double step) {
      if (!s_.record_history) { return; }
      result.objective_history.push_back(objective(D_.cwiseProduct(xs)));
      result.step_history.push_back(step);
    };
    record(x, 0.0);
    for (int k = 1; k <= s_.max_iterations; ++k) {
      const Eigen::VectorXd rhs = s_.sigma * x - qs_ + Cs_.transpose() * (rho_.cwiseProduct(z) - y);
      const Eigen::VectorXd x_tilde = llt_.solve(rhs);
      const Eigen::VectorXd z_tilde = Cs_ * x_tilde;
      const Eigen::VectorXd x_next = s_.alpha * x_tilde + (1.0 - s_.alpha) * x;
      const Eigen::VectorXd z_relaxed = s_.alpha * z_tilde + (1.0 - s_.alpha) * z;
      const Eigen::VectorXd z_next = (z_relaxed + rho_.cwiseInverse().cwiseProduct(y)).cwiseMax(ls_).cwiseMin(us_);
      const Eigen::VectorXd y_next = y + rho_.cwiseProduct(z_relaxed - z_next);
      const Eigen::VectorXd dx = x_next - x;
      const Eigen::VectorXd dy = y_next - y;
      x = x_next;
      z = z_next;
      y = y_next;
      result.iterations = k;
      record(x, inf_norm(D_.cwiseProduct(dx)));

      const Residuals r = residuals(x, z, y);
      if (!std::isfinite(r.primal) || !std::isfinite(r.dual)) { return non_convex(k); }
      if (r.primal <= r.eps_primal && r.dual <= r.eps_dual) {
        result.status = QpStatus::Solved;
        break;
      }
      if (primal_infeasible(dy)) { return finish_infeasible(QpStatus::PrimalInfeasible, result, D_.cwiseProduct(x), y); }
      if (dual_infeasible(dx)) { return finish_infeasible(QpStatus::DualInfeasible, result, D_.cwiseProduct(x), y); }

      if (s_.polish && k % s_.polish_interval == 0) {
        if (auto polished = polish(x, z, y, r)) {
          return adopt(std::move(*polished), result);
        }
      }
      if (s_.adaptive_rho && k % s_.adaptive_rho_interval == 0 && m_ > 0) {
        const double candidate = adapted_rho(x, z, y);
        if (candidate > rho_scalar_ * s_.adaptive_rho_tolerance || candidate < rho_scalar_ / s_.adaptive_rho_tolerance) {
          set_rho(candidate);
          if (!factor()) { return non_convex(k); }
        }
      }
    }

    const Residuals r = residuals(x, z, y);
    if (result.status == QpStatus::Solved && s_.polish) {
      if (auto polished = polish(x, z, y, r)) {
        return adopt(std::move(*polished), result);
      }
    }
    result.x = D_.cwiseProduct(x);
    result.y = E_.cwiseProduct(y) / cost_scale_;
    result.primal_residual = r.primal;
    result.dual_residual = r.dual;
    result.objective = objective(result.x);
    return result;
  }

private:
  struct Residuals
  {
    double primal, dual, eps_primal, eps_dual;
  };

  void scale()
  {
    D_ = Eigen::VectorXd::Ones(n_);
    E_ = Eigen::VectorXd::Ones(m_);
    cost_scale_ = 1.0;
    Ps_ = d_.P;
    qs_ = d_.q;
    Cs_ = d_.C;
    auto clamp_norm = [](double v) { return v < 1e-4 ? 1.0 : std::min(v, 1e4); };
    for (int it = 0; it < s_.scaling_iterations && n_ > 0; ++it) {
      Eigen::VectorXd dn(n_);
      for (int j = 0; j < n_; ++j) {
        double v = Ps_.col(j).cwiseAbs().maxCoeff();
        if (m_ > 0) { v = std::max(v, Cs_.col(j).cwiseAbs().maxCoeff()); }
        dn(j) = 1.0 / std::sqrt(clamp_norm(v));
      }
      Eigen::VectorXd em(m_);
      for (int i = 0; i < m_; ++i) { em(i) = 1.0 / std::sqrt(clamp_norm(Cs_.row(i).cwiseAbs().maxCoeff())); }
      Ps_ = dn.asDiagonal() * Ps_ * dn.asDiagonal();
      Cs_ = em.asDiagonal() * Cs_ * dn.asDiagonal();
      qs_ = dn.cwiseProduct(qs_);
      D_ = D_.cwiseProduct(dn);
      E_ = E_.cwiseProduct(em);

      double mean_col = 0.0;
      for (int j = 0; j < n_; ++j) { mean_col += Ps_.col(j).cwiseAbs().maxCoeff(); }
      mean_col /= n_;
      const double gamma = 1.0 / clamp_norm(std::max(mean_col, inf_norm(qs_)));
      Ps_ *= gamma;
      qs_ *= gamma;
      cost_scale_ *= gamma;
    }
    ls_ = E_.cwiseProduct(d_.l);
    us_ = E_.cwiseProduct(d_.u);
  }

  void set_rho(double rho)
  {
    rho_scalar_ = std::clamp(rho, 1e-6, 1e6);
    rho_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      const bool free_row = std::isinf(d_.l(i)) && std::isinf(d_.u(i));
      const bool equality = d_.u(i) - d_.l(i) <= 1e-4 * std::max(1.0, std::abs(d_.l(i)));
      rho_(i) = free_row ? 1e-6 : equality ? 1e3 * rho_scalar_ : rho_scalar_;
    }
  }

  bool factor()
  {
    Eigen::MatrixXd k = Ps_;
    k.diagonal().array() += s_.sigma;
    if (m_ > 0) { k += Cs_.transpose() * rho_.asDiagonal() * Cs_; }
    llt_.compute(k);
    return llt_.info() == Eigen::Success;
  }

  Residuals residuals(const Eigen::VectorXd & x, const Eigen::VectorXd & z, const Eigen::VectorXd & y) const
  {
    const Eigen::VectorXd cx = Cs_ * x;
    const Eigen::VectorXd einv = E_.cwiseInverse();
    const Eigen::VectorXd dinv = D_.cwiseInverse();
    const Eigen::VectorXd px = Ps_ * x;
    const Eigen::VectorXd cty = Cs_.transpose() * y;
    Residuals r;
    r.primal = inf_norm(einv.cwiseProduct(cx - z));
    r.dual = inf_norm(dinv.cwiseProduct(px + qs_ + cty)) / cost_scale_;
    r.eps_primal = s_.eps_abs + s_.eps_rel * std::max(inf_norm(einv.cwiseProduct(cx)), inf_norm(einv.cwiseProduct(z)));
    r.eps_dual = s_.eps_abs + s_.eps_rel / cost_scale_ *
                                std::max({inf_norm(dinv.cwiseProduct(px)), inf_norm(dinv.cwiseProduct(cty)),
                                          inf_norm(dinv.cwiseProduct(qs_))});
    return r;
  }

  double adapted_rho(const Eigen::VectorXd & x, const Eigen::VectorXd & z, const Eigen::VectorXd & y) const
  {
    const Eigen::VectorXd cx = Cs_ * x;
    const double prim = inf_norm(cx - z) / std::max({inf_norm(cx), inf_norm(z), 1e-30});
    const Eigen::VectorXd px = Ps_ * x;
    const Eigen::VectorXd cty = Cs_.transpose() * y;
    const double dual = inf_norm(px + qs_ + cty) / std::max({inf_norm(px), inf_norm(cty), inf_norm(qs_), 1e-30});
    return rho_scalar_ * std::sqrt(prim / std::max(dual, 1e-30));
  }

  bool primal_infeasible(const Eigen::VectorXd & dy_scaled) const
  {
    if (m_ == 0) { return false; }
    const Eigen::VectorXd dy = E_.cwiseProduct(dy_scaled);
    const double norm = inf_norm(dy);
    if (norm < 1e-30) { return false; }
    const double eps = s_.eps_primal_infeasible * norm;
    if (inf_norm(D_.cwiseInverse().cwiseProduct(Cs_.transpose() * dy_scaled)) > eps) { return false; }
    double support = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (dy(i) > eps) {
        if (std::isinf(d_.u(i))) { return false; }
        support += d_.u(i) * dy(i);
      } else if (dy(i) < -eps) {
        if (std::isinf(d_.l(i))) { return false; }
        support += d_.l(i) * dy(i);
      }
    }
    return support < -eps;
  }

  bool dual_infeasible(const Eigen::VectorXd & dx_scaled) const
  {
    const Eigen::VectorXd dx = D_.cwiseProduct(dx_scaled);
    const double norm = inf_norm(dx);
    if (norm < 1e-30) { return false; }
    const double eps = s_.eps_dual_infeasible * norm;
    if (inf_norm(d_.P * dx) > eps || d_.q.dot(dx) > -eps) { return false; }
    const Eigen::VectorXd cdx = d_.C * dx;
    for (int i = 0; i < m_; ++i) {
      const bool lo = std::isfinite(d_.l(i));
      const bool hi = std::isfinite(d_.u(i));
      if (hi && cdx(i) > eps) { return false; }
      if (lo && cdx(i) < -eps) { return false; }
    }
    return true;
  }

  /// Solve the equality-constrained QP on a guessed active set; keep it only if it is a KKT point.
  std::optional<QpResult> polish(const Eigen::VectorXd & xs, const Eigen::VectorXd & zs, const Eigen::VectorXd & ys,
                                 const Residuals & r) const
  {
    const Eigen::VectorXd z = E_.cwiseInverse().cwiseProduct(zs);
    const Eigen::VectorXd y = E_.cwiseProduct(ys) / cost_scale_;
    std::vector<int> active;
    std::vector<double> target;
    std::vector<int> side;  // -1 lower, +1 upper, 0 equality
    for (int i = 0; i < m_; ++i) {
      if (d_.l(i) == d_.u(i)) {
        active.push_back(i);
        target.push_back(d_.l(i));
        side.push_back(0);
      } else if (z(i) - d_.l(i) < -y(i)) {
        active.push_back(i);
        target.push_back(d_.l(i));
        side.push_back(-1);
      } else if (d_.u(i) - z(i) < y(i)) {
        active.push_back(i);
        target.push_back(d_.u(i));
        side.push_back(1);
      }
    }
    const int na = static_cast<int>(active.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n_ + na, n_ + na);
    kkt.topLeftCorner(n_, n_) = d_.P;
    Eigen::VectorXd rhs(n_ + na);
    rhs.head(n_) = -d_.q;
    for (int a = 0; a < na; ++a) {
      kkt.block(n_ + a, 0, 1, n_) = d_.C.row(active[static_cast<std::size_t>(a)]);
      kkt.block(0, n_ + a, n_, 1) = d_.C.row(active[static_cast<std::size_t>(a)]).transpose();
      rhs(n_ + a) = target[static_cast<std::size_t>(a)];
    }
    Eigen::MatrixXd regularized = kkt;
    regularized.diagonal().head(n_).array() += s_.polish_delta;
    regularized.diagonal().tail(na).array() -= s_.polish_delta;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(regularized);
    Eigen::VectorXd sol = lu.solve(rhs);
    for (int it = 0; it < s_.polish_refinements; ++it) { sol += lu.solve(rhs - kkt * sol); }
    if (!sol.allFinite()) { return std::nullopt; }

    QpResult out;
    out.x = sol.head(n_);
    out.y = Eigen::VectorXd::Zero(m_);
    for (int a = 0; a < na; ++a) { out.y(active[static_cast<std::size_t>(a)]) = sol(n_ + a); }
    const Eigen::VectorXd cx = d_.C * out.x;
    out.primal_residual = bound_violation(cx, d_.l, d_.u);
    out.dual_residual = inf_norm(d_.P * out.x + d_.q + d_.C.transpose() * out.y);
    const double tol_p = std::max(r.eps_primal, 1e-9);
    const double tol_d = std::max(r.eps_dual, 1e-9);
    if (!(out.primal_residual <= tol_p && out.dual_residual <= tol_d)) { return std::nullopt; }
    const double sign_tol = 1e-9 * std::max(1.0, inf_norm(out.y));
    for (int a = 0; a < na; ++a) {
      const double ya = sol(n_ + a);
      const int sd = side[static_cast<std::size_t>(a)];
      if ((sd < 0 && ya > sign_tol) || (sd > 0 && ya < -sign_tol)) { return std::nullopt; }
    }
    out.status = QpStatus::Solved;
    out.polished = true;
    out.objective = objective(out.x);
    return out;
  }

  QpResult adopt(QpResult polished, const QpResult & running) const
  {
    polished.iterations = running.iterations;
    polished.objective_history = running.objective_history;
    polished.step_history = running.step_history;
    if (!polished.objective_history.empty()) { polished.objective_history.back() = polished.objective; }
    return polished;
  }

  double objective(const Eigen::VectorXd & x) const { return 0.5 * x.dot(d_.P * x) + d_.q.dot(x); }

  QpResult non_convex(int k = 0) const
  {
    QpResult r;
    r.status = QpStatus::NonConvex;
    r.iterations = k;
    r.x = Eigen::VectorXd::Zero(n_);
    r.y = Eigen::VectorXd::Zero(m_);
    return r;
  }

  QpResult finish_infeasible(QpStatus status, QpResult r, Eigen::VectorXd x, const Eigen::VectorXd & ys) const
  {
    r.status = status;
    r.x = std::move(x);
    r.y = E_.cwiseProduct(ys) / cost_scale_;
    return r;
  }

  QpData d_;
  QpSettings s_;
  int n_ = 0;
  int m_ = 0;
  Eigen::MatrixXd Ps_, Cs_;
  Eigen::VectorXd qs_, ls_, us_, D_, E_;
  double cost_scale_ = 1.0;
  double rho_scalar_ = 0.1;
  Eigen::VectorXd rho_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace detail

/// Solve a convex QP; x0/y0 warm-start the iteration when their sizes match.
inline QpResult solve_qp(const QpData & data, const QpSettings & settings = {},
                         const std::optional<Eigen::VectorXd> & x0 = std::nullopt,
                         const std::optional<Eigen::VectorXd> & y0 = std::nullopt)
{
  detail::AdmmQp solver(data, settings);
  return solver.solve(x0, y0);
}

/// Max of stationarity, bound violation and complementarity |y_i| * distance-to-bound.
inline double qp_kkt_residual(const QpData & d, const Eigen::VectorXd & x, const Eigen::VectorXd & y)
{
  const Eigen::VectorXd cx = d.C * x;
  double res = std::max(detail::inf_norm(d.P * x + d.q + d.C.transpose() * y), detail::bound_violation(cx, d.l, d.u));
  for (Eigen::Index i = 0; i < cx.size(); ++i) {
    const double to_lower = std::isfinite(d.l(i)) ? cx(i) - d.l(i) : std::numeric_limits<double>::infinity();
    const double to_upper = std::isfinite(d.u(i)) ? d.u(i) - cx(i) : std::numeric_limits<double>::infinity();
    const double neg = std::max(0.0, -y(i));
    const double pos = std::max(0.0, y(i));
    if (neg > 0) { res = std::max(res, std::isfinite(to_lower) ? neg * std::abs(to_lower) : neg); }
    if (pos > 0) { res = std::max(res, std::isfinite(to_upper) ? pos * std::abs(to_upper) : pos); }
  }
  return res;
}

}  // namespace taskopt
