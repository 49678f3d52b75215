#pragma once

/**
 * @file
 * @brief Canonical nonlinear program
 *
 *   min f(X; P)  s.t.  k = M(P) X + c(P) >= 0,  a = A(P) X + b(P) = 0,  g(X; P) >= 0,  h(X; P) = 0
 *
 * with compiled evaluators for values and first derivatives, the exact Hessian of f, and a
 * type tag derived from the structure of f and of the constraints.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "taskopt/autodiff.hpp"
#include "taskopt/function.hpp"
#include "taskopt/var_container.hpp"

namespace taskopt {

enum class ProblemType {
  UnconstrainedQP,
  LinearConstrainedQP,
  NonlinearConstrainedQP,
  UnconstrainedNLP,
  LinearConstrainedNLP,
  NLP,
};

inline const char * to_string(ProblemType t) noexcept
{
  switch (t) {
  case ProblemType::UnconstrainedQP: return "unconstrained-quadratic";
  case ProblemType::LinearConstrainedQP: return "linear-constrained-quadratic";
  case ProblemType::NonlinearConstrainedQP: return "nonlinear-constrained-quadratic";
  case ProblemType::UnconstrainedNLP: return "unconstrained-nonlinear";
  case ProblemType::LinearConstrainedNLP: return "linear-constrained-nonlinear";
  default: return "nonlinear-cost-and-constraints";
  }
}

/// k, a, g, h in the canonical form.
enum class Partition { LinearInequality, LinearEquality, NonlinearInequality, NonlinearEquality };

inline bool is_equality(Partition p) noexcept
{
  return p == Partition::LinearEquality || p == Partition::NonlinearEquality;
}

/// A named constraint in canonical form: expr == 0 or expr >= 0 (column vector).
struct ConstraintSpec
{
  std::string name;
  Expression expr;
  bool equality;
};

/// Where the rows of one named constraint ended up.
struct ConstraintBlock
{
  std::string name;
  Partition partition;
  int start;
  int rows;
};

struct ConstraintValues
{
  Eigen::VectorXd k, a, g, h;
};

struct LinearConstraints
{
  Eigen::MatrixXd M;
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

struct FeasibilityReport
{
  double max_equality = 0.0;    // max |a|, |h|
  double max_inequality = 0.0;  // max negative part of k, g
  std::string worst_constraint;
  double worst_residual = 0.0;
  std::vector<std::pair<std::string, double>> residuals;  // per named constraint

  bool feasible(double tol) const noexcept { return max_equality <= tol && max_inequality <= tol; }
};

class Problem
{
public:
  Problem(VariableContainer decision, VariableContainer parameters, Expression objective,
          std::vector<ConstraintSpec> constraints = {})
      : decision_(std::move(decision)), parameters_(std::move(parameters)), f_(std::move(objective))
  {
    if (!f_.is_scalar()) { throw ShapeError("objective must be a scalar"); }
    const Expression x = decision_.stacked();
    const Expression p = parameters_.stacked();
    check_leaves(x, p, f_, "objective");

    std::vector<Expression> m_rows, c_rows, a_rows, b_rows, g_rows, jg_rows, h_rows, jh_rows;
    int nk = 0, na = 0, ng = 0, nh = 0;
    const Expression zero_x = Expression::zeros(x.numel());
    for (auto & spec : constraints) {
      const Expression e = spec.expr.vec();
      check_leaves(x, p, e, "constraint '" + spec.name + "'");
      if (e.empty()) { continue; }
      const Expression j = jacobian(e, x);
      if (!depends_on(j, x)) {
        const Expression offset = substitute(e, x, zero_x);
        if (spec.equality) {
          blocks_.push_back({spec.name, Partition::LinearEquality, na, e.rows()});
          a_rows.push_back(j);
          b_rows.push_back(offset);
          na += e.rows();
        } else {
          blocks_.push_back({spec.name, Partition::LinearInequality, nk, e.rows()});
          m_rows.push_back(j);
          c_rows.push_back(offset);
          nk += e.rows();
        }
      } else if (spec.equality) {
        blocks_.push_back({spec.name, Partition::NonlinearEquality, nh, e.rows()});
        h_rows.push_back(e);
        jh_rows.push_back(j);
        nh += e.rows();
      } else {
        blocks_.push_back({spec.name, Partition::NonlinearInequality, ng, e.rows()});
        g_rows.push_back(e);
        jg_rows.push_back(j);
        ng += e.rows();
      }
      constraint_specs_.push_back(std::move(spec));
    }
    const int n = x.numel();
    m_ = stack(m_rows, 0, n);
    c_ = stack(c_rows, 0, 1);
    a_ = stack(a_rows, 0, n);
    b_ = stack(b_rows, 0, 1);
    g_ = stack(g_rows, 0, 1);
    jg_ = stack(jg_rows, 0, n);
    h_ = stack(h_rows, 0, 1);
    jh_ = stack(jh_rows, 0, n);

    grad_ = taskopt::gradient(f_, x);
    hess_ = taskopt::hessian(f_, x);
    if (!depends_on(f_, x)) {
      cost_class_ = StructureClass::Constant;
    } else if (!depends_on(grad_, x)) {
      cost_class_ = StructureClass::Linear;
    } else if (!depends_on(hess_, x)) {
      cost_class_ = StructureClass::Quadratic;
    } else {
      cost_class_ = StructureClass::Nonlinear;
    }
    const bool quadratic = cost_class_ != StructureClass::Nonlinear;
    const bool nonlinear_constraints = ng + nh > 0;
    const bool linear_constraints = nk + na > 0;
    if (nonlinear_constraints) {
      type_ = quadratic ? ProblemType::NonlinearConstrainedQP : ProblemType::NLP;
    } else if (linear_constraints) {
      type_ = quadratic ? ProblemType::LinearConstrainedQP : ProblemType::LinearConstrainedNLP;
    } else {
      type_ = quadratic ? ProblemType::UnconstrainedQP : ProblemType::UnconstrainedNLP;
    }

    objective_fn_ = Function({x, p}, {f_});
    gradient_fn_ = Function({x, p}, {grad_});
    hessian_fn_ = Function({x, p}, {hess_});
    linear_fn_ = Function({p}, {m_, c_, a_, b_});
    nonlinear_fn_ = Function({x, p}, {g_, h_});
    jacobian_fn_ = Function({x, p}, {jg_, jh_});
  }

  const VariableContainer & decision() const noexcept { return decision_; }
  const VariableContainer & parameters() const noexcept { return parameters_; }
  int n_x() const noexcept { return decision_.size(); }
  int n_p() const noexcept { return parameters_.size(); }
  int n_k() const noexcept { return m_.rows(); }
  int n_a() const noexcept { return a_.rows(); }
  int n_g() const noexcept { return g_.rows(); }
  int n_h() const noexcept { return h_.rows(); }
  ProblemType type() const noexcept { return type_; }
  StructureClass cost_class() const noexcept { return cost_class_; }
  const std::vector<ConstraintBlock> & blocks() const noexcept { return blocks_; }
  const std::vector<ConstraintSpec> & constraint_specs() const noexcept { return constraint_specs_; }

  const ConstraintBlock & block(const std::string & name) const
  {
    for (const auto & b : blocks_) {
      if (b.name == name) { return b; }
    }
    throw LookupError("no constraint named '" + name + "'");
  }

  // Symbolic pieces, in terms of decision().stacked() and parameters().stacked().
  const Expression & objective_expression() const noexcept { return f_; }
  const Expression & gradient_expression() const noexcept { return grad_; }
  const Expression & hessian_expression() const noexcept { return hess_; }
  const Expression & M() const noexcept { return m_; }
  const Expression & c() const noexcept { return c_; }
  const Expression & A() const noexcept { return a_; }
  const Expression & b() const noexcept { return b_; }
  const Expression & g() const noexcept { return g_; }
  const Expression & h() const noexcept { return h_; }

  double objective(const Eigen::VectorXd & x, const Eigen::VectorXd & p) const
  {
    check(x, p);
    return objective_fn_({x, p})[0](0, 0);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd & x, const Eigen::VectorXd & p) const
  {
    check(x, p);
    return gradient_fn_({x, p})[0];
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd & x, const Eigen::VectorXd & p) const
  {
    check(x, p);
    return hessian_fn_({x, p})[0];
  }

  LinearConstraints linear_constraints(const Eigen::VectorXd & p) const
  {
    if (p.size() != n_p()) { throw ShapeError("parameter vector has the wrong length"); }
    auto out = linear_fn_({p});
    return {std::move(out[0]), Eigen::VectorXd(out[1]), std::move(out[2]), Eigen::VectorXd(out[3])};
  }

  ConstraintValues constraints(const Eigen::VectorXd & x, const Eigen::VectorXd & p) const
  {
    check(x, p);
    const LinearConstraints lin = linear_constraints(p);
    const auto nl = nonlinear_fn_({x, p});
    return {lin.M * x + lin.c, lin.A * x + lin.b, Eigen::VectorXd(nl[0]), Eigen::VectorXd(nl[1])};
  }

  /// Jacobians of g and h.
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> nonlinear_jacobians(const Eigen::VectorXd & x,
                                                                  const Eigen::VectorXd & p) const
  {
    check(x, p);
    auto out = jacobian_fn_({x, p});
    return {std::move(out[0]), std::move(out[1])};
  }

  FeasibilityReport feasibility(const Eigen::VectorXd & x, const Eigen::VectorXd & p) const
  {
    const ConstraintValues v = constraints(x, p);
    FeasibilityReport report;
    for (const auto & blk : blocks_) {
      const Eigen::VectorXd & all = blk.partition == Partition::LinearInequality ? v.k
                                    : blk.partition == Partition::LinearEquality ? v.a
                                    : blk.partition == Partition::NonlinearInequality ? v.g
                                                                                     : v.h;
      const Eigen::VectorXd rows = all.segment(blk.start, blk.rows);
      double residual = 0.0;
      for (Eigen::Index i = 0; i < rows.size(); ++i) {
        const double r = is_equality(blk.partition) ? std::abs(rows(i)) : std::max(0.0, -rows(i));
        residual = std::isnan(r) || std::isnan(residual) ? r + residual : std::max(residual, r);
      }
      report.residuals.emplace_back(blk.name, residual);
      if (std::isnan(residual)) { residual = std::numeric_limits<double>::infinity(); }
      double & bucket = is_equality(blk.partition) ? report.max_equality : report.max_inequality;
      bucket = std::max(bucket, residual);
      if (report.worst_constraint.empty() || residual > report.worst_residual) {
        report.worst_residual = residual;
        report.worst_constraint = blk.name;
      }
    }
    return report;
  }

private:
  static Expression stack(const std::vector<Expression> & parts, int empty_rows, int cols)
  {
    if (parts.empty()) { return Expression::zeros(empty_rows, cols); }
    return vertcat(std::span<const Expression>(parts));
  }

  static void check_leaves(const Expression & x, const Expression & p, const Expression & e, const std::string & what)
  {
    std::unordered_set<const Node *> known;
    for (const auto & n : x.nodes()) { known.insert(n.get()); }
    for (const auto & n : p.nodes()) { known.insert(n.get()); }
    for (const auto & leaf : leaves(e)) {
      if (!known.count(leaf.get())) {
        throw LookupError(what + " uses '" + leaf->block->name + "', which is neither a decision variable nor a parameter");
      }
    }
  }

  void check(const Eigen::VectorXd & x, const Eigen::VectorXd & p) const
  {
    if (x.size() != n_x()) {
      throw ShapeError("decision vector has length " + std::to_string(x.size()) + ", expected " + std::to_string(n_x()));
    }
    if (p.size() != n_p()) {
      throw ShapeError("parameter vector has length " + std::to_string(p.size()) + ", expected " + std::to_string(n_p()));
    }
  }

  VariableContainer decision_;
  VariableContainer parameters_;
  Expression f_, grad_, hess_;
  Expression m_, c_, a_, b_, g_, jg_, h_, jh_;
  std::vector<ConstraintBlock> blocks_;
  std::vector<ConstraintSpec> constraint_specs_;
  StructureClass cost_class_ = StructureClass::Constant;
  ProblemType type_ = ProblemType::UnconstrainedQP;
  Function objective_fn_, gradient_fn_, hessian_fn_, linear_fn_, nonlinear_fn_, jacobian_fn_;
};

}  // namespace taskopt
