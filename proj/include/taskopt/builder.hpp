#pragma once

/**
 * @file
 * @brief Time-horizon task builder: models, variables, parameters, costs and constraints,
 * transcribed into a canonical Problem.
 *
 * Every model gets one decision block per time derivative order d, named
 * "<model>/<prefix>" with one 'd' prepended per order ("arm/q", "arm/dq", "path/y", ...). Robot
 * blocks use prefix "q", task blocks "y". Blocks have T columns when derivs_align is set and
 * T - d columns otherwise.
 */

#include <Eigen/Core>

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "taskopt/problem.hpp"
#include "taskopt/robot_model.hpp"
#include "taskopt/task_model.hpp"

namespace taskopt {

/// Lower bound on optimized time increments, seconds.
inline constexpr double kMinTimeIncrement = 1e-4;

class OptimizationBuilder
{
public:
  OptimizationBuilder(int T, std::vector<RobotModel> robots = {}, std::vector<TaskModel> tasks = {},
                      bool derivs_align = false, bool optimize_time = false)
      : T_(T), derivs_align_(derivs_align), optimize_time_(optimize_time)
  {
    if (T < 1) { throw ValueError("horizon T must be at least 1"); }
    for (auto & r : robots) {
      add_model(r.name(), "q", r.ndof(), r.time_derivs());
      robots_.emplace(r.name(), std::move(r));
    }
    for (const auto & t : tasks) { add_model(t.name(), "y", t.dim(), t.time_derivs()); }
    if (optimize_time_) {
      if (T_ < 2) { throw ValueError("optimize_time needs T >= 2"); }
      decision_.add("dt", Expression::symbol("dt", 1, T_ - 1));
    }
  }

  int T() const noexcept { return T_; }
  bool derivs_align() const noexcept { return derivs_align_; }
  bool optimize_time() const noexcept { return optimize_time_; }
  const VariableContainer & decision() const noexcept { return decision_; }
  const VariableContainer & parameters() const noexcept { return parameters_; }
  const std::vector<std::string> & warnings() const noexcept { return warnings_; }

  const RobotModel & robot(const std::string & name) const
  {
    const auto it = robots_.find(name);
    if (it == robots_.end()) { throw LookupError("no robot model named '" + name + "'"); }
    return it->second;
  }

  /// Decision block name for a model's derivative order.
  std::string state_name(const std::string & model, int d) const
  {
    const ModelInfo & m = model_info(model);
    return model + "/" + std::string(static_cast<std::size_t>(std::max(d, 0)), 'd') + m.prefix;
  }

  Expression get_model_states(const std::string & model, int time_deriv = 0) const
  {
    const ModelInfo & m = model_info(model);
    if (std::find(m.derivs.begin(), m.derivs.end(), time_deriv) == m.derivs.end()) {
      throw LookupError("model '" + model + "' has no time derivative of order " + std::to_string(time_deriv));
    }
    return decision_.get(state_name(model, time_deriv));
  }

  /// Column t of a state block; negative t counts from the end.
  Expression get_model_state(const std::string & model, int t, int time_deriv = 0) const
  {
    const Expression states = get_model_states(model, time_deriv);
    const int cols = states.cols();
    const int idx = t < 0 ? cols + t : t;
    if (idx < 0 || idx >= cols) {
      throw ShapeError("time index " + std::to_string(t) + " is out of range for '" + state_name(model, time_deriv) +
                       "' with " + std::to_string(cols) + " columns");
    }
    return states.col(idx);
  }

  /// The 1 x (T-1) block of time increments; only present with optimize_time.
  Expression get_dt() const
  {
    if (!optimize_time_) { throw LookupError("time increments are not decision variables in this builder"); }
    return decision_.get("dt");
  }

  Expression add_decision_variables(const std::string & name, int rows = 1, int cols = 1)
  {
    Expression block = Expression::symbol(name, rows, cols);
    decision_.add(name, block);
    return block;
  }

  Expression add_parameter(const std::string & name, int rows = 1, int cols = 1)
  {
    Expression block = Expression::symbol(name, rows, cols, LeafKind::Parameter);
    parameters_.add(name, block);
    return block;
  }

  void add_cost_term(const std::string & name, const Expression & term)
  {
    if (!term.is_scalar()) {
      throw ShapeError("cost term '" + name + "' must be 1x1, got " + std::to_string(term.rows()) + "x" +
                       std::to_string(term.cols()));
    }
    for (const auto & [n, e] : costs_) {
      if (n == name) { throw DuplicateNameError("cost term '" + name + "' already exists"); }
    }
    costs_.emplace_back(name, term);
  }

  /// lhs == rhs, stored as lhs - rhs == 0.
  void add_equality_constraint(const std::string & name, const Expression & lhs, const Expression & rhs = 0.0)
  {
    add_constraint(name, lhs - rhs, true);
  }

  /// lhs <= rhs, stored as rhs - lhs >= 0.
  void add_leq_inequality_constraint(const std::string & name, const Expression & lhs, const Expression & rhs)
  {
    add_constraint(name, rhs - lhs, false);
  }

  /// Position limits for order 0 and velocity limits for order 1, at every time index, where finite.
  void enforce_model_limits(const std::string & model)
  {
    const RobotModel & r = robot(model);
    for (int d : r.time_derivs()) {
      if (d > 1) { continue; }
      const Eigen::VectorXd lower = d == 0 ? r.lower_limits() : Eigen::VectorXd(-r.velocity_limits());
      const Eigen::VectorXd upper = d == 0 ? r.upper_limits() : r.velocity_limits();
      const Expression states = get_model_states(model, d);
      std::vector<Expression> lo_rows, hi_rows;
      for (int t = 0; t < states.cols(); ++t) {
        for (int i = 0; i < r.ndof(); ++i) {
          const bool bounded = d == 0 ? r.has_position_limits(i) : std::isfinite(upper(i));
          if (!bounded) { continue; }
          lo_rows.push_back(states(i, t) - lower(i));
          hi_rows.push_back(upper(i) - states(i, t));
        }
      }
      if (lo_rows.empty()) { continue; }
      const std::string base = state_name(model, d);
      add_constraint(base + "/lower", vertcat(std::span<const Expression>(lo_rows)), false);
      add_constraint(base + "/upper", vertcat(std::span<const Expression>(hi_rows)), false);
    }
  }

  /**
   * @brief Explicit Euler: s^(d-1)_{t+1} = s^(d-1)_t + dt_t * s^(d)_t.
   *
   * dt is a scalar or a 1 x (T-1) row when time is fixed, and is ignored (the "dt" decision block
   * is used instead) when optimize_time is set.
   */
  void integrate_model_states(const std::string & model, int time_deriv, const std::optional<Expression> & dt = {})
  {
    if (time_deriv < 1) { throw ValueError("integration needs a time derivative order >= 1"); }
    const Expression lower = get_model_states(model, time_deriv - 1);
    const Expression upper = get_model_states(model, time_deriv);
    Expression step;
    if (optimize_time_) {
      step = get_dt();
      if (!dt_bounded_) {
        add_constraint("dt/lower", step.vec() - kMinTimeIncrement, false);
        dt_bounded_ = true;
      }
    } else {
      if (!dt) { throw ValueError("integrate_model_states needs dt when time is not optimized"); }
      if (!dt->is_scalar() && dt->numel() != T_ - 1) {
        throw ShapeError("dt must be a scalar or have T - 1 entries");
      }
      step = *dt;
    }
    std::vector<Expression> rows;
    for (int t = 0; t + 1 < lower.cols(); ++t) {
      const Expression dt_t = step.is_scalar() ? step : step(t);
      rows.push_back(lower.col(t + 1) - (lower.col(t) + dt_t * upper.col(t)));
    }
    if (rows.empty()) { return; }
    add_constraint(state_name(model, time_deriv) + "/integration", vertcat(std::span<const Expression>(rows)), true);
  }

  /// Sum the cost terms, route every constraint, and compile evaluators.
  Problem build() const
  {
    if (!violations_.empty()) {
      std::string msg = "constant constraint rows are violated:";
      for (const auto & v : violations_) { msg += " " + v; }
      throw ValueError(msg);
    }
    if (costs_.empty() && constraints_.empty()) { throw StructureError("nothing to optimize: no cost terms or constraints"); }
    Expression f = 0.0;
    for (const auto & [name, term] : costs_) { f = f + term; }
    return Problem(decision_, parameters_, f, constraints_);
  }

private:
  struct ModelInfo
  {
    std::string prefix;
    int dim;
    std::vector<int> derivs;
  };

  void add_model(const std::string & name, const char * prefix, int dim, const std::vector<int> & derivs)
  {
    if (models_.count(name)) { throw DuplicateNameError("model '" + name + "' is registered twice"); }
    models_.emplace(name, ModelInfo{prefix, dim, derivs});
    for (int d : derivs) {
      const int cols = derivs_align_ ? T_ : T_ - d;
      if (cols < 1) {
        throw ValueError("model '" + name + "' order " + std::to_string(d) + " needs T > " + std::to_string(d) +
                         " without derivs_align");
      }
      const std::string block = state_name(name, d);
      decision_.add(block, Expression::symbol(block, dim, cols));
    }
  }

  const ModelInfo & model_info(const std::string & model) const
  {
    const auto it = models_.find(model);
    if (it == models_.end()) { throw LookupError("no model named '" + model + "'"); }
    return it->second;
  }

  void add_constraint(const std::string & name, const Expression & canonical, bool equality)
  {
    for (const auto & c : constraints_) {
      if (c.name == name) { throw DuplicateNameError("constraint '" + name + "' already exists"); }
    }
    const Expression e = canonical.vec();
    std::vector<NodePtr> kept;
    for (int i = 0; i < e.rows(); ++i) {
      const NodePtr & n = e.node(i);
      if (!n->is_constant()) {
        kept.push_back(n);
        continue;
      }
      const bool ok = equality ? n->value == 0.0 : n->value >= 0.0;
      const std::string where = "'" + name + "' row " + std::to_string(i);
      if (ok) {
        warnings_.push_back("constraint " + where + " is constant and always satisfied; dropped");
      } else {
        violations_.push_back(where);
      }
    }
    if (kept.empty()) { return; }
    const int rows = static_cast<int>(kept.size());
    constraints_.push_back({name, Expression(rows, 1, std::move(kept)), equality});
  }

  int T_;
  bool derivs_align_;
  bool optimize_time_;
  bool dt_bounded_ = false;
  std::map<std::string, ModelInfo> models_;
  std::map<std::string, RobotModel> robots_;
  VariableContainer decision_;
  VariableContainer parameters_;
  std::vector<std::pair<std::string, Expression>> costs_;
  std::vector<ConstraintSpec> constraints_;
  std::vector<std::string> warnings_;
  std::vector<std::string> violations_;
};

}  // namespace taskopt
