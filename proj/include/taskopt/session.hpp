#pragma once

/**
 * @file
 * @brief Solver registry, session lifecycle and trajectory interpolation.
 *
 * setup(tag, options) -> reset_initial_seed / reset_parameters -> solve -> stats. Seeds and
 * parameters not given are zero. A Solution is successful only when the algorithm converged and
 * the returned point is feasible to the KKT tolerance.
 */

#include <Eigen/Core>

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "taskopt/adapters.hpp"

namespace taskopt {

class SolverRegistry
{
public:
  using Factory = std::function<std::unique_ptr<SolverAdapter>()>;

  /// Registry preloaded with "qp", "bfgs" and "sqp".
  static SolverRegistry with_native_solvers()
  {
    SolverRegistry r;
    r.add("qp", [] { return std::make_unique<QpAdapter>(); });
    r.add("bfgs", [] { return std::make_unique<BfgsAdapter>(); });
    r.add("sqp", [] { return std::make_unique<SqpAdapter>(); });
    return r;
  }

  /// Process-wide registry used by sessions by default.
  static SolverRegistry & global()
  {
    static SolverRegistry r = with_native_solvers();
    return r;
  }

  void add(const std::string & tag, Factory factory)
  {
    if (tag.empty()) { throw ValueError("solver tag must not be empty"); }
    if (!factory) { throw ValueError("solver factory for '" + tag + "' is empty"); }
    if (!factories_.emplace(tag, std::move(factory)).second) {
      throw DuplicateNameError("solver '" + tag + "' is already registered");
    }
  }

  bool contains(const std::string & tag) const { return factories_.count(tag) > 0; }

  std::unique_ptr<SolverAdapter> create(const std::string & tag) const
  {
    const auto it = factories_.find(tag);
    if (it == factories_.end()) { throw LookupError("no solver registered as '" + tag + "'"); }
    return it->second();
  }

  std::vector<std::string> tags() const
  {
    std::vector<std::string> out;
    for (const auto & [tag, f] : factories_) { out.push_back(tag); }
    return out;
  }

private:
  std::map<std::string, Factory> factories_;
};

/// Picks the cheapest native algorithm that accepts the classification.
inline std::string default_solver_for(ProblemType t)
{
  switch (t) {
  case ProblemType::UnconstrainedQP:
  case ProblemType::LinearConstrainedQP: return "qp";
  case ProblemType::UnconstrainedNLP: return "bfgs";
  default: return "sqp";
  }
}

struct Solution
{
  bool success = false;
  NamedValues blocks;
  Eigen::VectorXd x;
  double objective = 0.0;
  FeasibilityReport feasibility;
  int iterations = 0;
  double duration_s = 0.0;
  std::string termination;

  const Eigen::MatrixXd & block(const std::string & name) const
  {
    const auto it = blocks.find(name);
    if (it == blocks.end()) { throw LookupError("solution has no block named '" + name + "'"); }
    return it->second;
  }
};

class SolverSession
{
public:
  explicit SolverSession(std::shared_ptr<const Problem> problem,
                         const SolverRegistry & registry = SolverRegistry::global())
      : problem_(std::move(problem)), registry_(&registry)
  {
    if (!problem_) { throw ValueError("solver session needs a problem"); }
    seed_ = Eigen::VectorXd::Zero(problem_->n_x());
    params_ = Eigen::VectorXd::Zero(problem_->n_p());
  }

  explicit SolverSession(Problem problem, const SolverRegistry & registry = SolverRegistry::global())
      : SolverSession(std::make_shared<const Problem>(std::move(problem)), registry)
  {}

  const Problem & problem() const noexcept { return *problem_; }
  const SolverOptions & options() const noexcept { return options_; }
  const std::string & algorithm() const noexcept { return tag_; }

  void setup(const std::string & tag, const SolverOptions & options = {})
  {
    options.validate();
    auto adapter = registry_->create(tag);
    adapter->initialize(*problem_, options);
    adapter_ = std::move(adapter);
    options_ = options;
    tag_ = tag;
    solved_ = false;
  }

  /// Replaces the whole seed; blocks not named are zero.
  void reset_initial_seed(const NamedValues & values) { seed_ = problem_->decision().vectorize(values); }

  /// Replaces all parameter values; blocks not named are zero.
  void reset_parameters(const NamedValues & values) { params_ = problem_->parameters().vectorize(values); }

  const Eigen::VectorXd & initial_seed() const noexcept { return seed_; }
  const Eigen::VectorXd & parameter_vector() const noexcept { return params_; }

  Solution solve()
  {
    if (!adapter_) { throw SolverError("setup must be called before solve"); }
    const auto start = std::chrono::steady_clock::now();
    AdapterResult r = adapter_->solve(seed_, params_);
    const auto stop = std::chrono::steady_clock::now();
    const double duration = std::chrono::duration<double>(stop - start).count();

    Solution sol;
    sol.duration_s = duration;
    sol.iterations = r.iterations;
    sol.termination = r.reason;
    if (r.x.size() != problem_->n_x()) {
      sol.termination = "adapter returned " + std::to_string(r.x.size()) + " values";
      r.x = seed_;
      r.converged = false;
    }
    sol.x = r.x;
    sol.blocks = problem_->decision().devectorize(sol.x);
    sol.objective = problem_->objective(sol.x, params_);
    sol.feasibility = problem_->feasibility(sol.x, params_);
    sol.success = r.converged && std::isfinite(sol.objective) && sol.x.allFinite() &&
                  sol.feasibility.feasible(options_.kkt_tolerance);
    if (r.converged && !sol.success) {
      sol.termination += "; result infeasible (worst: " + sol.feasibility.worst_constraint + ")";
    }

    stats_ = adapter_->statistics();
    if (!stats_.empty()) { stats_.duration_s = duration; }
    solved_ = true;
    return sol;
  }

  const Stats & stats() const
  {
    if (!solved_) { throw SolverError("no statistics: the session has not solved yet"); }
    return stats_;
  }

private:
  std::shared_ptr<const Problem> problem_;
  const SolverRegistry * registry_;
  std::unique_ptr<SolverAdapter> adapter_;
  SolverOptions options_;
  std::string tag_;
  Eigen::VectorXd seed_;
  Eigen::VectorXd params_;
  Stats stats_;
  bool solved_ = false;
};

/**
 * @brief Piecewise-linear resampling of a solution block over time.
 *
 * `block` is a decision block name or a model name (its "/q" or "/y" block is used). Columns of
 * the block correspond to the increasing times in `grid`.
 */
inline Eigen::MatrixXd interpolate(const Solution & sol, const std::string & block, const Eigen::VectorXd & grid,
                                   const Eigen::VectorXd & queries)
{
  const Eigen::MatrixXd * values = nullptr;
  for (const std::string & name : {block, block + "/q", block + "/y"}) {
    if (const auto it = sol.blocks.find(name); it != sol.blocks.end()) {
      values = &it->second;
      break;
    }
  }
  if (!values) { throw LookupError("solution has no block for '" + block + "'"); }
  if (grid.size() != values->cols()) {
    throw ShapeError("time grid has " + std::to_string(grid.size()) + " entries for " +
                     std::to_string(values->cols()) + " columns");
  }
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    if (!(grid(i) > grid(i - 1))) { throw ValueError("time grid must be strictly increasing"); }
  }
  Eigen::MatrixXd out(values->rows(), queries.size());
  for (Eigen::Index j = 0; j < queries.size(); ++j) {
    const double t = queries(j);
    if (!(t >= grid(0) && t <= grid(grid.size() - 1))) {
      throw ValueError("query time " + std::to_string(t) + " lies outside the time grid");
    }
    Eigen::Index k = 0;
    while (k + 1 < grid.size() && grid(k + 1) <= t) { ++k; }
    if (k + 1 == grid.size() || grid(k) == t) {
      out.col(j) = values->col(k);
      continue;
    }
    const double w = (t - grid(k)) / (grid(k + 1) - grid(k));
    out.col(j) = (1.0 - w) * values->col(k) + w * values->col(k + 1);
  }
  return out;
}

}  // namespace taskopt
