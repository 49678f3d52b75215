#pragma once

/**
 * @file
 * @brief Solver options, statistics and the adapter contract.
 *
 * An adapter supplies three behaviors: initialize (with the problem and options), solve
 * (returning X* from a seed and parameter vector) and statistics. Adapters are registered by
 * tag in a SolverRegistry and driven through a SolverSession.
 */

#include <Eigen/Core>

#include <string>
#include <vector>

#include "taskopt/problem.hpp"
#include "taskopt/qp.hpp"

namespace taskopt {

struct SolverOptions
{
  int max_iterations = 100;
  double step_tolerance = 1e-8;
  double kkt_tolerance = 1e-6;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 30;
  QpSettings qp;

  void validate() const
  {
    if (max_iterations < 1) { throw ValueError("max_iterations must be positive"); }
    if (!(step_tolerance > 0) || !(kkt_tolerance > 0) || !(armijo > 0)) {
      throw ValueError("solver tolerances must be positive");
    }
    if (!(armijo < 1)) { throw ValueError("Armijo coefficient must be below 1"); }
    if (!(backtrack > 0 && backtrack < 1)) { throw ValueError("backtrack factor must lie in (0, 1)"); }
    if (max_backtracks < 0) { throw ValueError("max_backtracks must be non-negative"); }
    qp.validate();
  }
};

/// Histories hold one entry for the seed plus one per iteration.
struct Stats
{
  int iterations = 0;
  std::vector<double> objective_history;
  std::vector<double> step_norm_history;
  double duration_s = 0.0;

  bool empty() const noexcept { return iterations == 0 && objective_history.empty(); }
};

struct AdapterResult
{
  Eigen::VectorXd x;
  bool converged = false;
  std::string reason;
  int iterations = 0;
};

class SolverAdapter
{
public:
  virtual ~SolverAdapter() = default;

  virtual std::string name() const = 0;

  /// Throws SolverError when the problem classification is not supported.
  virtual void initialize(const Problem & problem, const SolverOptions & options) = 0;

  virtual AdapterResult solve(const Eigen::VectorXd & x0, const Eigen::VectorXd & p) = 0;

  virtual Stats statistics() const { return {}; }
};

}  // namespace taskopt
