// Collision-free joint plan for the bundled planar 2R arm, written against the builder directly.
// Prints the plan resampled at 50 ms.

#include <cstdio>
#include <vector>

#include "taskopt/taskopt.hpp"

using namespace taskopt;

int main()
{
  const RobotModel robot(parse_urdf(fixtures::planar_2r), {0, 1});
  const int T = 20;
  const double dt = 0.1;

  OptimizationBuilder builder(T, {robot});
  const std::string name = robot.name();
  const Expression goal = builder.add_parameter("goal", 3);
  const Expression q_init = builder.add_parameter("q_init", 2);
  const Expression center = builder.add_parameter("center", 3);
  const Expression radius = builder.add_parameter("radius");
  const Expression q = builder.get_model_states(name, 0);
  const Expression dq = builder.get_model_states(name, 1);

  const Expression tip = robot.global_link_position("ee", builder.get_model_state(name, -1));
  builder.add_cost_term("goal", sumsqr(tip - goal));
  builder.add_cost_term("smooth", 1e-5 * sumsqr(dq));
  builder.add_equality_constraint("initial", builder.get_model_state(name, 0), q_init);
  builder.enforce_model_limits(name);
  builder.integrate_model_states(name, 1, Expression(dt));

  std::vector<Expression> clearance;
  for (int t = 0; t < T; ++t) { clearance.push_back(sumsqr(robot.global_link_position("ee", q.col(t)) - center)); }
  builder.add_leq_inequality_constraint("obstacle", Expression::ones(T) * (radius * radius),
                                        vertcat(std::span<const Expression>(clearance)));

  const Problem problem = builder.build();
  std::printf("# %d decision variables, %s\n", problem.n_x(), to_string(problem.type()));

  SolverSession session(problem);
  session.setup("sqp");
  session.reset_parameters({{"goal", Eigen::Vector3d(1.4, 0.9, 0.0)},
                            {"q_init", Eigen::Vector2d(-0.5, 0.4)},
                            {"center", Eigen::Vector3d(1.64, 0.16, 0.0)},
                            {"radius", Eigen::MatrixXd::Constant(1, 1, 0.2)}});
  session.reset_initial_seed({{builder.state_name(name, 0), Eigen::Vector2d(-0.5, 0.4).replicate(1, T).eval()}});
  const Solution sol = session.solve();
  std::printf("# %s after %d iterations (%s), %.1f ms\n", sol.success ? "solved" : "failed", sol.iterations,
              sol.termination.c_str(), 1e3 * session.stats().duration_s);

  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(T, 0.0, dt * (T - 1));
  const Eigen::VectorXd fine = Eigen::VectorXd::LinSpaced(39, 0.0, dt * (T - 1));
  const Eigen::MatrixXd path = interpolate(sol, name, grid, fine);
  std::printf("t,q0,q1\n");
  for (Eigen::Index k = 0; k < fine.size(); ++k) { std::printf("%.2f,%.6f,%.6f\n", fine(k), path(0, k), path(1, k)); }
  return sol.success ? 0 : 1;
}
