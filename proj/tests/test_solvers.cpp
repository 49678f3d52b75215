#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support/finite_difference.hpp"
#include "taskopt/formulations.hpp"
#include "taskopt/session.hpp"
#include "taskopt/fixtures.hpp"

using namespace taskopt;

namespace {

/// min (x1-1)^2 + (x2-2)^2 s.t. x1 + x2 <= 2
Problem halfspace_problem()
{
  OptimizationBuilder b(1);
  const Expression x = b.add_decision_variables("x", 2);
  b.add_cost_term("f", sumsqr(x - Expression(Eigen::Vector2d(1.0, 2.0))));
  b.add_leq_inequality_constraint("half", x(0) + x(1), Expression(2.0));
  return b.build();
}

/// Rosenbrock, unconstrained.
Problem rosenbrock()
{
  OptimizationBuilder b(1);
  const Expression x = b.add_decision_variables("x", 2);
  b.add_cost_term("f", square(1.0 - x(0)) + 100.0 * square(x(1) - square(x(0))));
  return b.build();
}

RobotModel planar(std::vector<int> derivs) { return RobotModel(parse_urdf(fixtures::planar_2r), std::move(derivs)); }

class EchoAdapter : public SolverAdapter
{
public:
  std::string name() const override { return "echo"; }
  void initialize(const Problem &, const SolverOptions &) override { ++initialized; }
  AdapterResult solve(const Eigen::VectorXd & x0, const Eigen::VectorXd &) override
  {
    AdapterResult r;
    r.x = x0;
    r.converged = true;
    r.reason = "echo";
    return r;
  }
  int initialized = 0;
};

NamedValues plan_parameters(const Eigen::Vector2d & q_init, const Eigen::Vector3d & center, double radius)
{
  return {{"goal", Eigen::Vector3d(1.4, 0.9, 0.0)},
          {"q_init", q_init},
          {"dt", Eigen::MatrixXd::Constant(1, 1, 0.1)},
          {"obstacle0/center", center},
          {"obstacle0/radius", Eigen::MatrixXd::Constant(1, 1, radius)}};
}

}  // namespace

TEST(SolverOptions, Validation)
{
  SolverOptions o;
  EXPECT_NO_THROW(o.validate());
  o.kkt_tolerance = -1.0;
  EXPECT_THROW(o.validate(), ValueError);
  o = {};
  o.backtrack = 1.0;
  EXPECT_THROW(o.validate(), ValueError);
  o = {};
  o.qp.rho = 0.0;
  EXPECT_THROW(o.validate(), ValueError);
}

TEST(Session, QpHalfspace)
{
  SolverSession s(halfspace_problem());
  EXPECT_EQ(s.problem().type(), ProblemType::LinearConstrainedQP);
  s.setup("qp");
  const Solution sol = s.solve();
  ASSERT_TRUE(sol.success) << sol.termination;
  EXPECT_NEAR(sol.block("x")(0), 0.5, 1e-6);
  EXPECT_NEAR(sol.block("x")(1), 1.5, 1e-6);
  EXPECT_NEAR(sol.objective, 0.5, 1e-6);
}

TEST(Session, QpAdapterKkt)
{
  const Problem pr = halfspace_problem();
  QpAdapter qp;
  qp.initialize(pr, {});
  const Eigen::VectorXd p(0);
  const AdapterResult r = qp.solve(Eigen::VectorXd::Zero(2), p);
  ASSERT_TRUE(r.converged);
  // stationarity of f with the recovered multiplier on k = 2 - x1 - x2 >= 0
  const LinearConstraints lin = pr.linear_constraints(p);
  const Eigen::VectorXd stationarity = pr.gradient(r.x, p) + lin.M.transpose() * qp.multipliers();
  EXPECT_LE(stationarity.cwiseAbs().maxCoeff(), 1e-5);
  const Eigen::VectorXd k = lin.M * r.x + lin.c;
  EXPECT_LE(std::abs(k(0) * qp.multipliers()(0)), 1e-5);
}

TEST(Session, SetupRejectsIncompatible)
{
  SolverSession s(rosenbrock());
  EXPECT_THROW(s.setup("qp"), SolverError);
  EXPECT_NO_THROW(s.setup("bfgs"));
  EXPECT_NO_THROW(s.setup("sqp"));
  EXPECT_THROW(s.setup("nope"), LookupError);
  SolverOptions bad;
  bad.step_tolerance = -1e-3;
  EXPECT_THROW(s.setup("sqp", bad), ValueError);
  SolverSession h(halfspace_problem());
  EXPECT_THROW(h.setup("bfgs"), SolverError);
}

TEST(Session, LifecycleErrors)
{
  SolverSession s(halfspace_problem());
  EXPECT_THROW(s.solve(), SolverError);
  EXPECT_THROW(s.stats(), SolverError);
  EXPECT_THROW(s.reset_initial_seed({{"y", Eigen::Vector2d::Zero()}}), LookupError);
  EXPECT_THROW(s.reset_initial_seed({{"x", Eigen::Vector3d::Zero()}}), ShapeError);
}

TEST(Session, SeedZeroFill)
{
  OptimizationBuilder b(1);
  const Expression x = b.add_decision_variables("x", 2);
  const Expression y = b.add_decision_variables("y", 1);
  b.add_cost_term("f", sumsqr(x) + sumsqr(y));
  SolverSession s(b.build());
  s.reset_initial_seed({{"x", Eigen::Vector2d(1, 2)}, {"y", Eigen::VectorXd::Constant(1, 3)}});
  s.reset_initial_seed({{"x", Eigen::Vector2d(4, 5)}});
  EXPECT_EQ(s.initial_seed(), Eigen::Vector3d(4, 5, 0));
}

TEST(Session, BfgsRosenbrock)
{
  SolverSession s(rosenbrock());
  SolverOptions o;
  o.max_iterations = 200;
  s.setup("bfgs", o);
  s.reset_initial_seed({{"x", Eigen::Vector2d(-1.2, 1.0)}});
  const Solution sol = s.solve();
  ASSERT_TRUE(sol.success) << sol.termination;
  EXPECT_NEAR(sol.block("x")(0), 1.0, 1e-5);
  EXPECT_NEAR(sol.block("x")(1), 1.0, 1e-5);
  const Stats & st = s.stats();
  EXPECT_GE(st.iterations, 1);
  EXPECT_EQ(st.objective_history.size(), static_cast<std::size_t>(st.iterations + 1));
  EXPECT_EQ(st.step_norm_history.size(), static_cast<std::size_t>(st.iterations + 1));
  for (std::size_t i = 1; i < st.objective_history.size(); ++i) {
    EXPECT_LE(st.objective_history[i], st.objective_history[i - 1]);
  }
  EXPECT_GT(st.duration_s, 0.0);
}

TEST(Session, StatsHistoryLengths)
{
  for (const char * tag : {"qp", "sqp"}) {
    SolverSession s(halfspace_problem());
    s.setup(tag);
    s.solve();
    const Stats & st = s.stats();
    EXPECT_GE(st.iterations, 1) << tag;
    EXPECT_EQ(st.objective_history.size(), static_cast<std::size_t>(st.iterations + 1)) << tag;
    EXPECT_EQ(st.step_norm_history.size(), static_cast<std::size_t>(st.iterations + 1)) << tag;
    EXPECT_GT(st.duration_s, 0.0) << tag;
  }
}

TEST(Session, SqpMatchesQpOnLinearConstraints)
{
  OptimizationBuilder b(1);
  const Expression x = b.add_decision_variables("x", 3);
  const Expression target = b.add_parameter("target", 3);
  b.add_cost_term("f", sumsqr(x - target) + 0.5 * x(0) * x(1));
  b.add_leq_inequality_constraint("sum", sum(x), Expression(1.0));
  b.add_equality_constraint("tie", x(0) - 2.0 * x(2));
  b.add_leq_inequality_constraint("floor", Expression(-0.2), x(1));
  const auto pr = std::make_shared<const Problem>(b.build());
  const NamedValues params{{"target", Eigen::Vector3d(1.0, -1.0, 2.0)}};
  SolverSession qp(pr), sqp(pr);
  qp.setup("qp");
  sqp.setup("sqp");
  qp.reset_parameters(params);
  sqp.reset_parameters(params);
  const Solution a = qp.solve();
  const Solution c = sqp.solve();
  ASSERT_TRUE(a.success && c.success);
  EXPECT_NEAR(a.objective, c.objective, 1e-5);
}

TEST(Session, SqpEndPoseBoundaryGoal)
{
  const RobotModel r = planar({0});
  SolverSession s(formulations::end_pose(r, {"ee"}).build());
  SolverOptions o;
  o.kkt_tolerance = 1e-12;
  o.max_iterations = 200;
  s.setup("sqp", o);
  s.reset_parameters({{"goal", Eigen::Vector3d(2, 0, 0)}});
  s.reset_initial_seed({{"planar_2r/q", Eigen::Vector2d(0.3, -0.2)}});
  const Solution sol = s.solve();
  ASSERT_TRUE(sol.success) << sol.termination;
  const Eigen::Vector2d q = sol.block("planar_2r/q");
  const Eigen::Vector3d p = r.link_transform("ee", q).block<3, 1>(0, 3);
  EXPECT_LE((p - Eigen::Vector3d(2, 0, 0)).norm(), 1e-6);
  EXPECT_LE(q.norm(), 1e-2);
}

TEST(Session, ObstaclePlanFeasible)
{
  const RobotModel r = planar({0, 1});
  SolverSession s(formulations::obstacle_plan(r, {"ee", 20, 1}).build());
  s.setup("sqp");
  const Eigen::Vector2d q_init(-0.5, 0.4);
  s.reset_parameters(plan_parameters(q_init, Eigen::Vector3d(1.64, 0.16, 0.0), 0.2));
  s.reset_initial_seed({{"planar_2r/q", q_init.replicate(1, 20)}});
  const Solution sol = s.solve();
  ASSERT_TRUE(sol.success) << sol.termination;
  const Eigen::MatrixXd q = sol.block("planar_2r/q");
  const Eigen::MatrixXd dq = sol.block("planar_2r/dq");
  for (int t = 0; t < 20; ++t) {
    const Eigen::Vector3d p = r.link_transform("ee", q.col(t)).block<3, 1>(0, 3);
    EXPECT_GE((p - Eigen::Vector3d(1.64, 0.16, 0.0)).norm(), 0.2 - 1e-6) << "t=" << t;
  }
  for (int t = 0; t + 1 < 20; ++t) {
    EXPECT_LE((q.col(t + 1) - q.col(t) - 0.1 * dq.col(t)).cwiseAbs().maxCoeff(), 1e-8);
  }
  EXPECT_LE((q.col(0) - q_init).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Session, ObstacleOverStartFails)
{
  const RobotModel r = planar({0, 1});
  SolverSession s(formulations::obstacle_plan(r, {"ee", 20, 1}).build());
  s.setup("sqp");
  const Eigen::Vector2d q_init(-0.5, 0.4);
  const Eigen::Vector3d start = r.link_transform("ee", q_init).block<3, 1>(0, 3);
  s.reset_parameters(plan_parameters(q_init, start, 0.3));
  s.reset_initial_seed({{"planar_2r/q", q_init.replicate(1, 20)}});
  const Solution sol = s.solve();
  EXPECT_FALSE(sol.success);
}

TEST(Session, Deterministic)
{
  const RobotModel r = planar({0, 1});
  const auto pr = std::make_shared<const Problem>(formulations::obstacle_plan(r, {"ee", 10, 1}).build());
  Eigen::VectorXd first;
  for (int run = 0; run < 2; ++run) {
    SolverSession s(pr);
    s.setup("sqp");
    s.reset_parameters(plan_parameters(Eigen::Vector2d(-0.5, 0.4), Eigen::Vector3d(1.64, 0.16, 0.0), 0.2));
    const Solution sol = s.solve();
    if (run == 0) {
      first = sol.x;
    } else {
      EXPECT_TRUE(first == sol.x);
    }
  }
}

TEST(Adapter, MockLifecycle)
{
  SolverRegistry reg = SolverRegistry::with_native_solvers();
  EchoAdapter * last = nullptr;
  reg.add("echo", [&] {
    auto a = std::make_unique<EchoAdapter>();
    last = a.get();
    return a;
  });
  EXPECT_THROW(reg.add("echo", [] { return std::make_unique<EchoAdapter>(); }), DuplicateNameError);
  SolverSession s(halfspace_problem(), reg);
  s.setup("echo");
  ASSERT_NE(last, nullptr);
  EXPECT_EQ(last->initialized, 1);
  s.reset_initial_seed({{"x", Eigen::Vector2d(0.25, 0.5)}});
  const Solution sol = s.solve();
  EXPECT_TRUE(sol.success);
  EXPECT_EQ(sol.block("x"), Eigen::Vector2d(0.25, 0.5));
  EXPECT_TRUE(s.stats().empty());
  EXPECT_EQ(s.stats().duration_s, 0.0);
}

TEST(Adapter, InfeasibleResultIsNotSuccess)
{
  SolverRegistry reg;
  reg.add("echo", [] { return std::make_unique<EchoAdapter>(); });
  SolverSession s(halfspace_problem(), reg);
  s.setup("echo");
  s.reset_initial_seed({{"x", Eigen::Vector2d(3.0, 3.0)}});
  const Solution sol = s.solve();
  EXPECT_FALSE(sol.success);
  EXPECT_EQ(sol.feasibility.worst_constraint, "half");
}

TEST(Interpolate, GridAndMidpoints)
{
  Solution sol;
  sol.blocks["arm/q"] = (Eigen::MatrixXd(2, 3) << 0, 1, 4, 10, 20, 30).finished();
  const Eigen::Vector3d grid(0.0, 0.5, 1.5);
  const Eigen::MatrixXd at_grid = interpolate(sol, "arm", grid, grid);
  EXPECT_EQ(at_grid, sol.blocks["arm/q"]);
  const Eigen::MatrixXd mid = interpolate(sol, "arm/q", grid, Eigen::Vector2d(0.25, 1.0));
  EXPECT_EQ(mid(0, 0), 0.5);
  EXPECT_EQ(mid(1, 1), 25.0);
  const Eigen::VectorXd dense = Eigen::VectorXd::LinSpaced(31, 0.0, 1.5);
  const Eigen::MatrixXd resampled = interpolate(sol, "arm", grid, dense);
  EXPECT_EQ(resampled.col(0), sol.blocks["arm/q"].col(0));
  EXPECT_EQ(resampled.col(30), sol.blocks["arm/q"].col(2));
  EXPECT_THROW(interpolate(sol, "arm", grid, Eigen::VectorXd::Constant(1, 1.6)), ValueError);
  EXPECT_THROW(interpolate(sol, "other", grid, grid), LookupError);
}
