#include <gtest/gtest.h>

#include <random>

#include "taskopt/builder.hpp"
#include "taskopt/fixtures.hpp"

using namespace taskopt;

namespace {

RobotModel planar(std::vector<int> derivs = {0, 1}, std::string name = "arm")
{
  return RobotModel(parse_urdf(fixtures::planar_2r), std::move(derivs), std::move(name));
}

Eigen::VectorXd random_vector(std::mt19937 & rng, int n, double scale = 1.0)
{
  std::uniform_real_distribution<double> u(-scale, scale);
  return Eigen::VectorXd::NullaryExpr(n, [&] { return u(rng); });
}

}  // namespace

TEST(TaskModel, Construction)
{
  const TaskModel path("eff_path", 3, {0, 1});
  EXPECT_EQ(path.dim(), 3);
  EXPECT_EQ(TaskModel("angle", 1, {0}).time_derivs(), std::vector<int>{0});
  EXPECT_THROW(TaskModel("bad", 0, {0}), ValueError);
  EXPECT_THROW(TaskModel("bad", 2, {0, 1, 1}), ValueError);
  EXPECT_THROW(TaskModel("bad", 2, {1}), ValueError);
}

TEST(Builder, StateBlockShapes)
{
  const OptimizationBuilder b(10, {planar()});
  EXPECT_EQ(b.get_model_states("arm", 0).rows(), 2);
  EXPECT_EQ(b.get_model_states("arm", 0).cols(), 10);
  EXPECT_EQ(b.get_model_states("arm", 1).cols(), 9);
  EXPECT_EQ(b.state_name("arm", 1), "arm/dq");

  const OptimizationBuilder aligned(10, {planar()}, {}, true);
  EXPECT_EQ(aligned.get_model_states("arm", 1).cols(), 10);

  const OptimizationBuilder timed(10, {planar()}, {}, false, true);
  EXPECT_EQ(timed.get_dt().rows(), 1);
  EXPECT_EQ(timed.get_dt().cols(), 9);
  EXPECT_EQ(timed.decision().size(), 20 + 18 + 9);

  EXPECT_THROW(OptimizationBuilder(1, {planar()}), ValueError);  // dq would have zero columns
  EXPECT_NO_THROW(OptimizationBuilder(1, {planar({0})}));
  EXPECT_THROW(OptimizationBuilder(0, {planar({0})}), ValueError);
  EXPECT_THROW(OptimizationBuilder(3, {planar({0}), planar({0})}), DuplicateNameError);
  EXPECT_THROW(OptimizationBuilder(3, {planar({0})}, {TaskModel("arm", 2)}), DuplicateNameError);
}

TEST(Builder, TaskModelsShareTheStatePath)
{
  const OptimizationBuilder b(5, {planar({0, 1})}, {TaskModel("path", 2, {0, 1})});
  EXPECT_EQ(b.get_model_states("path", 0).rows(), 2);
  EXPECT_EQ(b.get_model_states("path", 1).cols(), 4);
  EXPECT_EQ(b.state_name("path", 1), "path/dy");
  const auto & robot_entry = b.decision().entry("arm/q");
  const auto & task_entry = b.decision().entry("path/y");
  EXPECT_EQ(robot_entry.rows(), task_entry.rows());
  EXPECT_EQ(robot_entry.cols(), task_entry.cols());
  EXPECT_THROW(OptimizationBuilder(5, {}, {TaskModel("path", 2)}).enforce_model_limits("path"), LookupError);
}

TEST(Builder, GetModelState)
{
  const OptimizationBuilder b(4, {planar()});
  const Expression q = b.get_model_states("arm", 0);
  EXPECT_EQ(b.get_model_state("arm", 0).node(1), q.node(1, 0));
  EXPECT_EQ(b.get_model_state("arm", -1).node(0), q.node(0, 3));
  EXPECT_EQ(b.get_model_state("arm", -1, 1).node(0), b.get_model_states("arm", 1).node(0, 2));
  EXPECT_THROW(b.get_model_state("arm", 0, 2), LookupError);
  EXPECT_THROW(b.get_model_state("arm", 4), ShapeError);
  EXPECT_THROW(b.get_model_state("arm", -5), ShapeError);
  EXPECT_THROW(b.get_model_state("other", 0), LookupError);
}

TEST(Builder, VariablesAndParameters)
{
  OptimizationBuilder b(5, {planar({0})});
  EXPECT_EQ(b.add_decision_variables("slack", 1, 5).cols(), 5);
  EXPECT_TRUE(b.add_decision_variables("s").is_scalar());
  EXPECT_THROW(b.add_decision_variables("slack"), DuplicateNameError);
  EXPECT_THROW(b.add_decision_variables("arm/q", 2, 5), DuplicateNameError);
  EXPECT_EQ(b.add_parameter("pg", 3).rows(), 3);
  EXPECT_TRUE(b.add_parameter("r").is_scalar());
  EXPECT_THROW(b.add_parameter("r"), DuplicateNameError);
  EXPECT_EQ(b.decision().size(), 10 + 5 + 1);
  EXPECT_EQ(b.parameters().size(), 4);
}

TEST(Builder, CostTerms)
{
  OptimizationBuilder b(1, {planar({0})});
  const Expression q = b.get_model_state("arm", 0);
  const Expression pg = b.add_parameter("pg", 3);
  const RobotModel & r = b.robot("arm");
  b.add_cost_term("goal", sumsqr(r.global_link_position("ee", q) - pg));
  EXPECT_THROW(b.add_cost_term("vector", q), ShapeError);
  EXPECT_THROW(b.add_cost_term("goal", sumsqr(q)), DuplicateNameError);
  EXPECT_EQ(b.build().type(), ProblemType::UnconstrainedNLP);
}

TEST(Builder, ConstraintRouting)
{
  OptimizationBuilder b(3, {planar({0})}, {TaskModel("path", 3)});
  const Expression qc = b.add_parameter("qc", 2);
  b.add_equality_constraint("init", b.get_model_state("arm", 0), qc);
  const RobotModel & r = b.robot("arm");
  b.add_equality_constraint("couple", r.global_link_position("ee", b.get_model_state("arm", 1)), b.get_model_state("path", 1));
  b.add_equality_constraint("degenerate", Expression::zeros(2, 1));
  b.add_leq_inequality_constraint("trivially", 1.0, 2.0);
  EXPECT_EQ(b.warnings().size(), 3u);
  EXPECT_THROW(b.add_equality_constraint("bad_shape", Expression::symbol("z", 2), Expression::symbol("w", 3)), ShapeError);
  const Problem p = b.build();
  EXPECT_EQ(p.block("init").partition, Partition::LinearEquality);
  EXPECT_EQ(p.block("couple").partition, Partition::NonlinearEquality);
  EXPECT_THROW(p.block("degenerate"), LookupError);
  EXPECT_EQ(p.n_a(), 2);
  EXPECT_EQ(p.n_h(), 3);
  EXPECT_EQ(p.type(), ProblemType::NonlinearConstrainedQP);  // zero cost counts as quadratic
}

TEST(Builder, ViolatedConstantConstraintFailsAtBuild)
{
  OptimizationBuilder b(1, {planar({0})});
  b.add_cost_term("c", sumsqr(b.get_model_state("arm", 0)));
  b.add_leq_inequality_constraint("impossible", 2.0, 1.0);
  EXPECT_THROW(b.build(), ValueError);
}

TEST(Builder, EmptyProblem)
{
  const OptimizationBuilder b(2, {planar({0})});
  EXPECT_THROW(b.build(), StructureError);
}

TEST(Builder, JointLimitRows)
{
  const int T = 6;
  OptimizationBuilder b(T, {planar({0})});
  b.enforce_model_limits("arm");
  const Problem p = b.build();
  EXPECT_EQ(p.n_k(), 2 * 2 * T);
  EXPECT_EQ(p.block("arm/q/lower").rows, 2 * T);
  EXPECT_THROW(b.enforce_model_limits("nope"), LookupError);

  const std::string doc = R"(<robot name="c"><link name="a"/><link name="b"/><link name="c"/>
    <joint name="spin" type="continuous"><parent link="a"/><child link="b"/><axis xyz="0 0 1"/>
      <limit velocity="1.5"/></joint>
    <joint name="hinge" type="revolute"><parent link="b"/><child link="c"/><axis xyz="0 1 0"/>
      <limit lower="-1" upper="1"/></joint></robot>)";
  OptimizationBuilder c(T, {RobotModel(parse_urdf(doc), {0, 1})});
  c.enforce_model_limits("c");
  const Problem pc = c.build();
  EXPECT_EQ(pc.block("c/q/lower").rows, T);        // hinge only
  EXPECT_EQ(pc.block("c/dq/upper").rows, T - 1);   // spin only, hinge has no velocity bound
}

TEST(Builder, LimitRowsDecomposeAsSignedIdentity)
{
  OptimizationBuilder b(3, {planar({0})});
  b.enforce_model_limits("arm");
  const Problem p = b.build();
  const LinearConstraints lin = p.linear_constraints(Eigen::VectorXd());
  Eigen::MatrixXd expected(12, 6);
  expected << Eigen::MatrixXd::Identity(6, 6), -Eigen::MatrixXd::Identity(6, 6);
  EXPECT_EQ(lin.M, expected);
  std::mt19937 rng(1);
  for (int probe = 0; probe < 10; ++probe) {
    const Eigen::VectorXd x = random_vector(rng, 6, 4.0);
    Eigen::VectorXd direct(12);
    for (int i = 0; i < 6; ++i) {
      direct(i) = x(i) + M_PI;
      direct(6 + i) = M_PI - x(i);
    }
    EXPECT_LE((lin.M * x + lin.c - direct).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Builder, Integration)
{
  OptimizationBuilder fixed(5, {planar()});
  fixed.integrate_model_states("arm", 1, 0.1);
  const Problem pf = fixed.build();
  EXPECT_EQ(pf.block("arm/dq/integration").partition, Partition::LinearEquality);
  EXPECT_EQ(pf.block("arm/dq/integration").rows, 2 * 4);
  EXPECT_THROW(fixed.integrate_model_states("arm", 2, 0.1), LookupError);
  EXPECT_THROW(fixed.integrate_model_states("arm", 1), ValueError);

  OptimizationBuilder timed(5, {planar()}, {}, false, true);
  timed.integrate_model_states("arm", 1);
  const Problem pt = timed.build();
  EXPECT_EQ(pt.block("arm/dq/integration").partition, Partition::NonlinearEquality);
  EXPECT_EQ(pt.block("dt/lower").partition, Partition::LinearInequality);
  EXPECT_EQ(pt.block("dt/lower").rows, 4);

  // Residual of an exactly integrated trajectory.
  std::mt19937 rng(2);
  const Eigen::MatrixXd dq = Eigen::MatrixXd::NullaryExpr(2, 4, [&] { return std::uniform_real_distribution<double>(-1, 1)(rng); });
  Eigen::MatrixXd q(2, 5);
  q.col(0) = Eigen::Vector2d(0.3, -0.4);
  for (int t = 0; t < 4; ++t) { q.col(t + 1) = q.col(t) + 0.1 * dq.col(t); }
  const Eigen::VectorXd x = pf.decision().vectorize({{"arm/q", q}, {"arm/dq", dq}});
  EXPECT_LE(pf.feasibility(x, Eigen::VectorXd()).max_equality, 1e-15);

  OptimizationBuilder aligned(5, {planar()}, {}, true);
  aligned.integrate_model_states("arm", 1, 0.1);
  EXPECT_EQ(aligned.build().block("arm/dq/integration").rows, 8);
}

TEST(Builder, ShapeRule)
{
  OptimizationBuilder b(7, {planar({0, 1}), planar({0}, "other")}, {TaskModel("path", 3, {0, 1})}, false, true);
  b.add_decision_variables("extra", 2, 2);
  int total = 0;
  int expected_offset = 0;
  for (const auto & e : b.decision().entries()) {
    EXPECT_EQ(e.offset, expected_offset);
    expected_offset += e.size();
    total += e.size();
  }
  EXPECT_EQ(total, 2 * 7 + 2 * 6 + 2 * 7 + 3 * 7 + 3 * 6 + 6 + 4);
  EXPECT_EQ(b.decision().size(), total);
}
