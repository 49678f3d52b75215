#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "taskopt/app.hpp"

using namespace taskopt;
using namespace taskopt::app;

namespace {

TaskConfig planar_ik(double x, double y)
{
  TaskConfig c;
  c.tip = "ee";
  c.goal = Eigen::Vector3d(x, y, 0.0);
  c.q_seed = {0.3, -0.2};
  return c;
}

TaskConfig planar_plan()
{
  TaskConfig c;
  c.tip = "ee";
  c.T = 20;
  c.goal = Eigen::Vector3d(1.4, 0.9, 0.0);
  c.q_init = {-0.5, 0.4};
  return c;
}

std::string read_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string & args)
{
  const std::string cmd = std::string(TASKOPT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(CliInfo, PlanarReportsTwoJoints)
{
  TaskConfig c;
  const CommandResult r = run_command("info", c);
  ASSERT_EQ(r.exit_code, kExitSuccess);
  EXPECT_NE(r.output.find("ndof,2\n"), std::string::npos);
  EXPECT_NE(r.output.find("joint1,revolute"), std::string::npos);
  EXPECT_NE(r.output.find("joint2,revolute"), std::string::npos);
}

TEST(CliInfo, FixedJointsExcluded)
{
  TaskConfig c;
  const RobotModel r = load_robot(c, {0});
  ASSERT_GT(r.urdf().joints.size(), 2u);  // the tip joint is fixed
  const CommandResult out = run_command("info", c);
  EXPECT_NE(out.output.find("ndof,2\n"), std::string::npos);
  EXPECT_EQ(out.output.find("fixed"), std::string::npos);
}

TEST(CliInfo, BadFileIsInputError)
{
  TaskConfig c;
  c.urdf = "/nonexistent/robot.urdf";
  EXPECT_EQ(run_command("info", c).exit_code, kExitInputError);
}

TEST(CliIk, BoundaryGoal)
{
  const IkOutcome ik = solve_ik(planar_ik(2.0, 0.0));
  EXPECT_TRUE(ik.success);
  EXPECT_LE(ik.position_error, 1e-6);
  EXPECT_NEAR(ik.q(0), 0.0, 1e-2);
  EXPECT_NEAR(ik.q(1), 0.0, 1e-2);
  EXPECT_EQ(run_command("ik", planar_ik(2.0, 0.0)).exit_code, kExitSuccess);
}

TEST(CliIk, UnreachableGoalIsSolverFailure)
{
  const CommandResult r = run_command("ik", planar_ik(3.0, 0.0));
  EXPECT_EQ(r.exit_code, kExitSolverFailure);
  EXPECT_FALSE(r.output.empty());  // best-effort row still written
  EXPECT_FALSE(r.message.empty());
}

TEST(CliIk, HorizonMustBeOne)
{
  TaskConfig c = planar_ik(1.0, 1.0);
  c.T = 2;
  EXPECT_EQ(run_command("ik", c).exit_code, kExitInputError);
}

TEST(CliIk, RegularizationPullsTowardNominal)
{
  TaskConfig strong = planar_ik(1.0, 1.0);
  strong.q_nominal = {0.5, 0.5};
  strong.q_seed = {0.5, 0.5};
  strong.goal_tolerance = 1.0;  // the strong regularizer trades position for proximity
  TaskConfig weak = strong;
  strong.regularization = 1e3;
  weak.regularization = 1e-3;
  const IkOutcome a = solve_ik(strong);
  const IkOutcome b = solve_ik(weak);
  ASSERT_TRUE(a.solution.success);
  ASSERT_TRUE(b.solution.success);
  const Eigen::Vector2d nominal(0.5, 0.5);
  EXPECT_LT((a.q - nominal).norm(), (b.q - nominal).norm());
}

TEST(CliIk, CsvHasHeaderAndOneRow)
{
  const CommandResult r = run_command("ik", planar_ik(0.5, 1.2));
  ASSERT_EQ(r.exit_code, kExitSuccess);
  std::istringstream in(r.output);
  std::string header, row, extra;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "q0,q1,x,y,z,position_error,objective,iterations,success");
  EXPECT_FALSE(std::getline(in, extra));
  EXPECT_EQ(row.back(), '1');
}

TEST(CliPlan, ObstacleClearanceHolds)
{
  TaskConfig c = planar_plan();
  c.obstacles.push_back({Eigen::Vector3d(1.64, 0.16, 0.0), 0.2});
  const PlanOutcome plan = solve_plan(c);
  ASSERT_TRUE(plan.success) << plan.solution.termination;
  const RobotModel r = load_robot(c, {0});
  for (int t = 0; t < c.T; ++t) {
    const double d = (tip_position(r, "ee", plan.q.col(t)) - c.obstacles[0].center).norm();
    EXPECT_GE(d, 0.2 - 1e-6) << "t = " << t;
  }
  const FeasibilityReport f = plan.problem->feasibility(plan.solution.x, plan.parameters);
  EXPECT_TRUE(f.feasible(1e-6)) << f.worst_constraint;
}

TEST(CliPlan, NoObstaclesDynamicsExact)
{
  const PlanOutcome plan = solve_plan(planar_plan());
  ASSERT_TRUE(plan.success) << plan.solution.termination;
  const Eigen::MatrixXd dq = plan.solution.block("planar_2r/dq");
  for (int t = 0; t + 1 < plan.q.cols(); ++t) {
    const Eigen::VectorXd res = plan.q.col(t + 1) - plan.q.col(t) - 0.1 * dq.col(t);
    EXPECT_LE(res.cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(CliPlan, ObstacleOverGoalFails)
{
  TaskConfig c = planar_plan();
  c.obstacles.push_back({c.goal, 0.3});
  const CommandResult r = run_command("plan", c);
  EXPECT_EQ(r.exit_code, kExitSolverFailure);
}

TEST(CliPlan, CsvColumnsAndTimes)
{
  const CommandResult r = run_command("plan", planar_plan());
  ASSERT_EQ(r.exit_code, kExitSuccess);
  std::istringstream in(r.output);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,q0,q1");
  int rows = 0;
  while (std::getline(in, line)) { ++rows; }
  EXPECT_EQ(rows, 20);
  EXPECT_EQ(r.output.substr(8, 7), "0,-0.5,");
}

TEST(CliPlan, Deterministic)
{
  TaskConfig c = planar_plan();
  c.obstacles.push_back({Eigen::Vector3d(1.64, 0.16, 0.0), 0.2});
  EXPECT_EQ(run_command("plan", c).output, run_command("plan", c).output);
}

TEST(CliTrack, PlanarFigureEight)
{
  TaskConfig c;
  c.tip = "ee";
  c.q_seed = {0.3, 0.8};
  c.track.waypoints = 30;
  const TrackReport rep = run_track(c);
  ASSERT_TRUE(rep.success) << rep.message;
  ASSERT_EQ(rep.waypoints.size(), 30u);
  double mean = 0.0;
  for (const auto & w : rep.waypoints) { mean += w.position_error; }
  EXPECT_LE(mean / 30.0, 1e-3);
}

TEST(CliTrack, FigureEightPath)
{
  TrackConfig t;
  EXPECT_TRUE(figure_eight(t, 0.0).isApprox(t.center));
  EXPECT_NEAR(figure_eight(t, 0.25).x() - t.center.x(), t.amplitude_x, 1e-12);
  EXPECT_NEAR(figure_eight(t, 0.125).y() - t.center.y(), t.amplitude_y, 1e-12);
}

TEST(CliDims, HalfReachBothBeyondReachNeither)
{
  TaskConfig c;
  c.urdf = "builtin:arm6";
  c.tip = "ee";
  c.q_seed = {0.0, 0.5, 1.2, 0.0, 0.8, 0.0};
  c.dims.fractions = {0.5, 1.05};
  const std::vector<DimsRow> rows = run_dims(c);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].position_only_success);
  EXPECT_TRUE(rows[0].full_pose_success);
  EXPECT_FALSE(rows[1].position_only_success);
  EXPECT_FALSE(rows[1].full_pose_success);
}

TEST(CliConfig, UnknownKeyRejected)
{
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"urdf": "builtin:arm6", "horizon": 3})")), InputError);
  EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"goal": [1, 2]})")), InputError);
}

TEST(CliConfig, ParsesGoalObjectAndObstacles)
{
  const TaskConfig c = parse_config(nlohmann::json::parse(
      R"({"goal": {"position": [1, 2, 3], "orientation": "down"},
          "obstacles": [{"center": [0, 0, 1], "radius": 0.5}], "lambda": 0.01})"));
  EXPECT_TRUE(c.goal.isApprox(Eigen::Vector3d(1, 2, 3)));
  EXPECT_TRUE(c.goal_tool_down);
  ASSERT_EQ(c.obstacles.size(), 1u);
  EXPECT_DOUBLE_EQ(c.obstacles[0].radius, 0.5);
  EXPECT_DOUBLE_EQ(c.regularization, 0.01);
}

TEST(CliConfig, InvalidValuesAreInputErrors)
{
  TaskConfig c;
  c.dt = -0.1;
  EXPECT_EQ(run_command("plan", c).exit_code, kExitInputError);
  TaskConfig d = planar_plan();
  d.obstacles.push_back({Eigen::Vector3d::Zero(), -1.0});
  EXPECT_EQ(run_command("plan", d).exit_code, kExitInputError);
  EXPECT_EQ(run_command("launch", TaskConfig{}).exit_code, kExitInputError);
}

TEST(CliBinary, ExitCodes)
{
  EXPECT_EQ(run_cli("info builtin:planar_2r"), 0);
  EXPECT_EQ(run_cli("info /nonexistent.urdf"), 2);
  EXPECT_EQ(run_cli("ik --tip ee --T 3"), 2);
  EXPECT_EQ(run_cli("ik --bogus"), 2);
  EXPECT_EQ(run_cli("ik --config /nonexistent.json"), 2);
}

TEST(CliBinary, WritesOutputFile)
{
  const std::string path = testing::TempDir() + "taskopt_plan.csv";
  std::remove(path.c_str());
  ASSERT_EQ(run_cli("plan --config " TASKOPT_CONFIG_DIR "/plan_planar.json --out " + path), 0);
  const std::string csv = read_file(path);
  EXPECT_EQ(csv.rfind("t,q0,q1\n", 0), 0u);
  ASSERT_EQ(run_cli("plan --config " TASKOPT_CONFIG_DIR "/plan_planar.json --out " + path + ".2"), 0);
  EXPECT_EQ(csv, read_file(path + ".2"));
}
