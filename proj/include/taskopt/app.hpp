#pragma once

/**
 * @file
 * @brief Command implementations behind taskopt_cli: config parsing plus the info, ik, plan,
 * track and dims commands. Commands return their CSV/text output and an exit code so they can
 * be driven from tests without a process boundary.
 *
 * Exit codes: 0 success, 2 input error, 3 solver failure.
 */

#include <Eigen/Core>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "taskopt/fixtures.hpp"
#include "taskopt/formulations.hpp"
#include "taskopt/session.hpp"

namespace taskopt::app {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitSolverFailure = 3;

/// Invalid configuration or command arguments.
class InputError : public ValueError
{
public:
  using ValueError::ValueError;
};

struct Obstacle
{
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
};

/// Figure-of-eight: center + (A sin(2 pi s), B sin(4 pi s), 0), s in [0, 1], W samples.
struct TrackConfig
{
  Eigen::Vector3d center{1.2, 0.0, 0.0};
  double amplitude_x = 0.3;
  double amplitude_y = 0.15;
  int waypoints = 100;
  double manipulability_weight = 0.0;
  bool compare_cold = true;
};

/// Goals at pivot + fraction * reach * direction; pivot and reach are derived from the chain if unset.
struct DimsConfig
{
  std::vector<double> fractions{0.5, 0.7, 0.8, 0.9, 0.95, 0.99, 1.05};
  std::optional<Eigen::Vector3d> pivot;
  std::optional<double> reach;
  Eigen::Vector3d direction{1.0, 0.0, 0.0};
  double z_band = 0.1;
};

struct TaskConfig
{
  std::string urdf = "builtin:planar_2r";
  std::string base;
  std::string tip;
  int T = 1;
  double dt = 0.1;
  bool optimize_time = false;
  Eigen::Vector3d goal{2.0, 0.0, 0.0};
  bool goal_tool_down = false;
  std::vector<double> q_nominal;
  std::vector<double> q_init;
  std::vector<double> q_seed;
  double regularization = 1e-6;
  double smoothing = 1e-5;
  double goal_tolerance = 1e-3;
  int ik_restarts = 4;  // extra seeds tried when an ik solve misses the goal
  std::vector<Obstacle> obstacles;
  std::string solver;  // empty: chosen from the problem classification
  nlohmann::json solver_options = nlohmann::json::object();
  TrackConfig track;
  DimsConfig dims;
  std::string out;

  void validate() const
  {
    if (T < 1) { throw InputError("T must be at least 1"); }
    if (!(dt > 0)) { throw InputError("dt must be positive"); }
    if (!(regularization >= 0) || !(smoothing >= 0)) { throw InputError("weights must be non-negative"); }
    if (!(goal_tolerance > 0)) { throw InputError("goal_tolerance must be positive"); }
    for (const auto & o : obstacles) {
      if (!(o.radius > 0)) { throw InputError("obstacle radius must be positive"); }
    }
    if (ik_restarts < 0) { throw InputError("ik_restarts must be non-negative"); }
    if (track.waypoints < 2) { throw InputError("track needs at least 2 waypoints"); }
    if (dims.fractions.empty()) { throw InputError("dims needs at least one reach fraction"); }
    if (dims.direction.norm() == 0.0) { throw InputError("dims direction must be non-zero"); }
    if (!goal.allFinite()) { throw InputError("goal must be finite"); }
  }
};

namespace detail {

inline Eigen::Vector3d vec3(const nlohmann::json & j, const std::string & what)
{
  if (!j.is_array() || j.size() != 3) { throw InputError(what + " must be an array of 3 numbers"); }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline std::vector<double> numbers(const nlohmann::json & j, const std::string & what)
{
  if (!j.is_array()) { throw InputError(what + " must be an array of numbers"); }
  std::vector<double> out;
  for (const auto & v : j) { out.push_back(v.get<double>()); }
  return out;
}

inline Eigen::VectorXd joint_vector(const std::vector<double> & v, int ndof, const std::string & what,
                                    const Eigen::VectorXd & fallback)
{
  if (v.empty()) { return fallback; }
  if (static_cast<int>(v.size()) != ndof) {
    throw InputError(what + " has " + std::to_string(v.size()) + " entries, the robot has " + std::to_string(ndof) +
                     " joints");
  }
  return Eigen::Map<const Eigen::VectorXd>(v.data(), ndof);
}

inline std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline void check_keys(const nlohmann::json & j, const std::vector<std::string> & allowed, const std::string & where)
{
  for (const auto & [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InputError("unknown key '" + key + "' in " + where);
    }
  }
}

}  // namespace detail

inline TaskConfig parse_config(const nlohmann::json & j)
{
  if (!j.is_object()) { throw InputError("config must be a JSON object"); }
  detail::check_keys(j,
                     {"urdf", "base", "tip", "T", "dt", "optimize_time", "goal", "q_nominal", "q_init", "q_seed",
                      "lambda", "smoothing", "goal_tolerance", "ik_restarts", "obstacles", "solver", "solver_options", "track", "dims",
                      "out"},
                     "config");
  TaskConfig c;
  try {
    c.urdf = j.value("urdf", c.urdf);
    c.base = j.value("base", c.base);
    c.tip = j.value("tip", c.tip);
    c.T = j.value("T", c.T);
    c.dt = j.value("dt", c.dt);
    c.optimize_time = j.value("optimize_time", c.optimize_time);
    if (j.contains("goal")) {
      const auto & g = j["goal"];
      if (g.is_array()) {
        c.goal = detail::vec3(g, "goal");
      } else {
        detail::check_keys(g, {"position", "orientation"}, "goal");
        c.goal = detail::vec3(g.at("position"), "goal.position");
        if (g.contains("orientation") && !g["orientation"].is_null()) {
          const std::string o = g["orientation"].get<std::string>();
          if (o != "down") { throw InputError("goal.orientation supports only \"down\""); }
          c.goal_tool_down = true;
        }
      }
    }
    if (j.contains("q_nominal")) { c.q_nominal = detail::numbers(j["q_nominal"], "q_nominal"); }
    if (j.contains("q_init")) { c.q_init = detail::numbers(j["q_init"], "q_init"); }
    if (j.contains("q_seed")) { c.q_seed = detail::numbers(j["q_seed"], "q_seed"); }
    c.regularization = j.value("lambda", c.regularization);
    c.smoothing = j.value("smoothing", c.smoothing);
    c.goal_tolerance = j.value("goal_tolerance", c.goal_tolerance);
    c.ik_restarts = j.value("ik_restarts", c.ik_restarts);
    if (j.contains("obstacles")) {
      for (const auto & o : j["obstacles"]) {
        detail::check_keys(o, {"center", "radius"}, "obstacle");
        c.obstacles.push_back({detail::vec3(o.at("center"), "obstacle center"), o.at("radius").get<double>()});
      }
    }
    c.solver = j.value("solver", c.solver);
    if (j.contains("solver_options")) { c.solver_options = j["solver_options"]; }
    if (j.contains("track")) {
      const auto & t = j["track"];
      detail::check_keys(t, {"center", "A", "B", "waypoints", "manipulability_weight", "compare_cold"}, "track");
      if (t.contains("center")) { c.track.center = detail::vec3(t["center"], "track.center"); }
      c.track.amplitude_x = t.value("A", c.track.amplitude_x);
      c.track.amplitude_y = t.value("B", c.track.amplitude_y);
      c.track.waypoints = t.value("waypoints", c.track.waypoints);
      c.track.manipulability_weight = t.value("manipulability_weight", c.track.manipulability_weight);
      c.track.compare_cold = t.value("compare_cold", c.track.compare_cold);
    }
    if (j.contains("dims")) {
      const auto & d = j["dims"];
      detail::check_keys(d, {"fractions", "pivot", "reach", "direction", "z_band"}, "dims");
      if (d.contains("fractions")) { c.dims.fractions = detail::numbers(d["fractions"], "dims.fractions"); }
      if (d.contains("pivot")) { c.dims.pivot = detail::vec3(d["pivot"], "dims.pivot"); }
      if (d.contains("reach")) { c.dims.reach = d["reach"].get<double>(); }
      if (d.contains("direction")) { c.dims.direction = detail::vec3(d["direction"], "dims.direction"); }
      c.dims.z_band = d.value("z_band", c.dims.z_band);
    }
    c.out = j.value("out", c.out);
  } catch (const nlohmann::json::exception & e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return c;
}

inline TaskConfig load_config(const std::string & path)
{
  std::ifstream in(path);
  if (!in) { throw InputError("cannot open config '" + path + "'"); }
  try {
    return parse_config(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error & e) {
    throw InputError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

/// Options for one solve: command defaults overlaid with the config's solver_options.
inline SolverOptions solver_options(const TaskConfig & c, SolverOptions base)
{
  const auto & j = c.solver_options;
  try {
    detail::check_keys(j,
                       {"max_iterations", "step_tolerance", "kkt_tolerance", "armijo", "backtrack", "max_backtracks",
                        "qp_rho", "qp_sigma", "qp_alpha", "qp_max_iterations", "qp_eps_abs", "qp_eps_rel"},
                       "solver_options");
    base.max_iterations = j.value("max_iterations", base.max_iterations);
    base.step_tolerance = j.value("step_tolerance", base.step_tolerance);
    base.kkt_tolerance = j.value("kkt_tolerance", base.kkt_tolerance);
    base.armijo = j.value("armijo", base.armijo);
    base.backtrack = j.value("backtrack", base.backtrack);
    base.max_backtracks = j.value("max_backtracks", base.max_backtracks);
    base.qp.rho = j.value("qp_rho", base.qp.rho);
    base.qp.sigma = j.value("qp_sigma", base.qp.sigma);
    base.qp.alpha = j.value("qp_alpha", base.qp.alpha);
    base.qp.max_iterations = j.value("qp_max_iterations", base.qp.max_iterations);
    base.qp.eps_abs = j.value("qp_eps_abs", base.qp.eps_abs);
    base.qp.eps_rel = j.value("qp_eps_rel", base.qp.eps_rel);
  } catch (const nlohmann::json::exception & e) {
    throw InputError(std::string("solver_options: ") + e.what());
  }
  try {
    base.validate();
  } catch (const ValueError & e) {
    throw InputError(e.what());
  }
  return base;
}

/// End-pose solves stop on stationarity well below the goal tolerance.
inline SolverOptions end_pose_defaults()
{
  SolverOptions o;
  o.kkt_tolerance = 1e-10;
  o.max_iterations = 200;
  return o;
}

/// Redundant arms crawl along the regularizer's null-space valley well before 1e-10, so
/// sweeps over many goals keep the default KKT tolerance.
inline SolverOptions task_space_defaults()
{
  SolverOptions o;
  o.max_iterations = 200;
  return o;
}

struct CommandResult
{
  int exit_code = kExitSuccess;
  std::string output;   // CSV or text
  std::string message;  // diagnostics for stderr
};

inline RobotModel load_robot(const TaskConfig & c, std::vector<int> derivs)
{
  UrdfModel urdf = fixtures::load(c.urdf);
  return RobotModel(std::move(urdf), std::move(derivs), {}, c.base);
}

/// The configured tip, or the deepest link of the first branch below the base.
inline std::string resolve_tip(const TaskConfig & c, const RobotModel & r)
{
  if (!c.tip.empty()) {
    if (!r.has_link(c.tip)) { throw LookupError("no link named '" + c.tip + "'"); }
    return c.tip;
  }
  std::string link = r.base_link();
  for (bool descended = true; descended;) {
    descended = false;
    for (const auto & j : r.urdf().joints) {
      if (j.parent == link) {
        link = j.child;
        descended = true;
        break;
      }
    }
  }
  return link;
}

inline Solution solve_with(SolverSession & s, const TaskConfig & c, const SolverOptions & defaults)
{
  const std::string tag = c.solver.empty() ? default_solver_for(s.problem().type()) : c.solver;
  s.setup(tag, solver_options(c, defaults));
  return s.solve();
}

inline Eigen::Vector3d tip_position(const RobotModel & r, const std::string & tip, const Eigen::VectorXd & q)
{
  return r.link_transform(tip, q).block<3, 1>(0, 3);
}

inline CommandResult cmd_info(const TaskConfig & c)
{
  const RobotModel r = load_robot(c, {0});
  std::ostringstream os;
  os << "robot," << r.name() << "\n";
  os << "base," << r.base_link() << "\n";
  os << "ndof," << r.ndof() << "\n";
  os << "joint,type,lower,upper,velocity\n";
  const Eigen::VectorXd lo = r.lower_limits(), hi = r.upper_limits(), vel = r.velocity_limits();
  for (int i = 0; i < r.ndof(); ++i) {
    const auto & j = r.actuated_joints()[static_cast<std::size_t>(i)];
    os << j.name << "," << to_string(j.type) << "," << detail::fmt(lo(i)) << "," << detail::fmt(hi(i)) << ","
       << detail::fmt(vel(i)) << "\n";
  }
  return {kExitSuccess, os.str(), {}};
}

struct IkOutcome
{
  Solution solution;
  Eigen::VectorXd q;
  Eigen::Vector3d position;
  double position_error = 0.0;
  bool success = false;
};

/**
 * @brief End-pose solve for the config's goal.
 *
 * A local solve can stall on a stationary point such as a folded elbow at a joint limit. When it
 * misses the goal, up to ik_restarts further seeds are drawn uniformly within the limits from a
 * fixed-seed generator and the closest result is kept.
 */
inline IkOutcome solve_ik(const TaskConfig & c)
{
  if (c.T != 1) { throw InputError("ik is an end-pose problem and needs T = 1"); }
  const RobotModel r = load_robot(c, {0});
  const std::string tip = resolve_tip(c, r);
  OptimizationBuilder b = c.goal_tool_down
                              ? formulations::reach(r, {tip, formulations::ReachMode::FullPose, c.regularization})
                              : formulations::end_pose(r, {tip, c.regularization});
  SolverSession s(b.build());
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(r.ndof());
  const Eigen::VectorXd q_nominal = detail::joint_vector(c.q_nominal, r.ndof(), "q_nominal", zeros);
  const Eigen::VectorXd seed = detail::joint_vector(c.q_seed, r.ndof(), "q_seed", q_nominal);
  const std::string block = b.state_name(r.name(), 0);
  s.reset_parameters({{"goal", c.goal}, {"q_nominal", q_nominal}});

  const Eigen::VectorXd lo = r.lower_limits().cwiseMax(-std::numbers::pi);
  const Eigen::VectorXd hi = r.upper_limits().cwiseMin(std::numbers::pi);
  std::mt19937 rng(5489u);
  IkOutcome out;
  Eigen::VectorXd start = seed;
  for (int attempt = 0; attempt <= c.ik_restarts; ++attempt) {
    s.reset_initial_seed({{block, start}});
    IkOutcome trial;
    trial.solution = solve_with(s, c, end_pose_defaults());
    trial.q = trial.solution.block(block);
    trial.position = tip_position(r, tip, trial.q);
    trial.position_error = (trial.position - c.goal).norm();
    trial.success = trial.solution.success && trial.position_error <= c.goal_tolerance;
    if (attempt == 0 || (trial.success && !out.success) ||
        (trial.success == out.success && trial.position_error < out.position_error)) {
      out = std::move(trial);
    }
    if (out.success) { break; }
    for (int i = 0; i < r.ndof(); ++i) { start(i) = lo(i) + (hi(i) - lo(i)) * (rng() / 4294967296.0); }
  }
  return out;
}

inline CommandResult cmd_ik(const TaskConfig & c)
{
  const IkOutcome ik = solve_ik(c);
  std::ostringstream os;
  for (int i = 0; i < ik.q.size(); ++i) { os << "q" << i << ","; }
  os << "x,y,z,position_error,objective,iterations,success\n";
  for (int i = 0; i < ik.q.size(); ++i) { os << detail::fmt(ik.q(i)) << ","; }
  os << detail::fmt(ik.position(0)) << "," << detail::fmt(ik.position(1)) << "," << detail::fmt(ik.position(2)) << ","
     << detail::fmt(ik.position_error) << "," << detail::fmt(ik.solution.objective) << ","
     << ik.solution.iterations << "," << (ik.success ? 1 : 0) << "\n";
  CommandResult res{ik.success ? kExitSuccess : kExitSolverFailure, os.str(), {}};
  if (!ik.success) {
    res.message = "ik failed: " + ik.solution.termination + ", position error " + detail::fmt(ik.position_error);
  }
  return res;
}

struct PlanOutcome
{
  Solution solution;
  std::shared_ptr<const Problem> problem;
  Eigen::VectorXd parameters;
  Eigen::MatrixXd q;
  Eigen::VectorXd times;
  double goal_error = 0.0;
  bool success = false;
};

inline PlanOutcome solve_plan(const TaskConfig & c)
{
  if (c.T < 2) { throw InputError("plan needs T >= 2"); }
  const RobotModel r = load_robot(c, {0, 1});
  const std::string tip = resolve_tip(c, r);
  formulations::PlanSpec spec{tip, c.T, static_cast<int>(c.obstacles.size()), c.smoothing, c.optimize_time};
  const OptimizationBuilder b = formulations::obstacle_plan(r, spec);
  PlanOutcome out;
  out.problem = std::make_shared<const Problem>(b.build());
  SolverSession s(out.problem);

  const Eigen::VectorXd q_init = detail::joint_vector(c.q_init, r.ndof(), "q_init", Eigen::VectorXd::Zero(r.ndof()));
  NamedValues params{{"goal", c.goal}, {"q_init", q_init}};
  if (!c.optimize_time) { params["dt"] = Eigen::MatrixXd::Constant(1, 1, c.dt); }
  for (std::size_t i = 0; i < c.obstacles.size(); ++i) {
    const std::string name = "obstacle" + std::to_string(i);
    params[name + "/center"] = c.obstacles[i].center;
    params[name + "/radius"] = Eigen::MatrixXd::Constant(1, 1, c.obstacles[i].radius);
  }
  s.reset_parameters(params);
  const std::string qb = b.state_name(r.name(), 0);
  NamedValues seed{{qb, q_init.replicate(1, c.T)}};
  if (c.optimize_time) { seed["dt"] = Eigen::MatrixXd::Constant(1, c.T - 1, c.dt); }
  s.reset_initial_seed(seed);
  out.parameters = s.parameter_vector();

  out.solution = solve_with(s, c, SolverOptions{});
  out.q = out.solution.block(qb);
  out.times = Eigen::VectorXd::Zero(c.T);
  for (int t = 1; t < c.T; ++t) {
    out.times(t) = out.times(t - 1) + (c.optimize_time ? out.solution.block("dt")(0, t - 1) : c.dt);
  }
  out.goal_error = (tip_position(r, tip, out.q.col(c.T - 1)) - c.goal).norm();
  out.success = out.solution.success && out.goal_error <= c.goal_tolerance;
  return out;
}

inline CommandResult cmd_plan(const TaskConfig & c)
{
  const PlanOutcome plan = solve_plan(c);
  std::ostringstream os;
  os << "t";
  for (int i = 0; i < plan.q.rows(); ++i) { os << ",q" << i; }
  os << "\n";
  for (int t = 0; t < plan.q.cols(); ++t) {
    os << detail::fmt(plan.times(t));
    for (int i = 0; i < plan.q.rows(); ++i) { os << "," << detail::fmt(plan.q(i, t)); }
    os << "\n";
  }
  CommandResult res{plan.success ? kExitSuccess : kExitSolverFailure, os.str(), {}};
  if (!plan.success) {
    res.message = "plan failed: " + plan.solution.termination + ", final position error " + detail::fmt(plan.goal_error);
  }
  return res;
}

struct TrackWaypoint
{
  Eigen::Vector3d target;
  double position_error = 0.0;
  double solve_ms = 0.0;
  int iterations = 0;
  int cold_iterations = -1;
  double manipulability = 0.0;
  bool success = false;
};

struct TrackReport
{
  std::vector<TrackWaypoint> waypoints;
  bool success = true;
  std::string message;

  double mean_error() const
  {
    double s = 0.0;
    for (const auto & w : waypoints) { s += w.position_error; }
    return waypoints.empty() ? 0.0 : s / static_cast<double>(waypoints.size());
  }

  double mean_manipulability() const
  {
    double s = 0.0;
    for (const auto & w : waypoints) { s += w.manipulability; }
    return waypoints.empty() ? 0.0 : s / static_cast<double>(waypoints.size());
  }
};

inline Eigen::Vector3d figure_eight(const TrackConfig & t, double s)
{
  return t.center + Eigen::Vector3d(t.amplitude_x * std::sin(2.0 * std::numbers::pi * s),
                                    t.amplitude_y * std::sin(4.0 * std::numbers::pi * s), 0.0);
}

/**
 * @brief Receding end-pose solves along the figure-of-eight, warm-started from the previous waypoint.
 *
 * Without an explicit q_nominal the regularizer pulls toward the previous solution. The cold run
 * solves the same problem seeded from q_seed.
 */
inline TrackReport run_track(const TaskConfig & c)
{
  const RobotModel r = load_robot(c, {0});
  const std::string tip = resolve_tip(c, r);
  formulations::EndPoseSpec spec{tip, c.regularization};
  spec.manipulability_weight = c.track.manipulability_weight;
  const OptimizationBuilder b = formulations::end_pose(r, spec);
  const auto problem = std::make_shared<const Problem>(b.build());
  const std::string block = b.state_name(r.name(), 0);
  const Eigen::VectorXd home = detail::joint_vector(c.q_seed, r.ndof(), "q_seed", Eigen::VectorXd::Zero(r.ndof()));
  Eigen::VectorXd q_nominal = detail::joint_vector(c.q_nominal, r.ndof(), "q_nominal", home);
  const bool follow = c.q_nominal.empty();

  const Expression qs = Expression::symbol("q", r.ndof());
  const Function manip({qs}, {r.manipulability(tip, qs, {0, 1, 2})});

  SolverSession warm(problem), cold(problem);
  const SolverOptions options = solver_options(c, task_space_defaults());
  const std::string tag = c.solver.empty() ? default_solver_for(problem->type()) : c.solver;
  warm.setup(tag, options);
  cold.setup(tag, options);

  TrackReport report;
  NamedValues seed{{block, home}};
  const int W = c.track.waypoints;
  for (int k = 0; k < W; ++k) {
    TrackWaypoint wp;
    wp.target = figure_eight(c.track, static_cast<double>(k) / (W - 1));
    const NamedValues params{{"goal", wp.target}, {"q_nominal", q_nominal}};
    warm.reset_parameters(params);
    warm.reset_initial_seed(seed);
    const Solution sol = warm.solve();
    const Eigen::VectorXd q = sol.block(block);
    wp.position_error = (tip_position(r, tip, q) - wp.target).norm();
    wp.solve_ms = sol.duration_s * 1e3;
    wp.iterations = sol.iterations;
    wp.manipulability = manip({q})[0](0, 0);
    wp.success = sol.success && wp.position_error <= c.goal_tolerance;
    if (c.track.compare_cold) {
      cold.reset_parameters(params);
      cold.reset_initial_seed({{block, home}});
      wp.cold_iterations = cold.solve().iterations;
    }
    report.waypoints.push_back(wp);
    if (!wp.success) {
      report.success = false;
      report.message = "waypoint " + std::to_string(k) + " failed: " + sol.termination + ", position error " +
                       detail::fmt(wp.position_error);
      break;
    }
    seed = sol.blocks;
    if (follow) { q_nominal = q; }
  }
  return report;
}

inline CommandResult cmd_track(const TaskConfig & c)
{
  const TrackReport report = run_track(c);
  std::ostringstream os;
  os << "waypoint,position_error,solve_ms,iterations,cold_iterations,manipulability\n";
  for (std::size_t k = 0; k < report.waypoints.size(); ++k) {
    const auto & w = report.waypoints[k];
    os << k << "," << detail::fmt(w.position_error) << "," << detail::fmt(w.solve_ms) << "," << w.iterations << ","
       << w.cold_iterations << "," << detail::fmt(w.manipulability) << "\n";
  }
  return {report.success ? kExitSuccess : kExitSolverFailure, os.str(), report.message};
}

struct DimsRow
{
  double fraction = 0.0;
  Eigen::Vector3d goal;
  bool position_only_success = false;
  bool full_pose_success = false;
  double position_only_error = 0.0;
  double full_pose_error = 0.0;
};

/**
 * @brief Pivot and reach of the chain to the tip.
 *
 * The pivot is the first actuated joint whose axis is not parallel to the base z axis (the first
 * joint if all are); the reach sums the joint offsets from there to the tip at q = 0.
 */
inline std::pair<Eigen::Vector3d, double> chain_reach(const RobotModel & r, const std::string & tip)
{
  const auto chain = extract_chain(r.urdf(), r.base_link(), tip);
  Eigen::Matrix4d t = r.base_offset();
  std::optional<std::size_t> pivot_index;
  std::optional<Eigen::Vector3d> pivot;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    t = t * spatial::transform(spatial::rpy_to_matrix(Eigen::Vector3d(chain[i].rpy)), chain[i].xyz);
    const bool tilted = chain[i].actuated() && std::abs(std::abs(chain[i].axis.z()) - 1.0) > 1e-9;
    if (!pivot && tilted) {
      pivot = t.block<3, 1>(0, 3);
      pivot_index = i;
    }
  }
  if (!pivot) {
    pivot_index.reset();
    Eigen::Matrix4d u = r.base_offset();
    for (std::size_t i = 0; i < chain.size(); ++i) {
      u = u * spatial::transform(spatial::rpy_to_matrix(Eigen::Vector3d(chain[i].rpy)), chain[i].xyz);
      if (chain[i].actuated()) {
        pivot = u.block<3, 1>(0, 3);
        pivot_index = i;
        break;
      }
    }
  }
  if (!pivot) { throw StructureError("the chain to '" + tip + "' has no actuated joint"); }
  double reach = 0.0;
  for (std::size_t i = *pivot_index + 1; i < chain.size(); ++i) { reach += chain[i].xyz.norm(); }
  return {*pivot, reach};
}

inline std::vector<DimsRow> run_dims(const TaskConfig & c)
{
  const RobotModel r = load_robot(c, {0});
  const std::string tip = resolve_tip(c, r);
  auto [pivot, reach] = chain_reach(r, tip);
  if (c.dims.pivot) { pivot = *c.dims.pivot; }
  if (c.dims.reach) { reach = *c.dims.reach; }
  const Eigen::Vector3d dir = c.dims.direction.normalized();

  const OptimizationBuilder pos_b =
      formulations::reach(r, {tip, formulations::ReachMode::PositionOnly, c.regularization, c.dims.z_band});
  const OptimizationBuilder full_b = formulations::reach(r, {tip, formulations::ReachMode::FullPose, c.regularization});
  SolverSession pos_s(pos_b.build()), full_s(full_b.build());
  const std::string block = pos_b.state_name(r.name(), 0);
  const Eigen::VectorXd home = detail::joint_vector(c.q_seed, r.ndof(), "q_seed", Eigen::VectorXd::Zero(r.ndof()));
  const Eigen::VectorXd q_nominal = detail::joint_vector(c.q_nominal, r.ndof(), "q_nominal", home);

  std::vector<DimsRow> rows;
  for (double f : c.dims.fractions) {
    DimsRow row;
    row.fraction = f;
    row.goal = pivot + f * reach * dir;
    const NamedValues params{{"goal", row.goal}, {"q_nominal", q_nominal}};
    for (auto * s : {&pos_s, &full_s}) {
      s->reset_parameters(params);
      s->reset_initial_seed({{block, home}});
      const Solution sol = solve_with(*s, c, task_space_defaults());
      const Eigen::Vector3d p = tip_position(r, tip, sol.block(block));
      if (s == &pos_s) {
        row.position_only_error = (p - row.goal).head<2>().norm();
        row.position_only_success = sol.success && row.position_only_error <= c.goal_tolerance;
      } else {
        row.full_pose_error = (p - row.goal).norm();
        row.full_pose_success = sol.success && row.full_pose_error <= c.goal_tolerance;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

inline CommandResult cmd_dims(const TaskConfig & c)
{
  const std::vector<DimsRow> rows = run_dims(c);
  std::ostringstream os;
  os << "fraction,goal_x,goal_y,goal_z,position_only_success,position_only_error,full_pose_success,full_pose_error\n";
  for (const auto & r : rows) {
    os << detail::fmt(r.fraction) << "," << detail::fmt(r.goal(0)) << "," << detail::fmt(r.goal(1)) << ","
       << detail::fmt(r.goal(2)) << "," << (r.position_only_success ? 1 : 0) << "," << detail::fmt(r.position_only_error)
       << "," << (r.full_pose_success ? 1 : 0) << "," << detail::fmt(r.full_pose_error) << "\n";
  }
  return {kExitSuccess, os.str(), {}};
}

/// Runs a command by name, mapping library errors to exit codes.
inline CommandResult run_command(const std::string & command, const TaskConfig & c)
{
  try {
    c.validate();
    if (command == "info") { return cmd_info(c); }
    if (command == "ik") { return cmd_ik(c); }
    if (command == "plan") { return cmd_plan(c); }
    if (command == "track") { return cmd_track(c); }
    if (command == "dims") { return cmd_dims(c); }
    return {kExitInputError, {}, "unknown command '" + command + "'"};
  } catch (const Error & e) {
    return {kExitInputError, {}, e.what()};
  }
}

}  // namespace taskopt::app
