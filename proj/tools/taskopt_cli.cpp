#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "taskopt/app.hpp"

namespace {

struct Overrides
{
  std::string config;
  std::string urdf;
  std::string tip;
  std::string base;
  std::optional<int> T;
  std::optional<double> dt;
  std::string solver;
  std::string out;
};

void add_common(CLI::App * cmd, Overrides & o)
{
  cmd->add_option("--config", o.config, "JSON task configuration");
  cmd->add_option("--urdf", o.urdf, "URDF file or builtin:<name> (planar_2r, arm6, prismatic3)");
  cmd->add_option("--tip", o.tip, "tip link");
  cmd->add_option("--base", o.base, "base link");
  cmd->add_option("--T", o.T, "horizon length");
  cmd->add_option("--dt", o.dt, "time step [s]");
  cmd->add_option("--solver", o.solver, "solver tag: qp, bfgs or sqp");
  cmd->add_option("--out", o.out, "write output here instead of stdout");
}

taskopt::app::TaskConfig resolve(const Overrides & o)
{
  taskopt::app::TaskConfig c = o.config.empty() ? taskopt::app::TaskConfig{} : taskopt::app::load_config(o.config);
  if (!o.urdf.empty()) { c.urdf = o.urdf; }
  if (!o.tip.empty()) { c.tip = o.tip; }
  if (!o.base.empty()) { c.base = o.base; }
  if (o.T) { c.T = *o.T; }
  if (o.dt) { c.dt = *o.dt; }
  if (!o.solver.empty()) { c.solver = o.solver; }
  if (!o.out.empty()) { c.out = o.out; }
  return c;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Task-space trajectory optimization for URDF robots"};
  app.require_subcommand(1);
  Overrides o;
  std::string positional_urdf;
  auto * info = app.add_subcommand("info", "print degrees of freedom, joint names and limits");
  info->add_option("source", positional_urdf, "URDF file or builtin:<name>");
  add_common(info, o);
  add_common(app.add_subcommand("ik", "end-pose inverse kinematics (T = 1)"), o);
  add_common(app.add_subcommand("plan", "obstacle-avoiding joint trajectory"), o);
  add_common(app.add_subcommand("track", "receding end-pose tracking of a figure-of-eight"), o);
  add_common(app.add_subcommand("dims", "position-only versus full-pose reach sweep"), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return taskopt::app::kExitInputError;
  }
  if (!positional_urdf.empty()) { o.urdf = positional_urdf; }

  const std::string command = app.get_subcommands().front()->get_name();
  taskopt::app::CommandResult result;
  taskopt::app::TaskConfig config;
  try {
    config = resolve(o);
    result = taskopt::app::run_command(command, config);
  } catch (const taskopt::Error & e) {
    result = {taskopt::app::kExitInputError, {}, e.what()};
  }

  if (!result.output.empty()) {
    if (config.out.empty()) {
      std::cout << result.output;
    } else {
      std::ofstream out(config.out, std::ios::binary);
      if (!out) {
        std::cerr << "error: cannot write '" << config.out << "'\n";
        return taskopt::app::kExitInputError;
      }
      out << result.output;
    }
  }
  if (!result.message.empty()) {
    std::cerr << (result.exit_code == taskopt::app::kExitSuccess ? "" : "error: ") << result.message << "\n";
  }
  return result.exit_code;
}
