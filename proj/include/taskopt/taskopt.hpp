#pragma once

#include "taskopt/autodiff.hpp"
#include "taskopt/builder.hpp"
#include "taskopt/error.hpp"
#include "taskopt/expr.hpp"
#include "taskopt/fixtures.hpp"
#include "taskopt/formulations.hpp"
#include "taskopt/function.hpp"
#include "taskopt/problem.hpp"
#include "taskopt/qp.hpp"
#include "taskopt/robot_model.hpp"
#include "taskopt/session.hpp"
#include "taskopt/spatial.hpp"
#include "taskopt/task_model.hpp"
#include "taskopt/urdf.hpp"
#include "taskopt/var_container.hpp"
