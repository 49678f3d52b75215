#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "taskopt/error.hpp"

namespace taskopt {

/// A named task-space trajectory (no kinematics) with the time derivatives to optimize.
class TaskModel
{
public:
  TaskModel(std::string name, int dim, std::vector<int> time_derivs = {0})
      : name_(std::move(name)), dim_(dim), time_derivs_(std::move(time_derivs))
  {
    if (name_.empty()) { throw ValueError("task model needs a name"); }
    if (dim_ < 1) { throw ValueError("task model '" + name_ + "' needs dimension >= 1"); }
    if (time_derivs_.empty()) { throw ValueError("task model '" + name_ + "' needs at least one derivative order"); }
    for (std::size_t i = 0; i < time_derivs_.size(); ++i) {
      if (time_derivs_[i] < 0) { throw ValueError("negative time derivative order"); }
      for (std::size_t j = 0; j < i; ++j) {
        if (time_derivs_[i] == time_derivs_[j]) {
          throw ValueError("task model '" + name_ + "' repeats derivative order " + std::to_string(time_derivs_[i]));
        }
      }
    }
    if (*std::min_element(time_derivs_.begin(), time_derivs_.end()) != 0) {
      throw ValueError("task model '" + name_ + "' must include derivative order 0");
    }
  }

  const std::string & name() const noexcept { return name_; }
  int dim() const noexcept { return dim_; }
  const std::vector<int> & time_derivs() const noexcept { return time_derivs_; }

private:
  std::string name_;
  int dim_;
  std::vector<int> time_derivs_;
};

}  // namespace taskopt
