#pragma once

#include <string>
#include <utility>
#include <vector>

#include "taskopt/expr.hpp"

namespace taskopt {

/// Creates named leaf blocks and keeps (name, kind) pairs unique.
class LeafRegistry
{
public:
  Expression make_variable(const std::string & name, int rows, int cols = 1)
  {
    return make(name, rows, cols, LeafKind::Variable);
  }

  Expression make_parameter(const std::string & name, int rows = 1, int cols = 1)
  {
    return make(name, rows, cols, LeafKind::Parameter);
  }

  bool contains(const std::string & name, LeafKind kind) const { return find(name, kind) != nullptr; }

  const Expression & get(const std::string & name, LeafKind kind) const
  {
    if (const auto * e = find(name, kind)) { return *e; }
    throw LookupError("no " + std::string(kind == LeafKind::Variable ? "variable" : "parameter") + " named '" +
                      name + "'");
  }

  std::size_t size() const noexcept { return entries_.size(); }

private:
  struct Entry
  {
    std::string name;
    LeafKind kind;
    Expression block;
  };

  Expression make(const std::string & name, int rows, int cols, LeafKind kind)
  {
    if (contains(name, kind)) {
      throw DuplicateNameError(std::string(kind == LeafKind::Variable ? "variable" : "parameter") + " '" + name +
                               "' already exists");
    }
    if (rows < 0 || cols < 0) { throw ShapeError("negative dimension for '" + name + "'"); }
    Expression block = Expression::symbol(name, rows, cols, kind);
    entries_.push_back({name, kind, block});
    return block;
  }

  const Expression * find(const std::string & name, LeafKind kind) const
  {
    for (const auto & e : entries_) {
      if (e.kind == kind && e.name == name) { return &e.block; }
    }
    return nullptr;
  }

  std::vector<Entry> entries_;
};

/// Fresh variable block from a registry; throws DuplicateNameError when the name is taken.
inline Expression make_variable(LeafRegistry & registry, const std::string & name, int rows, int cols = 1)
{
  return registry.make_variable(name, rows, cols);
}

}  // namespace taskopt
