#pragma once

/**
 * @file
 * @brief Ordered registry of named blocks with a fixed flat-vector layout.
 *
 * Blocks are stacked in insertion order; each block is flattened column-major. Names missing
 * from a vectorize call are zero-filled.
 */

#include <Eigen/Core>

#include <string>
#include <unordered_map>
#include <vector>

#include "taskopt/expr.hpp"
#include "taskopt/function.hpp"

namespace taskopt {

class VariableContainer
{
public:
  struct Entry
  {
    std::string name;
    Expression block;
    int offset;

    int rows() const noexcept { return block.rows(); }
    int cols() const noexcept { return block.cols(); }
    int size() const noexcept { return block.numel(); }
  };

  /// Append a block; returns its offset into the flat vector.
  int add(const std::string & name, const Expression & block)
  {
    if (index_.count(name)) { throw DuplicateNameError("block '" + name + "' is already registered"); }
    const int offset = size_;
    index_.emplace(name, entries_.size());
    entries_.push_back({name, block, offset});
    size_ += block.numel();
    return offset;
  }

  int size() const noexcept { return size_; }
  bool empty() const noexcept { return entries_.empty(); }
  bool contains(const std::string & name) const { return index_.count(name) > 0; }
  const std::vector<Entry> & entries() const noexcept { return entries_; }

  const Entry & entry(const std::string & name) const
  {
    const auto it = index_.find(name);
    if (it == index_.end()) { throw LookupError("no block named '" + name + "'"); }
    return entries_[it->second];
  }

  int offset(const std::string & name) const { return entry(name).offset; }
  const Expression & get(const std::string & name) const { return entry(name).block; }

  /// All blocks stacked into one column of leaves, in flat-vector order.
  Expression stacked() const
  {
    std::vector<NodePtr> nodes;
    nodes.reserve(static_cast<std::size_t>(size_));
    for (const auto & e : entries_) { nodes.insert(nodes.end(), e.block.nodes().begin(), e.block.nodes().end()); }
    return {size_, 1, std::move(nodes)};
  }

  Eigen::VectorXd vectorize(const NamedValues & values) const
  {
    Eigen::VectorXd flat = Eigen::VectorXd::Zero(size_);
    for (const auto & [name, value] : values) {
      const Entry & e = entry(name);
      if (value.rows() != e.rows() || value.cols() != e.cols()) {
        throw ShapeError("block '" + name + "' expects shape " + std::to_string(e.rows()) + "x" +
                         std::to_string(e.cols()) + ", got " + std::to_string(value.rows()) + "x" +
                         std::to_string(value.cols()));
      }
      flat.segment(e.offset, e.size()) = Eigen::Map<const Eigen::VectorXd>(value.data(), e.size());
    }
    return flat;
  }

  NamedValues devectorize(const Eigen::VectorXd & flat) const
  {
    if (flat.size() != size_) {
      throw ShapeError("devectorize: expected " + std::to_string(size_) + " values, got " +
                       std::to_string(flat.size()));
    }
    NamedValues out;
    for (const auto & e : entries_) {
      out.emplace(e.name, Eigen::Map<const Eigen::MatrixXd>(flat.data() + e.offset, e.rows(), e.cols()));
    }
    return out;
  }

private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  int size_ = 0;
};

}  // namespace taskopt
