#pragma once

/**
 * @file
 * @brief Numeric evaluation of expressions: one-shot interpretation and compiled tapes.
 */

#include <Eigen/Core>

#include <functional>
#include <initializer_list>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "taskopt/expr.hpp"

namespace taskopt {

/// Numeric values keyed by block name.
using NamedValues = std::map<std::string, Eigen::MatrixXd>;

/**
 * @brief Evaluate e with every leaf block bound by name.
 *
 * Throws LookupError when a block has no binding and ShapeError when a binding has the wrong
 * shape.
 */
inline Eigen::MatrixXd evaluate(const Expression & e, const NamedValues & bindings)
{
  const auto order = detail::topological_order(e.nodes());
  std::unordered_map<const Node *, double> value;
  value.reserve(order.size());
  std::unordered_map<const LeafBlock *, const Eigen::MatrixXd *> resolved;
  for (const NodePtr * h : order) {
    const Node & n = **h;
    double v = 0.0;
    switch (n.op) {
    case Op::Constant: v = n.value; break;
    case Op::Leaf: {
      auto it = resolved.find(n.block.get());
      if (it == resolved.end()) {
        const auto b = bindings.find(n.block->name);
        if (b == bindings.end()) { throw LookupError("evaluate: no binding for '" + n.block->name + "'"); }
        if (b->second.rows() != n.block->rows || b->second.cols() != n.block->cols) {
          throw ShapeError("evaluate: binding for '" + n.block->name + "' has shape " +
                           std::to_string(b->second.rows()) + "x" + std::to_string(b->second.cols()) +
                           ", expected " + std::to_string(n.block->rows) + "x" + std::to_string(n.block->cols));
        }
        it = resolved.emplace(n.block.get(), &b->second).first;
      }
      v = it->second->data()[n.index];
      break;
    }
    default: {
      const double a = value.at(n.a.get());
      const double b = n.b ? value.at(n.b.get()) : 0.0;
      const double c = n.c ? value.at(n.c.get()) : 0.0;
      v = apply_op(n.op, a, b, c);
    }
    }
    value.emplace(h->get(), v);
  }
  Eigen::MatrixXd out(e.rows(), e.cols());
  for (int k = 0; k < e.numel(); ++k) { out.data()[k] = value.at(e.node(k).get()); }
  return out;
}

/**
 * @brief Expressions compiled into a flat instruction tape.
 *
 * Inputs are blocks of leaves (flattened column-major); every leaf reachable from the outputs
 * must belong to one of the inputs. Evaluation uses per-call scratch space, so a const Function
 * may be called from several threads at once.
 */
class Function
{
public:
  using Args = std::initializer_list<Eigen::Ref<const Eigen::VectorXd>>;

  Function() = default;

  Function(const std::vector<Expression> & inputs, const std::vector<Expression> & outputs)
  {
    std::unordered_map<const Node *, int> slot;
    for (const auto & in : inputs) {
      input_sizes_.push_back(in.numel());
      for (const auto & n : in.nodes()) {
        if (!n->is_leaf()) { throw StructureError("Function: inputs must contain only leaves"); }
        slot.emplace(n.get(), n_slots_++);
      }
    }
    n_input_slots_ = n_slots_;

    std::vector<NodePtr> roots;
    for (const auto & out : outputs) { roots.insert(roots.end(), out.nodes().begin(), out.nodes().end()); }
    for (const NodePtr * h : detail::topological_order(roots)) {
      const Node & n = **h;
      if (slot.count(&n)) { continue; }
      switch (n.op) {
      case Op::Leaf:
        throw LookupError("Function: leaf of block '" + n.block->name + "' is not an input");
      case Op::Constant:
        constants_.emplace_back(n_slots_, n.value);
        slot.emplace(&n, n_slots_++);
        break;
      default: {
        Instruction ins{n.op, slot.at(n.a.get()), n.b ? slot.at(n.b.get()) : 0, n.c ? slot.at(n.c.get()) : 0, n_slots_};
        tape_.push_back(ins);
        slot.emplace(&n, n_slots_++);
      }
      }
    }
    for (const auto & out : outputs) {
      OutputLayout layout{out.rows(), out.cols(), {}};
      for (const auto & n : out.nodes()) { layout.slots.push_back(slot.at(n.get())); }
      outputs_.push_back(std::move(layout));
    }
  }

  std::size_t n_inputs() const noexcept { return input_sizes_.size(); }
  std::size_t n_outputs() const noexcept { return outputs_.size(); }
  int input_size(std::size_t i) const { return input_sizes_.at(i); }
  std::size_t tape_size() const noexcept { return tape_.size(); }

  std::vector<Eigen::MatrixXd> operator()(Args args) const
  {
    std::vector<const double *> ptrs;
    std::size_t k = 0;
    for (const auto & a : args) {
      if (k >= input_sizes_.size() || a.size() != input_sizes_[k]) {
        throw ShapeError("Function: argument " + std::to_string(k) + " has the wrong size");
      }
      ptrs.push_back(a.data());
      ++k;
    }
    if (k != input_sizes_.size()) { throw ShapeError("Function: wrong number of arguments"); }
    return call(ptrs);
  }

  /// Raw entry point: one pointer per input, each to input_size(i) doubles.
  std::vector<Eigen::MatrixXd> call(const std::vector<const double *> & inputs) const
  {
    std::vector<double> work(static_cast<std::size_t>(n_slots_));
    int s = 0;
    for (std::size_t i = 0; i < input_sizes_.size(); ++i) {
      for (int j = 0; j < input_sizes_[i]; ++j) { work[static_cast<std::size_t>(s++)] = inputs[i][j]; }
    }
    for (const auto & [at, v] : constants_) { work[static_cast<std::size_t>(at)] = v; }
    for (const auto & ins : tape_) {
      work[static_cast<std::size_t>(ins.out)] =
        apply_op(ins.op, work[static_cast<std::size_t>(ins.a)], work[static_cast<std::size_t>(ins.b)],
                 work[static_cast<std::size_t>(ins.c)]);
    }
    std::vector<Eigen::MatrixXd> out;
    out.reserve(outputs_.size());
    for (const auto & layout : outputs_) {
      Eigen::MatrixXd m(layout.rows, layout.cols);
      for (std::size_t k = 0; k < layout.slots.size(); ++k) {
        m.data()[k] = work[static_cast<std::size_t>(layout.slots[k])];
      }
      out.push_back(std::move(m));
    }
    return out;
  }

private:
  struct Instruction
  {
    Op op;
    int a, b, c, out;
  };
  struct OutputLayout
  {
    int rows, cols;
    std::vector<int> slots;
  };

  std::vector<int> input_sizes_;
  int n_slots_ = 0;
  int n_input_slots_ = 0;
  std::vector<std::pair<int, double>> constants_;
  std::vector<Instruction> tape_;
  std::vector<OutputLayout> outputs_;
};

}  // namespace taskopt
