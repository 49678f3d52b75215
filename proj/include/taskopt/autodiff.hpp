#pragma once

/**
 * @file
 * @brief Symbolic differentiation and structural analysis of expression graphs.
 *
 * Derivatives are produced by forward-mode graph transformation: one sweep per independent
 * leaf, visiting only the nodes that come after that leaf in topological order. The result is
 * itself an Expression, so derivatives of any order are obtained by repeated application.
 */

#include <algorithm>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "taskopt/expr.hpp"

namespace taskopt {

/// Tightest polynomial class of an expression with respect to a set of leaves.
enum class StructureClass { Constant, Linear, Quadratic, Nonlinear };

inline const char * to_string(StructureClass c) noexcept
{
  switch (c) {
  case StructureClass::Constant: return "constant";
  case StructureClass::Linear: return "linear";
  case StructureClass::Quadratic: return "quadratic";
  default: return "nonlinear";
  }
}

namespace detail {

inline std::vector<const Node *> leaf_nodes(const Expression & wrt, const char * what)
{
  std::vector<const Node *> out;
  out.reserve(wrt.nodes().size());
  for (const auto & n : wrt.nodes()) {
    if (!n->is_leaf()) { throw StructureError(std::string(what) + ": differentiation set must contain only leaves"); }
    out.push_back(n.get());
  }
  return out;
}

// Derivative arithmetic where nullptr stands for an exact zero.
inline NodePtr d_add(const NodePtr & x, const NodePtr & y)
{
  if (!x) { return y; }
  if (!y) { return x; }
  return binary(Op::Add, x, y);
}

inline NodePtr d_sub(const NodePtr & x, const NodePtr & y)
{
  if (!y) { return x; }
  if (!x) { return unary(Op::Neg, y); }
  return binary(Op::Sub, x, y);
}

inline NodePtr d_mul(const NodePtr & factor, const NodePtr & dx)
{
  if (!dx) { return nullptr; }
  return binary(Op::Mul, factor, dx);
}

inline NodePtr d_div(const NodePtr & dx, const NodePtr & denom)
{
  if (!dx) { return nullptr; }
  return binary(Op::Div, dx, denom);
}

inline NodePtr or_zero(const NodePtr & n) { return n ? n : make_constant(0.0); }

/// Partial-derivative factors that do not depend on which leaf is being differentiated.
inline NodePtr local_factor(const NodePtr & self)
{
  const Node & n = *self;
  switch (n.op) {
  case Op::Square: return binary(Op::Mul, make_constant(2.0), n.a);
  case Op::Sqrt: return binary(Op::Mul, make_constant(2.0), self);
  case Op::Sin: return unary(Op::Cos, n.a);
  case Op::Cos: return unary(Op::Neg, unary(Op::Sin, n.a));
  case Op::Tan: return binary(Op::Add, make_constant(1.0), unary(Op::Square, self));
  case Op::Atan2: return binary(Op::Add, unary(Op::Square, n.a), unary(Op::Square, n.b));
  case Op::Pow: return binary(Op::Mul, n.b, binary(Op::Pow, n.a, binary(Op::Sub, n.b, make_constant(1.0))));
  default: return nullptr;
  }
}

}  // namespace detail

/**
 * @brief Jacobian of a column vector e (m x 1) with respect to the leaves in wrt.
 *
 * Returns an m x n expression where n = wrt.numel() and column j holds the partial derivatives
 * with respect to the j-th leaf of wrt (column-major).
 */
inline Expression jacobian(const Expression & e, const Expression & wrt)
{
  if (!e.is_column()) { throw ShapeError("jacobian: expression must be a column vector"); }
  const auto wrt_nodes = detail::leaf_nodes(wrt, "jacobian");
  const int m = e.rows();
  const int n = static_cast<int>(wrt_nodes.size());

  const auto order = detail::topological_order(e.nodes());
  const std::size_t size = order.size();
  std::unordered_map<const Node *, int> position;
  position.reserve(size);
  for (std::size_t i = 0; i < size; ++i) { position.emplace(order[i]->get(), static_cast<int>(i)); }

  struct Operands
  {
    int a = -1, b = -1, c = -1;
  };
  std::vector<Operands> operands(size);
  for (std::size_t i = 0; i < size; ++i) {
    const Node & node = **order[i];
    if (node.a) { operands[i].a = position.at(node.a.get()); }
    if (node.b) { operands[i].b = position.at(node.b.get()); }
    if (node.c) { operands[i].c = position.at(node.c.get()); }
  }
  std::vector<int> output_position(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r) { output_position[static_cast<std::size_t>(r)] = position.at(e.node(r).get()); }

  std::vector<NodePtr> factor(size);
  std::vector<bool> have_factor(size, false);
  std::vector<NodePtr> d(size);
  std::vector<NodePtr> out(static_cast<std::size_t>(m * n));

  for (int j = 0; j < n; ++j) {
    const auto found = position.find(wrt_nodes[static_cast<std::size_t>(j)]);
    if (found == position.end()) { continue; }
    const std::size_t start = static_cast<std::size_t>(found->second);
    std::fill(d.begin(), d.end(), nullptr);
    d[start] = detail::make_constant(1.0);

    for (std::size_t i = start + 1; i < size; ++i) {
      const NodePtr & self = *order[i];
      const Node & node = *self;
      const Operands & op = operands[i];
      if (op.a < 0) { continue; }  // constants and other leaves
      const NodePtr & da = d[static_cast<std::size_t>(op.a)];
      const NodePtr db = op.b >= 0 ? d[static_cast<std::size_t>(op.b)] : nullptr;
      const NodePtr dc = op.c >= 0 ? d[static_cast<std::size_t>(op.c)] : nullptr;
      if (!da && !db && !dc) { continue; }

      auto local = [&]() -> const NodePtr & {
        if (!have_factor[i]) {
          factor[i] = detail::local_factor(self);
          have_factor[i] = true;
        }
        return factor[i];
      };

      NodePtr out_d;
      switch (node.op) {
      case Op::Neg: out_d = detail::unary(Op::Neg, da); break;
      case Op::Square:
      case Op::Sin:
      case Op::Cos:
      case Op::Tan: out_d = detail::d_mul(local(), da); break;
      case Op::Sqrt: out_d = detail::d_div(da, local()); break;
      case Op::Exp: out_d = detail::d_mul(self, da); break;
      case Op::Log: out_d = detail::d_div(da, node.a); break;
      case Op::Add: out_d = detail::d_add(da, db); break;
      case Op::Sub: out_d = detail::d_sub(da, db); break;
      case Op::Mul: out_d = detail::d_add(detail::d_mul(node.b, da), detail::d_mul(node.a, db)); break;
      case Op::Div:
        // (da - self * db) / b
        out_d = detail::d_div(detail::d_sub(da, detail::d_mul(self, db)), node.b);
        break;
      case Op::Pow:
        if (!db) {
          out_d = detail::d_mul(local(), da);
        } else {
          // self * (db * log(a) + b * da / a)
          const NodePtr inner = detail::d_add(
            detail::d_mul(detail::unary(Op::Log, node.a), db), detail::d_div(detail::d_mul(node.b, da), node.a));
          out_d = detail::d_mul(self, inner);
        }
        break;
      case Op::Atan2:
        // (x * dy - y * dx) / (x^2 + y^2) with y = a, x = b
        out_d = detail::d_div(detail::d_sub(detail::d_mul(node.b, da), detail::d_mul(node.a, db)), local());
        break;
      case Op::Select:
        if (db || dc) { out_d = detail::select(node.a, detail::or_zero(db), detail::or_zero(dc)); }
        break;
      default: break;
      }
      if (out_d && out_d->is_constant(0.0)) { out_d = nullptr; }
      d[i] = std::move(out_d);
    }
    for (int r = 0; r < m; ++r) {
      const std::size_t p = static_cast<std::size_t>(output_position[static_cast<std::size_t>(r)]);
      if (p >= start && d[p]) { out[static_cast<std::size_t>(j * m + r)] = d[p]; }
    }
  }
  for (auto & node : out) {
    if (!node) { node = detail::make_constant(0.0); }
  }
  return {m, n, std::move(out)};
}

/// Gradient (n x 1) of a scalar expression.
inline Expression gradient(const Expression & f, const Expression & wrt)
{
  if (!f.is_scalar()) { throw ShapeError("gradient: expression must be scalar"); }
  return jacobian(f, wrt).T();
}

/// Symmetric Hessian (n x n) of a scalar expression; the upper triangle mirrors the lower one.
inline Expression hessian(const Expression & f, const Expression & wrt)
{
  const Expression h = jacobian(gradient(f, wrt), wrt);
  const int n = h.rows();
  std::vector<NodePtr> nodes = h.nodes();
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) { nodes[static_cast<std::size_t>(j * n + i)] = h.node(j, i); }
  }
  return {n, n, std::move(nodes)};
}

/// True when any leaf of wrt is reachable from e.
inline bool depends_on(const Expression & e, const Expression & wrt)
{
  std::unordered_set<const Node *> targets;
  for (const auto & n : wrt.nodes()) { targets.insert(n.get()); }
  if (targets.empty()) { return false; }
  for (const NodePtr * h : detail::topological_order(e.nodes())) {
    if ((*h)->is_leaf() && targets.count(h->get())) { return true; }
  }
  return false;
}

/**
 * @brief Structural classification with respect to the leaves in wrt.
 *
 * constant: e has no wrt leaf; linear: its Jacobian has none; quadratic: its second
 * derivative has none; nonlinear otherwise.
 */
inline StructureClass classify(const Expression & e, const Expression & wrt)
{
  if (!depends_on(e, wrt)) { return StructureClass::Constant; }
  const Expression first = jacobian(e.vec(), wrt);
  if (!depends_on(first, wrt)) { return StructureClass::Linear; }
  const Expression second = jacobian(first.vec(), wrt);
  if (!depends_on(second, wrt)) { return StructureClass::Quadratic; }
  return StructureClass::Nonlinear;
}

/// Replace every leaf of `from` with the matching scalar entry of `to`.
inline Expression substitute(const Expression & e, const Expression & from, const Expression & to)
{
  const auto from_nodes = detail::leaf_nodes(from, "substitute");
  if (to.numel() != static_cast<int>(from_nodes.size())) {
    throw ShapeError("substitute: replacement count does not match leaf count");
  }
  std::unordered_map<const Node *, NodePtr> mapped;
  for (std::size_t k = 0; k < from_nodes.size(); ++k) { mapped[from_nodes[k]] = to.nodes()[k]; }

  for (const NodePtr * h : detail::topological_order(e.nodes())) {
    const Node & node = **h;
    if (node.is_leaf() || node.is_constant()) { continue; }
    auto lookup = [&](const NodePtr & child) -> NodePtr {
      if (!child) { return nullptr; }
      const auto it = mapped.find(child.get());
      return it == mapped.end() ? child : it->second;
    };
    NodePtr a = lookup(node.a);
    NodePtr b = lookup(node.b);
    NodePtr c = lookup(node.c);
    if (a != node.a || b != node.b || c != node.c) { mapped[h->get()] = detail::rebuild(node, a, b, c); }
  }
  std::vector<NodePtr> out;
  out.reserve(e.nodes().size());
  for (const auto & n : e.nodes()) {
    const auto it = mapped.find(n.get());
    out.push_back(it == mapped.end() ? n : it->second);
  }
  return {e.rows(), e.cols(), std::move(out)};
}

/// Re-run every operation through the rewriting constructors.
inline Expression simplify(const Expression & e)
{
  SimplificationGuard enable(true);
  std::unordered_map<const Node *, NodePtr> mapped;
  auto get = [&](const NodePtr & child) -> NodePtr {
    if (!child) { return nullptr; }
    const auto it = mapped.find(child.get());
    return it == mapped.end() ? child : it->second;
  };
  for (const NodePtr * h : detail::topological_order(e.nodes())) {
    const Node & node = **h;
    if (node.is_leaf() || node.is_constant()) { continue; }
    mapped[h->get()] = detail::rebuild(node, get(node.a), get(node.b), get(node.c));
  }
  std::vector<NodePtr> out;
  out.reserve(e.nodes().size());
  for (const auto & n : e.nodes()) { out.push_back(get(n)); }
  return {e.rows(), e.cols(), std::move(out)};
}

/// e == matrix * vec(wrt) + offset, with matrix and offset free of wrt leaves.
struct AffineForm
{
  Expression matrix;
  Expression offset;
};

/// Split an expression that is affine in wrt into its coefficient matrix and offset.
inline AffineForm extract_affine(const Expression & e, const Expression & wrt)
{
  const Expression column = e.vec();
  if (!depends_on(column, wrt)) {
    return {Expression::zeros(column.rows(), wrt.numel()), column};
  }
  Expression matrix = jacobian(column, wrt);
  if (depends_on(matrix, wrt)) { throw StructureError("extract_affine: expression is not affine in the given leaves"); }
  Expression offset = substitute(column, wrt, Expression::zeros(wrt.numel()));
  return {std::move(matrix), std::move(offset)};
}

}  // namespace taskopt
