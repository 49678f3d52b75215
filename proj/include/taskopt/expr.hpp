#pragma once

/**
 * @file
 * @brief Immutable symbolic expression graphs.
 *
 * An Expression is a dense rows x cols matrix whose entries are scalar nodes of a shared
 * directed acyclic graph. Scalar nodes are constants, leaves (elements of a named variable or
 * parameter block), or elementary operations on other nodes. Construction applies local
 * rewrites (constant folding, 0+x, 1*x, 0*x, x-x, double negation) so that derivative graphs
 * stay small and structural analysis sees through trivial terms.
 */

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "taskopt/error.hpp"

namespace taskopt {

enum class LeafKind : std::uint8_t { Variable, Parameter };

/// Metadata shared by every scalar leaf of one named block.
struct LeafBlock
{
  std::string name;
  LeafKind kind;
  int rows;
  int cols;
};

enum class Op : std::uint8_t {
  Constant,
  Leaf,
  // unary
  Neg,
  Square,
  Sqrt,
  Exp,
  Log,
  Sin,
  Cos,
  Tan,
  // binary
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Atan2,
  // ternary: a > 0 ? b : c
  Select,
};

constexpr int arity(Op op) noexcept
{
  switch (op) {
  case Op::Constant:
  case Op::Leaf: return 0;
  case Op::Neg:
  case Op::Square:
  case Op::Sqrt:
  case Op::Exp:
  case Op::Log:
  case Op::Sin:
  case Op::Cos:
  case Op::Tan: return 1;
  case Op::Select: return 3;
  default: return 2;
  }
}

/// Numeric kernel shared by constant folding and compiled evaluation, so both agree bit for bit.
inline double apply_op(Op op, double a, double b, double c) noexcept
{
  switch (op) {
  case Op::Neg: return -a;
  case Op::Square: return a * a;
  case Op::Sqrt: return std::sqrt(a);
  case Op::Exp: return std::exp(a);
  case Op::Log: return std::log(a);
  case Op::Sin: return std::sin(a);
  case Op::Cos: return std::cos(a);
  case Op::Tan: return std::tan(a);
  case Op::Add: return a + b;
  case Op::Sub: return a - b;
  case Op::Mul: return a * b;
  case Op::Div: return a / b;
  case Op::Pow: return std::pow(a, b);
  case Op::Atan2: return std::atan2(a, b);
  case Op::Select: return a > 0.0 ? b : c;
  default: return a;
  }
}

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node
{
  Op op = Op::Constant;
  double value = 0.0;
  std::shared_ptr<const LeafBlock> block;
  int index = 0;  // column-major position inside block
  NodePtr a, b, c;

  bool is_constant() const noexcept { return op == Op::Constant; }
  bool is_constant(double v) const noexcept { return op == Op::Constant && value == v; }
  bool is_leaf() const noexcept { return op == Op::Leaf; }
};

namespace detail {

inline thread_local bool simplify_enabled = true;

inline NodePtr make_constant(double v)
{
  auto n = std::make_shared<Node>();
  n->op = Op::Constant;
  n->value = v;
  return n;
}

inline NodePtr make_leaf(std::shared_ptr<const LeafBlock> block, int index)
{
  auto n = std::make_shared<Node>();
  n->op = Op::Leaf;
  n->block = std::move(block);
  n->index = index;
  return n;
}

inline NodePtr make_op(Op op, NodePtr a, NodePtr b = nullptr, NodePtr c = nullptr)
{
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->c = std::move(c);
  return n;
}

inline NodePtr unary(Op op, const NodePtr & a)
{
  if (simplify_enabled) {
    if (a->is_constant()) { return make_constant(apply_op(op, a->value, 0.0, 0.0)); }
    if (op == Op::Neg && a->op == Op::Neg) { return a->a; }
  }
  return make_op(op, a);
}

inline NodePtr binary(Op op, const NodePtr & a, const NodePtr & b)
{
  if (simplify_enabled) {
    if (a->is_constant() && b->is_constant()) {
      return make_constant(apply_op(op, a->value, b->value, 0.0));
    }
    switch (op) {
    case Op::Add:
      if (a->is_constant(0.0)) { return b; }
      if (b->is_constant(0.0)) { return a; }
      break;
    case Op::Sub:
      if (b->is_constant(0.0)) { return a; }
      if (a->is_constant(0.0)) { return unary(Op::Neg, b); }
      if (a == b) { return make_constant(0.0); }
      break;
    case Op::Mul:
      if (a->is_constant(0.0) || b->is_constant(0.0)) { return make_constant(0.0); }
      if (a->is_constant(1.0)) { return b; }
      if (b->is_constant(1.0)) { return a; }
      if (a->is_constant(-1.0)) { return unary(Op::Neg, b); }
      if (b->is_constant(-1.0)) { return unary(Op::Neg, a); }
      break;
    case Op::Div:
      if (a->is_constant(0.0)) { return make_constant(0.0); }
      if (b->is_constant(1.0)) { return a; }
      if (b->is_constant(-1.0)) { return unary(Op::Neg, a); }
      break;
    case Op::Pow:
      if (b->is_constant(1.0)) { return a; }
      if (b->is_constant(0.0)) { return make_constant(1.0); }
      if (b->is_constant(2.0)) { return unary(Op::Square, a); }
      break;
    default: break;
    }
  }
  return make_op(op, a, b);
}

inline NodePtr select(const NodePtr & cond, const NodePtr & if_pos, const NodePtr & otherwise)
{
  if (simplify_enabled) {
    if (cond->is_constant()) { return cond->value > 0.0 ? if_pos : otherwise; }
    if (if_pos == otherwise) { return if_pos; }
    if (if_pos->is_constant() && otherwise->is_constant() && if_pos->value == otherwise->value) {
      return if_pos;
    }
  }
  return make_op(Op::Select, cond, if_pos, otherwise);
}

/// Rebuild a node from new operands through the simplifying constructors.
inline NodePtr rebuild(const Node & n, const NodePtr & a, const NodePtr & b, const NodePtr & c)
{
  switch (arity(n.op)) {
  case 1: return unary(n.op, a);
  case 2: return binary(n.op, a, b);
  case 3: return select(a, b, c);
  default: return nullptr;
  }
}

/// Post-order (operands before users) list of the unique nodes reachable from roots. The
/// returned pointers refer to the owning handles inside roots or inside parent nodes.
inline std::vector<const NodePtr *> topological_order(std::span<const NodePtr> roots)
{
  std::vector<const NodePtr *> order;
  std::unordered_set<const Node *> visited;
  std::vector<std::pair<const NodePtr *, int>> stack;
  for (const auto & root : roots) {
    if (!root || !visited.insert(root.get()).second) { continue; }
    stack.emplace_back(&root, 0);
    while (!stack.empty()) {
      auto & [handle, next] = stack.back();
      const Node & node = **handle;
      if (next < arity(node.op)) {
        const NodePtr & child = next == 0 ? node.a : next == 1 ? node.b : node.c;
        ++next;
        if (visited.insert(child.get()).second) { stack.emplace_back(&child, 0); }
      } else {
        order.push_back(handle);
        stack.pop_back();
      }
    }
  }
  return order;
}

}  // namespace detail

/// Disables (or re-enables) construction-time rewrites for the current thread while alive.
class SimplificationGuard
{
public:
  explicit SimplificationGuard(bool enabled) : previous_(detail::simplify_enabled)
  {
    detail::simplify_enabled = enabled;
  }
  ~SimplificationGuard() { detail::simplify_enabled = previous_; }
  SimplificationGuard(const SimplificationGuard &) = delete;
  SimplificationGuard & operator=(const SimplificationGuard &) = delete;

private:
  bool previous_;
};

/**
 * @brief Dense matrix of scalar expression nodes, stored column-major.
 *
 * Value type: copies share nodes, and nodes never change after construction.
 */
class Expression
{
public:
  Expression() = default;

  Expression(double value) : rows_(1), cols_(1), nodes_{detail::make_constant(value)} {}

  template <typename Derived>
  Expression(const Eigen::DenseBase<Derived> & m)
      : rows_(static_cast<int>(m.rows())), cols_(static_cast<int>(m.cols()))
  {
    nodes_.reserve(static_cast<std::size_t>(rows_ * cols_));
    for (int j = 0; j < cols_; ++j) {
      for (int i = 0; i < rows_; ++i) { nodes_.push_back(detail::make_constant(m(i, j))); }
    }
  }

  Expression(int rows, int cols, std::vector<NodePtr> nodes)
      : rows_(rows), cols_(cols), nodes_(std::move(nodes))
  {
    if (rows < 0 || cols < 0 || nodes_.size() != static_cast<std::size_t>(rows * cols)) {
      throw ShapeError("expression node count does not match its shape");
    }
  }

  static Expression constant(const Eigen::MatrixXd & m) { return Expression(m); }

  static Expression zeros(int rows, int cols = 1) { return full(rows, cols, 0.0); }

  static Expression ones(int rows, int cols = 1) { return full(rows, cols, 1.0); }

  static Expression full(int rows, int cols, double value)
  {
    std::vector<NodePtr> nodes(static_cast<std::size_t>(rows * cols));
    for (auto & n : nodes) { n = detail::make_constant(value); }
    return {rows, cols, std::move(nodes)};
  }

  static Expression eye(int n)
  {
    auto e = zeros(n, n);
    for (int i = 0; i < n; ++i) { e.nodes_[static_cast<std::size_t>(i * n + i)] = detail::make_constant(1.0); }
    return e;
  }

  /// Fresh, unregistered block of leaves. LeafRegistry adds name uniqueness on top of this.
  static Expression symbol(std::string name, int rows, int cols = 1, LeafKind kind = LeafKind::Variable)
  {
    if (rows < 0 || cols < 0) { throw ShapeError("symbol '" + name + "' has a negative dimension"); }
    auto block = std::make_shared<const LeafBlock>(LeafBlock{std::move(name), kind, rows, cols});
    std::vector<NodePtr> nodes(static_cast<std::size_t>(rows * cols));
    for (int k = 0; k < rows * cols; ++k) { nodes[static_cast<std::size_t>(k)] = detail::make_leaf(block, k); }
    return {rows, cols, std::move(nodes)};
  }

  static Expression from_node(NodePtr node) { return {1, 1, {std::move(node)}}; }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int numel() const noexcept { return rows_ * cols_; }
  bool empty() const noexcept { return numel() == 0; }
  bool is_scalar() const noexcept { return rows_ == 1 && cols_ == 1; }
  bool is_column() const noexcept { return cols_ == 1; }

  const std::vector<NodePtr> & nodes() const noexcept { return nodes_; }
  const NodePtr & node(int k) const { return nodes_.at(static_cast<std::size_t>(k)); }
  const NodePtr & node(int i, int j) const
  {
    check_index(i, j);
    return nodes_[static_cast<std::size_t>(j * rows_ + i)];
  }

  /// Element (i, j) as a 1x1 expression.
  Expression operator()(int i, int j) const { return from_node(node(i, j)); }

  /// Element k in column-major order as a 1x1 expression.
  Expression operator()(int k) const
  {
    if (k < 0 || k >= numel()) { throw ShapeError("linear index out of range"); }
    return from_node(nodes_[static_cast<std::size_t>(k)]);
  }

  Expression block(int i0, int j0, int n_rows, int n_cols) const
  {
    if (i0 < 0 || j0 < 0 || n_rows < 0 || n_cols < 0 || i0 + n_rows > rows_ || j0 + n_cols > cols_) {
      throw ShapeError("block out of range");
    }
    std::vector<NodePtr> out;
    out.reserve(static_cast<std::size_t>(n_rows * n_cols));
    for (int j = j0; j < j0 + n_cols; ++j) {
      for (int i = i0; i < i0 + n_rows; ++i) { out.push_back(nodes_[static_cast<std::size_t>(j * rows_ + i)]); }
    }
    return {n_rows, n_cols, std::move(out)};
  }

  Expression col(int j) const { return block(0, j, rows_, 1); }
  Expression row(int i) const { return block(i, 0, 1, cols_); }
  Expression segment(int start, int n) const { return vec().block(start, 0, n, 1); }

  Expression T() const
  {
    std::vector<NodePtr> out;
    out.reserve(nodes_.size());
    for (int i = 0; i < rows_; ++i) {
      for (int j = 0; j < cols_; ++j) { out.push_back(nodes_[static_cast<std::size_t>(j * rows_ + i)]); }
    }
    return {cols_, rows_, std::move(out)};
  }

  /// Column-major flattening into a (rows*cols) x 1 column.
  Expression vec() const { return {numel(), 1, nodes_}; }

  Expression reshape(int rows, int cols) const
  {
    if (rows * cols != numel()) { throw ShapeError("reshape changes the element count"); }
    return {rows, cols, nodes_};
  }

  bool is_constant() const noexcept
  {
    for (const auto & n : nodes_) {
      if (!n->is_constant()) { return false; }
    }
    return true;
  }

  /// Numeric value of an expression with only constant entries.
  Eigen::MatrixXd value() const
  {
    Eigen::MatrixXd out(rows_, cols_);
    for (int j = 0; j < cols_; ++j) {
      for (int i = 0; i < rows_; ++i) {
        const auto & n = nodes_[static_cast<std::size_t>(j * rows_ + i)];
        if (!n->is_constant()) { throw StructureError("expression is not constant"); }
        out(i, j) = n->value;
      }
    }
    return out;
  }

  double scalar() const
  {
    if (!is_scalar()) { throw ShapeError("expression is not 1x1"); }
    return value()(0, 0);
  }

private:
  void check_index(int i, int j) const
  {
    if (i < 0 || j < 0 || i >= rows_ || j >= cols_) { throw ShapeError("element index out of range"); }
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<NodePtr> nodes_;
};

namespace detail {

template <typename F>
Expression map_unary(const Expression & a, F && f)
{
  std::vector<NodePtr> out;
  out.reserve(a.nodes().size());
  for (const auto & n : a.nodes()) { out.push_back(f(n)); }
  return {a.rows(), a.cols(), std::move(out)};
}

template <typename F>
Expression map_binary(const Expression & a, const Expression & b, F && f, const char * what)
{
  if (a.rows() == b.rows() && a.cols() == b.cols()) {
    std::vector<NodePtr> out;
    out.reserve(a.nodes().size());
    for (std::size_t k = 0; k < a.nodes().size(); ++k) { out.push_back(f(a.nodes()[k], b.nodes()[k])); }
    return {a.rows(), a.cols(), std::move(out)};
  }
  if (a.is_scalar()) {
    return map_unary(b, [&](const NodePtr & n) { return f(a.node(0), n); });
  }
  if (b.is_scalar()) {
    return map_unary(a, [&](const NodePtr & n) { return f(n, b.node(0)); });
  }
  throw ShapeError(std::string(what) + ": shapes " + std::to_string(a.rows()) + "x" +
                   std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                   std::to_string(b.cols()) + " are not compatible");
}

inline NodePtr sum_nodes(std::span<const NodePtr> terms)
{
  if (terms.empty()) { return make_constant(0.0); }
  NodePtr acc = terms.front();
  for (std::size_t k = 1; k < terms.size(); ++k) { acc = binary(Op::Add, acc, terms[k]); }
  return acc;
}

}  // namespace detail

inline Expression operator-(const Expression & a)
{
  return detail::map_unary(a, [](const NodePtr & n) { return detail::unary(Op::Neg, n); });
}

#define TASKOPT_ELEMENTWISE_BINARY(NAME, OP)                                                       \
  inline Expression NAME(const Expression & a, const Expression & b)                               \
  {                                                                                                \
    return detail::map_binary(                                                                     \
      a, b, [](const NodePtr & x, const NodePtr & y) { return detail::binary(OP, x, y); }, #NAME); \
  }

TASKOPT_ELEMENTWISE_BINARY(operator+, Op::Add)
TASKOPT_ELEMENTWISE_BINARY(operator-, Op::Sub)
/// Elementwise (Hadamard) product with scalar broadcasting; see mtimes for the matrix product.
TASKOPT_ELEMENTWISE_BINARY(operator*, Op::Mul)
TASKOPT_ELEMENTWISE_BINARY(operator/, Op::Div)
TASKOPT_ELEMENTWISE_BINARY(pow, Op::Pow)
TASKOPT_ELEMENTWISE_BINARY(atan2, Op::Atan2)

#undef TASKOPT_ELEMENTWISE_BINARY

#define TASKOPT_ELEMENTWISE_UNARY(NAME, OP)                                                       \
  inline Expression NAME(const Expression & a)                                                    \
  {                                                                                               \
    return detail::map_unary(a, [](const NodePtr & n) { return detail::unary(OP, n); });          \
  }

TASKOPT_ELEMENTWISE_UNARY(sin, Op::Sin)
TASKOPT_ELEMENTWISE_UNARY(cos, Op::Cos)
TASKOPT_ELEMENTWISE_UNARY(tan, Op::Tan)
TASKOPT_ELEMENTWISE_UNARY(sqrt, Op::Sqrt)
TASKOPT_ELEMENTWISE_UNARY(exp, Op::Exp)
TASKOPT_ELEMENTWISE_UNARY(log, Op::Log)
TASKOPT_ELEMENTWISE_UNARY(square, Op::Square)

#undef TASKOPT_ELEMENTWISE_UNARY

/// Elementwise cond > 0 ? if_pos : otherwise. Not differentiable with respect to cond.
inline Expression if_else(const Expression & cond, const Expression & if_pos, const Expression & otherwise)
{
  const Expression lhs = detail::map_binary(
    cond, if_pos, [](const NodePtr & c, const NodePtr &) { return c; }, "if_else");
  const Expression a = detail::map_binary(
    lhs, if_pos, [](const NodePtr &, const NodePtr & x) { return x; }, "if_else");
  const Expression b = detail::map_binary(
    lhs, otherwise, [](const NodePtr &, const NodePtr & x) { return x; }, "if_else");
  std::vector<NodePtr> out;
  out.reserve(lhs.nodes().size());
  for (std::size_t k = 0; k < lhs.nodes().size(); ++k) {
    out.push_back(detail::select(lhs.nodes()[k], a.nodes()[k], b.nodes()[k]));
  }
  return {lhs.rows(), lhs.cols(), std::move(out)};
}

/// Matrix product.
inline Expression mtimes(const Expression & a, const Expression & b)
{
  if (a.cols() != b.rows()) {
    throw ShapeError("mtimes: inner dimensions " + std::to_string(a.cols()) + " and " +
                     std::to_string(b.rows()) + " differ");
  }
  std::vector<NodePtr> out;
  out.reserve(static_cast<std::size_t>(a.rows() * b.cols()));
  std::vector<NodePtr> terms;
  for (int j = 0; j < b.cols(); ++j) {
    for (int i = 0; i < a.rows(); ++i) {
      terms.clear();
      for (int k = 0; k < a.cols(); ++k) {
        auto p = detail::binary(Op::Mul, a.node(i, k), b.node(k, j));
        if (!p->is_constant(0.0)) { terms.push_back(std::move(p)); }
      }
      out.push_back(detail::sum_nodes(terms));
    }
  }
  return {a.rows(), b.cols(), std::move(out)};
}

inline Expression sum(const Expression & a) { return Expression::from_node(detail::sum_nodes(a.nodes())); }

inline Expression dot(const Expression & a, const Expression & b)
{
  if (a.numel() != b.numel()) { throw ShapeError("dot: operands have different sizes"); }
  return sum(a.vec() * b.vec());
}

inline Expression sumsqr(const Expression & a) { return sum(square(a)); }

inline Expression norm_2(const Expression & a) { return sqrt(sumsqr(a)); }

inline Expression trace(const Expression & a)
{
  if (a.rows() != a.cols()) { throw ShapeError("trace: matrix is not square"); }
  std::vector<NodePtr> diag;
  for (int i = 0; i < a.rows(); ++i) { diag.push_back(a.node(i, i)); }
  return Expression::from_node(detail::sum_nodes(diag));
}

inline Expression cross(const Expression & a, const Expression & b)
{
  if (a.numel() != 3 || b.numel() != 3) { throw ShapeError("cross: operands must have 3 elements"); }
  const Expression x = a(1) * b(2) - a(2) * b(1);
  const Expression y = a(2) * b(0) - a(0) * b(2);
  const Expression z = a(0) * b(1) - a(1) * b(0);
  return {3, 1, {x.node(0), y.node(0), z.node(0)}};
}

inline Expression vertcat(std::span<const Expression> parts)
{
  int rows = 0;
  int cols = -1;
  for (const auto & p : parts) {
    if (p.empty()) { continue; }
    if (cols >= 0 && p.cols() != cols) { throw ShapeError("vertcat: column counts differ"); }
    cols = p.cols();
    rows += p.rows();
  }
  if (cols < 0) { return {}; }
  std::vector<NodePtr> out(static_cast<std::size_t>(rows * cols));
  int r0 = 0;
  for (const auto & p : parts) {
    if (p.empty()) { continue; }
    for (int j = 0; j < cols; ++j) {
      for (int i = 0; i < p.rows(); ++i) { out[static_cast<std::size_t>(j * rows + r0 + i)] = p.node(i, j); }
    }
    r0 += p.rows();
  }
  return {rows, cols, std::move(out)};
}
inline Expression vertcat(std::initializer_list<Expression> parts)
{
  return vertcat(std::span<const Expression>(parts.begin(), parts.size()));
}

inline Expression horzcat(std::span<const Expression> parts)
{
  int rows = -1;
  int cols = 0;
  std::vector<NodePtr> out;
  for (const auto & p : parts) {
    if (p.empty()) { continue; }
    if (rows >= 0 && p.rows() != rows) { throw ShapeError("horzcat: row counts differ"); }
    rows = p.rows();
    cols += p.cols();
    out.insert(out.end(), p.nodes().begin(), p.nodes().end());
  }
  if (rows < 0) { return {}; }
  return {rows, cols, std::move(out)};
}
inline Expression horzcat(std::initializer_list<Expression> parts)
{
  return horzcat(std::span<const Expression>(parts.begin(), parts.size()));
}

/// Closed-form determinant for matrices up to 3x3.
inline Expression det(const Expression & m)
{
  if (m.rows() != m.cols()) { throw ShapeError("det: matrix is not square"); }
  switch (m.rows()) {
  case 0: return 1.0;
  case 1: return m(0, 0);
  case 2: return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  case 3:
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
  default: throw ShapeError("det: closed form is only available up to 3x3");
  }
}

/// Unique leaves of e in a deterministic (topological) order.
inline std::vector<NodePtr> leaves(const Expression & e)
{
  std::vector<NodePtr> out;
  for (const NodePtr * h : detail::topological_order(e.nodes())) {
    if ((*h)->is_leaf()) { out.push_back(*h); }
  }
  return out;
}

}  // namespace taskopt
