// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace premov::gradkit {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> v);

  std::size_t numel() const noexcept { return values.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  std::size_t rank() const noexcept { return shape.size(); }
  bool operator==(const Tensor&) const = default;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;
using BackwardFn = std::function<void(Node& self)>;

/// One value in the recorded graph. Leaves have no backward function.
struct Node {
  Tensor value;
  std::vector<double> grad;  // empty unless requires_grad
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  BackwardFn backward;

  void ensure_grad();
};

/// Handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;

  static Var leaf(Tensor value, bool requires_grad = false);

  /// Result of an op. The graph edge is recorded only when some parent
  /// requires a gradient; otherwise the value is returned as a constant.
  static Var from_op(Tensor value, std::vector<Var> parents, BackwardFn backward);

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape; }
  std::size_t numel() const { return node_->value.numel(); }
  std::span<const double> grad() const;
  std::vector<double>& mutable_grad();
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_graph() const { return node_ && static_cast<bool>(node_->backward); }
  void zero_grad();

  Node& node() const { return *node_; }
  const NodePtr& node_ptr() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  explicit Var(NodePtr n) : node_(std::move(n)) {}
  NodePtr node_;
};

/// Back-propagates from a scalar, accumulating into every tracked leaf, then
/// releases the graph. Throws NoGraph when `loss` was not produced by a tracked op.
void backward(const Var& loss);

}  // namespace premov::gradkit
