// SPDX-License-Identifier: Apache-2.0
#include "premov/gradkit/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "premov/error.hpp"

namespace premov::gradkit {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), values(shape_numel(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  if (values.size() != shape_numel(shape))
    throw Error(Errc::ShapeError, "shape " + shape_string(shape) + " does not hold " +
                                      std::to_string(values.size()) + " values");
}

void Node::ensure_grad() {
  if (grad.size() != value.numel()) grad.assign(value.numel(), 0.0);
}

Var Var::leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  if (requires_grad) n->ensure_grad();
  return Var(std::move(n));
}

Var Var::from_op(Tensor value, std::vector<Var> parents, BackwardFn backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  const bool tracked = std::any_of(parents.begin(), parents.end(), [](const Var& p) { return p.requires_grad(); });
  if (tracked) {
    n->requires_grad = true;
    n->ensure_grad();
    n->backward = std::move(backward);
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node_);
  }
  return Var(std::move(n));
}

std::span<const double> Var::grad() const { return node_->grad; }

std::vector<double>& Var::mutable_grad() {
  node_->ensure_grad();
  return node_->grad;
}

void Var::zero_grad() {
  if (node_ && node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void backward(const Var& loss) {
  if (!loss || !loss.has_graph()) throw Error(Errc::NoGraph, "backward() needs the output of a recorded forward pass");
  if (loss.numel() != 1) throw Error(Errc::ShapeError, "backward() needs a scalar loss");

  // Iterative post-order DFS gives a topological order with parents first.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{&loss.node(), 0}};
  visited.insert(&loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->backward && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order)
    if (n != &loss.node()) std::fill(n->grad.begin(), n->grad.end(), 0.0);
  loss.node().ensure_grad();
  loss.node().grad[0] = 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    for (auto& p : n->parents)
      if (p->requires_grad) p->ensure_grad();
    n->backward(*n);
  }
  for (Node* n : order) {
    n->backward = nullptr;
    n->parents.clear();
  }
}

}  // namespace premov::gradkit
