#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gqe/tensor.hpp"

namespace gqe::tg {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::uint32_t id = 0;
  std::vector<std::uint32_t> inputs;
  // Reads this node's grad and accumulates into its inputs.
  std::function<void()> backward;

  Tensor<T>& grad_buffer() {
    if (grad.size() != value.size()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

// Handle to a value in a computation. Copies share the same node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  const Tensor<T>& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  std::uint32_t id() const { return node_->id; }

  // Accumulated gradient; zeros when nothing flowed into this value.
  const Tensor<T>& grad() const { return node_->grad_buffer(); }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& shared() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Records, in creation order, every node that participates in
// differentiation. Nodes that need no gradient are never recorded, so
// inference through a tape keeps no intermediates alive.
template <typename T>
class Tape {
 public:
  Var<T> leaf(Tensor<T> value, bool requires_grad = false) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    n->id = next_id_++;
    if (requires_grad) order_.push_back(n);
    return Var<T>(std::move(n));
  }

  Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

  // For op implementations: wraps an op output. `make_backward` is invoked
  // only if some input requires a gradient; it receives the output node.
  template <typename MakeBackward>
  Var<T> record(const char* op, Tensor<T> value, const std::vector<const Var<T>*>& inputs,
                MakeBackward&& make_backward) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->op = op;
    n->id = next_id_++;
    for (const Var<T>* in : inputs) {
      n->inputs.push_back(in->id());
      n->requires_grad = n->requires_grad || in->requires_grad();
    }
    if (n->requires_grad) {
      n->backward = make_backward(n.get());
      order_.push_back(n);
    }
    return Var<T>(std::move(n));
  }

  std::size_t recorded() const noexcept { return order_.size(); }

  // Seeds d(loss)/d(loss) = 1 and runs every recorded backward in reverse
  // creation order. Throws NotScalarLoss unless loss holds one element.
  void backward(const Var<T>& loss) {
    if (loss.value().size() != 1) {
      throw Error(ErrorCode::NotScalarLoss, "loss has shape " + shape_string(loss.shape()));
    }
    if (!loss.requires_grad()) return;
    loss.node()->grad_buffer()[0] += T(1);
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      Node<T>& n = **it;
      if (n.backward && n.grad.size() == n.value.size()) n.backward();
    }
  }

 private:
  std::vector<std::shared_ptr<Node<T>>> order_;
  std::uint32_t next_id_ = 0;
};

}  // namespace gqe::tg
