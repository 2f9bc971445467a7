#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wavecor/tensor.hpp"

WAVECOR_BEGIN_NAMESPACE

struct Node;

/// Propagates `self.grad` into the gradients of the node's inputs.
using BackwardFn = std::function<void(Node& self)>;

struct Node {
  Tensor value;
  Tensor grad;  // empty until a gradient arrives
  bool requires_grad = false;
  std::string op;
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;

  /// Adds `g` into `grad`, allocating zeros on first use.
  void accumulate(const Tensor& g);
  /// Returns `grad`, allocating zeros on first use.
  Tensor& grad_ref();
};

/// Handle to a value in a computation.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  Index dim(int axis) const { return node_->value.dim(axis); }
  const Tensor& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool valid() const { return static_cast<bool>(node_); }

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Leaf tensor owned by a model: kernels, BN affine terms, learnable scalars.
class Parameter {
 public:
  Parameter(std::string name, Tensor init, bool trainable = true);

  const std::string& name() const noexcept { return name_; }
  bool trainable() const noexcept { return node_->requires_grad; }

  Tensor& value() { return node_->value; }
  const Tensor& value() const { return node_->value; }
  /// Gradient accumulator; always shaped like value() after zero_grad().
  Tensor& grad() { return node_->grad_ref(); }
  const Tensor& grad() const { return node_->grad; }
  void zero_grad();

  Var var() const { return Var(node_); }

 private:
  std::string name_;
  std::shared_ptr<Node> node_;
};

/// Ordered record of executed operations. Reverse traversal replays the
/// record back to front; one graph is used by one thread at a time.
class Graph {
 public:
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const noexcept { return grad_enabled_; }

  /// Non-differentiable leaf.
  Var constant(Tensor value, std::string name = "constant");

  /// Appends an operation. `backward` is kept only when some input requires
  /// gradients and recording is enabled.
  Var record(std::string op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded backward in reverse.
  void backward(const Var& loss);

  size_t size() const noexcept { return nodes_.size(); }
  const std::vector<std::shared_ptr<Node>>& nodes() const noexcept { return nodes_; }

  /// Name and position of the first recorded op whose output is non-finite.
  std::optional<std::string> first_non_finite() const;

  void clear() { nodes_.clear(); }

 private:
  bool grad_enabled_;
  std::vector<std::shared_ptr<Node>> nodes_;
};

WAVECOR_END_NAMESPACE
