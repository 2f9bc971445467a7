#include "wavecor/autograd.hpp"

#include <algorithm>

#include "wavecor/errors.hpp"

WAVECOR_BEGIN_NAMESPACE

void Node::accumulate(const Tensor& g) {
  if (grad.empty() && value.numel() > 0) {
    grad = g;
    return;
  }
  require_same_shape(grad, g, "gradient accumulation");
  Real* dst = grad.data();
  const Real* src = g.data();
  for (Index i = 0; i < g.numel(); ++i) dst[i] += src[i];
}

Tensor& Node::grad_ref() {
  if (grad.empty() && value.numel() > 0) grad = Tensor(value.shape());
  return grad;
}

Parameter::Parameter(std::string name, Tensor init, bool trainable)
    : name_(std::move(name)), node_(std::make_shared<Node>()) {
  node_->value = std::move(init);
  node_->requires_grad = trainable;
  node_->op = "parameter:" + name_;
}

void Parameter::zero_grad() {
  if (node_->grad.shape() != node_->value.shape()) {
    node_->grad = Tensor(node_->value.shape());
  } else {
    node_->grad.fill(Real(0));
  }
}

Var Graph::constant(Tensor value, std::string name) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = std::move(name);
  return Var(std::move(node));
}

Var Graph::record(std::string op, Tensor value, std::vector<Var> inputs,
                  BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = std::move(op);
  const bool needs = grad_enabled_ && std::any_of(inputs.begin(), inputs.end(),
                                                  [](const Var& v) { return v.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->backward = std::move(backward);
    node->inputs.reserve(inputs.size());
    for (auto& v : inputs) node->inputs.push_back(v.shared());
  }
  nodes_.push_back(node);
  return Var(std::move(node));
}

void Graph::backward(const Var& loss) {
  if (!loss.valid() || loss.value().numel() != 1) {
    throw UsageError("backward requires a scalar loss, got shape " +
                     (loss.valid() ? shape_string(loss.shape()) : std::string("<null>")));
  }
  if (!loss.requires_grad()) return;
  loss.node()->accumulate(Tensor(loss.shape(), Real(1)));
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.backward && !n.grad.empty()) n.backward(n);
  }
}

std::optional<std::string> Graph::first_non_finite() const {
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i]->value.all_finite()) {
      return nodes_[i]->op + " (op #" + std::to_string(i) + ")";
    }
  }
  return std::nullopt;
}

WAVECOR_END_NAMESPACE
