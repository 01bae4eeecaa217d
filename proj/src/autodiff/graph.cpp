#include <algorithm>

#include "natsr/autodiff.hpp"
#include "natsr/error.hpp"

namespace natsr {

ParameterSet::ParameterSet(const ParameterSet& other) : frozen_(other.frozen_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
}

ParameterSet& ParameterSet::operator=(const ParameterSet& other) {
  if (this != &other) {
    ParameterSet copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Parameter& ParameterSet::add(std::string name, Tensor init, bool buffer) {
  if (contains(name)) throw Error("duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->grad = Tensor::zeros_like(init);
  p->value = std::move(init);
  p->buffer = buffer;
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterSet::get(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return *p;
  throw Error("no parameter named '" + name + "'");
}

const Parameter& ParameterSet::get(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return *p;
  throw Error("no parameter named '" + name + "'");
}

bool ParameterSet::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(), [&](const auto& p) { return p->name == name; });
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (!p->buffer) n += p->value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

bool ParameterSet::identical(const ParameterSet& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i]->name != other.params_[i]->name) return false;
    if (!params_[i]->value.identical(other.params_[i]->value)) return false;
  }
  return true;
}

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Graph::variable(Tensor value) {
  Var v = constant(std::move(value));
  nodes_.back().requires_grad = true;
  return v;
}

Var Graph::param(Parameter& p, const ParameterSet& owner) { return param(p, !owner.frozen()); }

Var Graph::param(Parameter& p, bool trainable) {
  Node n;
  n.value = p.value;
  if (trainable && !p.buffer) {
    n.requires_grad = true;
    n.param = &p;
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Graph::record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (Var in : inputs) n.requires_grad = n.requires_grad || node(in).requires_grad;
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Graph::Node& Graph::node(Var v) const {
  if (v.index < 0 || static_cast<std::size_t>(v.index) >= nodes_.size()) throw Error("invalid graph handle");
  return nodes_[v.index];
}

Graph::Node& Graph::node(Var v) {
  if (v.index < 0 || static_cast<std::size_t>(v.index) >= nodes_.size()) throw Error("invalid graph handle");
  return nodes_[v.index];
}

const Tensor& Graph::value(Var v) const { return node(v).value; }

bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }

Tensor Graph::grad(Var v) const {
  const Node& n = node(v);
  return n.grad.empty() && !n.value.empty() ? Tensor::zeros_like(n.value) : n.grad;
}

Tensor* Graph::grad_target(Var v) {
  Node& n = node(v);
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty()) n.grad = Tensor::zeros_like(n.value);
  return &n.grad;
}

void Graph::backward(Var loss) {
  Node& root = node(loss);
  if (root.value.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + to_string(root.value.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  if (!root.requires_grad) return;
  root.grad = Tensor(root.value.shape(), 1.0);
  for (std::size_t i = static_cast<std::size_t>(loss.index) + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.param != nullptr) {
      Tensor& pg = n.param->grad;
      if (pg.shape() != n.value.shape()) pg = Tensor::zeros_like(n.value);
      for (std::size_t k = 0; k < pg.size(); ++k) pg[k] += n.grad[k];
    }
    // Rules only write into the grads of earlier nodes; nodes_ never
    // reallocates during the sweep, so passing n.grad by reference is safe.
    if (n.backward) n.backward(*this, n.grad);
  }
}

}  // namespace natsr
