#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "natsr/tensor.hpp"

namespace natsr {

// A named tensor owned by a network. Trainable parameters receive gradients
// from Graph::backward; buffers (e.g. spectral-norm power-iteration vectors)
// are persisted with the network but never optimised.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool buffer = false;
};

// Ordered, name-addressable parameter collection ("NetworkParams"). Parameter
// addresses are stable for the lifetime of the set.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet& other);
  ParameterSet& operator=(const ParameterSet& other);
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;

  Parameter& add(std::string name, Tensor init, bool buffer = false);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  // Number of trainable scalars (buffers excluded).
  std::size_t scalar_count() const;

  void zero_grad();

  // A frozen set is fed into graphs as constants: no gradient ever reaches it.
  void set_frozen(bool frozen) noexcept { frozen_ = frozen; }
  bool frozen() const noexcept { return frozen_; }

  // Bitwise equality of names and values (gradients ignored).
  bool identical(const ParameterSet& other) const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  bool frozen_ = false;
};

// Handle to a node of a Graph.
struct Var {
  std::int32_t index = -1;
  bool valid() const noexcept { return index >= 0; }
};

// Define-by-run reverse-mode tape. Nodes are appended in evaluation order, so
// creation order is a topological order and the tape is acyclic by
// construction.
class Graph {
 public:
  // Backward rule of a node: receives the graph and the gradient flowing into
  // the node's output, and accumulates into its inputs via grad_target().
  using BackwardFn = std::function<void(Graph&, const Tensor& grad_out)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Constant leaf.
  Var constant(Tensor value);
  // Leaf whose gradient is tracked (inputs of grad checks, SR images fed to a
  // frozen critic, ...).
  Var variable(Tensor value);
  // Leaf bound to a parameter. Frozen sets and buffers enter as constants.
  Var param(Parameter& p, const ParameterSet& owner);
  Var param(Parameter& p, bool trainable = true);

  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;

  // Gradient accumulated at `v` by the last backward() call; zeros if none
  // flowed there.
  Tensor grad(Var v) const;

  // Accumulation target for a backward rule, or nullptr when `v` does not
  // need a gradient. Allocates zeros on first use.
  Tensor* grad_target(Var v);

  // Seeds d(loss)/d(loss) = 1 and propagates. Parameter gradients are added
  // to Parameter::grad. Throws ShapeError unless loss holds one element.
  void backward(Var loss);

  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };
  const Node& node(Var v) const;
  Node& node(Var v);

  std::vector<Node> nodes_;
};

}  // namespace natsr
