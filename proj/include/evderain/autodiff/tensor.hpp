// Copyright 2026 The evderain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace evderain::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// Graph vertex. `backward_fn` reads `grad` of this node and accumulates into
/// the grads of `inputs`. Leaves have no inputs and keep their grad across
/// backward calls; interior grads are reset at the start of each call.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<NodePtr> inputs;
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const noexcept { return inputs.empty(); }
  std::vector<double>& ensure_grad();
};

/// Handle to a dense fp64 row-major array that may take part in reverse-mode
/// differentiation. Copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const { return node().value.size(); }

  std::span<const double> data() const { return node().value; }
  /// In-place access for parameter updates; not recorded on any tape.
  std::span<double> mutable_data() { return node().value; }
  double operator[](std::size_t i) const { return node().value[i]; }
  double item() const;

  bool requires_grad() const { return node().requires_grad; }
  Tensor& set_requires_grad(bool flag);
  bool has_grad() const { return !node().grad.empty(); }
  /// Empty span until a backward pass has reached this tensor.
  std::span<const double> grad() const { return node().grad; }
  std::span<double> mutable_grad() { return node().ensure_grad(); }
  void zero_grad();

  /// Same values, cut from the graph.
  Tensor detach() const;
  Tensor clone() const;

  Node& node() const;
  const NodePtr& node_ptr() const noexcept { return node_; }

 private:
  NodePtr node_;
};

/// Topologically ordered record of the operations reachable from a root:
/// every node appears after all producers of its inputs.
class Tape {
 public:
  static Tape record(const Tensor& root);
  std::span<Node* const> nodes() const noexcept { return nodes_; }

 private:
  std::vector<Node*> nodes_;
};

/// Seeds d(loss)/d(loss) = 1 and propagates through the recorded graph.
/// Leaf gradients accumulate across calls. Throws ContractError when `loss`
/// is not a scalar.
void backward(const Tensor& loss);

bool grad_enabled() noexcept;

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Creates the output node of an operation. When recording is enabled and an
/// input requires grad, the node keeps `inputs` and `backward_fn`.
Tensor make_result(const char* op, Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn);

/// grad(inputs[i]) += values, skipped when that input does not require grad.
void accumulate_grad(Node& input, std::span<const double> values);

}  // namespace evderain::ad
