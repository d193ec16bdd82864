// Copyright 2026 The aczsl Authors.
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

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "aczsl/tensor.hpp"

namespace aczsl::ad {

enum class OpKind {
  leaf,
  matmul,
  affine,
  add,
  sub,
  mul,
  scale,
  add_bias,
  relu,
  sigmoid,
  exp,
  log,
  tanh,
  square,
  concat,
  slice_cols,
  grad_reverse,
  sum,
  mean,
  detach,
  custom,
};

const char* op_name(OpKind kind);

// One record of the define-by-run graph. The graph is rebuilt for every
// minibatch; only parameter leaves outlive a backward pass.
struct Node {
  OpKind kind = OpKind::leaf;
  std::vector<std::shared_ptr<Node>> parents;
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  Tensor& mutable_grad() { return node_->grad; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  OpKind kind() const { return node_->kind; }
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Tensor value);
// Leaf with requires_grad set; used for trainable parameters.
Var parameter(Tensor value);
Var detach(const Var& x);

Var matmul(const Var& a, const Var& b);
// x[b x in] * weight[out x in]^T + bias[out]
Var affine(const Var& x, const Var& weight, const Var& bias);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
// matrix[b x n] + row[n], broadcast over rows
Var add_bias(const Var& x, const Var& bias);

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var tanh(const Var& x);
Var square(const Var& x);

enum class Unary { relu, sigmoid, exp, log, tanh };
enum class Binary { add, mul };
Var elementwise(Unary kind, const Var& x);
Var elementwise(Binary kind, const Var& a, const Var& b);

Var concat(const Var& a, const Var& b, std::size_t axis);
Var slice_cols(const Var& x, std::size_t begin, std::size_t end);

// Identity forward; backward multiplies the incoming gradient by -strength.
Var grad_reverse(const Var& x, double strength);

Var sum(const Var& x);
Var mean(const Var& x);

// Builds a node whose backward is supplied by the caller. Used by fused
// losses that keep their own derivative.
Var make_node(OpKind kind, std::vector<Var> parents, Tensor value, std::function<void(Node&)> backward_fn);

// Zeroes every gradient reachable from loss, seeds d(loss)/d(loss) = 1 and
// propagates in reverse topological order. Leaves that are not reachable keep
// whatever gradient they held.
void backward(const Var& loss);

}  // namespace aczsl::ad
