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

#include "aczsl/autodiff.hpp"

#include <Eigen/Core>
#include <cmath>
#include <unordered_set>

#include "aczsl/error.hpp"

namespace aczsl::ad {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

MutMap as_matrix(Tensor& t) {
  return MutMap(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

bool any_requires_grad(const std::vector<Var>& parents) {
  for (const auto& p : parents)
    if (p.requires_grad()) return true;
  return false;
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
}

void require_matrix(const char* op, const Var& x) {
  if (x.value().rank() != 2)
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_to_string(x.shape()));
}

// Unary pointwise op whose local derivative depends on input and output.
template <typename Fwd, typename Deriv>
Var pointwise(OpKind kind, const Var& x, Fwd fwd, Deriv deriv) {
  Tensor out(x.shape());
  const auto& in = x.value();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return make_node(kind, {x}, std::move(out), [deriv](Node& n) {
    Node& p = *n.parents[0];
    if (!p.requires_grad) return;
    for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i] * deriv(p.value[i], n.value[i]);
  });
}

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::matmul: return "matmul";
    case OpKind::affine: return "affine";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::scale: return "scale";
    case OpKind::add_bias: return "add_bias";
    case OpKind::relu: return "relu";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::tanh: return "tanh";
    case OpKind::square: return "square";
    case OpKind::concat: return "concat";
    case OpKind::slice_cols: return "slice_cols";
    case OpKind::grad_reverse: return "grad_reverse";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::detach: return "detach";
    case OpKind::custom: return "custom";
  }
  return "?";
}

void Var::zero_grad() { node_->grad = Tensor(node_->value.shape()); }

Var constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var parameter(Tensor value) {
  auto node = std::make_shared<Node>();
  node->grad = Tensor(value.shape());
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

Var detach(const Var& x) {
  auto node = std::make_shared<Node>();
  node->kind = OpKind::detach;
  node->value = x.value();
  return Var(std::move(node));
}

Var make_node(OpKind kind, std::vector<Var> parents, Tensor value, std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->kind = kind;
  node->value = std::move(value);
  node->requires_grad = any_requires_grad(parents);
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward_fn = std::move(backward_fn);
  }
  return Var(std::move(node));
}

Var matmul(const Var& a, const Var& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  if (a.value().cols() != b.value().rows())
    throw ShapeError("matmul: inner dimensions differ, " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  Tensor out(Shape{a.value().rows(), b.value().cols()});
  as_matrix(out).noalias() = as_matrix(a.value()) * as_matrix(b.value());
  return make_node(OpKind::matmul, {a, b}, std::move(out), [](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    if (pa.requires_grad) as_matrix(pa.grad).noalias() += as_matrix(n.grad) * as_matrix(pb.value).transpose();
    if (pb.requires_grad) as_matrix(pb.grad).noalias() += as_matrix(pa.value).transpose() * as_matrix(n.grad);
  });
}

Var affine(const Var& x, const Var& weight, const Var& bias) {
  require_matrix("affine", x);
  require_matrix("affine", weight);
  const auto out_dim = weight.value().rows();
  if (x.value().cols() != weight.value().cols())
    throw ShapeError("affine: input width " + std::to_string(x.value().cols()) + " does not match weight " +
                     shape_to_string(weight.shape()));
  if (bias.value().size() != out_dim)
    throw ShapeError("affine: bias " + shape_to_string(bias.shape()) + " does not match weight " +
                     shape_to_string(weight.shape()));
  Tensor out(Shape{x.value().rows(), out_dim});
  auto om = as_matrix(out);
  om.noalias() = as_matrix(x.value()) * as_matrix(weight.value()).transpose();
  Eigen::Map<const Eigen::RowVectorXd> b(bias.value().data(), static_cast<Eigen::Index>(out_dim));
  om.rowwise() += b;
  return make_node(OpKind::affine, {x, weight, bias}, std::move(out), [](Node& n) {
    Node& px = *n.parents[0];
    Node& pw = *n.parents[1];
    Node& pb = *n.parents[2];
    auto g = as_matrix(n.grad);
    if (px.requires_grad) as_matrix(px.grad).noalias() += g * as_matrix(pw.value);
    if (pw.requires_grad) as_matrix(pw.grad).noalias() += g.transpose() * as_matrix(px.value);
    if (pb.requires_grad) {
      Eigen::Map<Eigen::RowVectorXd> gb(pb.grad.data(), static_cast<Eigen::Index>(pb.grad.size()));
      gb += g.colwise().sum();
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_node(OpKind::add, {a, b}, std::move(out), [](Node& n) {
    for (auto& p : n.parents)
      if (p->requires_grad)
        for (std::size_t i = 0; i < n.grad.size(); ++i) p->grad[i] += n.grad[i];
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_node(OpKind::sub, {a, b}, std::move(out), [](Node& n) {
    if (n.parents[0]->requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) n.parents[0]->grad[i] += n.grad[i];
    if (n.parents[1]->requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) n.parents[1]->grad[i] -= n.grad[i];
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_node(OpKind::mul, {a, b}, std::move(out), [](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    if (pa.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i] * pb.value[i];
    if (pb.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) pb.grad[i] += n.grad[i] * pa.value[i];
  });
}

Var scale(const Var& x, double factor) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * factor;
  return make_node(OpKind::scale, {x}, std::move(out), [factor](Node& n) {
    Node& p = *n.parents[0];
    for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += n.grad[i] * factor;
  });
}

Var add_bias(const Var& x, const Var& bias) {
  require_matrix("add_bias", x);
  const auto cols = x.value().cols();
  if (bias.value().size() != cols)
    throw ShapeError("add_bias: bias " + shape_to_string(bias.shape()) + " vs matrix " + shape_to_string(x.shape()));
  Tensor out = x.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) += bias.value()[c];
  return make_node(OpKind::add_bias, {x, bias}, std::move(out), [cols](Node& n) {
    Node& px = *n.parents[0];
    Node& pb = *n.parents[1];
    if (px.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) px.grad[i] += n.grad[i];
    if (pb.requires_grad)
      for (std::size_t i = 0; i < n.grad.size(); ++i) pb.grad[i % cols] += n.grad[i];
  });
}

Var relu(const Var& x) {
  return pointwise(
      OpKind::relu, x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& x) {
  return pointwise(
      OpKind::sigmoid, x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double out) { return out * (1.0 - out); });
}

Var exp(const Var& x) {
  return pointwise(
      OpKind::exp, x, [](double v) { return std::exp(v); }, [](double, double out) { return out; });
}

Var log(const Var& x) {
  for (double v : x.value().values())
    if (!(v > 0.0)) throw DomainError("log: argument must be strictly positive, got " + std::to_string(v));
  return pointwise(
      OpKind::log, x, [](double v) { return std::log(v); }, [](double in, double) { return 1.0 / in; });
}

Var tanh(const Var& x) {
  return pointwise(
      OpKind::tanh, x, [](double v) { return std::tanh(v); }, [](double, double out) { return 1.0 - out * out; });
}

Var square(const Var& x) {
  return pointwise(
      OpKind::square, x, [](double v) { return v * v; }, [](double in, double) { return 2.0 * in; });
}

Var elementwise(Unary kind, const Var& x) {
  switch (kind) {
    case Unary::relu: return relu(x);
    case Unary::sigmoid: return sigmoid(x);
    case Unary::exp: return exp(x);
    case Unary::log: return log(x);
    case Unary::tanh: return tanh(x);
  }
  throw ContractError("unknown unary op");
}

Var elementwise(Binary kind, const Var& a, const Var& b) {
  switch (kind) {
    case Binary::add: return add(a, b);
    case Binary::mul: return mul(a, b);
  }
  throw ContractError("unknown binary op");
}

Var concat(const Var& a, const Var& b, std::size_t axis) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  const auto incompatible = [&] {
    return ShapeError("concat: incompatible shapes " + shape_to_string(sa) + " and " + shape_to_string(sb) +
                      " along axis " + std::to_string(axis));
  };
  if (sa.size() != sb.size() || sa.empty() || axis >= sa.size()) throw incompatible();
  for (std::size_t d = 0; d < sa.size(); ++d)
    if (d != axis && sa[d] != sb[d]) throw incompatible();
  if (sa.size() > 2) throw incompatible();

  Shape out_shape = sa;
  out_shape[axis] += sb[axis];
  if (sa.size() == 1 || axis == 0) {
    // Row-major layout makes leading-axis concatenation a plain append.
    std::vector<double> v(a.value().values().begin(), a.value().values().end());
    v.insert(v.end(), b.value().values().begin(), b.value().values().end());
    const auto split = a.value().size();
    return make_node(OpKind::concat, {a, b}, Tensor(out_shape, std::move(v)), [split](Node& n) {
      Node& pa = *n.parents[0];
      Node& pb = *n.parents[1];
      if (pa.requires_grad)
        for (std::size_t i = 0; i < split; ++i) pa.grad[i] += n.grad[i];
      if (pb.requires_grad)
        for (std::size_t i = split; i < n.grad.size(); ++i) pb.grad[i - split] += n.grad[i];
    });
  }
  const auto rows = sa[0], ca = sa[1], cb = sb[1];
  Tensor out(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < ca; ++c) out.at(r, c) = a.value().at(r, c);
    for (std::size_t c = 0; c < cb; ++c) out.at(r, ca + c) = b.value().at(r, c);
  }
  return make_node(OpKind::concat, {a, b}, std::move(out), [rows, ca, cb](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    for (std::size_t r = 0; r < rows; ++r) {
      if (pa.requires_grad)
        for (std::size_t c = 0; c < ca; ++c) pa.grad.at(r, c) += n.grad.at(r, c);
      if (pb.requires_grad)
        for (std::size_t c = 0; c < cb; ++c) pb.grad.at(r, c) += n.grad.at(r, ca + c);
    }
  });
}

Var slice_cols(const Var& x, std::size_t begin, std::size_t end) {
  require_matrix("slice_cols", x);
  if (begin >= end || end > x.value().cols())
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for " + shape_to_string(x.shape()));
  const auto rows = x.value().rows();
  const auto width = end - begin;
  Tensor out(Shape{rows, width});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < width; ++c) out.at(r, c) = x.value().at(r, begin + c);
  return make_node(OpKind::slice_cols, {x}, std::move(out), [begin, width](Node& n) {
    Node& p = *n.parents[0];
    for (std::size_t r = 0; r < n.grad.rows(); ++r)
      for (std::size_t c = 0; c < width; ++c) p.grad.at(r, begin + c) += n.grad.at(r, c);
  });
}

Var grad_reverse(const Var& x, double strength) {
  if (!(strength >= 0.0)) throw DomainError("grad_reverse: strength must be >= 0");
  return make_node(OpKind::grad_reverse, {x}, x.value(), [strength](Node& n) {
    Node& p = *n.parents[0];
    for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += -strength * n.grad[i];
  });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return make_node(OpKind::sum, {x}, Tensor::scalar(s), [](Node& n) {
    Node& p = *n.parents[0];
    const double g = n.grad[0];
    for (auto& v : p.grad.values()) v += g;
  });
}

Var mean(const Var& x) {
  const double count = static_cast<double>(x.value().size());
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return make_node(OpKind::mean, {x}, Tensor::scalar(s / count), [count](Node& n) {
    Node& p = *n.parents[0];
    const double g = n.grad[0] / count;
    for (auto& v : p.grad.values()) v += g;
  });
}

void backward(const Var& loss) {
  if (!loss) throw ContractError("backward: empty variable");
  if (loss.value().size() != 1)
    throw ContractError("backward: loss must be scalar, got shape " + shape_to_string(loss.shape()));
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order without recursion
  // depth limits.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (n->grad.shape() == n->value.shape() && n->grad.size() == n->value.size())
      n->grad.fill(0.0);
    else
      n->grad = Tensor(n->value.shape());
  }
  order.back()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

}  // namespace aczsl::ad
