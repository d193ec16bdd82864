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

#include "aczsl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aczsl/error.hpp"

namespace aczsl::nn {

ad::Var activate(Activation kind, const ad::Var& x) {
  switch (kind) {
    case Activation::identity: return x;
    case Activation::relu: return ad::relu(x);
    case Activation::sigmoid: return ad::sigmoid(x);
    case Activation::tanh: return ad::tanh(x);
  }
  return x;
}

LinearLayer::LinearLayer(std::size_t in, std::size_t out, RngStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  weight_ = ad::parameter(rng.uniform_tensor(Shape{out, in}, -limit, limit));
  bias_ = ad::parameter(Tensor(Shape{out}));
}

void LinearLayer::zero() {
  weight_.mutable_value().fill(0.0);
  bias_.mutable_value().fill(0.0);
}

void LinearLayer::append_params(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

Mlp::Mlp(std::vector<std::size_t> dims, Activation hidden, Activation output, RngStream& rng)
    : hidden_(hidden), output_(output) {
  if (dims.size() < 2) throw ShapeError("Mlp needs at least input and output widths");
  for (auto d : dims)
    if (d == 0) throw ShapeError("Mlp widths must be positive");
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) layers_.emplace_back(dims[i], dims[i + 1], rng);
}

ad::Var Mlp::forward(const ad::Var& x) const {
  if (x.value().rank() != 2 || x.value().cols() != in_dim())
    throw ShapeError("Mlp expects input width " + std::to_string(in_dim()) + ", got " + shape_to_string(x.shape()));
  ad::Var h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(h);
    h = activate(i + 1 < layers_.size() ? hidden_ : output_, h);
  }
  return h;
}

void Mlp::zero_final_layer() { layers_.back().zero(); }

ParamList Mlp::parameters(const std::string& prefix) const {
  ParamList out;
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].append_params(prefix + "." + std::to_string(i), out);
  return out;
}

ad::Var softmax_cross_entropy(const ad::Var& logits, std::span<const int> targets) {
  const Tensor& z = logits.value();
  if (z.rank() != 2) throw ShapeError("softmax_cross_entropy: logits must be batch x classes");
  const std::size_t batch = z.rows();
  const std::size_t classes = z.cols();
  if (targets.size() != batch)
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for batch of " +
                     std::to_string(batch));
  for (int t : targets)
    if (t < 0 || static_cast<std::size_t>(t) >= classes)
      throw DomainError("softmax_cross_entropy: target " + std::to_string(t) + " outside [0, " +
                        std::to_string(classes) + ")");

  Tensor probs(z.shape());
  double total = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes; ++c) mx = std::max(mx, z.at(r, c));
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs.at(r, c) = std::exp(z.at(r, c) - mx);
      denom += probs.at(r, c);
    }
    for (std::size_t c = 0; c < classes; ++c) probs.at(r, c) /= denom;
    total += -(z.at(r, static_cast<std::size_t>(targets[r])) - mx - std::log(denom));
  }
  std::vector<int> tgt(targets.begin(), targets.end());
  return ad::make_node(ad::OpKind::custom, {logits}, Tensor::scalar(total / static_cast<double>(batch)),
                       [probs = std::move(probs), tgt = std::move(tgt)](ad::Node& n) {
                         ad::Node& p = *n.parents[0];
                         const double g = n.grad[0] / static_cast<double>(probs.rows());
                         for (std::size_t r = 0; r < probs.rows(); ++r)
                           for (std::size_t c = 0; c < probs.cols(); ++c) {
                             const double onehot = static_cast<int>(c) == tgt[r] ? 1.0 : 0.0;
                             p.grad.at(r, c) += g * (probs.at(r, c) - onehot);
                           }
                       });
}

ad::Var kl_diag_gaussian(const ad::Var& mu, const ad::Var& logvar) {
  if (mu.shape() != logvar.shape())
    throw ShapeError("kl_diag_gaussian: mu " + shape_to_string(mu.shape()) + " vs logvar " +
                     shape_to_string(logvar.shape()));
  const Tensor& m = mu.value();
  const Tensor& lv = logvar.value();
  const double batch = static_cast<double>(m.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) total += -0.5 * (1.0 + lv[i] - m[i] * m[i] - std::exp(lv[i]));
  return ad::make_node(ad::OpKind::custom, {mu, logvar}, Tensor::scalar(total / batch), [batch](ad::Node& n) {
    ad::Node& pm = *n.parents[0];
    ad::Node& pl = *n.parents[1];
    const double g = n.grad[0] / batch;
    if (pm.requires_grad)
      for (std::size_t i = 0; i < pm.value.size(); ++i) pm.grad[i] += g * pm.value[i];
    if (pl.requires_grad)
      for (std::size_t i = 0; i < pl.value.size(); ++i) pl.grad[i] += g * 0.5 * (std::exp(pl.value[i]) - 1.0);
  });
}

ad::Var reconstruction_loss(const ad::Var& x, const ad::Var& x_hat) {
  if (x.shape() != x_hat.shape())
    throw ShapeError("reconstruction_loss: " + shape_to_string(x.shape()) + " vs " + shape_to_string(x_hat.shape()));
  const double count = static_cast<double>(x.value().size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.value().size(); ++i) {
    const double d = x.value()[i] - x_hat.value()[i];
    total += d * d;
  }
  return ad::make_node(ad::OpKind::custom, {x, x_hat}, Tensor::scalar(total / count), [count](ad::Node& n) {
    ad::Node& px = *n.parents[0];
    ad::Node& ph = *n.parents[1];
    const double g = 2.0 * n.grad[0] / count;
    for (std::size_t i = 0; i < px.value.size(); ++i) {
      const double d = px.value[i] - ph.value[i];
      if (px.requires_grad) px.grad[i] += g * d;
      if (ph.requires_grad) ph.grad[i] -= g * d;
    }
  });
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c)
      if (logits.at(r, c) > logits.at(r, best)) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

AdamState make_adam_state(const ParamList& params, AdamOptions options) {
  AdamState state;
  state.options = options;
  for (const auto& p : params) {
    state.m.emplace_back(p.var.shape());
    state.v.emplace_back(p.var.shape());
  }
  return state;
}

void adam_step(const ParamList& params, AdamState& state) {
  if (params.size() != state.m.size()) throw ContractError("adam_step: state does not match parameter list");
  const auto& o = state.options;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Tensor& g = params[k].var.grad();
    if (g.size() != params[k].var.value().size())
      throw ShapeError("adam_step: gradient of " + params[k].name + " has wrong shape");
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!std::isfinite(g[i]))
        throw NumericError("adam_step: non-finite gradient in " + params[k].name + " at index " + std::to_string(i) +
                           " (value " + std::to_string(g[i]) + ", step " + std::to_string(state.step + 1) + ")");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(o.beta1, t);
  const double bc2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    ad::Var var = params[k].var;
    Tensor& p = var.mutable_value();
    const Tensor& g = var.grad();
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (o.weight_decay > 0.0) p[i] -= o.learning_rate * o.weight_decay * p[i];
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) {
    ad::Var v = p.var;
    v.zero_grad();
  }
}

}  // namespace aczsl::nn
