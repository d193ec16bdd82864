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

#include <span>
#include <string>
#include <vector>

#include "aczsl/autodiff.hpp"
#include "aczsl/tensor.hpp"

namespace aczsl::nn {

enum class Activation { identity, relu, sigmoid, tanh };

ad::Var activate(Activation kind, const ad::Var& x);

struct NamedParam {
  std::string name;
  ad::Var var;
};

using ParamList = std::vector<NamedParam>;

// Glorot-uniform weights, zero bias.
class LinearLayer {
 public:
  LinearLayer(std::size_t in, std::size_t out, RngStream& rng);

  ad::Var forward(const ad::Var& x) const { return ad::affine(x, weight_, bias_); }

  std::size_t in_dim() const { return weight_.value().cols(); }
  std::size_t out_dim() const { return weight_.value().rows(); }
  const ad::Var& weight() const { return weight_; }
  const ad::Var& bias() const { return bias_; }
  void zero();
  void append_params(const std::string& prefix, ParamList& out) const;

 private:
  ad::Var weight_;  // out x in
  ad::Var bias_;    // out
};

class Mlp {
 public:
  // dims = {input, hidden..., output}
  Mlp(std::vector<std::size_t> dims, Activation hidden, Activation output, RngStream& rng);

  ad::Var forward(const ad::Var& x) const;

  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }
  const std::vector<LinearLayer>& layers() const { return layers_; }
  // Zeroes the last layer so the network emits its output-activation of 0
  // for every input.
  void zero_final_layer();
  ParamList parameters(const std::string& prefix) const;

 private:
  std::vector<LinearLayer> layers_;
  Activation hidden_;
  Activation output_;
};

// Mean over the batch of -log softmax(logits)[target], with max-subtraction.
ad::Var softmax_cross_entropy(const ad::Var& logits, std::span<const int> targets);

// KL(N(mu, exp(logvar)) || N(0, I)), summed over latent dims and averaged
// over rows.
ad::Var kl_diag_gaussian(const ad::Var& mu, const ad::Var& logvar);

// Mean squared error over all elements.
ad::Var reconstruction_loss(const ad::Var& x, const ad::Var& x_hat);

std::vector<int> argmax_rows(const Tensor& logits);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  AdamOptions options;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
};

AdamState make_adam_state(const ParamList& params, AdamOptions options);

// One Adam update over params using each parameter's accumulated gradient.
// Decoupled weight decay shrinks parameters before the moment update.
// Throws NumericError naming the parameter when a gradient is not finite.
void adam_step(const ParamList& params, AdamState& state);

class Adam {
 public:
  Adam(ParamList params, AdamOptions options)
      : params_(std::move(params)), state_(make_adam_state(params_, options)) {}

  void zero_grad();
  void step() { adam_step(params_, state_); }
  const ParamList& params() const { return params_; }
  const AdamState& state() const { return state_; }

 private:
  ParamList params_;
  AdamState state_;
};

}  // namespace aczsl::nn
