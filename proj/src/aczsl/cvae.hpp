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
#include <vector>

#include "aczsl/nn.hpp"

namespace aczsl {

struct CvaeShape {
  std::size_t feature_dim = 0;
  std::size_t attr_dim = 0;
  std::size_t latent_dim = 50;
  std::size_t hidden_units = 500;
  std::size_t hidden_layers = 1;
};

struct Posterior {
  ad::Var mu;
  ad::Var logvar;
};

// Terms of one conditional VAE evaluation. reconstruction and kl are kept
// separately for logging; total = reconstruction + kl.
struct VaeTerms {
  ad::Var total;
  ad::Var reconstruction;
  ad::Var kl;
  ad::Var x_hat;
  Posterior posterior;
  ad::Var z;
};

struct LabeledFeatures {
  Tensor features;
  std::vector<int> labels;
};

// Attribute-conditioned VAE. The attribute row is concatenated to the input
// of both encoder and decoder; the encoder emits [mu | logvar].
class Cvae {
 public:
  Cvae(const CvaeShape& shape, RngStream& rng);

  const CvaeShape& shape() const { return shape_; }
  std::size_t latent_dim() const { return shape_.latent_dim; }

  Posterior encode(const ad::Var& x, const ad::Var& attrs) const;
  ad::Var decode(const ad::Var& z, const ad::Var& attrs) const;
  VaeTerms vae_loss(const ad::Var& x, const ad::Var& attrs, RngStream& rng) const;

  // n_per_row decoded samples from z ~ N(0, I) for every attribute row,
  // labelled with class_ids[row]. Output rows are grouped by attribute row.
  LabeledFeatures generate(const Tensor& attrs, std::span<const int> class_ids, std::size_t n_per_row,
                           RngStream& rng) const;

  nn::Mlp& encoder() { return encoder_; }
  nn::Mlp& decoder() { return decoder_; }
  const nn::Mlp& encoder() const { return encoder_; }
  const nn::Mlp& decoder() const { return decoder_; }
  nn::ParamList parameters(const std::string& prefix) const;

 private:
  CvaeShape shape_;
  nn::Mlp encoder_;
  nn::Mlp decoder_;
};

// z = mu + exp(logvar / 2) * eps
ad::Var reparameterize(const ad::Var& mu, const ad::Var& logvar, const Tensor& eps);

}  // namespace aczsl
