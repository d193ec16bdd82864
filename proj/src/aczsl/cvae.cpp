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

#include "aczsl/cvae.hpp"

#include "aczsl/error.hpp"

namespace aczsl {
namespace {

std::vector<std::size_t> widths(std::size_t in, std::size_t hidden, std::size_t layers, std::size_t out) {
  std::vector<std::size_t> dims{in};
  for (std::size_t i = 0; i < layers; ++i) dims.push_back(hidden);
  dims.push_back(out);
  return dims;
}

}  // namespace

Cvae::Cvae(const CvaeShape& shape, RngStream& rng)
    : shape_(shape),
      encoder_(widths(shape.feature_dim + shape.attr_dim, shape.hidden_units, shape.hidden_layers,
                      2 * shape.latent_dim),
               nn::Activation::relu, nn::Activation::identity, rng),
      decoder_(widths(shape.latent_dim + shape.attr_dim, shape.hidden_units, shape.hidden_layers,
                      shape.feature_dim),
               nn::Activation::relu, nn::Activation::identity, rng) {}

Posterior Cvae::encode(const ad::Var& x, const ad::Var& attrs) const {
  if (attrs.value().rank() != 2 || attrs.value().cols() != shape_.attr_dim)
    throw ShapeError("Cvae::encode: attribute width must be " + std::to_string(shape_.attr_dim) + ", got " +
                     shape_to_string(attrs.shape()));
  if (x.value().rank() != 2 || x.value().cols() != shape_.feature_dim)
    throw ShapeError("Cvae::encode: feature width must be " + std::to_string(shape_.feature_dim) + ", got " +
                     shape_to_string(x.shape()));
  if (x.value().rows() != attrs.value().rows())
    throw ShapeError("Cvae::encode: " + std::to_string(x.value().rows()) + " feature rows vs " +
                     std::to_string(attrs.value().rows()) + " attribute rows");
  const ad::Var h = encoder_.forward(ad::concat(x, attrs, 1));
  return {ad::slice_cols(h, 0, shape_.latent_dim), ad::slice_cols(h, shape_.latent_dim, 2 * shape_.latent_dim)};
}

ad::Var Cvae::decode(const ad::Var& z, const ad::Var& attrs) const {
  if (z.value().rank() != 2 || z.value().cols() != shape_.latent_dim)
    throw ShapeError("Cvae::decode: latent width must be " + std::to_string(shape_.latent_dim) + ", got " +
                     shape_to_string(z.shape()));
  if (attrs.value().rank() != 2 || attrs.value().cols() != shape_.attr_dim ||
      attrs.value().rows() != z.value().rows())
    throw ShapeError("Cvae::decode: attribute batch " + shape_to_string(attrs.shape()) + " does not match latent " +
                     shape_to_string(z.shape()));
  return decoder_.forward(ad::concat(z, attrs, 1));
}

VaeTerms Cvae::vae_loss(const ad::Var& x, const ad::Var& attrs, RngStream& rng) const {
  VaeTerms terms;
  terms.posterior = encode(x, attrs);
  const Tensor eps = rng.normal_tensor(terms.posterior.mu.shape());
  terms.z = reparameterize(terms.posterior.mu, terms.posterior.logvar, eps);
  terms.x_hat = decode(terms.z, attrs);
  terms.reconstruction = ad::scale(nn::reconstruction_loss(x, terms.x_hat), static_cast<double>(shape_.feature_dim));
  terms.kl = nn::kl_diag_gaussian(terms.posterior.mu, terms.posterior.logvar);
  terms.total = ad::add(terms.reconstruction, terms.kl);
  return terms;
}

LabeledFeatures Cvae::generate(const Tensor& attrs, std::span<const int> class_ids, std::size_t n_per_row,
                               RngStream& rng) const {
  if (n_per_row == 0) throw ContractError("Cvae::generate: n_per_row must be >= 1");
  if (attrs.rank() != 2 || attrs.cols() != shape_.attr_dim)
    throw ShapeError("Cvae::generate: attribute width must be " + std::to_string(shape_.attr_dim));
  if (class_ids.size() != attrs.rows()) throw ShapeError("Cvae::generate: one class id per attribute row required");
  const std::size_t rows = attrs.rows() * n_per_row;
  Tensor cond(Shape{rows, shape_.attr_dim});
  LabeledFeatures out;
  out.labels.reserve(rows);
  for (std::size_t r = 0; r < attrs.rows(); ++r)
    for (std::size_t k = 0; k < n_per_row; ++k) {
      const std::size_t dst = r * n_per_row + k;
      for (std::size_t c = 0; c < shape_.attr_dim; ++c) cond.at(dst, c) = attrs.at(r, c);
      out.labels.push_back(class_ids[r]);
    }
  const Tensor z = rng.normal_tensor(Shape{rows, shape_.latent_dim});
  out.features = decode(ad::constant(z), ad::constant(std::move(cond))).value();
  return out;
}

nn::ParamList Cvae::parameters(const std::string& prefix) const {
  auto out = encoder_.parameters(prefix + ".encoder");
  auto dec = decoder_.parameters(prefix + ".decoder");
  out.insert(out.end(), dec.begin(), dec.end());
  return out;
}

ad::Var reparameterize(const ad::Var& mu, const ad::Var& logvar, const Tensor& eps) {
  if (mu.shape() != logvar.shape() || mu.shape() != eps.shape())
    throw ShapeError("reparameterize: mu " + shape_to_string(mu.shape()) + ", logvar " +
                     shape_to_string(logvar.shape()) + ", eps " + shape_to_string(eps.shape()));
  const ad::Var sigma = ad::exp(ad::scale(logvar, 0.5));
  return ad::add(mu, ad::mul(sigma, ad::constant(eps)));
}

}  // namespace aczsl
