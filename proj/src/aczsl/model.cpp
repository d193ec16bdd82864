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

#include "aczsl/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

#include "aczsl/error.hpp"

namespace aczsl {
namespace {

constexpr char kMagic[] = "ACZSL1";
constexpr std::size_t kMagicLen = 6;

std::vector<std::size_t> mlp_dims(std::size_t in, const ModelConfig& c, std::size_t out) {
  std::vector<std::size_t> dims{in};
  for (std::size_t i = 0; i < c.hidden_layers; ++i) dims.push_back(c.hidden_units);
  dims.push_back(out);
  return dims;
}

CvaeShape cvae_shape(const ModelConfig& c) {
  return CvaeShape{c.feature_dim, c.attr_dim, c.latent_dim, c.hidden_units, c.hidden_layers};
}

void check_batch(const Batch& b, const ModelConfig& c) {
  const auto n = b.size();
  if (n == 0) throw ContractError("empty batch");
  if (b.features.rank() != 2 || b.features.rows() != n || b.features.cols() != c.feature_dim)
    throw ShapeError("batch features " + shape_to_string(b.features.shape()) + " do not match " + std::to_string(n) +
                     " x " + std::to_string(c.feature_dim));
  if (b.attrs.rank() != 2 || b.attrs.rows() != n || b.attrs.cols() != c.attr_dim)
    throw ShapeError("batch attributes " + shape_to_string(b.attrs.shape()) + " do not match " + std::to_string(n) +
                     " x " + std::to_string(c.attr_dim));
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw ParseError("checkpoint: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"feature_dim", c.feature_dim},
          {"attr_dim", c.attr_dim},
          {"latent_dim", c.latent_dim},
          {"hidden_units", c.hidden_units},
          {"hidden_layers", c.hidden_layers},
          {"max_tasks", c.max_tasks},
          {"lambdas", {c.lambdas.adv, c.lambdas.task, c.lambdas.vae_shared, c.lambdas.vae_private}},
          {"grl_strength", c.grl_strength},
          {"adversarial", c.adversarial},
          {"fake_mode", to_string(c.fake_mode)}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.feature_dim = j.at("feature_dim").get<std::size_t>();
  c.attr_dim = j.at("attr_dim").get<std::size_t>();
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.hidden_units = j.at("hidden_units").get<std::size_t>();
  c.hidden_layers = j.at("hidden_layers").get<std::size_t>();
  c.max_tasks = j.at("max_tasks").get<std::size_t>();
  const auto& l = j.at("lambdas");
  c.lambdas = {l.at(0).get<double>(), l.at(1).get<double>(), l.at(2).get<double>(), l.at(3).get<double>()};
  c.grl_strength = j.at("grl_strength").get<double>();
  c.adversarial = j.at("adversarial").get<bool>();
  c.fake_mode = fake_mode_from_string(j.at("fake_mode").get<std::string>());
  return c;
}

}  // namespace

const char* to_string(FakeMode mode) { return mode == FakeMode::decoded ? "decoded" : "raw_noise"; }

FakeMode fake_mode_from_string(const std::string& text) {
  if (text == "decoded") return FakeMode::decoded;
  if (text == "raw_noise") return FakeMode::raw_noise;
  throw ConfigError("unknown fake mode '" + text + "' (expected decoded or raw_noise)");
}

LossBreakdown LossGraph::values() const {
  LossBreakdown b;
  b.l_adv = l_adv.value().item();
  b.l_task = l_task.value().item();
  b.l_vae_shared = l_vae_shared.value().item();
  b.l_vae_private = l_vae_private.value().item();
  b.total = total.value().item();
  return b;
}

AczslModel::AczslModel(const ModelConfig& config, RngStream& init_rng)
    : config_(config), init_rng_(init_rng.split()) {
  if (config.feature_dim == 0 || config.attr_dim == 0 || config.latent_dim == 0 || config.hidden_units == 0)
    throw ConfigError("model dimensions must be positive");
  if (config.max_tasks == 0) throw ConfigError("max_tasks must be positive");
  shared_ = std::make_unique<Cvae>(cvae_shape(config_), init_rng_);
  discriminator_ = std::make_unique<nn::Mlp>(mlp_dims(config_.feature_dim, config_, config_.max_tasks + 1),
                                             nn::Activation::relu, nn::Activation::identity, init_rng_);
}

int AczslModel::add_task(std::span<const int> class_ids) {
  if (training_active())
    throw ContractError("add_task called while task " + std::to_string(active_task_) + " is being trained");
  if (class_ids.empty()) throw ContractError("add_task: a task needs at least one class");
  if (num_tasks() >= config_.max_tasks)
    throw ContractError("add_task: discriminator sized for " + std::to_string(config_.max_tasks) + " tasks");
  for (int c : class_ids)
    for (const auto& prev : task_classes_)
      for (int p : prev)
        if (p == c) throw ContractError("add_task: class " + std::to_string(c) + " already belongs to a task");
  task_classes_.emplace_back(class_ids.begin(), class_ids.end());
  privates_.push_back(std::make_unique<Cvae>(cvae_shape(config_), init_rng_));
  const auto t = static_cast<int>(num_tasks());
  heads_.push_back(std::make_unique<nn::Mlp>(mlp_dims(2 * config_.latent_dim, config_, classes_through(t).size()),
                                             nn::Activation::relu, nn::Activation::identity, init_rng_));
  return t;
}

void AczslModel::check_task(int t) const {
  if (t < 1 || static_cast<std::size_t>(t) > num_tasks())
    throw ContractError("task index " + std::to_string(t) + " outside 1.." + std::to_string(num_tasks()));
}

const std::vector<int>& AczslModel::task_classes(int t) const {
  check_task(t);
  return task_classes_[static_cast<std::size_t>(t - 1)];
}

std::vector<int> AczslModel::classes_through(int t) const {
  check_task(t);
  std::vector<int> out;
  for (int k = 0; k < t; ++k) out.insert(out.end(), task_classes_[k].begin(), task_classes_[k].end());
  return out;
}

int AczslModel::head_column(int t, int class_id) const {
  int col = 0;
  for (int k = 0; k < t; ++k)
    for (int c : task_classes_[static_cast<std::size_t>(k)]) {
      if (c == class_id) return col;
      ++col;
    }
  return -1;
}

const Cvae& AczslModel::private_module(int t) const {
  check_task(t);
  return *privates_[static_cast<std::size_t>(t - 1)];
}

const nn::Mlp& AczslModel::head(int t) const {
  check_task(t);
  return *heads_[static_cast<std::size_t>(t - 1)];
}

nn::Mlp& AczslModel::mutable_head(int t) {
  check_task(t);
  return *heads_[static_cast<std::size_t>(t - 1)];
}

std::vector<int> AczslModel::head_targets(int t, std::span<const int> labels) const {
  std::vector<int> out;
  out.reserve(labels.size());
  for (int label : labels) {
    const int col = head_column(t, label);
    if (col < 0)
      throw ContractError("label " + std::to_string(label) + " is not a class of tasks 1.." + std::to_string(t));
    out.push_back(col);
  }
  return out;
}

ad::Var AczslModel::task_loss(const Batch& batch, int t, RngStream& rng) const {
  check_task(t);
  check_batch(batch, config_);
  const auto targets = head_targets(t, batch.labels);
  const ad::Var x = ad::constant(batch.features);
  const ad::Var a = ad::constant(batch.attrs);
  const auto s = shared_->encode(x, a);
  const auto p = private_module(t).encode(x, a);
  const ad::Var zs = reparameterize(s.mu, s.logvar, rng.normal_tensor(s.mu.shape()));
  const ad::Var zp = reparameterize(p.mu, p.logvar, rng.normal_tensor(p.mu.shape()));
  return nn::softmax_cross_entropy(head(t).forward(ad::concat(zs, zp, 1)), targets);
}

ad::Var AczslModel::fake_input(const Batch& batch, RngStream& rng) const {
  const std::size_t n = batch.fake_attrs.rank() == 2 ? batch.fake_attrs.rows() : 0;
  if (n == 0) throw ContractError("adversarial loss needs fake_attrs rows");
  if (config_.fake_mode == FakeMode::raw_noise) return ad::constant(rng.normal_tensor(Shape{n, config_.feature_dim}));
  const Tensor z = rng.normal_tensor(Shape{n, config_.latent_dim});
  return ad::detach(shared_->decode(ad::constant(z), ad::constant(batch.fake_attrs)));
}

AdversarialLoss AczslModel::adversarial_loss(const Batch& batch, int t, RngStream& rng) const {
  check_task(t);
  check_batch(batch, config_);
  if (discriminator_->out_dim() <= static_cast<std::size_t>(t))
    throw ContractError("discriminator width " + std::to_string(discriminator_->out_dim()) + " too small for task " +
                        std::to_string(t));
  const ad::Var x = ad::constant(batch.features);
  const ad::Var a = ad::constant(batch.attrs);
  const auto terms = shared_->vae_loss(x, a, rng);
  AdversarialLoss out;
  out.shared_path = nn::softmax_cross_entropy(
      discriminator_->forward(ad::grad_reverse(terms.x_hat, config_.grl_strength)), batch.task_ids);
  const ad::Var fake = fake_input(batch, rng);
  std::vector<int> targets = batch.task_ids;
  targets.insert(targets.end(), fake.value().rows(), 0);
  out.discriminator =
      nn::softmax_cross_entropy(discriminator_->forward(ad::concat(ad::detach(terms.x_hat), fake, 0)), targets);
  return out;
}

ad::Var AczslModel::discriminator_loss(const Batch& batch, int t, RngStream& rng) const {
  check_task(t);
  check_batch(batch, config_);
  const ad::Var x = ad::constant(batch.features);
  const ad::Var a = ad::constant(batch.attrs);
  const auto post = shared_->encode(x, a);
  const ad::Var z = reparameterize(post.mu, post.logvar, rng.normal_tensor(post.mu.shape()));
  const ad::Var real = ad::detach(shared_->decode(z, a));
  const ad::Var fake = fake_input(batch, rng);
  std::vector<int> targets = batch.task_ids;
  targets.insert(targets.end(), fake.value().rows(), 0);
  return nn::softmax_cross_entropy(discriminator_->forward(ad::concat(real, fake, 0)), targets);
}

LossGraph AczslModel::total_loss(const Batch& batch, int t, RngStream& rng) const {
  check_task(t);
  check_batch(batch, config_);
  const auto targets = head_targets(t, batch.labels);
  const ad::Var x = ad::constant(batch.features);
  const ad::Var a = ad::constant(batch.attrs);
  const auto shared_terms = shared_->vae_loss(x, a, rng);
  const auto private_terms = private_module(t).vae_loss(x, a, rng);

  LossGraph g;
  g.shared_reconstruction = shared_terms.x_hat;
  g.l_vae_shared = shared_terms.total;
  g.l_vae_private = private_terms.total;
  g.l_task = nn::softmax_cross_entropy(head(t).forward(ad::concat(shared_terms.z, private_terms.z, 1)), targets);
  if (config_.adversarial) {
    if (batch.task_ids.size() != batch.size()) throw ContractError("batch task_ids must match batch size");
    g.l_adv = nn::softmax_cross_entropy(
        discriminator_->forward(ad::grad_reverse(shared_terms.x_hat, config_.grl_strength)), batch.task_ids);
  } else {
    g.l_adv = ad::constant(Tensor::scalar(0.0));
  }
  const auto& l = config_.lambdas;
  g.total = ad::add(ad::add(ad::scale(g.l_adv, l.adv), ad::scale(g.l_task, l.task)),
                    ad::add(ad::scale(g.l_vae_shared, l.vae_shared), ad::scale(g.l_vae_private, l.vae_private)));
  return g;
}

nn::ParamList AczslModel::shared_parameters() const { return shared_->parameters("shared"); }

nn::ParamList AczslModel::private_parameters(int t) const {
  return private_module(t).parameters("private" + std::to_string(t));
}

nn::ParamList AczslModel::head_parameters(int t) const { return head(t).parameters("head" + std::to_string(t)); }

nn::ParamList AczslModel::discriminator_parameters() const { return discriminator_->parameters("discriminator"); }

nn::ParamList AczslModel::all_parameters() const {
  nn::ParamList out = shared_parameters();
  auto append = [&out](nn::ParamList more) { out.insert(out.end(), more.begin(), more.end()); };
  append(discriminator_parameters());
  for (int t = 1; t <= static_cast<int>(num_tasks()); ++t) {
    append(private_parameters(t));
    append(head_parameters(t));
  }
  return out;
}

void AczslModel::zero_grad() const {
  for (auto& p : all_parameters()) {
    ad::Var v = p.var;
    v.zero_grad();
  }
}

void AczslModel::begin_training(int t) {
  check_task(t);
  if (t != static_cast<int>(num_tasks()))
    throw ContractError("only the newest task (" + std::to_string(num_tasks()) + ") can be trained, got " +
                        std::to_string(t));
  active_task_ = t;
}

void AczslModel::end_training() { active_task_ = 0; }

void save_checkpoint(const AczslModel& model, const std::filesystem::path& path, const std::string& config_echo) {
  static_assert(sizeof(double) == 8);
  nlohmann::json meta;
  meta["format"] = kMagic;
  meta["model"] = config_to_json(model.config());
  meta["task_count"] = model.num_tasks();
  nlohmann::json tasks = nlohmann::json::array();
  for (int t = 1; t <= static_cast<int>(model.num_tasks()); ++t) tasks.push_back(model.task_classes(t));
  meta["task_classes"] = tasks;
  meta["config_echo"] = config_echo;
  nlohmann::json tensors = nlohmann::json::array();
  const auto params = model.all_parameters();
  std::uint64_t offset = 0;
  for (const auto& p : params) {
    tensors.push_back({{"name", p.name}, {"shape", p.var.shape()}, {"offset", offset}});
    offset += p.var.value().size() * 8;
  }
  meta["tensors"] = tensors;
  meta["payload_bytes"] = offset;
  const std::string doc = meta.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, kMagicLen);
  write_u64(os, doc.size());
  os.write(doc.data(), static_cast<std::streamsize>(doc.size()));
  for (const auto& p : params)
    for (double v : p.var.value().values()) write_u64(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw IoError("failed writing checkpoint: " + path.string());
}

std::unique_ptr<AczslModel> load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  char magic[kMagicLen];
  if (!is.read(magic, kMagicLen) || std::memcmp(magic, kMagic, kMagicLen) != 0)
    throw ParseError("checkpoint " + path.string() + ": bad magic (expected ACZSL1)");
  const auto len = read_u64(is);
  std::string doc(len, '\0');
  if (!is.read(doc.data(), static_cast<std::streamsize>(len))) throw ParseError("checkpoint: truncated metadata");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint metadata: ") + e.what());
  }

  RngStream rng(0);
  auto model = std::make_unique<AczslModel>(config_from_json(meta.at("model")), rng);
  for (const auto& classes : meta.at("task_classes")) model->add_task(classes.get<std::vector<int>>());

  std::map<std::string, ad::Var> by_name;
  for (auto& p : model->all_parameters()) by_name.emplace(p.name, p.var);
  const auto payload_start = static_cast<std::streamoff>(kMagicLen + 8 + len);
  const auto& tensors = meta.at("tensors");
  if (tensors.size() != by_name.size())
    throw ParseError("checkpoint lists " + std::to_string(tensors.size()) + " tensors, model has " +
                     std::to_string(by_name.size()));
  for (const auto& t : tensors) {
    const auto name = t.at("name").get<std::string>();
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ParseError("checkpoint tensor '" + name + "' has no matching parameter");
    if (t.at("shape").get<Shape>() != it->second.shape())
      throw ParseError("checkpoint tensor '" + name + "' has shape " +
                       shape_to_string(t.at("shape").get<Shape>()) + ", expected " +
                       shape_to_string(it->second.shape()));
    is.seekg(payload_start + static_cast<std::streamoff>(t.at("offset").get<std::uint64_t>()));
    for (auto& v : it->second.mutable_value().values()) v = std::bit_cast<double>(read_u64(is));
  }
  if (info) {
    info->config_echo = meta.value("config_echo", "");
    info->task_count = meta.at("task_count").get<std::size_t>();
  }
  return model;
}

}  // namespace aczsl
