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

// Training-loop contract checks shared by the unit tests and the acceptance
// runner. Each returns a list of violations; empty means the contract holds.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "aczsl/error.hpp"
#include "aczsl/trainer.hpp"

namespace aczsl::testing {

using Violations = std::vector<std::string>;

inline TrainConfig tiny_train_config() {
  TrainConfig c;
  c.model_epochs = {2};
  c.classifier_epochs = {2};
  c.latent_dim = 3;
  c.hidden_units = 12;
  c.batch_size = 16;
  c.replay_n_per_class = 6;
  c.classifier_n_per_class = 8;
  c.seed = 5;
  return c;
}

inline Dataset tiny_dataset(std::uint64_t seed = 1) {
  SynthSpec s;
  s.num_classes = 12;
  s.feature_dim = 6;
  s.attr_dim = 3;
  s.n_per_class = 10;
  s.seed = seed;
  return synth_dataset(s);
}

inline std::vector<Tensor> snapshot(const nn::ParamList& params) {
  std::vector<Tensor> out;
  for (const auto& p : params) out.push_back(p.var.value());
  return out;
}

inline Batch batch_of(const TaskData& data, const Tensor& class_attrs, int t) {
  Batch b;
  b.features = data.features;
  b.labels = data.labels;
  b.task_ids.assign(data.labels.size(), t);
  b.attrs = Tensor(Shape{data.labels.size(), class_attrs.cols()});
  for (std::size_t r = 0; r < data.labels.size(); ++r)
    for (std::size_t c = 0; c < class_attrs.cols(); ++c)
      b.attrs.at(r, c) = class_attrs.at(static_cast<std::size_t>(data.labels[r]), c);
  b.fake_attrs = b.attrs;
  return b;
}

// Builds a model that has finished tasks 1..T-1 and is positioned on task T.
struct StreamFixture {
  Dataset ds = tiny_dataset();
  CzslSplit split = make_split(12, 4, 3);
  TrainConfig config = tiny_train_config();
  RngStream rng{11};
  std::unique_ptr<AczslModel> model;

  explicit StreamFixture(int trained_tasks) {
    RngStream init = rng.split();
    model = std::make_unique<AczslModel>(config.model_config(ds.feature_dim(), ds.attr_dim(), 4), init);
    GeneratedSet replay;
    for (int t = 1; t <= trained_tasks; ++t) {
      model->add_task(split.task(t));
      train_task(*model, task_data(ds, split, t), replay, ds.attributes, config, rng);
      replay = build_replay(*model, ds.attributes, split, t, config.replay_n_per_class, rng);
    }
  }
};

// Earlier privates and heads get exactly zero gradient and are not updated.
inline Violations check_frozen_modules() {
  Violations v;
  StreamFixture f(2);
  f.model->add_task(f.split.task(3));
  const Batch batch = batch_of(task_data(f.ds, f.split, 3), f.ds.attributes, 3);
  for (const auto& p : f.model->all_parameters()) p.var.node()->grad = Tensor(p.var.shape(), 0.0);
  ad::backward(f.model->total_loss(batch, 3, f.rng).total);
  nn::ParamList frozen;
  for (int t = 1; t <= 2; ++t) {
    for (auto& p : f.model->private_parameters(t)) frozen.push_back(p);
    for (auto& p : f.model->head_parameters(t)) frozen.push_back(p);
  }
  for (const auto& p : frozen)
    for (double g : p.var.grad().values())
      if (g != 0.0) {
        v.push_back("frozen parameter " + p.name + " received gradient");
        break;
      }
  const auto before = snapshot(frozen);
  train_task(*f.model, task_data(f.ds, f.split, 3), build_replay(*f.model, f.ds.attributes, f.split, 2, 4, f.rng),
             f.ds.attributes, f.config, f.rng);
  const auto after = snapshot(frozen);
  for (std::size_t i = 0; i < frozen.size(); ++i)
    if (!(before[i] == after[i])) v.push_back("frozen parameter " + frozen[i].name + " changed during training");
  return v;
}

// A D-step leaves shared/private/head parameters bit-identical and an S-step
// leaves the discriminator bit-identical.
inline Violations check_step_isolation() {
  Violations v;
  StreamFixture f(1);
  f.model->add_task(f.split.task(2));
  const Batch batch = batch_of(task_data(f.ds, f.split, 2), f.ds.attributes, 2);
  auto opt = make_task_optimizers(*f.model, 2, f.config);

  const auto disc = f.model->discriminator_parameters();
  nn::ParamList rest;
  for (const auto& p : f.model->all_parameters())
    if (p.name.rfind("discriminator", 0) != 0) rest.push_back(p);

  for (int round = 0; round < 3; ++round) {
    auto rest0 = snapshot(rest), disc0 = snapshot(disc);
    d_step(*f.model, batch, 2, opt.d, f.rng);
    auto rest1 = snapshot(rest), disc1 = snapshot(disc);
    for (std::size_t i = 0; i < rest.size(); ++i)
      if (!(rest0[i] == rest1[i])) v.push_back("D-step changed " + rest[i].name);
    if (disc0 == disc1) v.push_back("D-step left the discriminator unchanged");

    s_step(*f.model, batch, 2, opt.s, f.rng);
    auto disc2 = snapshot(disc), rest2 = snapshot(rest);
    for (std::size_t i = 0; i < disc.size(); ++i)
      if (!(disc1[i] == disc2[i])) v.push_back("S-step changed " + disc[i].name);
    if (rest1 == rest2) v.push_back("S-step left shared/private/head unchanged");
  }
  return v;
}

// Replay for task t covers exactly the classes of tasks 1..t-1, and
// train_task refuses replay that contains current-task classes.
inline Violations check_replay_contents() {
  Violations v;
  StreamFixture f(3);
  for (int t = 2; t <= 4; ++t) {
    const auto replay = build_replay(*f.model, f.ds.attributes, f.split, t - 1, 5, f.rng);
    const std::set<int> got(replay.labels.begin(), replay.labels.end());
    const auto want_vec = f.model->classes_through(t - 1);
    const std::set<int> want(want_vec.begin(), want_vec.end());
    if (got != want) v.push_back("replay for task " + std::to_string(t) + " has the wrong class set");
    for (int c : f.split.task(t))
      if (got.count(c)) v.push_back("replay for task " + std::to_string(t) + " contains current class");
    if (replay.size() != 5 * want.size()) v.push_back("replay cardinality wrong at task " + std::to_string(t));
  }
  f.model->add_task(f.split.task(4));
  auto poisoned = build_replay(*f.model, f.ds.attributes, f.split, 3, 2, f.rng);
  poisoned.labels.back() = f.split.task(4).front();
  try {
    train_task(*f.model, task_data(f.ds, f.split, 4), poisoned, f.ds.attributes, f.config, f.rng);
    v.push_back("train_task accepted replay containing a current-task class");
  } catch (const ContractError&) {
  }
  return v;
}

// With replay on, training task t never touches real rows of tasks < t:
// after task 1, its real training rows are overwritten with NaN and the rest
// of the stream must still train with finite losses.
inline Violations check_no_past_real_data() {
  Violations v;
  Dataset ds = tiny_dataset();
  const CzslSplit split = make_split(12, 4, 3);
  TrainConfig config = tiny_train_config();
  RngStream rng(3);
  RngStream init = rng.split();
  AczslModel model(config.model_config(ds.feature_dim(), ds.attr_dim(), 4), init);
  GeneratedSet replay;
  for (int t = 1; t <= 4; ++t) {
    model.add_task(split.task(t));
    const auto data = task_data(ds, split, t);
    try {
      const auto log = train_task(model, data, replay, ds.attributes, config, rng);
      if (log.real_classes_read != split.task(t))
        v.push_back("task " + std::to_string(t) + " read real classes outside the task");
      if (log.samples_per_epoch != data.labels.size() + replay.size())
        v.push_back("task " + std::to_string(t) + " epoch size is not |D^t| + |replay|");
    } catch (const NumericError& e) {
      v.push_back(std::string("past real data leaked into training: ") + e.what());
      return v;
    }
    replay = build_replay(model, ds.attributes, split, t, config.replay_n_per_class, rng);
    for (auto r : ds.train_rows_of(split.task(t)))
      for (std::size_t c = 0; c < ds.feature_dim(); ++c) ds.features.at(r, c) = std::numeric_limits<double>::quiet_NaN();
  }
  return v;
}

// At every t the seen test set holds only classes of tasks 1..t and the ZSL
// set only classes outside them; together they cover every class.
inline Violations check_partitions() {
  Violations v;
  const Dataset ds = tiny_dataset();
  const CzslSplit split = make_split(12, 4, 3);
  const auto result = run_stream(ds, split, tiny_train_config());
  for (int t = 1; t <= 4; ++t) {
    const auto su = seen_unseen_at(split, t);
    std::set<int> seen(su.seen.begin(), su.seen.end()), unseen(su.unseen.begin(), su.unseen.end());
    std::set<int> expect_seen;
    for (int i = 1; i <= t; ++i) expect_seen.insert(split.task(i).begin(), split.task(i).end());
    if (seen != expect_seen) v.push_back("seen set wrong at t=" + std::to_string(t));
    for (int c : unseen)
      if (split.task_of(c) <= t && split.task_of(c) != 0) v.push_back("unseen set holds a trained class");
    if (seen.size() + unseen.size() != 12) v.push_back("seen and unseen do not cover all classes");
    const auto& ev = result.evaluations[static_cast<std::size_t>(t - 1)];
    if (ev.seen_classes != su.seen || ev.unseen_classes != su.unseen)
      v.push_back("evaluation record partition mismatch at t=" + std::to_string(t));
    if ((t == 4) == ev.unseen.has_value()) v.push_back("unseen accuracy presence wrong at t=" + std::to_string(t));
  }
  for (const auto& r : result.predictions) {
    const int owner = split.task_of(r.true_label);
    if (r.regime == Regime::seen && owner > r.t) v.push_back("seen regime scored an untrained class");
    if (r.regime == Regime::unseen && owner <= r.t) v.push_back("ZSL regime scored a trained class");
    if (r.regime == Regime::seen && split.task_of(r.pred) > r.t) v.push_back("seen prediction outside seen classes");
    if (r.regime == Regime::unseen && split.task_of(r.pred) <= r.t)
      v.push_back("ZSL prediction outside unseen classes");
    if (v.size() > 10) break;
  }
  return v;
}

}  // namespace aczsl::testing
