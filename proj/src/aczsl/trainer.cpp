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

#include "aczsl/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "aczsl/error.hpp"

namespace aczsl {
namespace {

std::size_t schedule_at(const std::vector<std::size_t>& schedule, int t) {
  if (schedule.empty()) throw ConfigError("empty epoch schedule");
  const auto k = static_cast<std::size_t>(std::max(t, 1) - 1);
  return k < schedule.size() ? schedule[k] : schedule.back();
}

Tensor gather_attrs(const Tensor& class_attributes, std::span<const int> labels) {
  const auto a = class_attributes.cols();
  Tensor out(Shape{labels.size(), a});
  for (std::size_t r = 0; r < labels.size(); ++r)
    for (std::size_t c = 0; c < a; ++c) out.at(r, c) = class_attributes.at(static_cast<std::size_t>(labels[r]), c);
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::size_t TrainConfig::model_epochs_for(int t) const { return schedule_at(model_epochs, t); }

std::size_t TrainConfig::classifier_epochs_for(int t) const { return schedule_at(classifier_epochs, t); }

void TrainConfig::validate() const {
  const auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  if (model_epochs.empty()) throw ConfigError("model_epochs must not be empty");
  if (classifier_epochs.empty()) throw ConfigError("classifier_epochs must not be empty");
  for (auto e : model_epochs) positive(e, "model_epochs");
  for (auto e : classifier_epochs) positive(e, "classifier_epochs");
  positive(s_steps, "s_steps");
  positive(d_steps, "d_steps");
  positive(batch_size, "batch_size");
  positive(replay_n_per_class, "replay_n_per_class");
  positive(classifier_n_per_class, "classifier_n_per_class");
  positive(latent_dim, "latent_dim");
  positive(hidden_units, "hidden_units");
  if (!(lr_model > 0.0)) throw ConfigError("lr_model must be > 0");
  if (!(lr_classifier > 0.0)) throw ConfigError("lr_classifier must be > 0");
  if (!(classifier_weight_decay >= 0.0)) throw ConfigError("classifier_weight_decay must be >= 0");
  if (!(grl_strength >= 0.0)) throw ConfigError("grl_strength must be >= 0");
  for (double l : {lambdas.adv, lambdas.task, lambdas.vae_shared, lambdas.vae_private})
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lambdas must be finite and >= 0");
}

ModelConfig TrainConfig::model_config(std::size_t feature_dim, std::size_t attr_dim, std::size_t max_tasks) const {
  ModelConfig m;
  m.feature_dim = feature_dim;
  m.attr_dim = attr_dim;
  m.latent_dim = latent_dim;
  m.hidden_units = hidden_units;
  m.hidden_layers = hidden_layers;
  m.max_tasks = max_tasks;
  m.lambdas = lambdas;
  m.grl_strength = grl_strength;
  m.adversarial = adversarial;
  m.fake_mode = fake_mode;
  return m;
}

TaskData task_data(const Dataset& ds, const CzslSplit& split, int t) {
  TaskData out;
  out.classes = split.task(t);
  const auto rows = ds.train_rows_of(out.classes);
  out.features = ds.features.rows_subset(rows);
  for (auto r : rows) out.labels.push_back(ds.labels[r]);
  return out;
}

TaskOptimizers make_task_optimizers(const AczslModel& model, int t, const TrainConfig& config) {
  nn::ParamList s_params = model.shared_parameters();
  for (auto& p : model.private_parameters(t)) s_params.push_back(p);
  for (auto& p : model.head_parameters(t)) s_params.push_back(p);
  nn::AdamOptions o;
  o.learning_rate = config.lr_model;
  return {nn::Adam(std::move(s_params), o), nn::Adam(model.discriminator_parameters(), o)};
}

LossBreakdown s_step(const AczslModel& model, const Batch& batch, int t, nn::Adam& s_opt, RngStream& rng) {
  s_opt.zero_grad();
  const LossGraph g = model.total_loss(batch, t, rng);
  ad::backward(g.total);
  const auto b = g.values();
  for (double v : {b.l_adv, b.l_task, b.l_vae_shared, b.l_vae_private, b.total})
    if (!std::isfinite(v)) throw NumericError("non-finite loss");
  s_opt.step();
  return b;
}

double d_step(const AczslModel& model, const Batch& batch, int t, nn::Adam& d_opt, RngStream& rng) {
  d_opt.zero_grad();
  const ad::Var loss = model.discriminator_loss(batch, t, rng);
  ad::backward(loss);
  const double v = loss.value().item();
  if (!std::isfinite(v)) throw NumericError("non-finite discriminator loss");
  d_opt.step();
  return v;
}

TaskTrainingLog train_task(AczslModel& model, const TaskData& data_t, const GeneratedSet& replay,
                           const Tensor& class_attributes, const TrainConfig& config, RngStream& rng) {
  const int t = static_cast<int>(model.num_tasks());
  if (t < 1) throw ContractError("train_task: add_task must be called first");
  if (data_t.labels.empty()) throw ContractError("train_task: task " + std::to_string(t) + " has no data");
  const auto& current = model.task_classes(t);
  for (int c : data_t.labels)
    if (std::find(current.begin(), current.end(), c) == current.end())
      throw ContractError("train_task: real row of class " + std::to_string(c) + " does not belong to task " +
                          std::to_string(t));
  const auto earlier = t > 1 ? model.classes_through(t - 1) : std::vector<int>{};
  for (int c : replay.labels) {
    if (std::find(current.begin(), current.end(), c) != current.end())
      throw ContractError("train_task: replay contains class " + std::to_string(c) + " of the current task " +
                          std::to_string(t));
    if (std::find(earlier.begin(), earlier.end(), c) == earlier.end())
      throw ContractError("train_task: replay class " + std::to_string(c) + " is not from tasks 1.." +
                          std::to_string(t - 1));
  }

  TaskTrainingLog log;
  log.task = t;
  const std::set<int> read(data_t.labels.begin(), data_t.labels.end());
  log.real_classes_read.assign(read.begin(), read.end());

  // Union of real and replay rows.
  const std::size_t n_real = data_t.labels.size();
  const std::size_t total = n_real + replay.size();
  const std::size_t d = data_t.features.cols();
  Tensor features(Shape{total, d});
  std::copy(data_t.features.values().begin(), data_t.features.values().end(), features.values().begin());
  if (replay.size())
    std::copy(replay.features.values().begin(), replay.features.values().end(),
              features.values().begin() + static_cast<std::ptrdiff_t>(n_real * d));
  std::vector<int> labels = data_t.labels;
  labels.insert(labels.end(), replay.labels.begin(), replay.labels.end());
  std::vector<int> task_ids(total, t);
  if (config.replay_original_task_ids)
    for (std::size_t k = n_real; k < total; ++k) {
      for (int i = 1; i < t; ++i) {
        const auto& cls = model.task_classes(i);
        if (std::find(cls.begin(), cls.end(), labels[k]) != cls.end()) task_ids[k] = i;
      }
    }
  log.samples_per_epoch = total;

  TaskOptimizers opt = make_task_optimizers(model, t, config);

  struct Guard {
    AczslModel& m;
    ~Guard() { m.end_training(); }
  };
  model.begin_training(t);
  Guard guard{model};

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t epochs = config.model_epochs_for(t);
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    rng.shuffle(order);
    EpochLog e;
    e.task = t;
    e.epoch = static_cast<int>(epoch);
    std::size_t s_count = 0, d_count = 0;
    for (std::size_t start = 0; start < total; start += config.batch_size) {
      const std::size_t stop = std::min(total, start + config.batch_size);
      std::span<const std::size_t> idx(order.data() + start, stop - start);
      Batch batch;
      batch.features = features.rows_subset(idx);
      for (auto k : idx) {
        batch.labels.push_back(labels[k]);
        batch.task_ids.push_back(task_ids[k]);
      }
      batch.attrs = gather_attrs(class_attributes, batch.labels);
      std::vector<int> fake_classes;
      for (std::size_t k = 0; k < idx.size(); ++k) fake_classes.push_back(current[rng.index(current.size())]);
      batch.fake_attrs = gather_attrs(class_attributes, fake_classes);

      const auto context = [&] { return " at task " + std::to_string(t) + ", epoch " + std::to_string(epoch); };
      for (std::size_t s = 0; s < config.s_steps; ++s) {
        LossBreakdown b;
        try {
          b = s_step(model, batch, t, opt.s, rng);
        } catch (const NumericError& err) {
          throw NumericError(err.what() + context());
        }
        e.losses.l_adv += b.l_adv;
        e.losses.l_task += b.l_task;
        e.losses.l_vae_shared += b.l_vae_shared;
        e.losses.l_vae_private += b.l_vae_private;
        e.losses.total += b.total;
        ++s_count;
      }
      if (config.adversarial) {
        for (std::size_t s = 0; s < config.d_steps; ++s) {
          try {
            e.d_loss += d_step(model, batch, t, opt.d, rng);
          } catch (const NumericError& err) {
            throw NumericError(err.what() + context());
          }
          ++d_count;
        }
      }
    }
    const double inv = 1.0 / static_cast<double>(s_count);
    e.losses.l_adv *= inv;
    e.losses.l_task *= inv;
    e.losses.l_vae_shared *= inv;
    e.losses.l_vae_private *= inv;
    e.losses.total *= inv;
    if (d_count) e.d_loss /= static_cast<double>(d_count);
    log.epochs.push_back(e);
  }
  return log;
}

GeneratedSet build_replay(const AczslModel& model, const Tensor& class_attributes, const CzslSplit& split, int t,
                          std::size_t n_per_class, RngStream& rng) {
  if (t < 1) throw ContractError("build_replay: t must be >= 1");
  const auto seen = seen_unseen_at(split, t).seen;
  const auto attrs = gather_attrs(class_attributes, seen);
  auto gen = model.shared().generate(attrs, seen, n_per_class, rng);
  GeneratedSet out;
  out.attributes = gather_attrs(class_attributes, gen.labels);
  out.features = std::move(gen.features);
  out.labels = std::move(gen.labels);
  out.provenance = Provenance::replay;
  return out;
}

Classifier::Classifier(std::size_t feature_dim, std::size_t num_classes, std::size_t hidden_units, RngStream& rng)
    : net_(hidden_units ? std::vector<std::size_t>{feature_dim, hidden_units, num_classes}
                        : std::vector<std::size_t>{feature_dim, num_classes},
           nn::Activation::relu, nn::Activation::identity, rng) {}

Tensor Classifier::logits(const Tensor& features) const { return net_.forward(ad::constant(features)).value(); }

std::vector<int> Classifier::predict(const Tensor& features, std::span<const int> allowed) const {
  if (allowed.empty()) throw ContractError("Classifier::predict: empty class set");
  const Tensor z = logits(features);
  std::vector<int> out(z.rows());
  for (std::size_t r = 0; r < z.rows(); ++r) {
    int best = allowed[0];
    for (int c : allowed)
      if (z.at(r, static_cast<std::size_t>(c)) > z.at(r, static_cast<std::size_t>(best))) best = c;
    out[r] = best;
  }
  return out;
}

ClassifierResult train_classifier(const AczslModel& model, const Tensor& class_attributes, const TrainConfig& config,
                                  int t, RngStream& rng) {
  const std::size_t C = class_attributes.rows();
  if (C == 0) throw ContractError("train_classifier: missing attribute rows");
  std::vector<int> all(C);
  std::iota(all.begin(), all.end(), 0);
  auto gen = model.shared().generate(class_attributes, all, config.classifier_n_per_class, rng);

  ClassifierResult result;
  result.classifier =
      std::make_unique<Classifier>(model.config().feature_dim, C, config.classifier_hidden_units, rng);
  nn::Adam opt(result.classifier->net().parameters("classifier"),
               nn::AdamOptions{config.lr_classifier, 0.9, 0.999, 1e-8, config.classifier_weight_decay});

  const std::size_t n = gen.labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t epochs = config.classifier_epochs_for(t);
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      std::span<const std::size_t> idx(order.data() + start, stop - start);
      std::vector<int> y;
      for (auto k : idx) y.push_back(gen.labels[k]);
      opt.zero_grad();
      const ad::Var loss =
          nn::softmax_cross_entropy(result.classifier->net().forward(ad::constant(gen.features.rows_subset(idx))), y);
      ad::backward(loss);
      opt.step();
      epoch_loss += loss.value().item();
      ++batches;
    }
    result.final_loss = epoch_loss / static_cast<double>(batches);
    if (!std::isfinite(result.final_loss))
      throw NumericError("non-finite classifier loss after task " + std::to_string(t) + ", epoch " +
                         std::to_string(epoch));
  }
  return result;
}

StreamResult run_stream(const Dataset& dataset, const CzslSplit& split, const TrainConfig& config) {
  config.validate();
  dataset.validate();
  if (split.num_classes != dataset.num_classes())
    throw ContractError("split covers " + std::to_string(split.num_classes) + " classes, dataset has " +
                        std::to_string(dataset.num_classes()));
  const int T = static_cast<int>(split.num_tasks());
  if (T < 1) throw ContractError("split has no tasks");

  StreamResult result;
  result.matrix = AccuracyMatrix(split.num_tasks());

  Dataset data = dataset;
  if (config.standardize) {
    result.standardizer = Standardizer::fit(dataset.features, dataset.train_rows_of(split.task(1)));
    data.features = result.standardizer.apply(dataset.features);
  }

  RngStream master(config.seed);
  RngStream init_rng = master.split();
  result.model = std::make_unique<AczslModel>(
      config.model_config(data.feature_dim(), data.attr_dim(), split.num_tasks()), init_rng);
  AczslModel& model = *result.model;

  GeneratedSet replay;
  for (int t = 1; t <= T; ++t) {
    RngStream task_rng = master.split();
    model.add_task(split.task(t));
    const TaskData real = task_data(data, split, t);
    result.training.push_back(train_task(model, real, replay, data.attributes, config, task_rng));

    RngStream clf_rng = master.split();
    auto clf = train_classifier(model, data.attributes, config, t, clf_rng);

    TaskEvaluation ev;
    ev.task = t;
    const auto su = seen_unseen_at(split, t);
    ev.seen_classes = su.seen;
    ev.unseen_classes = su.unseen;
    ev.classifier_loss = clf.final_loss;

    const auto log_rows = [&](const std::vector<std::size_t>& rows, const std::vector<int>& preds, Regime regime) {
      for (std::size_t k = 0; k < rows.size(); ++k)
        result.predictions.push_back({t, rows[k], data.labels[rows[k]], preds[k], regime});
    };
    const auto labels_of = [&](const std::vector<std::size_t>& rows) {
      std::vector<int> y;
      for (auto r : rows) y.push_back(data.labels[r]);
      return y;
    };

    const auto seen_rows = data.test_rows_of(su.seen);
    const auto seen_pred = clf.classifier->predict(data.features.rows_subset(seen_rows), su.seen);
    log_rows(seen_rows, seen_pred, Regime::seen);
    const auto seen_true = labels_of(seen_rows);
    for (int i = 1; i <= t; ++i) {
      const auto& cls = split.task(i);
      std::vector<int> p, y;
      for (std::size_t k = 0; k < seen_rows.size(); ++k)
        if (std::find(cls.begin(), cls.end(), seen_true[k]) != cls.end()) {
          p.push_back(seen_pred[k]);
          y.push_back(seen_true[k]);
        }
      const double acc = accuracy(p, y, cls);
      ev.seen.push_back(acc);
      result.matrix.set_seen(t, i, acc);
    }

    if (!su.unseen.empty()) {
      const auto rows = data.test_rows_of(su.unseen);
      const auto pred = clf.classifier->predict(data.features.rows_subset(rows), su.unseen);
      log_rows(rows, pred, Regime::unseen);
      ev.unseen = accuracy(pred, labels_of(rows), su.unseen);
      result.matrix.set_unseen(t, *ev.unseen);
    }

    std::vector<int> every(data.num_classes());
    std::iota(every.begin(), every.end(), 0);
    const auto all_rows = data.test_idx;
    const auto all_pred = clf.classifier->predict(data.features.rows_subset(all_rows), every);
    log_rows(all_rows, all_pred, Regime::overall);
    ev.overall = overall_accuracy(all_pred, labels_of(all_rows), every, config.overall_weighting);
    result.matrix.set_overall(t, ev.overall);
    result.evaluations.push_back(std::move(ev));

    // Split unconditionally so replay on/off runs share every other stream.
    RngStream replay_rng = master.split();
    if (config.replay && t < T) {
      replay = build_replay(model, data.attributes, split, t, config.replay_n_per_class, replay_rng);
    }
  }
  result.metrics = compute_metrics(result.matrix);
  return result;
}

std::string losses_to_csv(std::span<const TaskTrainingLog> logs) {
  std::string out = "task,epoch,l_adv,l_task,l_vae_s,l_vae_p,total\n";
  for (const auto& log : logs)
    for (const auto& e : log.epochs)
      out += std::to_string(e.task) + ',' + std::to_string(e.epoch) + ',' + fmt(e.losses.l_adv) + ',' +
             fmt(e.losses.l_task) + ',' + fmt(e.losses.l_vae_shared) + ',' + fmt(e.losses.l_vae_private) + ',' +
             fmt(e.losses.total) + '\n';
  return out;
}

std::string evaluations_to_json(std::span<const TaskEvaluation> evals) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& e : evals) {
    nlohmann::ordered_json j;
    j["task"] = e.task;
    j["seen_classes"] = e.seen_classes;
    j["unseen_classes"] = e.unseen_classes;
    j["seen"] = e.seen;
    j["unseen"] = e.unseen ? nlohmann::ordered_json(*e.unseen) : nlohmann::ordered_json(nullptr);
    j["overall"] = e.overall;
    j["classifier_loss"] = e.classifier_loss;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace aczsl
