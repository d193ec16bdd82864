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

#include "aczsl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "aczsl/error.hpp"

namespace aczsl {
namespace {

namespace fs = std::filesystem;

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const auto s = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(key + ": invalid value '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const auto s = trim(text);
  if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "off" || s == "no" || s == "0") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += fmt(values[i]);
    else
      out += std::to_string(values[i]);
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct KeySpec {
  std::string key;
  Setter set;
  Getter get;
};

template <typename T>
KeySpec number_key(std::string key, T ExperimentConfig::*member) {
  return {std::move(key), [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_number<T>(k, v);
          },
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return fmt(c.*member);
            else
              return std::to_string(c.*member);
          }};
}

template <typename T>
KeySpec synth_key(std::string key, T SynthSpec::*member) {
  return {std::move(key), [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.synth.*member = parse_number<T>(k, v);
          },
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return fmt(c.synth.*member);
            else
              return std::to_string(c.synth.*member);
          }};
}

template <typename T>
KeySpec train_key(std::string key, T TrainConfig::*member) {
  return {std::move(key), [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>)
              c.train.*member = parse_bool(k, v);
            else
              c.train.*member = parse_number<T>(k, v);
          },
          [member](const ExperimentConfig& c) -> std::string {
            if constexpr (std::is_same_v<T, bool>)
              return c.train.*member ? "true" : "false";
            else if constexpr (std::is_floating_point_v<T>)
              return fmt(c.train.*member);
            else
              return std::to_string(c.train.*member);
          }};
}

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = [] {
    std::vector<KeySpec> s;
    s.push_back({"data.path", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.data_path = trim(v); },
                 [](const ExperimentConfig& c) { return c.data_path; }});
    s.push_back(synth_key("data.synth_classes", &SynthSpec::num_classes));
    s.push_back(synth_key("data.synth_dim", &SynthSpec::feature_dim));
    s.push_back(synth_key("data.synth_attr", &SynthSpec::attr_dim));
    s.push_back(synth_key("data.synth_per_class", &SynthSpec::n_per_class));
    s.push_back(synth_key("data.synth_noise", &SynthSpec::noise_sigma));
    s.push_back(synth_key("data.synth_seed", &SynthSpec::seed));
    s.push_back(number_key("split.num_tasks", &ExperimentConfig::num_tasks));
    s.push_back(number_key("split.classes_per_task", &ExperimentConfig::classes_per_task));
    s.push_back({"split.order_seed",
                 [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                   if (trim(v).empty())
                     c.order_seed.reset();
                   else
                     c.order_seed = parse_number<std::uint64_t>(k, v);
                 },
                 [](const ExperimentConfig& c) { return c.order_seed ? std::to_string(*c.order_seed) : std::string(); }});
    s.push_back({"train.model_epochs",
                 [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                   c.train.model_epochs = parse_list<std::size_t>(k, v);
                 },
                 [](const ExperimentConfig& c) { return join(c.train.model_epochs); }});
    s.push_back({"train.classifier_epochs",
                 [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                   c.train.classifier_epochs = parse_list<std::size_t>(k, v);
                 },
                 [](const ExperimentConfig& c) { return join(c.train.classifier_epochs); }});
    s.push_back(train_key("train.s_steps", &TrainConfig::s_steps));
    s.push_back(train_key("train.d_steps", &TrainConfig::d_steps));
    s.push_back(train_key("train.batch_size", &TrainConfig::batch_size));
    s.push_back(train_key("train.lr_model", &TrainConfig::lr_model));
    s.push_back(train_key("train.lr_classifier", &TrainConfig::lr_classifier));
    s.push_back(train_key("train.classifier_weight_decay", &TrainConfig::classifier_weight_decay));
    s.push_back(train_key("train.replay_n_per_class", &TrainConfig::replay_n_per_class));
    s.push_back(train_key("train.classifier_n_per_class", &TrainConfig::classifier_n_per_class));
    s.push_back(train_key("train.classifier_hidden_units", &TrainConfig::classifier_hidden_units));
    s.push_back({"train.lambdas",
                 [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                   const auto l = parse_list<double>(k, v);
                   if (l.size() != 4) throw ConfigError(k + ": expected four comma-separated weights");
                   c.train.lambdas = {l[0], l[1], l[2], l[3]};
                 },
                 [](const ExperimentConfig& c) {
                   const auto& l = c.train.lambdas;
                   return join(std::vector<double>{l.adv, l.task, l.vae_shared, l.vae_private});
                 }});
    s.push_back(train_key("train.adversarial", &TrainConfig::adversarial));
    s.push_back(train_key("train.replay", &TrainConfig::replay));
    s.push_back(train_key("train.replay_original_task_ids", &TrainConfig::replay_original_task_ids));
    s.push_back(train_key("train.standardize", &TrainConfig::standardize));
    s.push_back(train_key("train.latent_dim", &TrainConfig::latent_dim));
    s.push_back(train_key("train.hidden_units", &TrainConfig::hidden_units));
    s.push_back(train_key("train.hidden_layers", &TrainConfig::hidden_layers));
    s.push_back(train_key("train.grl_strength", &TrainConfig::grl_strength));
    s.push_back({"train.fake_mode",
                 [](ExperimentConfig& c, const std::string&, const std::string& v) {
                   c.train.fake_mode = fake_mode_from_string(trim(v));
                 },
                 [](const ExperimentConfig& c) { return std::string(to_string(c.train.fake_mode)); }});
    s.push_back({"train.overall_weighting",
                 [](ExperimentConfig& c, const std::string&, const std::string& v) {
                   c.train.overall_weighting = overall_weighting_from_string(trim(v));
                 },
                 [](const ExperimentConfig& c) { return std::string(to_string(c.train.overall_weighting)); }});
    s.push_back({"run.seeds",
                 [](ExperimentConfig& c, const std::string& k, const std::string& v) {
                   c.seeds = parse_list<std::uint64_t>(k, v);
                 },
                 [](const ExperimentConfig& c) { return join(c.seeds); }});
    s.push_back({"run.output", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output = trim(v); },
                 [](const ExperimentConfig& c) { return c.output; }});
    s.push_back(number_key("run.workers", &ExperimentConfig::workers));
    return s;
  }();
  return specs;
}

const KeySpec& find_key(const std::string& key) {
  for (const auto& s : key_specs())
    if (s.key == key) return s;
  throw ConfigError("unknown config key '" + key + "'");
}

MetricSummary summarize(const std::vector<std::optional<double>>& values) {
  MetricSummary s;
  std::vector<double> defined;
  for (const auto& v : values)
    if (v) defined.push_back(*v);
  s.count = defined.size();
  if (defined.empty()) return s;
  for (double v : defined) s.mean += v;
  s.mean /= static_cast<double>(defined.size());
  if (defined.size() > 1) {
    double ss = 0.0;
    for (double v : defined) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(defined.size() - 1));
  }
  return s;
}

std::string cell(const MetricSummary& m, std::size_t replicates) {
  if (m.count == 0) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * m.mean;
  if (replicates > 1) os << " ± " << std::fixed << std::setprecision(2) << 100.0 * m.std;
  return os.str();
}

}  // namespace

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& s : key_specs()) out.push_back(s.key);
    return out;
  }();
  return k;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) { find_key(key).set(*this, key, value); }

void ExperimentConfig::validate() const {
  train.validate();
  if (num_tasks == 0 || classes_per_task == 0) throw ConfigError("split.num_tasks and split.classes_per_task must be positive");
  if (seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
  if (data_path.empty()) {
    if (synth.num_classes == 0 || synth.feature_dim == 0 || synth.attr_dim == 0)
      throw ConfigError("data.synth_* dimensions must be positive");
    if (synth.n_per_class < 2) throw ConfigError("data.synth_per_class must be >= 2");
    if (synth.feature_dim < synth.attr_dim) throw ConfigError("data.synth_dim must be >= data.synth_attr");
    if (!(synth.noise_sigma > 0.0)) throw ConfigError("data.synth_noise must be > 0");
    if (num_tasks * classes_per_task > synth.num_classes)
      throw ConfigError("split needs " + std::to_string(num_tasks * classes_per_task) +
                        " classes but data.synth_classes is " + std::to_string(synth.num_classes));
  }
}

std::string ExperimentConfig::to_ini() const {
  std::string out;
  std::string section;
  for (const auto& s : key_specs()) {
    const auto dot = s.key.find('.');
    const auto sec = s.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += '\n';
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += s.key.substr(dot + 1) + " = " + s.get(*this) + "\n";
  }
  return out;
}

ExperimentConfig parse_experiment_config(const std::string& ini_text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(ini_text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig c;
  for (const auto& [section, children] : tree) {
    if (children.empty() && !children.data().empty())
      throw ConfigError("config key '" + section + "' must live inside a [section]");
    for (const auto& [name, node] : children) c.set(section + "." + name, node.data());
  }
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return parse_experiment_config(read_text_file(path));
}

Dataset load_experiment_dataset(const ExperimentConfig& config) {
  if (!config.data_path.empty()) return load_dataset(config.data_path);
  return synth_dataset(config.synth);
}

void write_run_directory(const fs::path& dir, const ExperimentConfig& config, std::uint64_t seed,
                         const CzslSplit& split, const StreamResult& result) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  ExperimentConfig echo = config;
  echo.seeds = {seed};
  echo.train.seed = seed;
  const std::string ini = echo.to_ini();
  write_text_file(dir / "config.ini", ini);
  nlohmann::ordered_json run;
  run["version"] = std::string("aczsl ") + kVersion;
  run["seed"] = seed;
  run["config"] = "config.ini";
  write_text_file(dir / "run.json", run.dump(2) + "\n");
  save_checkpoint(*result.model, dir / "checkpoint.aczsl", ini);
  write_text_file(dir / "losses.csv", losses_to_csv(result.training));
  write_text_file(dir / "evaluation.json", evaluations_to_json(result.evaluations));
  write_text_file(dir / "accuracy_matrix.csv", accuracy_matrix_to_csv(result.matrix));
  write_text_file(dir / "metrics.json", metrics_to_json(result.metrics));
  write_text_file(dir / "per_task_curves.csv", per_task_curves_to_csv(result.matrix));
  write_text_file(dir / "predictions.csv", predictions_to_csv(result.predictions));
  write_text_file(dir / "split.json", split_to_json(split));
}

std::vector<ReplicateOutcome> run_experiment(const ExperimentConfig& config, const fs::path& out_dir) {
  config.validate();
  const Dataset dataset = load_experiment_dataset(config);
  const std::size_t needed = config.num_tasks * config.classes_per_task;
  if (needed > dataset.num_classes())
    throw ConfigError("split needs " + std::to_string(needed) + " classes but the dataset has " +
                      std::to_string(dataset.num_classes()));
  const CzslSplit split =
      make_split(dataset.num_classes(), config.num_tasks, config.classes_per_task, config.order_seed);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  write_text_file(out_dir / "config.ini", config.to_ini());

  std::vector<ReplicateOutcome> outcomes(config.seeds.size());
  std::size_t workers = config.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, config.seeds.size());

  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t k = next++; k < config.seeds.size(); k = next++) {
      auto& out = outcomes[k];
      out.seed = config.seeds[k];
      out.directory = out_dir / ("seed_" + std::to_string(out.seed));
      try {
        TrainConfig train = config.train;
        train.seed = out.seed;
        const StreamResult result = run_stream(dataset, split, train);
        write_run_directory(out.directory, config, out.seed, split, result);
        out.ok = true;
      } catch (const std::exception& e) {
        out.message = e.what();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  return outcomes;
}

std::vector<ReportRow> collect_report(const std::vector<fs::path>& dirs) {
  std::vector<ReportRow> rows;
  for (const auto& dir : dirs) {
    std::vector<fs::path> files;
    if (fs::exists(dir / "metrics.json")) {
      files.push_back(dir / "metrics.json");
    } else if (fs::is_directory(dir)) {
      for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory() && entry.path().filename().string().rfind("seed_", 0) == 0 &&
            fs::exists(entry.path() / "metrics.json"))
          files.push_back(entry.path() / "metrics.json");
      std::sort(files.begin(), files.end());
    }
    if (files.empty()) throw IoError("missing metrics file: " + (dir / "metrics.json").string());

    std::vector<std::optional<double>> msa_v, mua_v, mh_v, moa_v, bwt_v;
    for (const auto& f : files) {
      MetricsReport m;
      try {
        m = metrics_from_json(read_text_file(f));
      } catch (const ParseError& e) {
        throw ParseError("corrupt metrics file " + f.string() + ": " + e.what());
      }
      msa_v.emplace_back(m.msa);
      mua_v.push_back(m.mua);
      mh_v.push_back(m.mh);
      moa_v.emplace_back(m.moa);
      bwt_v.push_back(m.bwt);
    }
    ReportRow row;
    auto label = dir.filename().string();
    if (label.empty() || label == ".") label = dir.parent_path().filename().string();
    row.label = label.empty() ? dir.string() : label;
    row.replicates = files.size();
    row.msa = summarize(msa_v);
    row.mua = summarize(mua_v);
    row.mh = summarize(mh_v);
    row.moa = summarize(moa_v);
    row.bwt = summarize(bwt_v);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_report_text(const std::vector<ReportRow>& rows) {
  const std::vector<std::string> header{"run", "n", "mSA", "mUA(ZSL)", "mH", "mOA(GZSL)", "BWT"};
  std::vector<std::vector<std::string>> table{header};
  for (const auto& r : rows)
    table.push_back({r.label, std::to_string(r.replicates), cell(r.msa, r.replicates), cell(r.mua, r.replicates),
                     cell(r.mh, r.replicates), cell(r.moa, r.replicates), cell(r.bwt, r.replicates)});
  // Column widths count code points so "±" aligns.
  const auto width = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char ch : s)
      if ((ch & 0xC0) != 0x80) ++n;
    return n;
  };
  std::vector<std::size_t> w(header.size(), 0);
  for (const auto& line : table)
    for (std::size_t c = 0; c < line.size(); ++c) w[c] = std::max(w[c], width(line[c]));
  std::string out;
  for (std::size_t l = 0; l < table.size(); ++l) {
    for (std::size_t c = 0; c < table[l].size(); ++c) {
      const auto& s = table[l][c];
      const auto pad = w[c] - width(s);
      if (c == 0)
        out += s + std::string(pad, ' ');
      else
        out += "  " + std::string(pad, ' ') + s;
    }
    out += '\n';
    if (l == 0) {
      std::size_t total = 0;
      for (auto x : w) total += x;
      out += std::string(total + 2 * (w.size() - 1), '-') + '\n';
    }
  }
  return out;
}

std::string render_report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "run,n,mSA_mean,mSA_std,mUA_mean,mUA_std,mH_mean,mH_std,mOA_mean,mOA_std,BWT_mean,BWT_std\n";
  const auto pair = [](const MetricSummary& m) {
    return m.count ? fmt(m.mean) + ',' + fmt(m.std) : std::string(",");
  };
  for (const auto& r : rows)
    out += r.label + ',' + std::to_string(r.replicates) + ',' + pair(r.msa) + ',' + pair(r.mua) + ',' + pair(r.mh) +
           ',' + pair(r.moa) + ',' + pair(r.bwt) + '\n';
  return out;
}

Evaluation evaluate_predictions(const fs::path& predictions_csv, const fs::path& split_json,
                                OverallWeighting weighting) {
  const auto records = predictions_from_csv(read_text_file(predictions_csv));
  const auto split = split_from_json(read_text_file(split_json));
  Evaluation ev{accuracy_matrix_from_predictions(records, split, weighting), {}};
  ev.metrics = compute_metrics(ev.matrix);
  return ev;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace aczsl
