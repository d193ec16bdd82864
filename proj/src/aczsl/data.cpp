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

#include "aczsl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "aczsl/error.hpp"

namespace aczsl {
namespace {

namespace fs = std::filesystem;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view field, const std::string& where) {
  field = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
    throw ParseError(where + ": invalid number '" + std::string(field) + "'");
  return v;
}

long parse_int(std::string_view field, const std::string& where) {
  field = trim(field);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(where + ": invalid integer '" + std::string(field) + "'");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// Reads non-empty lines as rows of comma-separated fields.
std::vector<std::pair<std::size_t, std::vector<std::string_view>>> read_rows(const std::string& text) {
  std::vector<std::pair<std::size_t, std::vector<std::string_view>>> rows;
  std::string_view all(text);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < all.size()) {
    const auto nl = all.find('\n', pos);
    const auto line = all.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? all.size() : nl + 1;
    if (trim(line).empty()) continue;
    rows.emplace_back(line_no, split_fields(line));
  }
  return rows;
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace

std::vector<std::size_t> Dataset::train_rows_of(std::span<const int> classes) const {
  std::vector<std::size_t> out;
  for (auto r : train_idx)
    if (std::find(classes.begin(), classes.end(), labels[r]) != classes.end()) out.push_back(r);
  return out;
}

std::vector<std::size_t> Dataset::test_rows_of(std::span<const int> classes) const {
  std::vector<std::size_t> out;
  for (auto r : test_idx)
    if (std::find(classes.begin(), classes.end(), labels[r]) != classes.end()) out.push_back(r);
  return out;
}

Tensor Dataset::attributes_of(std::span<const int> classes) const {
  std::vector<std::size_t> rows(classes.begin(), classes.end());
  return attributes.rows_subset(rows);
}

void Dataset::validate() const {
  if (features.rank() != 2 || attributes.rank() != 2) throw ContractError("dataset matrices must be rank 2");
  if (features.rows() != labels.size())
    throw ContractError("dataset has " + std::to_string(features.rows()) + " feature rows but " +
                        std::to_string(labels.size()) + " labels");
  const auto C = num_classes();
  for (int l : labels)
    if (l < 0 || static_cast<std::size_t>(l) >= C)
      throw ContractError("label " + std::to_string(l) + " outside [0, " + std::to_string(C) + ")");
  if (!attributes.all_finite()) throw ContractError("attribute rows must be finite");
  if (!features.all_finite()) throw ContractError("features must be finite");
  std::vector<int> in_train(C, 0), in_test(C, 0);
  std::vector<char> seen(labels.size(), 0);
  for (auto r : train_idx) {
    if (r >= labels.size() || seen[r]) throw ContractError("train index " + std::to_string(r) + " invalid or repeated");
    seen[r] = 1;
    ++in_train[static_cast<std::size_t>(labels[r])];
  }
  for (auto r : test_idx) {
    if (r >= labels.size() || seen[r])
      throw ContractError("test index " + std::to_string(r) + " invalid or shared with train");
    seen[r] = 2;
    ++in_test[static_cast<std::size_t>(labels[r])];
  }
  for (std::size_t c = 0; c < C; ++c)
    if (in_train[c] == 0 || in_test[c] == 0)
      throw ContractError("class " + std::to_string(c) + " needs at least one train and one test sample");
  if (!names.empty() && names.size() != C) throw ContractError("class name count does not match class count");
}

void assign_default_split(Dataset& ds) {
  std::vector<std::vector<std::size_t>> per_class(ds.num_classes());
  for (std::size_t r = 0; r < ds.labels.size(); ++r) per_class[static_cast<std::size_t>(ds.labels[r])].push_back(r);
  ds.train_idx.clear();
  ds.test_idx.clear();
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const auto& rows = per_class[c];
    if (rows.size() < 2)
      throw ContractError("class " + std::to_string(c) + " has " + std::to_string(rows.size()) +
                          " samples; a train/test split needs at least 2");
    const auto n = rows.size();
    const auto n_train = std::clamp<std::size_t>(n * 4 / 5, 1, n - 1);
    ds.train_idx.insert(ds.train_idx.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    ds.test_idx.insert(ds.test_idx.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  }
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
  std::sort(ds.test_idx.begin(), ds.test_idx.end());
}

Dataset load_dataset(const fs::path& dir) {
  const auto meta_path = dir / "meta.json";
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(meta_path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(meta_path.string() + ": " + e.what());
  }
  std::size_t d = 0, a = 0, C = 0;
  try {
    d = meta.at("feature_dim").get<std::size_t>();
    a = meta.at("attr_dim").get<std::size_t>();
    C = meta.at("num_classes").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(meta_path.string() + ": " + e.what());
  }
  if (d == 0 || a == 0 || C == 0) throw ParseError(meta_path.string() + ": dimensions must be positive");

  Dataset ds;
  const auto feat_path = dir / "features.csv";
  const std::string feat_text = read_file(feat_path);
  const auto feat_rows = read_rows(feat_text);
  std::vector<double> feats;
  feats.reserve(feat_rows.size() * d);
  for (const auto& [line, fields] : feat_rows) {
    const std::string where = feat_path.string() + ":" + std::to_string(line);
    if (fields.size() != d + 1)
      throw ParseError(where + ": ragged row, expected " + std::to_string(d + 1) + " fields, got " +
                       std::to_string(fields.size()));
    for (std::size_t k = 0; k < d; ++k) feats.push_back(parse_double(fields[k], where));
    const long label = parse_int(fields[d], where);
    if (label < 0 || static_cast<std::size_t>(label) >= C)
      throw ParseError(where + ": label " + std::to_string(label) + " outside [0, " + std::to_string(C) + ")");
    ds.labels.push_back(static_cast<int>(label));
  }
  if (ds.labels.empty()) throw ParseError(feat_path.string() + ": no rows");
  ds.features = Tensor::matrix(ds.labels.size(), d, std::move(feats));

  const auto attr_path = dir / "attributes.csv";
  const std::string attr_text = read_file(attr_path);
  const auto attr_rows = read_rows(attr_text);
  if (attr_rows.size() != C)
    throw ParseError(attr_path.string() + ": expected " + std::to_string(C) + " attribute rows (num_classes), got " +
                     std::to_string(attr_rows.size()));
  std::vector<double> attrs;
  for (const auto& [line, fields] : attr_rows) {
    const std::string where = attr_path.string() + ":" + std::to_string(line);
    if (fields.size() != a)
      throw ParseError(where + ": ragged row, expected " + std::to_string(a) + " fields, got " +
                       std::to_string(fields.size()));
    for (const auto& f : fields) attrs.push_back(parse_double(f, where));
  }
  ds.attributes = Tensor::matrix(C, a, std::move(attrs));

  if (meta.contains("train_idx") || meta.contains("test_idx")) {
    try {
      ds.train_idx = meta.at("train_idx").get<std::vector<std::size_t>>();
      ds.test_idx = meta.at("test_idx").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(meta_path.string() + ": train_idx/test_idx must both be index arrays (" + e.what() + ")");
    }
    std::sort(ds.train_idx.begin(), ds.train_idx.end());
    std::sort(ds.test_idx.begin(), ds.test_idx.end());
  } else {
    assign_default_split(ds);
  }
  if (meta.contains("class_names")) ds.names = meta.at("class_names").get<std::vector<std::string>>();
  try {
    ds.validate();
  } catch (const ContractError& e) {
    throw ParseError(dir.string() + ": " + e.what());
  }
  return ds;
}

void save_dataset(const Dataset& ds, const fs::path& dir) {
  ds.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::string feats;
  for (std::size_t r = 0; r < ds.num_rows(); ++r) {
    for (std::size_t c = 0; c < ds.feature_dim(); ++c) {
      feats += format_double(ds.features.at(r, c));
      feats += ',';
    }
    feats += std::to_string(ds.labels[r]);
    feats += '\n';
  }
  write_file(dir / "features.csv", feats);

  std::string attrs;
  for (std::size_t r = 0; r < ds.num_classes(); ++r) {
    for (std::size_t c = 0; c < ds.attr_dim(); ++c) {
      if (c) attrs += ',';
      attrs += format_double(ds.attributes.at(r, c));
    }
    attrs += '\n';
  }
  write_file(dir / "attributes.csv", attrs);

  nlohmann::ordered_json meta;
  meta["feature_dim"] = ds.feature_dim();
  meta["attr_dim"] = ds.attr_dim();
  meta["num_classes"] = ds.num_classes();
  meta["train_idx"] = ds.train_idx;
  meta["test_idx"] = ds.test_idx;
  if (!ds.names.empty()) meta["class_names"] = ds.names;
  write_file(dir / "meta.json", meta.dump(2) + "\n");
}

const std::vector<int>& CzslSplit::task(int t) const {
  if (t < 1 || static_cast<std::size_t>(t) > tasks.size())
    throw ContractError("task " + std::to_string(t) + " outside 1.." + std::to_string(tasks.size()));
  return tasks[static_cast<std::size_t>(t - 1)];
}

int CzslSplit::task_of(int class_id) const {
  for (std::size_t t = 0; t < tasks.size(); ++t)
    if (std::find(tasks[t].begin(), tasks[t].end(), class_id) != tasks[t].end()) return static_cast<int>(t + 1);
  return 0;
}

CzslSplit make_split(std::size_t num_classes, std::size_t num_tasks, std::size_t classes_per_task,
                     std::optional<std::uint64_t> order_seed) {
  if (num_tasks == 0 || classes_per_task == 0) throw ContractError("make_split: task and class counts must be positive");
  if (num_tasks * classes_per_task > num_classes)
    throw ContractError("make_split: " + std::to_string(num_tasks) + " tasks x " + std::to_string(classes_per_task) +
                        " classes needs " + std::to_string(num_tasks * classes_per_task) +
                        " classes, dataset has " + std::to_string(num_classes));
  std::vector<std::size_t> order(num_classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (order_seed) {
    RngStream rng(*order_seed);
    rng.shuffle(order);
  }
  CzslSplit split;
  split.num_classes = num_classes;
  for (std::size_t t = 0; t < num_tasks; ++t) {
    std::vector<int> classes;
    for (std::size_t k = 0; k < classes_per_task; ++k)
      classes.push_back(static_cast<int>(order[t * classes_per_task + k]));
    split.tasks.push_back(std::move(classes));
  }
  return split;
}

SeenUnseen seen_unseen_at(const CzslSplit& split, int t) {
  if (t < 1 || static_cast<std::size_t>(t) > split.num_tasks())
    throw ContractError("seen_unseen_at: t=" + std::to_string(t) + " outside 1.." + std::to_string(split.num_tasks()));
  SeenUnseen out;
  std::vector<char> is_seen(split.num_classes, 0);
  for (int k = 1; k <= t; ++k)
    for (int c : split.task(k)) {
      out.seen.push_back(c);
      is_seen[static_cast<std::size_t>(c)] = 1;
    }
  for (std::size_t c = 0; c < split.num_classes; ++c)
    if (!is_seen[c]) out.unseen.push_back(static_cast<int>(c));
  return out;
}

std::string split_to_json(const CzslSplit& split) {
  nlohmann::ordered_json j;
  j["num_classes"] = split.num_classes;
  j["tasks"] = split.tasks;
  return j.dump(2) + "\n";
}

CzslSplit split_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    CzslSplit split;
    split.num_classes = j.at("num_classes").get<std::size_t>();
    split.tasks = j.at("tasks").get<std::vector<std::vector<int>>>();
    std::vector<char> used(split.num_classes, 0);
    for (const auto& task : split.tasks)
      for (int c : task) {
        if (c < 0 || static_cast<std::size_t>(c) >= split.num_classes || used[static_cast<std::size_t>(c)])
          throw ParseError("split: class " + std::to_string(c) + " out of range or repeated");
        used[static_cast<std::size_t>(c)] = 1;
      }
    return split;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("split: ") + e.what());
  }
}

Dataset synth_dataset(const SynthSpec& spec) {
  if (spec.num_classes == 0 || spec.feature_dim == 0 || spec.attr_dim == 0 || spec.n_per_class < 2)
    throw ContractError("synth_dataset: classes, dims must be positive and n_per_class >= 2");
  if (spec.feature_dim < spec.attr_dim) throw ContractError("synth_dataset: feature_dim must be >= attr_dim");
  if (!(spec.noise_sigma > 0.0)) throw ContractError("synth_dataset: noise_sigma must be > 0");

  RngStream rng(spec.seed);
  const auto d = spec.feature_dim, a = spec.attr_dim, C = spec.num_classes;
  const double w_scale = 1.0 / std::sqrt(static_cast<double>(a));
  Tensor W(Shape{d, a});
  for (auto& v : W.values()) v = rng.normal() * w_scale;
  Dataset ds;
  ds.attributes = rng.normal_tensor(Shape{C, a});

  std::vector<double> feats;
  feats.reserve(C * spec.n_per_class * d);
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < a; ++k) mean[i] += W.at(i, k) * ds.attributes.at(c, k);
    for (std::size_t n = 0; n < spec.n_per_class; ++n) {
      for (std::size_t i = 0; i < d; ++i) feats.push_back(mean[i] + spec.noise_sigma * rng.normal());
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  ds.features = Tensor::matrix(ds.labels.size(), d, std::move(feats));
  assign_default_split(ds);
  return ds;
}

Standardizer Standardizer::fit(const Tensor& features, std::span<const std::size_t> rows) {
  if (rows.empty()) throw ContractError("Standardizer::fit: no rows");
  const auto d = features.cols();
  Standardizer s;
  s.mean_.assign(d, 0.0);
  s.scale_.assign(d, 0.0);
  for (auto r : rows)
    for (std::size_t c = 0; c < d; ++c) s.mean_[c] += features.at(r, c);
  for (auto& m : s.mean_) m /= static_cast<double>(rows.size());
  for (auto r : rows)
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = features.at(r, c) - s.mean_[c];
      s.scale_[c] += diff * diff;
    }
  for (auto& v : s.scale_) {
    v = std::sqrt(v / static_cast<double>(rows.size()));
    if (!(v > 1e-8)) v = 1.0;
  }
  return s;
}

Tensor Standardizer::apply(const Tensor& features) const {
  if (features.cols() != mean_.size()) throw ShapeError("Standardizer: width mismatch");
  Tensor out = features;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) = (out.at(r, c) - mean_[c]) / scale_[c];
  return out;
}

}  // namespace aczsl
