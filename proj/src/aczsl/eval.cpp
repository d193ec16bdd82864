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

#include "aczsl/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "aczsl/error.hpp"

namespace aczsl {
namespace {

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

AccuracyMatrix::AccuracyMatrix(std::size_t num_tasks)
    : seen_(num_tasks, std::vector<std::optional<double>>(num_tasks)), unseen_(num_tasks), overall_(num_tasks) {}

void AccuracyMatrix::check(int t) const {
  if (t < 1 || static_cast<std::size_t>(t) > num_tasks())
    throw ContractError("task " + std::to_string(t) + " outside 1.." + std::to_string(num_tasks()));
}

double AccuracyMatrix::checked(double value) {
  if (!(value >= 0.0 && value <= 1.0)) throw DomainError("accuracy " + std::to_string(value) + " outside [0, 1]");
  return value;
}

void AccuracyMatrix::set_seen(int j, int i, double value) {
  check(j);
  check(i);
  if (i > j) throw ContractError("seen(" + std::to_string(j) + "," + std::to_string(i) + ") is above the diagonal");
  seen_[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(i - 1)] = checked(value);
}

void AccuracyMatrix::set_unseen(int t, double value) {
  check(t);
  unseen_[static_cast<std::size_t>(t - 1)] = checked(value);
}

void AccuracyMatrix::set_overall(int t, double value) {
  check(t);
  overall_[static_cast<std::size_t>(t - 1)] = checked(value);
}

std::optional<double> AccuracyMatrix::seen(int j, int i) const {
  check(j);
  check(i);
  return seen_[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(i - 1)];
}

std::optional<double> AccuracyMatrix::unseen(int t) const {
  check(t);
  return unseen_[static_cast<std::size_t>(t - 1)];
}

std::optional<double> AccuracyMatrix::overall(int t) const {
  check(t);
  return overall_[static_cast<std::size_t>(t - 1)];
}

double accuracy(std::span<const int> predictions, std::span<const int> labels, std::span<const int> class_set,
                bool strict) {
  if (predictions.size() != labels.size()) throw ShapeError("accuracy: predictions and labels differ in length");
  std::map<int, std::pair<std::size_t, std::size_t>> tally;  // class -> (hits, total)
  for (int c : class_set) tally[c] = {0, 0};
  for (std::size_t k = 0; k < labels.size(); ++k) {
    auto it = tally.find(labels[k]);
    if (it == tally.end())
      throw ContractError("accuracy: label " + std::to_string(labels[k]) + " is not in the evaluated class set");
    ++it->second.second;
    if (predictions[k] == labels[k]) ++it->second.first;
  }
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& [c, ht] : tally) {
    if (ht.second == 0) {
      if (strict) throw ContractError("accuracy: class " + std::to_string(c) + " has no samples");
      std::cerr << "warning: class " << c << " has no evaluation samples; excluded\n";
      continue;
    }
    total += static_cast<double>(ht.first) / static_cast<double>(ht.second);
    ++counted;
  }
  if (counted == 0) throw ContractError("accuracy: no class in the set has samples");
  return total / static_cast<double>(counted);
}

const char* to_string(OverallWeighting w) {
  return w == OverallWeighting::sample_weighted ? "sample_weighted" : "class_balanced";
}

OverallWeighting overall_weighting_from_string(const std::string& text) {
  if (text == "class_balanced") return OverallWeighting::class_balanced;
  if (text == "sample_weighted") return OverallWeighting::sample_weighted;
  throw ConfigError("overall weighting must be class_balanced or sample_weighted, got '" + text + "'");
}

double overall_accuracy(std::span<const int> predictions, std::span<const int> labels, std::span<const int> class_set,
                        OverallWeighting weighting) {
  if (weighting == OverallWeighting::class_balanced) return accuracy(predictions, labels, class_set);
  if (predictions.size() != labels.size()) throw ShapeError("accuracy: predictions and labels differ in length");
  if (labels.empty()) throw ContractError("accuracy: no samples");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (std::find(class_set.begin(), class_set.end(), labels[k]) == class_set.end())
      throw ContractError("accuracy: label " + std::to_string(labels[k]) + " is not in the evaluated class set");
    hits += predictions[k] == labels[k];
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

namespace {

double require(const std::optional<double>& v, const char* what, int t) {
  if (!v) throw ContractError(std::string("missing ") + what + " entry for task " + std::to_string(t));
  return *v;
}

}  // namespace

std::optional<double> bwt(const AccuracyMatrix& m) {
  const int T = static_cast<int>(m.num_tasks());
  if (T < 2) return std::nullopt;
  double s = 0.0;
  for (int t = 1; t < T; ++t) s += require(m.seen(t, t), "seen", t) - require(m.seen(T, t), "final seen", t);
  return s / (T - 1);
}

double msa(const AccuracyMatrix& m) {
  const int T = static_cast<int>(m.num_tasks());
  if (T < 1) throw ContractError("msa: empty accuracy matrix");
  double s = 0.0;
  for (int t = 1; t <= T; ++t) s += require(m.seen(t, t), "seen", t);
  return s / T;
}

std::optional<double> mua(const AccuracyMatrix& m) {
  const int T = static_cast<int>(m.num_tasks());
  if (T < 2) return std::nullopt;
  double s = 0.0;
  for (int t = 1; t < T; ++t) s += require(m.unseen(t), "unseen", t);
  return s / (T - 1);
}

double moa(const AccuracyMatrix& m) {
  const int T = static_cast<int>(m.num_tasks());
  if (T < 1) throw ContractError("moa: empty accuracy matrix");
  double s = 0.0;
  for (int t = 1; t <= T; ++t) s += require(m.overall(t), "overall", t);
  return s / T;
}

double harmonic_term(double seen, double unseen) {
  const double denom = seen + unseen;
  return denom == 0.0 ? 0.0 : 2.0 * seen * unseen / denom;
}

std::optional<double> mh(const AccuracyMatrix& m) {
  const int T = static_cast<int>(m.num_tasks());
  if (T < 2) return std::nullopt;
  double s = 0.0;
  for (int t = 1; t < T; ++t) s += harmonic_term(require(m.seen(t, t), "seen", t), require(m.unseen(t), "unseen", t));
  return s / (T - 1);
}

MetricsReport compute_metrics(const AccuracyMatrix& m) {
  return MetricsReport{msa(m), mua(m), mh(m), moa(m), bwt(m)};
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::seen: return "seen";
    case Regime::unseen: return "unseen";
    case Regime::overall: return "overall";
  }
  return "?";
}

Regime regime_from_string(const std::string& text) {
  if (text == "seen") return Regime::seen;
  if (text == "unseen") return Regime::unseen;
  if (text == "overall") return Regime::overall;
  throw ParseError("unknown regime '" + text + "'");
}

std::string predictions_to_csv(std::span<const PredictionRecord> records) {
  std::string out = "t,sample_id,true,pred,regime\n";
  for (const auto& r : records) {
    out += std::to_string(r.t) + ',' + std::to_string(r.sample_id) + ',' + std::to_string(r.true_label) + ',' +
           std::to_string(r.pred) + ',' + to_string(r.regime) + '\n';
  }
  return out;
}

std::vector<PredictionRecord> predictions_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<PredictionRecord> out;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "t,sample_id,true,pred,regime")
        throw ParseError("predictions: line 1: expected header t,sample_id,true,pred,regime");
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 5) throw ParseError("predictions: line " + std::to_string(line_no) + ": expected 5 fields");
    try {
      PredictionRecord r;
      r.t = std::stoi(f[0]);
      r.sample_id = std::stoul(f[1]);
      r.true_label = std::stoi(f[2]);
      r.pred = std::stoi(f[3]);
      r.regime = regime_from_string(f[4]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw ParseError("predictions: line " + std::to_string(line_no) + ": malformed record");
    }
  }
  return out;
}

AccuracyMatrix accuracy_matrix_from_predictions(std::span<const PredictionRecord> records, const CzslSplit& split,
                                               OverallWeighting weighting) {
  const int T = static_cast<int>(split.num_tasks());
  AccuracyMatrix m(split.num_tasks());
  for (int t = 1; t <= T; ++t) {
    const auto su = seen_unseen_at(split, t);
    std::vector<int> seen_pred, seen_true, unseen_pred, unseen_true, all_pred, all_true;
    for (const auto& r : records) {
      if (r.t != t) continue;
      switch (r.regime) {
        case Regime::seen:
          seen_pred.push_back(r.pred);
          seen_true.push_back(r.true_label);
          break;
        case Regime::unseen:
          unseen_pred.push_back(r.pred);
          unseen_true.push_back(r.true_label);
          break;
        case Regime::overall:
          all_pred.push_back(r.pred);
          all_true.push_back(r.true_label);
          break;
      }
    }
    for (int i = 1; i <= t; ++i) {
      const auto& cls = split.task(i);
      std::vector<int> p, y;
      for (std::size_t k = 0; k < seen_true.size(); ++k)
        if (std::find(cls.begin(), cls.end(), seen_true[k]) != cls.end()) {
          p.push_back(seen_pred[k]);
          y.push_back(seen_true[k]);
        }
      if (!y.empty()) m.set_seen(t, i, accuracy(p, y, cls));
    }
    if (!unseen_true.empty()) m.set_unseen(t, accuracy(unseen_pred, unseen_true, su.unseen));
    if (!all_true.empty()) {
      std::vector<int> every(split.num_classes);
      for (std::size_t c = 0; c < every.size(); ++c) every[c] = static_cast<int>(c);
      m.set_overall(t, overall_accuracy(all_pred, all_true, every, weighting));
    }
  }
  return m;
}

std::string metrics_to_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["mSA"] = m.msa;
  j["mUA"] = opt_json(m.mua);
  j["mH"] = opt_json(m.mh);
  j["mOA"] = m.moa;
  j["BWT"] = opt_json(m.bwt);
  return j.dump(2) + "\n";
}

MetricsReport metrics_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricsReport m;
    m.msa = j.at("mSA").get<double>();
    m.mua = opt_from(j, "mUA");
    m.mh = opt_from(j, "mH");
    m.moa = j.at("mOA").get<double>();
    m.bwt = opt_from(j, "BWT");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("metrics: ") + e.what());
  }
}

std::string accuracy_matrix_to_csv(const AccuracyMatrix& m) {
  const int T = static_cast<int>(m.num_tasks());
  std::string out = "after_task";
  for (int i = 1; i <= T; ++i) out += ",seen_task_" + std::to_string(i);
  out += ",unseen,overall\n";
  for (int j = 1; j <= T; ++j) {
    out += std::to_string(j);
    for (int i = 1; i <= T; ++i) out += ',' + (i <= j ? fmt(m.seen(j, i)) : std::string());
    out += ',' + fmt(m.unseen(j)) + ',' + fmt(m.overall(j)) + '\n';
  }
  return out;
}

std::string per_task_curves_to_csv(const AccuracyMatrix& m) {
  const int T = static_cast<int>(m.num_tasks());
  std::string out = "after_task,regime,task,accuracy\n";
  for (int j = 1; j <= T; ++j) {
    for (int i = 1; i <= j; ++i)
      if (auto v = m.seen(j, i)) out += std::to_string(j) + ",seen," + std::to_string(i) + ',' + fmt(*v) + '\n';
    if (auto v = m.unseen(j)) out += std::to_string(j) + ",unseen,," + fmt(*v) + '\n';
    if (auto v = m.overall(j)) out += std::to_string(j) + ",overall,," + fmt(*v) + '\n';
  }
  return out;
}

}  // namespace aczsl
