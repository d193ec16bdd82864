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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "aczsl/data.hpp"
#include "aczsl/error.hpp"

using namespace aczsl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string read(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

// Two classes, three rows each, d=2, a=2.
void write_small(const fs::path& dir) {
  write(dir / "features.csv", "0.5,1,0\n0.25,1.5,0\n0,2,0\n1,0,1\n1.5,-1,1\n2,-2e-3,1\n");
  write(dir / "attributes.csv", "1,0\n0,1\n");
  write(dir / "meta.json", R"({"feature_dim": 2, "attr_dim": 2, "num_classes": 2})");
}

std::string parse_error_of(const fs::path& dir) {
  try {
    load_dataset(dir);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("loading applies the default split") {
  TempDir tmp("aczsl_data_load");
  write_small(tmp.path);
  const Dataset ds = load_dataset(tmp.path);
  CHECK(ds.num_rows() == 6);
  CHECK(ds.feature_dim() == 2);
  CHECK(ds.num_classes() == 2);
  CHECK(ds.features.at(5, 1) == -2e-3);
  CHECK(ds.labels == std::vector<int>{0, 0, 0, 1, 1, 1});
  // floor(0.8 * 3) = 2 rows per class train.
  CHECK(ds.train_idx == std::vector<std::size_t>{0, 1, 3, 4});
  CHECK(ds.test_idx == std::vector<std::size_t>{2, 5});
}

TEST_CASE("loading rejects malformed files with context") {
  TempDir tmp("aczsl_data_bad");
  write_small(tmp.path);
  write(tmp.path / "attributes.csv", "1,0\n");
  const auto msg = parse_error_of(tmp.path);
  CHECK(msg.find("expected 2 attribute rows") != std::string::npos);

  write_small(tmp.path);
  write(tmp.path / "features.csv", "0.5,1,0\n0.25,0\n");
  CHECK(parse_error_of(tmp.path).find("features.csv:2") != std::string::npos);

  write_small(tmp.path);
  write(tmp.path / "features.csv", "0.5,abc,0\n");
  CHECK(parse_error_of(tmp.path).find("features.csv:1") != std::string::npos);

  write_small(tmp.path);
  write(tmp.path / "features.csv", "0.5,1,7\n");
  CHECK(parse_error_of(tmp.path).find("label 7") != std::string::npos);

  write_small(tmp.path);
  write(tmp.path / "meta.json", "{not json");
  CHECK(parse_error_of(tmp.path).find("meta.json") != std::string::npos);

  write_small(tmp.path);
  fs::remove(tmp.path / "features.csv");
  CHECK_THROWS_AS(load_dataset(tmp.path), IoError);
}

TEST_CASE("save and load round-trip exactly") {
  TempDir tmp("aczsl_data_rt");
  SynthSpec spec;
  spec.num_classes = 5;
  spec.n_per_class = 7;
  spec.seed = 4;
  Dataset ds = synth_dataset(spec);
  ds.names = {"a", "b", "c", "d", "e"};
  save_dataset(ds, tmp.path / "one");
  const Dataset back = load_dataset(tmp.path / "one");
  CHECK(back.features == ds.features);
  CHECK(back.attributes == ds.attributes);
  CHECK(back.labels == ds.labels);
  CHECK(back.train_idx == ds.train_idx);
  CHECK(back.test_idx == ds.test_idx);
  CHECK(back.names == ds.names);
  save_dataset(back, tmp.path / "two");
  for (const char* f : {"features.csv", "attributes.csv", "meta.json"})
    CHECK(read(tmp.path / "one" / f) == read(tmp.path / "two" / f));
}

TEST_CASE("synthetic generator") {
  SynthSpec spec;
  spec.seed = 7;
  const Dataset ds = synth_dataset(spec);
  CHECK(ds.num_rows() == 1200);
  CHECK(ds.feature_dim() == 32);
  CHECK(ds.attr_dim() == 8);
  for (int c = 0; c < 12; ++c) CHECK(std::count(ds.labels.begin(), ds.labels.end(), c) == 100);
  CHECK_NOTHROW(ds.validate());
  CHECK(synth_dataset(spec).features == ds.features);

  // Class means are recoverable: nearest training mean classifies test rows.
  std::vector<std::vector<double>> mean(12, std::vector<double>(32, 0.0));
  std::vector<int> count(12, 0);
  for (auto r : ds.train_idx) {
    ++count[ds.labels[r]];
    for (std::size_t i = 0; i < 32; ++i) mean[ds.labels[r]][i] += ds.features.at(r, i);
  }
  for (int c = 0; c < 12; ++c)
    for (auto& v : mean[c]) v /= count[c];
  std::size_t hits = 0;
  for (auto r : ds.test_idx) {
    int best = 0;
    double best_d = 1e300;
    for (int c = 0; c < 12; ++c) {
      double d = 0.0;
      for (std::size_t i = 0; i < 32; ++i) d += std::pow(ds.features.at(r, i) - mean[c][i], 2);
      if (d < best_d) best_d = d, best = c;
    }
    hits += best == ds.labels[r];
  }
  CHECK(static_cast<double>(hits) / ds.test_idx.size() >= 0.95);

  SynthSpec quiet = spec;
  quiet.noise_sigma = 1e-9;
  const Dataset q = synth_dataset(quiet);
  for (std::size_t i = 0; i < 32; ++i) CHECK(std::abs(q.features.at(0, i) - q.features.at(1, i)) < 1e-7);

  SynthSpec bad = spec;
  bad.num_classes = 0;
  CHECK_THROWS_AS(synth_dataset(bad), ContractError);
}

TEST_CASE("splits") {
  const auto cub = make_split(200, 20, 10);
  std::set<int> all;
  for (const auto& t : cub.tasks) all.insert(t.begin(), t.end());
  CHECK(all.size() == 200);
  const auto apy = make_split(32, 4, 8);
  CHECK(apy.num_tasks() == 4);
  CHECK(apy.task(2) == std::vector<int>{8, 9, 10, 11, 12, 13, 14, 15});
  CHECK(apy.task_of(9) == 2);
  CHECK_THROWS_AS(make_split(30, 4, 8), ContractError);

  const auto shuffled = make_split(12, 4, 3, 5u);
  CHECK(shuffled.tasks != make_split(12, 4, 3).tasks);
  CHECK(shuffled.tasks == make_split(12, 4, 3, 5u).tasks);

  const auto s = make_split(50, 5, 10);
  const auto su = seen_unseen_at(s, 1);
  CHECK(su.seen.size() == 10);
  CHECK(su.unseen.size() == 40);
  CHECK(seen_unseen_at(s, 5).unseen.empty());
  // A partial split leaves leftover classes permanently unseen.
  const auto partial = make_split(12, 3, 3);
  CHECK(seen_unseen_at(partial, 3).unseen == std::vector<int>{9, 10, 11});
  CHECK_THROWS_AS(seen_unseen_at(s, 6), ContractError);

  const auto back = split_from_json(split_to_json(shuffled));
  CHECK(back.tasks == shuffled.tasks);
  CHECK(back.num_classes == 12);
  CHECK_THROWS_AS(split_from_json("{\"num_classes\": 2, \"tasks\": [[0, 0]]}"), ParseError);
}

TEST_CASE("standardizer") {
  const Tensor x = Tensor::matrix({{1, 5}, {3, 5}, {100, 100}});
  const std::vector<std::size_t> rows{0, 1};
  const auto st = Standardizer::fit(x, rows);
  CHECK(st.mean() == std::vector<double>{2, 5});
  CHECK(st.scale()[1] == 1.0);  // constant column keeps unit scale
  const Tensor y = st.apply(x);
  CHECK(y.at(0, 0) == doctest::Approx(-1.0));
  CHECK(y.at(1, 0) == doctest::Approx(1.0));
  CHECK(y.at(0, 1) == 0.0);
}
