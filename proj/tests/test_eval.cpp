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

#include <cmath>
#include <map>

#include "aczsl/error.hpp"
#include "aczsl/eval.hpp"

using namespace aczsl;

namespace {

// Plain T x T table (1-based, row = after task) with the metric formulas
// written out longhand, independent of AccuracyMatrix.
struct RawMatrix {
  int T;
  std::vector<std::vector<double>> seen;  // seen[j][i]
  std::vector<double> unseen, overall;
};

RawMatrix random_raw(RngStream& rng, int T) {
  RawMatrix r{T, std::vector<std::vector<double>>(T + 1, std::vector<double>(T + 1, 0.0)),
              std::vector<double>(T + 1, 0.0), std::vector<double>(T + 1, 0.0)};
  for (int j = 1; j <= T; ++j) {
    for (int i = 1; i <= j; ++i) r.seen[j][i] = rng.uniform();
    // Occasionally exact zeros to exercise the 0/0 harmonic rule.
    r.unseen[j] = rng.uniform() < 0.1 ? 0.0 : rng.uniform();
    if (rng.uniform() < 0.05) r.seen[j][j] = 0.0;
    r.overall[j] = rng.uniform();
  }
  return r;
}

AccuracyMatrix to_matrix(const RawMatrix& r) {
  AccuracyMatrix m(r.T);
  for (int j = 1; j <= r.T; ++j) {
    for (int i = 1; i <= j; ++i) m.set_seen(j, i, r.seen[j][i]);
    if (j < r.T) m.set_unseen(j, r.unseen[j]);
    m.set_overall(j, r.overall[j]);
  }
  return m;
}

}  // namespace

TEST_CASE("class-balanced accuracy") {
  const std::vector<int> cls{0, 1};
  const std::vector<int> y{0, 0, 0, 1};
  const std::vector<int> all_right{0, 0, 0, 1};
  CHECK(accuracy(all_right, y, cls) == 1.0);
  const std::vector<int> half{0, 0, 0, 0};
  CHECK(accuracy(half, y, cls) == 0.5);

  RngStream rng(3);
  const std::vector<int> three{0, 1, 2};
  std::vector<int> p, l;
  for (int k = 0; k < 300; ++k) {
    l.push_back(static_cast<int>(rng.index(3)));
    p.push_back(static_cast<int>(rng.index(3)));
  }
  double hit[3] = {0, 0, 0}, tot[3] = {0, 0, 0};
  for (std::size_t k = 0; k < l.size(); ++k) {
    tot[l[k]] += 1;
    hit[l[k]] += p[k] == l[k];
  }
  CHECK(std::abs(accuracy(p, l, three) - (hit[0] / tot[0] + hit[1] / tot[1] + hit[2] / tot[2]) / 3.0) < 1e-12);

  const std::vector<int> with_empty{0, 1, 5};
  CHECK(accuracy(half, y, with_empty) == 0.5);
  CHECK_THROWS_AS(accuracy(half, y, with_empty, true), ContractError);
  const std::vector<int> only0{0};
  CHECK_THROWS_AS(accuracy(half, y, only0), ContractError);
}

TEST_CASE("overall weighting") {
  const std::vector<int> cls{0, 1};
  const std::vector<int> y{0, 0, 0, 1};
  const std::vector<int> p{0, 0, 0, 0};
  CHECK(overall_accuracy(p, y, cls, OverallWeighting::class_balanced) == 0.5);
  CHECK(overall_accuracy(p, y, cls, OverallWeighting::sample_weighted) == 0.75);
  const std::vector<int> only0{0};
  CHECK_THROWS_AS(overall_accuracy(p, y, only0, OverallWeighting::sample_weighted), ContractError);
  CHECK(overall_weighting_from_string("sample_weighted") == OverallWeighting::sample_weighted);
  CHECK(std::string(to_string(OverallWeighting::class_balanced)) == "class_balanced");
  CHECK_THROWS_AS(overall_weighting_from_string("median"), ConfigError);
}

TEST_CASE("bwt examples") {
  AccuracyMatrix m(2);
  m.set_seen(1, 1, 0.8);
  m.set_seen(2, 1, 0.6);
  m.set_seen(2, 2, 0.9);
  CHECK(*bwt(m) == doctest::Approx(0.2).epsilon(1e-14));
  m.set_seen(2, 1, 0.8);
  CHECK(*bwt(m) == 0.0);
  m.set_seen(2, 1, 0.95);
  CHECK(*bwt(m) < 0.0);
  CHECK_FALSE(bwt(AccuracyMatrix(1)).has_value());
}

TEST_CASE("metric examples") {
  CHECK(harmonic_term(0.6, 0.3) == 0.4);
  CHECK(harmonic_term(0.5, 0.0) == 0.0);
  CHECK(harmonic_term(0.0, 0.0) == 0.0);

  AccuracyMatrix m(3);
  for (int j = 1; j <= 3; ++j) {
    for (int i = 1; i <= j; ++i) m.set_seen(j, i, 0.7);
    if (j < 3) m.set_unseen(j, 0.7);
    m.set_overall(j, 0.7);
  }
  const auto r = compute_metrics(m);
  CHECK(r.msa == doctest::Approx(0.7));
  CHECK(*r.mua == doctest::Approx(0.7));
  CHECK(*r.mh == doctest::Approx(0.7));
  CHECK(r.moa == doctest::Approx(0.7));

  AccuracyMatrix single(1);
  single.set_seen(1, 1, 0.9);
  single.set_overall(1, 0.4);
  const auto s = compute_metrics(single);
  CHECK(s.msa == 0.9);
  CHECK_FALSE(s.mua.has_value());
  CHECK_FALSE(s.mh.has_value());
  CHECK_FALSE(s.bwt.has_value());
}

TEST_CASE("missing entries and out-of-range values") {
  AccuracyMatrix m(3);
  m.set_seen(1, 1, 0.5);
  m.set_overall(1, 0.5);
  try {
    msa(m);
    FAIL("expected ContractError");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("task 2") != std::string::npos);
  }
  CHECK_THROWS_AS(m.set_seen(1, 2, 0.5), ContractError);
  CHECK_THROWS_AS(m.set_seen(4, 1, 0.5), ContractError);
  CHECK_THROWS_AS(m.set_unseen(1, 1.5), DomainError);
}

TEST_CASE("metrics match brute-force recomputation on random matrices") {
  RngStream rng(2718);
  for (int trial = 0; trial < 50; ++trial) {
    const int T = 2 + static_cast<int>(rng.index(7));
    const RawMatrix r = random_raw(rng, T);
    const AccuracyMatrix m = to_matrix(r);

    double sa = 0, oa = 0, ua = 0, h = 0, b = 0, arith = 0;
    for (int t = 1; t <= T; ++t) {
      sa += r.seen[t][t];
      oa += r.overall[t];
    }
    for (int t = 1; t < T; ++t) {
      ua += r.unseen[t];
      const double s = r.seen[t][t], u = r.unseen[t];
      h += (s + u == 0.0) ? 0.0 : 2.0 * s * u / (s + u);
      arith += 0.5 * (s + u);
      b += r.seen[t][t] - r.seen[T][t];
    }
    CHECK(std::abs(msa(m) - sa / T) < 1e-12);
    CHECK(std::abs(moa(m) - oa / T) < 1e-12);
    CHECK(std::abs(*mua(m) - ua / (T - 1)) < 1e-12);
    CHECK(std::abs(*mh(m) - h / (T - 1)) < 1e-12);
    CHECK(std::abs(*bwt(m) - b / (T - 1)) < 1e-12);
    CHECK(*mh(m) <= arith / (T - 1) + 1e-15);
  }
}

TEST_CASE("permuting task order changes bwt as the formula says") {
  AccuracyMatrix a(3), b(3);
  // b relabels a's tasks 1 and 2.
  const double R[4][4] = {{0, 0, 0, 0}, {0, 0.9, 0, 0}, {0, 0.7, 0.8, 0}, {0, 0.5, 0.6, 0.85}};
  for (int j = 1; j <= 3; ++j)
    for (int i = 1; i <= j; ++i) a.set_seen(j, i, R[j][i]);
  b.set_seen(1, 1, 0.8);
  b.set_seen(2, 1, 0.8);
  b.set_seen(2, 2, 0.7);
  b.set_seen(3, 1, 0.6);
  b.set_seen(3, 2, 0.5);
  b.set_seen(3, 3, 0.85);
  CHECK(*bwt(a) == doctest::Approx(((0.9 - 0.5) + (0.8 - 0.6)) / 2));
  CHECK(*bwt(b) == doctest::Approx(((0.8 - 0.6) + (0.7 - 0.5)) / 2));
}

TEST_CASE("accuracy matrix from prediction logs matches a brute-force tally") {
  RngStream rng(99);
  CzslSplit split = make_split(9, 3, 3);
  std::vector<PredictionRecord> recs;
  std::size_t id = 0;
  for (int t = 1; t <= 3; ++t) {
    const auto su = seen_unseen_at(split, t);
    for (int c = 0; c < 9; ++c) {
      const bool seen = std::find(su.seen.begin(), su.seen.end(), c) != su.seen.end();
      for (int k = 0; k < 5 + c; ++k) {
        const auto& pool = seen ? su.seen : su.unseen;
        const int pred = rng.uniform() < 0.6 ? c : pool[rng.index(pool.size())];
        recs.push_back({t, id++, c, pred, seen ? Regime::seen : Regime::unseen});
        recs.push_back({t, id++, c, rng.uniform() < 0.5 ? c : static_cast<int>(rng.index(9)), Regime::overall});
      }
    }
  }
  const auto m = accuracy_matrix_from_predictions(recs, split);

  const auto balanced = [&](int t, Regime regime, const std::vector<int>& classes) {
    double sum = 0;
    for (int c : classes) {
      double hit = 0, tot = 0;
      for (const auto& r : recs)
        if (r.t == t && r.regime == regime && r.true_label == c) {
          tot += 1;
          hit += r.pred == c;
        }
      sum += hit / tot;
    }
    return sum / classes.size();
  };
  std::vector<int> all(9);
  for (int c = 0; c < 9; ++c) all[c] = c;
  for (int t = 1; t <= 3; ++t) {
    for (int i = 1; i <= t; ++i) CHECK(std::abs(*m.seen(t, i) - balanced(t, Regime::seen, split.task(i))) < 1e-12);
    if (t < 3) CHECK(std::abs(*m.unseen(t) - balanced(t, Regime::unseen, seen_unseen_at(split, t).unseen)) < 1e-12);
    CHECK(std::abs(*m.overall(t) - balanced(t, Regime::overall, all)) < 1e-12);
  }

  const auto pooled = accuracy_matrix_from_predictions(recs, split, OverallWeighting::sample_weighted);
  for (int t = 1; t <= 3; ++t) {
    double hit = 0, tot = 0;
    for (const auto& r : recs)
      if (r.t == t && r.regime == Regime::overall) {
        tot += 1;
        hit += r.pred == r.true_label;
      }
    CHECK(std::abs(*pooled.overall(t) - hit / tot) < 1e-12);
    CHECK(*pooled.seen(t, 1) == *m.seen(t, 1));
  }

  const auto back = predictions_from_csv(predictions_to_csv(recs));
  REQUIRE(back.size() == recs.size());
  CHECK(back[7].sample_id == recs[7].sample_id);
  CHECK(back[7].regime == recs[7].regime);
  CHECK(back[7].pred == recs[7].pred);
}

TEST_CASE("serialization") {
  MetricsReport r{0.5, 0.25, std::nullopt, 0.125, -0.0625};
  const auto json = metrics_to_json(r);
  CHECK(json.find("\"mSA\"") < json.find("\"mUA\""));
  CHECK(json.find("\"mUA\"") < json.find("\"mH\""));
  CHECK(json.find("\"mH\"") < json.find("\"mOA\""));
  const auto back = metrics_from_json(json);
  CHECK(back.msa == 0.5);
  CHECK(*back.mua == 0.25);
  CHECK_FALSE(back.mh.has_value());
  CHECK(*back.bwt == -0.0625);
  CHECK_THROWS_AS(metrics_from_json("{\"mSA\": 1"), ParseError);
  CHECK_THROWS_AS(predictions_from_csv("t,sample_id,true,pred,regime\n1,2,3,4,sideways\n"), ParseError);
  CHECK_THROWS_AS(predictions_from_csv("wrong,header\n"), ParseError);
}
