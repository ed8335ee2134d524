// Copyright 2026 The resyndet Authors
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
#include <map>
#include <numeric>

#include "resyndet/asv.hpp"
#include "resyndet/corpus.hpp"
#include "resyndet/error.hpp"
#include "test_support.hpp"

using namespace resyndet;
using namespace resyndet::asv;
using resyndet::testing::noise;
using resyndet::testing::voiced;

namespace {

AsvModel random_model(std::uint64_t seed, std::size_t hidden = 16, std::size_t dim = 8) {
  AsvModel m;
  Rng rng(seed);
  m.w1 = Matrix(hidden, 64);
  m.b1 = Vector(hidden);
  m.w2 = Matrix(dim, hidden);
  // Log-mel inputs sit near -10; scale W1 so tanh stays away from saturation.
  for (Eigen::Index i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = 0.02 * rng.normal();
  for (Eigen::Index i = 0; i < m.b1.size(); ++i) m.b1[i] = 0.5 * rng.normal();
  for (Eigen::Index i = 0; i < m.w2.size(); ++i) m.w2.data()[i] = rng.normal() / std::sqrt(double(hidden));
  return m;
}

double relative_fd_error(const Waveform& x, const Waveform& enroll, const AsvModel& m) {
  const auto e = embed_waveform(enroll, m);
  const auto g = score_gradient(x, e, m);
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + 100, idx.end(),
                    [&](std::size_t a, std::size_t b) { return std::abs(g.grad[a]) > std::abs(g.grad[b]); });
  const double h = 1e-5;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < 100; ++j) {
    Waveform plus = x;
    Waveform minus = x;
    plus.samples[idx[j]] += h;
    minus.samples[idx[j]] -= h;
    const double fd = (cosine_score(embed_waveform(plus, m), e) - cosine_score(embed_waveform(minus, m), e)) / (2 * h);
    num += (fd - g.grad[idx[j]]) * (fd - g.grad[idx[j]]);
    den += fd * fd;
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("features of silence equal log(log_floor) with 101 frames per second") {
  FeatureConfig cfg;
  const auto f = extract_features(Waveform(std::vector<double>(16000, 0.0), 16000), cfg);
  CHECK(f.rows() == 101);
  CHECK(f.cols() == 64);
  for (Eigen::Index i = 0; i < f.size(); ++i) CHECK(f.data()[i] == doctest::Approx(std::log(cfg.log_floor)));
}

TEST_CASE("doubling the amplitude adds log 4 to dominant feature entries") {
  FeatureConfig cfg;
  cfg.log_floor = 1e-20;
  const auto x = voiced(3, 8000);
  Waveform x2 = x;
  for (auto& v : x2.samples) v *= 2.0;
  const auto f1 = extract_features(x, cfg);
  const auto f2 = extract_features(x2, cfg);
  const double top = f1.maxCoeff();
  for (Eigen::Index i = 0; i < f1.size(); ++i) {
    if (f1.data()[i] > top - 5.0) CHECK(f2.data()[i] - f1.data()[i] == doctest::Approx(std::log(4.0)).epsilon(1e-6));
  }
}

TEST_CASE("feature extraction rejects short input and bad configs") {
  FeatureConfig cfg;
  CHECK_THROWS_AS(extract_features(Waveform(std::vector<double>(399, 0.0), 16000), cfg), DataError);
  CHECK_NOTHROW(extract_features(Waveform(std::vector<double>(400, 0.0), 16000), cfg));
  FeatureConfig bad = cfg;
  bad.n_mels = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.log_floor = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(extract_features(Waveform(std::vector<double>(8000, 0.0), 8000), cfg), DataError);
}

TEST_CASE("embeddings are unit norm, deterministic and frame-permutation invariant") {
  const auto m = random_model(1);
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix f(20, 64);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = -10.0 + 3.0 * rng.normal();
    const auto e = embed(f, m);
    CHECK(std::abs(e.values.norm() - 1.0) <= 1e-9);
    CHECK(embed(f, m).values == e.values);
    Matrix shuffled = f;
    for (Eigen::Index r = shuffled.rows() - 1; r > 0; --r) {
      shuffled.row(r).swap(shuffled.row(static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(r + 1)))));
    }
    CHECK((embed(shuffled, m).values - e.values).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("embedding of a zero pre-normalization vector is reported") {
  auto m = random_model(2);
  m.w2.setZero();
  Matrix f = Matrix::Constant(5, 64, -3.0);
  CHECK_THROWS_AS(embed(f, m), NumericalError);
  CHECK_THROWS_AS(embed(Matrix::Zero(5, 10), random_model(2)), InvalidArgument);
}

TEST_CASE("scores are one on identical input, symmetric and bounded") {
  const auto m = random_model(3);
  const auto x = voiced(1, 8000);
  CHECK(score(x, x, m) == doctest::Approx(1.0).epsilon(1e-9));
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto a = noise(2 * s + 10, 800, 0.4);
    const auto b = noise(2 * s + 11, 800, 0.4);
    const double ab = score(a, b, m);
    CHECK(ab >= -1.0);
    CHECK(ab <= 1.0);
    if (s < 20) CHECK(std::abs(ab - score(b, a, m)) <= 1e-12);
  }
}

TEST_CASE("score is nearly invariant to amplitude scaling") {
  TrainConfig tc;
  tc.seed = 4;
  std::vector<Vector> pooled;
  for (std::uint64_t seed = 20; seed < 30; ++seed) pooled.push_back(mean_pool(extract_features(voiced(seed, 8000), tc.features)));
  const auto m = initialize_model(pooled, tc);
  // A gain shifts all log-mel entries equally; W1 rows sum to zero.
  CHECK(m.w1.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-9 * m.w1.cwiseAbs().maxCoeff() * 64);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto x = voiced(seed, 8000);
    Waveform x2 = x;
    for (auto& v : x2.samples) v *= 2.0;
    CHECK(std::abs(score(x2, x, m) - 1.0) <= 0.05);
  }
}

TEST_CASE("analytic score gradient matches central finite differences") {
  const auto m = random_model(5);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CAPTURE(seed);
    const auto x = voiced(seed, 8000);
    const auto enroll = voiced(seed + 100, 8000);
    CHECK(relative_fd_error(x, enroll, m) <= 1e-4);
  }
}

TEST_CASE("gradient is finite on silence and gives ascent") {
  const auto m = random_model(6);
  const auto enroll = voiced(2, 8000);
  const auto g = score_gradient(Waveform(std::vector<double>(8000, 0.0), 16000), enroll, m);
  CHECK(std::all_of(g.grad.begin(), g.grad.end(), [](double v) { return std::isfinite(v); }));

  const auto x = voiced(3, 8000);
  const auto gx = score_gradient(x, x, m);
  CHECK(gx.score == doctest::Approx(1.0).epsilon(1e-9));
  const double gnorm = std::sqrt(std::inner_product(gx.grad.begin(), gx.grad.end(), gx.grad.begin(), 0.0));
  if (gnorm > 0.0) {
    // At the maximum of the cosine the gradient is ~0; a step along it
    // must not decrease the score beyond rounding.
    Waveform step = x;
    for (std::size_t i = 0; i < x.size(); ++i) step.samples[i] += 1e-6 * gx.grad[i] / gnorm;
    CHECK(score(step, x, m) - gx.score >= -1e-9);
  }

  const auto y = voiced(4, 8000);
  const auto gy = score_gradient(y, enroll, m);
  const double ny = std::sqrt(std::inner_product(gy.grad.begin(), gy.grad.end(), gy.grad.begin(), 0.0));
  REQUIRE(ny > 0.0);
  Waveform ystep = y;
  for (std::size_t i = 0; i < y.size(); ++i) ystep.samples[i] += 1e-5 * gy.grad[i] / ny;
  CHECK(score(ystep, enroll, m) >= gy.score);
}

TEST_CASE("model validation and JSON round trip") {
  auto m = random_model(7);
  CHECK_NOTHROW(m.validate());
  const auto back = model_from_json(model_to_json(m));
  CHECK(back == m);

  auto bad = m;
  bad.w1(0, 0) = std::nan("");
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = m;
  bad.w2 = Matrix::Zero(1, m.hidden_dim());
  CHECK_THROWS_AS(bad.validate(), DataError);
  bad = m;
  bad.b1 = Vector::Zero(3);
  CHECK_THROWS_AS(bad.validate(), DataError);
  CHECK_THROWS_AS(model_from_json("{\"format\": 1}"), DataError);
  CHECK_THROWS_AS(model_from_json("not json"), DataError);

  const auto dir = resyndet::testing::scratch_dir("asv-model");
  save_model(dir / "m.json", m);
  CHECK(load_model(dir / "m.json") == m);
  CHECK_THROWS_AS(load_model(dir / "missing.json"), DataError);
}

TEST_CASE("training improves validation EER and is deterministic") {
  corpus::CorpusConfig cc;
  cc.n_speakers = 8;
  cc.utts_per_speaker = 12;
  cc.duration_s = 0.5;
  cc.seed = 11;
  const auto c = corpus::synth_corpus(cc);
  std::vector<LabeledUtterance> data;
  for (const auto& u : c.utterances) data.push_back({u.audio, u.speaker});

  TrainConfig tc;
  tc.steps = 150;
  tc.seed = 3;
  const auto r1 = train_model(data, tc);
  CHECK(r1.final_validation_eer < r1.initial_validation_eer);
  CHECK(r1.final_validation_eer <= 0.15);
  CHECK(r1.loss_history.size() == tc.steps);
  const auto r2 = train_model(data, tc);
  CHECK(r1.model == r2.model);

  tc.steps = 0;
  const auto r0 = train_model(data, tc);
  // Normalization is fitted on the training split: the first utterances of each speaker.
  const auto n_val = static_cast<std::size_t>(std::floor(tc.validation_fraction * 12.0));
  std::map<std::string, std::size_t> seen;
  std::vector<Vector> pooled;
  for (const auto& u : data) {
    if (seen[u.speaker]++ < 12 - n_val) pooled.push_back(mean_pool(extract_features(u.audio, tc.features)));
  }
  CHECK(r0.model == initialize_model(pooled, tc));
}

TEST_CASE("training rejects degenerate corpora") {
  TrainConfig tc;
  std::vector<LabeledUtterance> one_speaker{{voiced(1, 4000), "a"}, {voiced(2, 4000), "a"}};
  CHECK_THROWS_AS(train_model(one_speaker, tc), DataError);
  std::vector<LabeledUtterance> singletons{{voiced(1, 4000), "a"}, {voiced(2, 4000), "b"}, {voiced(3, 4000), "b"}};
  CHECK_THROWS_AS(train_model(singletons, tc), DataError);
}
