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

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "resyndet/dsp.hpp"
#include "resyndet/waveform.hpp"

namespace resyndet::asv {

using dsp::Matrix;
using Vector = Eigen::VectorXd;

/// Log mel filterbank front end: Hamming window 25 ms, hop 10 ms, 64 bands.
struct FeatureConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t n_mels = 64;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 selects the Nyquist frequency
  double log_floor = 1e-10;
  int sample_rate = kDefaultSampleRate;

  void validate() const;
  dsp::StftConfig stft_config() const;
  double effective_fmax() const { return fmax > 0.0 ? fmax : sample_rate / 2.0; }

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

/// Precomputed window and filterbank for a FeatureConfig.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const FeatureConfig& cfg);

  const FeatureConfig& config() const noexcept { return cfg_; }
  const dsp::StftConfig& stft_config() const noexcept { return stft_; }
  const dsp::MelFilterbank& filterbank() const noexcept { return fb_; }

  /// log(|STFT|^2 * fb^T + log_floor), n_frames x n_mels.
  Matrix extract(const Waveform& x) const;

  /// Input-gradient of sum(dfeat .* extract(x)) with respect to x.
  std::vector<double> backward(const Waveform& x, const Matrix& dfeat) const;

 private:
  void check_input(const Waveform& x) const;

  FeatureConfig cfg_;
  dsp::StftConfig stft_;
  std::vector<double> window_;
  dsp::MelFilterbank fb_;
};

Matrix extract_features(const Waveform& x, const FeatureConfig& cfg);

/// e = normalize(W2 * tanh(W1 * meanpool(F) + b1)).
struct AsvModel {
  FeatureConfig features;
  Matrix w1;  // hidden x n_mels
  Vector b1;  // hidden
  Matrix w2;  // embedding x hidden

  std::size_t hidden_dim() const noexcept { return static_cast<std::size_t>(w1.rows()); }
  std::size_t embedding_dim() const noexcept { return static_cast<std::size_t>(w2.rows()); }

  /// Throws DataError on inconsistent shapes, non-finite weights or D < 2.
  void validate() const;

  friend bool operator==(const AsvModel& a, const AsvModel& b) {
    return a.features == b.features && a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2;
  }
};

/// Unit-norm speaker embedding.
struct Embedding {
  Vector values;
};

Vector mean_pool(const Matrix& features);
Embedding embed(const Matrix& features, const AsvModel& model);
Embedding embed_pooled(const Vector& pooled, const AsvModel& model);
Embedding embed_waveform(const Waveform& x, const AsvModel& model);

/// Cosine similarity of two unit embeddings, clamped to [-1, 1].
double cosine_score(const Embedding& a, const Embedding& b);
double score(const Waveform& test, const Waveform& enroll, const AsvModel& model);

struct ScoreGradient {
  double score = 0.0;
  std::vector<double> grad;  // d score / d test sample
};

/// Analytic gradient of score(test, enroll) with respect to the test samples;
/// the enrollment embedding is held constant.
ScoreGradient score_gradient(const Waveform& test, const Embedding& enroll, const AsvModel& model);
ScoreGradient score_gradient(const Waveform& test, const Waveform& enroll, const AsvModel& model);

struct LabeledUtterance {
  Waveform audio;
  std::string speaker;
};

struct TrainConfig {
  FeatureConfig features;
  std::size_t hidden_dim = 64;
  std::size_t embedding_dim = 32;
  double learning_rate = 0.5;
  std::size_t steps = 400;
  std::size_t batch_pairs = 64;
  double validation_fraction = 0.25;
  std::uint64_t seed = 1;
};

struct TrainResult {
  AsvModel model;
  double initial_validation_eer = 0.0;
  double final_validation_eer = 0.0;
  std::vector<double> loss_history;
};

/// Seeded model with data-dependent input normalization folded into W1/b1.
AsvModel initialize_model(const std::vector<Vector>& pooled, const TrainConfig& cfg);

/// Plain gradient descent on (s - y)^2 over sampled utterance pairs, y = 1
/// for same speaker and 0 otherwise. Deterministic given cfg.seed.
TrainResult train_model(const std::vector<LabeledUtterance>& corpus, const TrainConfig& cfg);

void save_model(const std::filesystem::path& path, const AsvModel& model);
AsvModel load_model(const std::filesystem::path& path);
std::string model_to_json(const AsvModel& model);
AsvModel model_from_json(const std::string& text);

}  // namespace resyndet::asv
