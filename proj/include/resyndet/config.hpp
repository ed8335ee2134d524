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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "resyndet/resynth.hpp"

namespace resyndet::harness {

inline constexpr int kConfigFormatVersion = 1;

/// Everything a run of the experiment depends on. Empty `trials` selects the
/// built-in synthetic corpus; empty `model` trains the toy verifier on
/// utterances disjoint from the evaluation set.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "results";

  std::string trials;
  std::string audio_root;
  std::string model;

  std::vector<std::string> methods = {"gl-lin", "gl-mel", "gaussian"};
  std::vector<double> epsilons = {5.0, 10.0, 15.0, 20.0};
  double alpha = 1.0;
  bool quantize = false;
  std::vector<double> fpr_given = {0.05, 0.01, 0.005, 0.001};

  std::size_t corpus_speakers = 8;
  std::size_t corpus_utts_per_speaker = 10;
  double corpus_duration_s = 1.0;
  std::size_t corpus_trials = 400;

  std::size_t train_utts_per_speaker = 20;
  std::size_t train_steps = 400;
  double train_learning_rate = 0.5;
  std::size_t train_hidden_dim = 64;
  std::size_t train_embedding_dim = 32;

  std::size_t gl_iterations = 100;
  std::size_t gl_mel_bands = 64;
  double gaussian_sigma = 1.0;
  std::string vocoder_command;
  double vocoder_timeout_s = 600.0;

  double control_snr_db = 30.0;

  std::size_t histogram_bins = 40;
  bool parallel = true;
  bool resume = true;

  void validate() const;
};

/// Reads `key = value` lines. `#` starts a comment, blank lines are ignored,
/// and `format_version = 1` must be present. Unknown keys are rejected.
ExperimentConfig parse_config(std::istream& in, const std::string& name = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Sets one key as it would appear in a config file.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Canonical config text; parse_config(to_config_text(c)) == c.
std::string to_config_text(const ExperimentConfig& cfg);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// The re-synthesis method behind a name in `methods`.
resynth::ResynthMethod make_method(const ExperimentConfig& cfg, const std::string& name);

}  // namespace resyndet::harness
