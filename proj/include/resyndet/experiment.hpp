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
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "resyndet/asv.hpp"
#include "resyndet/config.hpp"
#include "resyndet/report.hpp"
#include "resyndet/trials.hpp"
#include "resyndet/waveform.hpp"

namespace resyndet::harness {

/// Trials plus the audio they reference, keyed by the ids used in the list.
struct ExperimentData {
  std::vector<Trial> trials;
  std::map<std::string, Waveform> audio;
};

/// Reads cfg.trials under cfg.audio_root, or synthesizes the evaluation
/// corpus when no trial list is configured.
ExperimentData load_experiment_data(const ExperimentConfig& cfg);

/// Synthetic training utterances: same voices as the evaluation corpus,
/// utterance indices after the evaluation range.
std::vector<asv::LabeledUtterance> training_corpus(const ExperimentConfig& cfg);
asv::TrainConfig train_config(const ExperimentConfig& cfg);

/// Loads cfg.model, or trains on training_corpus(cfg).
asv::AsvModel load_or_train_model(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Hash of everything the per-trial scores depend on; guards cache reuse.
std::string experiment_fingerprint(const ExperimentConfig& cfg, const ExperimentData& data,
                                   const asv::AsvModel& model);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct ExperimentResult {
  asv::AsvModel model;
  ScoreTable scores;
  Report report;
  std::vector<StageTiming> timings;
  std::size_t cached_utterances = 0;  // records reused from an earlier run
  std::size_t cached_trials = 0;
};

/// Scores every trial clean, after noise, and attacked at each epsilon, with
/// and without each re-synthesis method. Work is cached under
/// <out_dir>/cache so an interrupted run resumes where it stopped.
ScoreTable compute_scores(const ExperimentConfig& cfg, const ExperimentData& data, const asv::AsvModel& model,
                          std::ostream* log = nullptr, std::pair<std::size_t, std::size_t>* reused = nullptr);

/// Full pipeline. Errors are re-raised with the failing stage in the message
/// and the original exit code.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Writes model.json (when trained), experiment.cfg, scores.jsonl, the report files and
/// timings.json into cfg.out_dir. Everything except timings.json is a pure
/// function of the configuration.
void write_experiment(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Re-renders the report files from <dir>/scores.jsonl.
Report render_report(const std::filesystem::path& dir, const ExperimentConfig& cfg);

}  // namespace resyndet::harness
