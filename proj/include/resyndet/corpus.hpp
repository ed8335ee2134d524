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
#include <string>
#include <vector>

#include "resyndet/trials.hpp"
#include "resyndet/waveform.hpp"

namespace resyndet::corpus {

/// Parameters of a synthetic voice.
struct SpeakerProfile {
  double f0_hz = 120.0;
  std::vector<double> harmonic_gains;  // gain of harmonic h+1
  double formant1_hz = 500.0;
  double formant1_bw_hz = 100.0;
  double formant2_hz = 1500.0;
  double formant2_bw_hz = 150.0;
  double noise_level = 0.03;
};

struct CorpusConfig {
  std::uint64_t seed = 1;
  std::size_t n_speakers = 8;
  std::size_t utts_per_speaker = 10;
  /// Index of the first generated utterance per speaker. Disjoint index
  /// ranges give disjoint utterances of the same voices.
  std::size_t first_utterance = 0;
  double duration_s = 1.0;
  int sample_rate = kDefaultSampleRate;
  /// Balanced target/non-target trial count; 0 disables trial generation.
  std::size_t n_trials = 400;

  void validate() const;
};

struct Utterance {
  std::string id;       // relative path, e.g. "spk03/utt007.wav"
  std::string speaker;  // e.g. "spk03"
  Waveform audio;
};

struct Corpus {
  std::vector<SpeakerProfile> speakers;
  std::vector<Utterance> utterances;
  std::vector<Trial> trials;
};

/// Speaker profiles for a seed. Fundamentals are drawn from disjoint
/// frequency slots so any two speakers differ by at least half a slot.
std::vector<SpeakerProfile> make_speakers(std::uint64_t seed, std::size_t n_speakers);

/// Minimum pairwise fundamental gap guaranteed by make_speakers.
double min_f0_gap_hz(std::size_t n_speakers);

Waveform synth_utterance(const SpeakerProfile& speaker, std::uint64_t seed, double duration_s,
                         int sample_rate);

/// Deterministic corpus: every utterance is peak-normalized to 0.5 and
/// quantized to the PCM16 grid, so writing it to disk is lossless.
Corpus synth_corpus(const CorpusConfig& cfg);

/// Balanced trial list: n_trials/2 target pairs and n_trials/2 non-target
/// pairs sampled without replacement.
std::vector<Trial> make_trials(const std::vector<Utterance>& utts, std::size_t n_trials,
                               std::uint64_t seed);

/// Writes <root>/<id> for every utterance, <root>/trials.txt and
/// <root>/utt2spk.txt (`<id> <speaker>` per line).
void write_corpus(const std::filesystem::path& root, const Corpus& corpus);

/// Reads an utt2spk listing and the referenced audio under `root`.
std::vector<Utterance> load_labeled(const std::filesystem::path& root,
                                    const std::filesystem::path& utt2spk);

}  // namespace resyndet::corpus
