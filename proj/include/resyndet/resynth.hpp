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

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "resyndet/dsp.hpp"
#include "resyndet/parallel.hpp"
#include "resyndet/waveform.hpp"

namespace resyndet::resynth {

/// Default analysis for mel Griffin-Lim: 25 ms periodic Hamming with a
/// 6.25 ms hop, the closest 25 ms setting whose squared window overlap-adds
/// to a constant.
dsp::StftConfig default_gl_stft(int sample_rate = kDefaultSampleRate);

/// Default analysis for linear Griffin-Lim: 25 ms Hamming, 6.25 ms hop (same as GL-mel).
dsp::StftConfig default_gl_lin_stft(int sample_rate = kDefaultSampleRate);

struct Identity {};

struct GriffinLimLinear {
  dsp::StftConfig stft = default_gl_lin_stft();
  std::size_t n_iter = dsp::kDefaultGriffinLimIterations;
};

struct GriffinLimMel {
  dsp::StftConfig stft = default_gl_stft();
  std::size_t n_mels = 64;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 selects Nyquist
  std::size_t n_iter = dsp::kDefaultGriffinLimIterations;
};

struct GaussianFilter {
  double sigma = 1.0;  // samples
};

struct ExternalVocoder {
  /// Executable followed by fixed arguments; the bridge appends
  /// --in-dir <dir> --out-dir <dir> --sample-rate <sr>.
  std::vector<std::string> command;
  std::chrono::seconds timeout{600};
};

using ResynthMethod = std::variant<Identity, GriffinLimLinear, GriffinLimMel, GaussianFilter, ExternalVocoder>;

/// Short identifier used in configs and reports: identity, gl-lin, gl-mel,
/// gaussian, vocoder.
std::string method_name(const ResynthMethod& method);
/// Default-configured method for an identifier; throws InvalidArgument.
ResynthMethod method_from_name(const std::string& name);

/// Bound re-synthesis transform; precomputes the filterbank and its
/// pseudo-inverse for GL-mel. Immutable and thread-safe once built.
class Resynthesizer {
 public:
  explicit Resynthesizer(ResynthMethod method);

  const ResynthMethod& method() const noexcept { return method_; }
  std::string name() const { return method_name(method_); }

  /// Output has exactly x.size() samples, all in [-1, 1].
  Waveform operator()(const Waveform& x) const;

  /// Transforms a batch. The external vocoder handles the whole batch in one
  /// subprocess call; other methods run per item under `exec`.
  std::vector<Waveform> run_batch(const std::vector<Waveform>& inputs,
                                  Execution exec = Execution::kParallel) const;

 private:
  Waveform transform(const Waveform& x) const;
  using MelInverse = std::pair<std::shared_ptr<const dsp::MelFilterbank>, std::shared_ptr<const dsp::Matrix>>;
  MelInverse mel_inverse(const GriffinLimMel& gl, int sample_rate) const;

  ResynthMethod method_;
  std::shared_ptr<const dsp::MelFilterbank> fb_;
  std::shared_ptr<const dsp::Matrix> pinv_;
};

Waveform resynthesize(const Waveform& x, const ResynthMethod& method);

/// Trims or zero-pads the tail to `length` samples.
Waveform fit_length(Waveform y, std::size_t length);

/// Writes inputs to in/<index>.wav in a fresh temporary directory, runs
/// `command --in-dir in --out-dir out --sample-rate sr` and reads back
/// out/<index>.wav for every index. Throws BridgeError on a non-zero exit,
/// missing or unexpected outputs, a sample-rate mismatch or a timeout.
std::vector<Waveform> external_vocoder_bridge(const std::vector<Waveform>& inputs,
                                              const ExternalVocoder& vocoder);

}  // namespace resyndet::resynth
