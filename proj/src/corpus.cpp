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

#include "resyndet/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <utility>

#include "resyndet/attack.hpp"
#include "resyndet/error.hpp"
#include "resyndet/random.hpp"
#include "resyndet/wav.hpp"

namespace resyndet::corpus {
namespace {

constexpr double kF0Lo = 90.0;
constexpr double kF0Hi = 250.0;
constexpr double kPeak = 0.5;
// Background noise std, about two PCM16 steps.
constexpr double kFloor = 2.0 / 32768.0;
// Residual level of the syllable envelope during pauses.
constexpr double kEnvFloor = 0.02;

std::string speaker_id(std::size_t s) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "spk%02zu", s);
  return buf;
}

std::string utterance_id(std::size_t s, std::size_t u) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "spk%02zu/utt%03zu.wav", s, u);
  return buf;
}

// Two-pole resonator with unit gain at DC scaled by (1 - r).
void resonate(std::vector<double>& x, double freq_hz, double bw_hz, int sr) {
  const double r = std::exp(-std::numbers::pi * bw_hz / sr);
  const double c = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq_hz / sr);
  const double g = 1.0 - r;
  double y1 = 0.0;
  double y2 = 0.0;
  for (double& v : x) {
    const double y = g * v + c * y1 - r * r * y2;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

}  // namespace

void CorpusConfig::validate() const {
  if (n_speakers < 2) throw InvalidArgument("corpus needs at least 2 speakers");
  if (utts_per_speaker < 1) throw InvalidArgument("corpus needs at least 1 utterance per speaker");
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw InvalidArgument("duration must be positive");
  if (sample_rate < 8000) throw InvalidArgument("sample rate must be at least 8000 Hz");
  if (n_trials % 2 != 0) throw InvalidArgument("trial count must be even (balanced target/non-target)");
}

double min_f0_gap_hz(std::size_t n_speakers) {
  return 0.5 * (kF0Hi - kF0Lo) / static_cast<double>(n_speakers);
}

std::vector<SpeakerProfile> make_speakers(std::uint64_t seed, std::size_t n_speakers) {
  Rng rng(derive_seed(seed, 0xC0FFEE));
  std::vector<std::size_t> slots(n_speakers);
  for (std::size_t i = 0; i < n_speakers; ++i) slots[i] = i;
  for (std::size_t i = n_speakers; i > 1; --i) std::swap(slots[i - 1], slots[rng.index(i)]);

  const double width = (kF0Hi - kF0Lo) / static_cast<double>(n_speakers);
  std::vector<SpeakerProfile> out(n_speakers);
  for (std::size_t s = 0; s < n_speakers; ++s) {
    auto& p = out[s];
    p.f0_hz = kF0Lo + (static_cast<double>(slots[s]) + 0.25 + 0.5 * rng.uniform()) * width;
    const double tilt = rng.uniform(0.8, 1.6);
    p.harmonic_gains.resize(64);
    for (std::size_t h = 0; h < p.harmonic_gains.size(); ++h) {
      p.harmonic_gains[h] = std::pow(static_cast<double>(h + 1), -tilt) * std::exp(0.3 * rng.normal());
    }
    p.formant1_hz = rng.uniform(300.0, 900.0);
    p.formant1_bw_hz = rng.uniform(60.0, 150.0);
    p.formant2_hz = rng.uniform(1000.0, 2600.0);
    p.formant2_bw_hz = rng.uniform(80.0, 200.0);
    p.noise_level = rng.uniform(0.01, 0.05);
  }
  return out;
}

Waveform synth_utterance(const SpeakerProfile& spk, std::uint64_t seed, double duration_s,
                         int sample_rate) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  if (n == 0) throw InvalidArgument("utterance duration rounds to zero samples");
  const double sr = sample_rate;
  const double two_pi = 2.0 * std::numbers::pi;

  const double f0 = spk.f0_hz * (1.0 + 0.03 * rng.normal());
  const double vib_rate = rng.uniform(2.0, 5.0);
  const double vib_phase = rng.uniform(0.0, two_pi);
  const double drift_rate = rng.uniform(0.3, 1.0);
  const double drift_phase = rng.uniform(0.0, two_pi);
  const double syl_rate = rng.uniform(3.0, 5.0);
  const double syl_phase = rng.uniform(0.0, two_pi);
  const double f1 = spk.formant1_hz * (1.0 + 0.03 * rng.normal());
  const double f2 = spk.formant2_hz * (1.0 + 0.03 * rng.normal());

  const std::size_t n_harm = spk.harmonic_gains.size();
  std::vector<double> phase(n_harm);
  for (auto& ph : phase) ph = rng.uniform(0.0, two_pi);

  std::vector<double> x(n);
  double base_phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    const double f = f0 * (1.0 + 0.05 * std::sin(two_pi * vib_rate * t + vib_phase) +
                           0.04 * std::sin(two_pi * drift_rate * t + drift_phase));
    base_phase += two_pi * f / sr;
    double v = 0.0;
    for (std::size_t h = 0; h < n_harm; ++h) {
      const double hf = f * static_cast<double>(h + 1);
      if (hf >= 0.45 * sr) break;
      v += spk.harmonic_gains[h] * std::sin(static_cast<double>(h + 1) * base_phase + phase[h]);
    }
    // Syllables separated by near-silent pauses on half of each cycle.
    const double env =
        kEnvFloor + (1.0 - kEnvFloor) * std::pow(std::max(0.0, std::sin(two_pi * syl_rate * t + syl_phase)), 2);
    x[i] = env * (v + spk.noise_level * rng.normal());
  }
  std::vector<double> a = x;
  std::vector<double> b = x;
  resonate(a, f1, spk.formant1_bw_hz, sample_rate);
  resonate(b, f2, spk.formant2_bw_hz, sample_rate);
  for (std::size_t i = 0; i < n; ++i) x[i] = a[i] + 0.7 * b[i] + 0.05 * x[i];

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0)) throw NumericalError("synthesized utterance is silent");
  for (double& v : x) {
    v = attack::quantize_pcm16(v * kPeak / peak + kFloor * rng.normal());
  }
  return Waveform(std::move(x), sample_rate);
}

Corpus synth_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  Corpus c;
  c.speakers = make_speakers(cfg.seed, cfg.n_speakers);
  for (std::size_t s = 0; s < cfg.n_speakers; ++s) {
    for (std::size_t u = cfg.first_utterance; u < cfg.first_utterance + cfg.utts_per_speaker; ++u) {
      Utterance utt;
      utt.id = utterance_id(s, u);
      utt.speaker = speaker_id(s);
      c.utterances.push_back(std::move(utt));
    }
  }
  for_each_index(c.utterances.size(), Execution::kParallel, [&](std::size_t i) {
    const std::size_t s = i / cfg.utts_per_speaker;
    const std::size_t u = cfg.first_utterance + i % cfg.utts_per_speaker;
    c.utterances[i].audio = synth_utterance(c.speakers[s], derive_seed(cfg.seed, s * 1000003 + u),
                                            cfg.duration_s, cfg.sample_rate);
  });
  if (cfg.n_trials > 0) c.trials = make_trials(c.utterances, cfg.n_trials, derive_seed(cfg.seed, 77));
  return c;
}

std::vector<Trial> make_trials(const std::vector<Utterance>& utts, std::size_t n_trials,
                               std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> same;
  std::vector<std::pair<std::size_t, std::size_t>> diff;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    for (std::size_t j = i + 1; j < utts.size(); ++j) {
      (utts[i].speaker == utts[j].speaker ? same : diff).emplace_back(i, j);
    }
  }
  const std::size_t half = n_trials / 2;
  if (same.size() < half || diff.size() < half) {
    throw InvalidArgument("corpus too small for " + std::to_string(n_trials) + " balanced trials (" +
                          std::to_string(same.size()) + " target pairs available)");
  }
  Rng rng(seed);
  auto take = [&](std::vector<std::pair<std::size_t, std::size_t>>& pool, bool target,
                  std::vector<Trial>& out) {
    for (std::size_t k = 0; k < half; ++k) {
      std::swap(pool[k], pool[k + rng.index(pool.size() - k)]);
      auto [a, b] = pool[k];
      if (rng.index(2) == 1) std::swap(a, b);
      out.push_back({target, utts[a].id, utts[b].id});
    }
  };
  std::vector<Trial> trials;
  trials.reserve(2 * half);
  take(same, true, trials);
  take(diff, false, trials);
  // Interleave deterministically so list order does not group by label.
  for (std::size_t i = trials.size(); i > 1; --i) std::swap(trials[i - 1], trials[rng.index(i)]);
  return trials;
}

void write_corpus(const std::filesystem::path& root, const Corpus& corpus) {
  std::filesystem::create_directories(root);
  std::ofstream utt2spk(root / "utt2spk.txt", std::ios::binary);
  if (!utt2spk) throw DataError("cannot write " + (root / "utt2spk.txt").string());
  for (const auto& u : corpus.utterances) {
    const auto path = root / u.id;
    std::filesystem::create_directories(path.parent_path());
    wav::save_wav(path, u.audio);
    utt2spk << u.id << ' ' << u.speaker << '\n';
  }
  if (!corpus.trials.empty()) write_trials(root / "trials.txt", corpus.trials);
}

std::vector<Utterance> load_labeled(const std::filesystem::path& root,
                                    const std::filesystem::path& utt2spk) {
  std::ifstream in(utt2spk);
  if (!in) throw DataError("cannot open speaker list " + utt2spk.string());
  std::vector<Utterance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    Utterance u;
    if (!(fields >> u.id)) continue;
    if (!(fields >> u.speaker)) {
      throw DataError(utt2spk.string() + ":" + std::to_string(line_no) + ": expected '<path> <speaker>'");
    }
    u.audio = wav::load_wav(root / u.id);
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace resyndet::corpus
