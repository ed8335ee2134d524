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

// Serial reference versus OpenMP kernels. Run with OMP_NUM_THREADS set to
// the number of cores; on a single core the two paths should be level.

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "resyndet/asv.hpp"
#include "resyndet/attack.hpp"
#include "resyndet/dsp.hpp"
#include "resyndet/parallel.hpp"
#include "resyndet/random.hpp"
#include "resyndet/resynth.hpp"

using namespace resyndet;

namespace {

Waveform tone(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  const double f0 = rng.uniform(100.0, 220.0);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / 16000.0;
    double v = 0.0;
    for (int h = 1; h <= 8; ++h) v += std::sin(2.0 * std::numbers::pi * f0 * h * t) / h;
    x[i] = 0.2 * v + 0.01 * rng.normal();
  }
  return Waveform(std::move(x), 16000);
}

Execution exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::kSerial : Execution::kParallel;
}

asv::AsvModel toy_model() {
  asv::AsvModel m;
  Rng rng(3);
  m.w1 = asv::Matrix(32, 64);
  m.b1 = asv::Vector(32);
  m.w2 = asv::Matrix(16, 32);
  for (Eigen::Index i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = 0.02 * rng.normal();
  for (Eigen::Index i = 0; i < m.b1.size(); ++i) m.b1[i] = 0.5 * rng.normal();
  for (Eigen::Index i = 0; i < m.w2.size(); ++i) m.w2.data()[i] = rng.normal() / std::sqrt(32.0);
  return m;
}

void BM_Stft(benchmark::State& state) {
  const auto x = tone(1, 32000);
  const auto cfg = resynth::default_gl_stft();
  for (auto _ : state) benchmark::DoNotOptimize(dsp::stft(x, cfg, exec_of(state)));
}

void BM_Istft(benchmark::State& state) {
  const auto spec = dsp::stft(tone(2, 32000), resynth::default_gl_stft());
  for (auto _ : state) benchmark::DoNotOptimize(dsp::istft_unclamped(spec, exec_of(state)));
}

void BM_GriffinLim(benchmark::State& state) {
  const auto mag = dsp::magnitude(dsp::stft(tone(3, 16000), resynth::default_gl_stft()));
  for (auto _ : state) benchmark::DoNotOptimize(dsp::griffin_lim(mag, 20, exec_of(state)));
}

void BM_AttackSweep(benchmark::State& state) {
  const auto m = toy_model();
  std::vector<Waveform> audio;
  for (std::uint64_t s = 0; s < 9; ++s) audio.push_back(tone(10 + s, 8000));
  std::vector<attack::SweepTrial> trials;
  for (std::size_t i = 0; i + 1 < audio.size(); ++i) trials.push_back({&audio[i], &audio[i + 1], i % 2 == 0});
  for (auto _ : state) {
    benchmark::DoNotOptimize(attack::attack_success_sweep(trials, m, {0, 5, 10}, 1.0, exec_of(state)));
  }
}

void BM_ResynthBatch(benchmark::State& state) {
  std::vector<Waveform> in;
  for (std::uint64_t s = 0; s < 8; ++s) in.push_back(tone(30 + s, 8000));
  resynth::GriffinLimMel mel;
  mel.n_iter = 10;
  const resynth::Resynthesizer r(mel);
  for (auto _ : state) benchmark::DoNotOptimize(r.run_batch(in, exec_of(state)));
}

}  // namespace

// Argument 0 is the serial reference, 1 the OpenMP path.
BENCHMARK(BM_Stft)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Istft)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GriffinLim)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AttackSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResynthBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
