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

#include <cstddef>
#include <vector>

#include "resyndet/asv.hpp"
#include "resyndet/parallel.hpp"
#include "resyndet/waveform.hpp"

namespace resyndet::attack {

/// One 16-bit PCM step in normalized amplitude.
inline constexpr double kPcm16Unit = 1.0 / 32768.0;

/// Basic iterative method settings. Budget and step are given in 16-bit PCM
/// amplitude units (epsilon_int = 5 means 5/32768 in normalized amplitude).
struct AttackConfig {
  double epsilon_int = 5.0;
  double alpha_int = 1.0;
  /// true for target trials: the attack lowers the score; false raises it.
  bool is_target = false;
  /// Round the final iterate onto the PCM16 grid.
  bool quantize_pcm16 = false;

  double epsilon() const noexcept { return epsilon_int * kPcm16Unit; }
  double alpha() const noexcept { return alpha_int * kPcm16Unit; }
  /// K = ceil(epsilon / alpha).
  std::size_t iterations() const;
  void validate() const;
};

struct AttackResult {
  Waveform adversarial;
  /// Number of gradient steps actually executed.
  std::size_t iterations = 0;
};

/// x <- clip(x + alpha * (-1)^is_tgt * sign(grad s)), K times. The clip keeps
/// every sample inside the epsilon ball around the original and in [-1, 1].
AttackResult bim_attack(const Waveform& test, const Waveform& enroll, const asv::AsvModel& model,
                        const AttackConfig& cfg);
AttackResult bim_attack(const Waveform& test, const asv::Embedding& enroll,
                        const asv::AsvModel& model, const AttackConfig& cfg);

/// Rounds onto the PCM16 grid (half away from zero), range [-32768, 32767].
double quantize_pcm16(double x);

struct SweepTrial {
  const Waveform* test = nullptr;
  const Waveform* enroll = nullptr;
  bool is_target = false;
};

/// scores[e][i] is the score of trial i after attacking with epsilons[e];
/// target trials are attacked downwards, non-target trials upwards.
struct SweepResult {
  std::vector<double> epsilons;
  std::vector<std::vector<double>> scores;
  std::vector<std::vector<double>> linf;  // max |x_adv - x| per trial
};

SweepResult attack_success_sweep(const std::vector<SweepTrial>& trials, const asv::AsvModel& model,
                                 const std::vector<double>& epsilons_int, double alpha_int = 1.0,
                                 Execution exec = Execution::kParallel);

}  // namespace resyndet::attack
