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

#include "resyndet/attack.hpp"

#include <algorithm>
#include <cmath>

#include "resyndet/error.hpp"

namespace resyndet::attack {

std::size_t AttackConfig::iterations() const {
  validate();
  // The slack keeps exact ratios such as 0.3 / 0.1 from rounding up a step.
  return static_cast<std::size_t>(std::ceil(epsilon_int / alpha_int - 1e-9));
}

void AttackConfig::validate() const {
  if (!(epsilon_int >= 0.0) || !std::isfinite(epsilon_int)) {
    throw InvalidArgument("attack epsilon must be finite and >= 0");
  }
  if (!(alpha_int > 0.0) || !std::isfinite(alpha_int)) {
    throw InvalidArgument("attack alpha must be finite and > 0");
  }
}

double quantize_pcm16(double x) {
  const double scaled = std::round(x * 32768.0);  // std::round rounds half away from zero
  return std::clamp(scaled, -32768.0, 32767.0) / 32768.0;
}

AttackResult bim_attack(const Waveform& test, const asv::Embedding& enroll,
                        const asv::AsvModel& model, const AttackConfig& cfg) {
  const std::size_t k_max = cfg.iterations();
  const double eps = cfg.epsilon();
  const double step = cfg.alpha() * (cfg.is_target ? -1.0 : 1.0);

  const auto n = test.size();
  std::vector<double> lo(n);
  std::vector<double> hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = std::max(test.samples[i] - eps, -1.0);
    hi[i] = std::min(test.samples[i] + eps, 1.0);
  }

  AttackResult result;
  result.adversarial = test;
  auto& x = result.adversarial.samples;
  for (std::size_t k = 0; k < k_max; ++k) {
    const auto g = asv::score_gradient(result.adversarial, enroll, model);
    for (std::size_t i = 0; i < n; ++i) {
      const double sgn = g.grad[i] > 0.0 ? 1.0 : (g.grad[i] < 0.0 ? -1.0 : 0.0);
      x[i] = std::clamp(x[i] + step * sgn, lo[i], hi[i]);
    }
    ++result.iterations;
  }
  if (cfg.quantize_pcm16) {
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(quantize_pcm16(x[i]), lo[i], hi[i]);
  }
  return result;
}

AttackResult bim_attack(const Waveform& test, const Waveform& enroll, const asv::AsvModel& model,
                        const AttackConfig& cfg) {
  cfg.validate();
  return bim_attack(test, asv::embed_waveform(enroll, model), model, cfg);
}

SweepResult attack_success_sweep(const std::vector<SweepTrial>& trials, const asv::AsvModel& model,
                                 const std::vector<double>& epsilons_int, double alpha_int,
                                 Execution exec) {
  if (epsilons_int.empty()) throw InvalidArgument("epsilon list must not be empty");
  SweepResult out;
  out.epsilons = epsilons_int;
  out.scores.assign(epsilons_int.size(), std::vector<double>(trials.size()));
  out.linf.assign(epsilons_int.size(), std::vector<double>(trials.size()));
  for_each_index(trials.size(), exec, [&](std::size_t i) {
    const auto& trial = trials[i];
    const auto enroll = asv::embed_waveform(*trial.enroll, model);
    for (std::size_t e = 0; e < epsilons_int.size(); ++e) {
      AttackConfig cfg;
      cfg.epsilon_int = epsilons_int[e];
      cfg.alpha_int = alpha_int;
      cfg.is_target = trial.is_target;
      const auto adv = bim_attack(*trial.test, enroll, model, cfg);
      out.scores[e][i] = asv::cosine_score(asv::embed_waveform(adv.adversarial, model), enroll);
      double linf = 0.0;
      for (std::size_t s = 0; s < adv.adversarial.size(); ++s) {
        linf = std::max(linf, std::abs(adv.adversarial.samples[s] - trial.test->samples[s]));
      }
      out.linf[e][i] = linf;
    }
  });
  return out;
}

}  // namespace resyndet::attack
