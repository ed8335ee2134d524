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

#include "resyndet/noise.hpp"

#include <cmath>
#include <limits>

#include "resyndet/error.hpp"
#include "resyndet/random.hpp"

namespace resyndet {

Waveform add_gaussian_noise(const Waveform& x, double snr_db, std::uint64_t seed) {
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw InvalidArgument("SNR must be a number greater than -infinity");
  }
  if (snr_db == std::numeric_limits<double>::infinity() || x.empty()) return x;

  double signal_power = 0.0;
  for (double v : x.samples) signal_power += v * v;
  signal_power /= static_cast<double>(x.size());

  Rng rng(seed);
  std::vector<double> noise(x.size());
  double noise_power = 0.0;
  for (double& v : noise) {
    v = rng.normal();
    noise_power += v * v;
  }
  noise_power /= static_cast<double>(x.size());

  const double target_power = signal_power / std::pow(10.0, snr_db / 10.0);
  const double gain = noise_power > 0.0 ? std::sqrt(target_power / noise_power) : 0.0;
  Waveform y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y.samples[i] += gain * noise[i];
  clamp_unit(y.samples);
  return y;
}

double measured_snr_db(const Waveform& signal, const Waveform& noisy) {
  if (signal.size() != noisy.size()) throw InvalidArgument("SNR measurement needs equal lengths");
  double ps = 0.0;
  double pn = 0.0;
  for (std::size_t i = 0; i < signal.size(); ++i) {
    const double d = noisy.samples[i] - signal.samples[i];
    ps += signal.samples[i] * signal.samples[i];
    pn += d * d;
  }
  if (pn == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ps / pn);
}

}  // namespace resyndet
