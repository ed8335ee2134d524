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

#include "resyndet/waveform.hpp"

namespace resyndet {

/// Adds seeded white Gaussian noise at `snr_db` relative to the mean power of
/// x, then clamps to [-1, 1]. The noise is rescaled to its exact target
/// power, so the pre-clamp SNR equals snr_db. +infinity returns x unchanged.
Waveform add_gaussian_noise(const Waveform& x, double snr_db, std::uint64_t seed);

/// 10 log10(P_signal / P_(noisy - signal)); +infinity when they are equal.
double measured_snr_db(const Waveform& signal, const Waveform& noisy);

}  // namespace resyndet
