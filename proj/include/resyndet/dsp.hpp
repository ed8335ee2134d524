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

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "resyndet/parallel.hpp"
#include "resyndet/waveform.hpp"

namespace resyndet::dsp {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class WindowKind { kHamming, kHann, kRectangular };

/// Periodic window of the given length (DFT-even, so Hann/Hamming satisfy
/// constant overlap-add at hop = len/4 for the squared window).
std::vector<double> make_window(WindowKind kind, std::size_t len);

/// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

struct StftConfig {
  std::size_t window_len = 400;
  std::size_t hop_len = 160;
  std::size_t fft_len = 512;
  WindowKind window_kind = WindowKind::kHamming;
  bool center_pad = true;

  /// Builds a config with fft_len = next_pow2(window_len).
  static StftConfig make(std::size_t window_len, std::size_t hop_len,
                         WindowKind kind = WindowKind::kHamming, bool center_pad = true);
  /// Window and hop given in milliseconds at a sample rate.
  static StftConfig from_ms(double window_ms, double hop_ms, int sample_rate,
                            WindowKind kind = WindowKind::kHamming);

  std::size_t n_bins() const noexcept { return fft_len / 2 + 1; }
  std::size_t pad() const noexcept { return center_pad ? window_len / 2 : 0; }
  std::size_t frames_for(std::size_t n_samples) const;

  /// Throws InvalidArgument unless 0 < hop <= window <= fft.
  void validate() const;

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

/// Largest relative deviation (max - min) / max of the overlapped squared
/// window sum_t w^2(n - t*hop) over one hop period in the steady state.
double cola_deviation(const StftConfig& cfg);
/// True when cola_deviation(cfg) <= 1e-6.
bool is_cola(const StftConfig& cfg);

struct ComplexSpectrogram {
  std::size_t n_frames = 0;
  std::size_t n_bins = 0;
  std::vector<std::complex<double>> values;  // row-major n_frames x n_bins
  StftConfig config;
  int sample_rate = kDefaultSampleRate;

  std::complex<double>& at(std::size_t t, std::size_t k) { return values[t * n_bins + k]; }
  const std::complex<double>& at(std::size_t t, std::size_t k) const { return values[t * n_bins + k]; }
};

/// Non-negative magnitude spectrogram, n_frames x n_bins.
struct MagSpectrogram {
  Matrix values;
  StftConfig config;
  int sample_rate = kDefaultSampleRate;
};

/// Non-negative mel spectrogram, n_frames x n_mels.
struct MelSpectrogram {
  Matrix values;
  StftConfig config;
  int sample_rate = kDefaultSampleRate;
};

struct MelFilterbank {
  Matrix weights;  // n_mels x n_bins
  double fmin = 0.0;
  double fmax = 0.0;
  int sample_rate = kDefaultSampleRate;
  std::vector<double> center_hz;

  std::size_t n_mels() const noexcept { return static_cast<std::size_t>(weights.rows()); }
  std::size_t n_bins() const noexcept { return static_cast<std::size_t>(weights.cols()); }
};

/// Maps a possibly out-of-range index into [0, len) by mirror reflection
/// without repeating the edge sample (numpy "reflect" convention).
std::size_t reflect_index(long long i, std::size_t len);

ComplexSpectrogram stft(const Waveform& x, const StftConfig& cfg,
                        Execution exec = Execution::kParallel);

/// Weighted overlap-add inverse with squared-window normalization, no
/// clamping. Length n_frames * hop_len after removing the center padding.
std::vector<double> istft_unclamped(const ComplexSpectrogram& spec,
                                    Execution exec = Execution::kParallel);
/// istft_unclamped followed by clamping to [-1, 1].
Waveform istft(const ComplexSpectrogram& spec, Execution exec = Execution::kParallel);

MagSpectrogram magnitude(const ComplexSpectrogram& spec);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// HTK-scale triangular filters with unit peak, evaluated at the FFT bin
/// center frequencies of `cfg` at sample rate `sr`.
MelFilterbank mel_filterbank(std::size_t n_mels, const StftConfig& cfg, int sr, double fmin,
                             double fmax);

MelSpectrogram lin_to_mel(const MagSpectrogram& mag, const MelFilterbank& fb);

/// Moore-Penrose pseudo-inverse of the filterbank, n_bins x n_mels.
/// Throws NumericalError when the filterbank is rank deficient.
Matrix filterbank_pinv(const MelFilterbank& fb);

MagSpectrogram mel_to_linear_pinv(const MelSpectrogram& mel, const MelFilterbank& fb);
/// Same, with a precomputed pseudo-inverse from filterbank_pinv().
MagSpectrogram mel_to_linear_pinv(const MelSpectrogram& mel, const MelFilterbank& fb,
                                  const Matrix& pinv);

/// ||  |stft(x)| - target  ||_F / || target ||_F, or 0 if the target is zero.
double spectral_convergence(const Waveform& x, const MagSpectrogram& target);

struct GriffinLimResult {
  Waveform waveform;
  /// Spectral convergence after each iteration; size n_iter.
  std::vector<double> errors;
};

inline constexpr std::size_t kDefaultGriffinLimIterations = 100;

/// Alternating projections from zero initial phase. The returned waveform
/// has length n_frames * hop_len and is clamped to [-1, 1].
GriffinLimResult griffin_lim(const MagSpectrogram& mag,
                             std::size_t n_iter = kDefaultGriffinLimIterations,
                             Execution exec = Execution::kSerial);

/// Normalized Gaussian kernel truncated at radius ceil(4 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Same-length convolution with gaussian_kernel(sigma), reflect padding.
Waveform gaussian_filter(const Waveform& x, double sigma);

}  // namespace resyndet::dsp
