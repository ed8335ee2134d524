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

#include "resyndet/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "resyndet/error.hpp"
#include "resyndet/fft.hpp"

namespace resyndet {

void clamp_unit(std::vector<double>& samples) {
  for (double& s : samples) s = std::clamp(s, -1.0, 1.0);
}

namespace dsp {

std::vector<double> make_window(WindowKind kind, std::size_t len) {
  std::vector<double> w(len, 1.0);
  const double two_pi_over_n = 2.0 * std::numbers::pi / static_cast<double>(len);
  for (std::size_t n = 0; n < len; ++n) {
    const double c = std::cos(two_pi_over_n * static_cast<double>(n));
    switch (kind) {
      case WindowKind::kHamming: w[n] = 0.54 - 0.46 * c; break;
      case WindowKind::kHann: w[n] = 0.5 - 0.5 * c; break;
      case WindowKind::kRectangular: break;
    }
  }
  return w;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

StftConfig StftConfig::make(std::size_t window_len, std::size_t hop_len, WindowKind kind,
                            bool center_pad) {
  StftConfig cfg;
  cfg.window_len = window_len;
  cfg.hop_len = hop_len;
  cfg.fft_len = next_pow2(window_len);
  cfg.window_kind = kind;
  cfg.center_pad = center_pad;
  cfg.validate();
  return cfg;
}

StftConfig StftConfig::from_ms(double window_ms, double hop_ms, int sample_rate, WindowKind kind) {
  if (sample_rate <= 0) throw InvalidArgument("sample rate must be positive");
  const auto win = static_cast<std::size_t>(std::lround(window_ms * 1e-3 * sample_rate));
  const auto hop = static_cast<std::size_t>(std::lround(hop_ms * 1e-3 * sample_rate));
  return make(win, hop, kind);
}

std::size_t StftConfig::frames_for(std::size_t n_samples) const {
  if (center_pad) return 1 + n_samples / hop_len;
  if (n_samples < window_len) return 0;
  return 1 + (n_samples - window_len) / hop_len;
}

void StftConfig::validate() const {
  if (hop_len == 0) throw InvalidArgument("STFT hop_len must be positive");
  if (hop_len > window_len) throw InvalidArgument("STFT hop_len exceeds window_len");
  if (window_len > fft_len) throw InvalidArgument("STFT window_len exceeds fft_len");
  if (fft_len < 2) throw InvalidArgument("STFT fft_len must be at least 2");
}

double cola_deviation(const StftConfig& cfg) {
  cfg.validate();
  const auto w = make_window(cfg.window_kind, cfg.window_len);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t n = 0; n < cfg.hop_len; ++n) {
    double sum = 0.0;
    for (std::size_t j = n; j < cfg.window_len; j += cfg.hop_len) sum += w[j] * w[j];
    lo = std::min(lo, sum);
    hi = std::max(hi, sum);
  }
  if (hi <= 0.0) return std::numeric_limits<double>::infinity();
  return (hi - lo) / hi;
}

bool is_cola(const StftConfig& cfg) { return cola_deviation(cfg) <= 1e-6; }

std::size_t reflect_index(long long i, std::size_t len) {
  if (len == 1) return 0;
  const long long n = static_cast<long long>(len);
  const long long period = 2 * (n - 1);
  long long r = i % period;
  if (r < 0) r += period;
  if (r >= n) r = period - r;
  return static_cast<std::size_t>(r);
}

namespace {

// Framing, windowing and FFT state shared by the analysis and synthesis
// passes. Buffers are reused across calls, so one kernel must not be used
// from several threads at once.
class StftKernel {
 public:
  explicit StftKernel(const StftConfig& cfg)
      : cfg_(cfg), window_(make_window(cfg.window_kind, cfg.window_len)), fft_(cfg.fft_len) {}

  const StftConfig& config() const noexcept { return cfg_; }

  // Fills `out` (n_frames x n_bins) with the STFT of x.
  void analyze(std::span<const double> x, std::size_t n_frames,
               std::span<std::complex<double>> out, Execution exec) {
    const std::size_t n_bins = cfg_.n_bins();
    const long long pad = static_cast<long long>(cfg_.pad());
    const auto len = static_cast<long long>(x.size());
    auto frame_into = [&](std::size_t t, std::vector<double>& frame) {
      frame.assign(cfg_.fft_len, 0.0);
      const long long start = static_cast<long long>(t * cfg_.hop_len) - pad;
      for (std::size_t n = 0; n < cfg_.window_len; ++n) {
        const long long idx = start + static_cast<long long>(n);
        double v = 0.0;
        if (idx >= 0 && idx < len) {
          v = x[static_cast<std::size_t>(idx)];
        } else if (cfg_.center_pad) {
          v = x[reflect_index(idx, x.size())];
        }
        frame[n] = window_[n] * v;
      }
      fft_.forward(frame, out.subspan(t * n_bins, n_bins));
    };
    if (exec == Execution::kSerial) {
      for (std::size_t t = 0; t < n_frames; ++t) frame_into(t, frame_);
    } else {
      for_each_index(n_frames, exec, [&](std::size_t t) {
        thread_local std::vector<double> frame;
        frame_into(t, frame);
      });
    }
  }

  // Weighted overlap-add with squared-window normalization; writes
  // n_frames * hop_len samples (center padding removed) into y.
  void synthesize(std::span<const std::complex<double>> spec, std::size_t n_frames,
                  std::vector<double>& y, Execution exec) {
    const std::size_t n_bins = cfg_.n_bins();
    const std::size_t win = cfg_.window_len;
    const double inv_n = 1.0 / static_cast<double>(cfg_.fft_len);
    frames_.resize(n_frames * win);
    auto inverse_into = [&](std::size_t t, std::vector<double>& buf) {
      buf.resize(cfg_.fft_len);
      fft_.inverse(spec.subspan(t * n_bins, n_bins), buf);
      double* out = frames_.data() + t * win;
      for (std::size_t n = 0; n < win; ++n) out[n] = buf[n] * inv_n * window_[n];
    };
    if (exec == Execution::kSerial) {
      for (std::size_t t = 0; t < n_frames; ++t) inverse_into(t, frame_);
    } else {
      for_each_index(n_frames, exec, [&](std::size_t t) {
        thread_local std::vector<double> buf;
        inverse_into(t, buf);
      });
    }

    const std::size_t padded_len = (n_frames - 1) * cfg_.hop_len + win;
    if (norm_frames_ != n_frames) {
      norm_.assign(padded_len, 0.0);
      for (std::size_t t = 0; t < n_frames; ++t) {
        const std::size_t off = t * cfg_.hop_len;
        for (std::size_t n = 0; n < win; ++n) norm_[off + n] += window_[n] * window_[n];
      }
      norm_frames_ = n_frames;
    }
    acc_.assign(padded_len, 0.0);
    for (std::size_t t = 0; t < n_frames; ++t) {
      const double* f = frames_.data() + t * win;
      double* a = acc_.data() + t * cfg_.hop_len;
      for (std::size_t n = 0; n < win; ++n) a[n] += f[n];
    }

    const std::size_t out_len = n_frames * cfg_.hop_len;
    const std::size_t pad = cfg_.pad();
    y.assign(out_len, 0.0);
    for (std::size_t i = 0; i < out_len; ++i) {
      const std::size_t j = i + pad;
      if (j < padded_len && norm_[j] > 1e-10) y[i] = acc_[j] / norm_[j];
    }
  }

 private:
  StftConfig cfg_;
  std::vector<double> window_;
  RealFft fft_;
  std::vector<double> frame_;
  std::vector<double> frames_;
  std::vector<double> acc_;
  std::vector<double> norm_;
  std::size_t norm_frames_ = 0;
};

ComplexSpectrogram empty_spectrogram(const StftConfig& cfg, std::size_t n_frames, int sample_rate) {
  ComplexSpectrogram spec;
  spec.n_frames = n_frames;
  spec.n_bins = cfg.n_bins();
  spec.values.resize(n_frames * spec.n_bins);
  spec.config = cfg;
  spec.sample_rate = sample_rate;
  return spec;
}

void require_cola(const StftConfig& cfg) {
  if (!is_cola(cfg)) {
    throw InvalidArgument("istft: window/hop pair violates constant overlap-add (deviation " +
                          std::to_string(cola_deviation(cfg)) + ")");
  }
}

}  // namespace

ComplexSpectrogram stft(const Waveform& x, const StftConfig& cfg, Execution exec) {
  if (x.empty()) throw InvalidArgument("stft: empty waveform");
  cfg.validate();
  const std::size_t n_frames = cfg.frames_for(x.size());
  if (n_frames == 0) throw InvalidArgument("stft: waveform shorter than one window");
  auto spec = empty_spectrogram(cfg, n_frames, x.sample_rate);
  StftKernel(cfg).analyze(x.samples, n_frames, spec.values, exec);
  return spec;
}

std::vector<double> istft_unclamped(const ComplexSpectrogram& spec, Execution exec) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  require_cola(cfg);
  if (spec.n_bins != cfg.n_bins() || spec.values.size() != spec.n_frames * spec.n_bins ||
      spec.n_frames == 0) {
    throw InvalidArgument("istft: spectrogram shape does not match its config");
  }
  std::vector<double> y;
  StftKernel(cfg).synthesize(spec.values, spec.n_frames, y, exec);
  return y;
}

Waveform istft(const ComplexSpectrogram& spec, Execution exec) {
  auto y = istft_unclamped(spec, exec);
  clamp_unit(y);
  return Waveform(std::move(y), spec.sample_rate);
}


MagSpectrogram magnitude(const ComplexSpectrogram& spec) {
  MagSpectrogram mag;
  mag.values.resize(static_cast<Eigen::Index>(spec.n_frames), static_cast<Eigen::Index>(spec.n_bins));
  for (std::size_t t = 0; t < spec.n_frames; ++t) {
    for (std::size_t k = 0; k < spec.n_bins; ++k) {
      mag.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = std::abs(spec.at(t, k));
    }
  }
  mag.config = spec.config;
  mag.sample_rate = spec.sample_rate;
  return mag;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(std::size_t n_mels, const StftConfig& cfg, int sr, double fmin,
                             double fmax) {
  cfg.validate();
  if (n_mels < 2) throw InvalidArgument("mel_filterbank: n_mels must be at least 2");
  if (sr <= 0) throw InvalidArgument("mel_filterbank: sample rate must be positive");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sr / 2.0)) {
    throw InvalidArgument("mel_filterbank: band [" + std::to_string(fmin) + ", " +
                          std::to_string(fmax) + "] Hz must satisfy 0 <= fmin < fmax <= " +
                          std::to_string(sr / 2.0));
  }
  const std::size_t n_bins = cfg.n_bins();
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n_mels + 1));
  }

  MelFilterbank fb;
  fb.weights = Matrix::Zero(static_cast<Eigen::Index>(n_mels), static_cast<Eigen::Index>(n_bins));
  fb.fmin = fmin;
  fb.fmax = fmax;
  fb.sample_rate = sr;
  fb.center_hz.resize(n_mels);
  const double bin_hz = static_cast<double>(sr) / static_cast<double>(cfg.fft_len);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m];
    const double c = edges[m + 1];
    const double hi = edges[m + 2];
    fb.center_hz[m] = c;
    bool any = false;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = bin_hz * static_cast<double>(k);
      double v = 0.0;
      if (f > lo && f <= c) {
        v = (f - lo) / (c - lo);
      } else if (f > c && f < hi) {
        v = (hi - f) / (hi - c);
      }
      if (v > 0.0) {
        fb.weights(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = v;
        any = true;
      }
    }
    if (!any) {
      throw InvalidArgument("mel_filterbank: filter " + std::to_string(m) +
                            " covers no FFT bin; use fewer mels or a longer FFT");
    }
  }
  return fb;
}

MelSpectrogram lin_to_mel(const MagSpectrogram& mag, const MelFilterbank& fb) {
  if (static_cast<std::size_t>(mag.values.cols()) != fb.n_bins()) {
    throw InvalidArgument("lin_to_mel: spectrogram has " + std::to_string(mag.values.cols()) +
                          " bins, filterbank expects " + std::to_string(fb.n_bins()));
  }
  MelSpectrogram mel;
  mel.values = mag.values * fb.weights.transpose();
  mel.values = mel.values.cwiseMax(0.0);
  mel.config = mag.config;
  mel.sample_rate = mag.sample_rate;
  return mel;
}

Matrix filterbank_pinv(const MelFilterbank& fb) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(fb.weights),
                                              Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  // Numerical rank at sqrt(eps) relative; anything below cannot be inverted to 1e-8.
  const double tol = sv(0) * std::sqrt(std::numeric_limits<double>::epsilon());
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > tol ? 1 : 0;
  if (rank < fb.weights.rows()) {
    throw NumericalError("mel filterbank is rank deficient (rank " + std::to_string(rank) + " < " +
                         std::to_string(fb.weights.rows()) + " mels)");
  }
  const Eigen::VectorXd inv_sv = sv.cwiseInverse();
  return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
}

MagSpectrogram mel_to_linear_pinv(const MelSpectrogram& mel, const MelFilterbank& fb) {
  return mel_to_linear_pinv(mel, fb, filterbank_pinv(fb));
}

MagSpectrogram mel_to_linear_pinv(const MelSpectrogram& mel, const MelFilterbank& fb,
                                  const Matrix& pinv) {
  if (static_cast<std::size_t>(mel.values.cols()) != fb.n_mels()) {
    throw InvalidArgument("mel_to_linear_pinv: mel dimension " + std::to_string(mel.values.cols()) +
                          " does not match filterbank rows " + std::to_string(fb.n_mels()));
  }
  if (pinv.rows() != fb.weights.cols() || pinv.cols() != fb.weights.rows()) {
    throw InvalidArgument("mel_to_linear_pinv: pseudo-inverse shape mismatch");
  }
  MagSpectrogram mag;
  mag.values = (mel.values * pinv.transpose()).cwiseMax(0.0);
  mag.config = mel.config;
  mag.sample_rate = mel.sample_rate;
  return mag;
}

namespace {

double convergence_of(std::span<const std::complex<double>> spec, const Matrix& target,
                      double target_norm) {
  const double* m = target.data();
  double num = 0.0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double diff = std::sqrt(std::norm(spec[i])) - m[i];
    num += diff * diff;
  }
  return target_norm > 0.0 ? std::sqrt(num) / target_norm : 0.0;
}

}  // namespace

double spectral_convergence(const Waveform& x, const MagSpectrogram& target) {
  const auto n_frames = static_cast<std::size_t>(target.values.rows());
  if (x.empty() || target.config.frames_for(x.size()) < n_frames) {
    throw InvalidArgument("spectral_convergence: waveform too short for target spectrogram");
  }
  auto spec = empty_spectrogram(target.config, n_frames, x.sample_rate);
  StftKernel(target.config).analyze(x.samples, n_frames, spec.values, Execution::kSerial);
  return convergence_of(spec.values, target.values, target.values.norm());
}

GriffinLimResult griffin_lim(const MagSpectrogram& mag, std::size_t n_iter, Execution exec) {
  if (n_iter < 1) throw InvalidArgument("griffin_lim: n_iter must be at least 1");
  if ((mag.values.array() < 0.0).any() || !mag.values.allFinite()) {
    throw InvalidArgument("griffin_lim: magnitudes must be finite and non-negative");
  }
  const StftConfig& cfg = mag.config;
  cfg.validate();
  require_cola(cfg);
  const auto n_frames = static_cast<std::size_t>(mag.values.rows());
  const auto n_bins = static_cast<std::size_t>(mag.values.cols());
  if (n_bins != cfg.n_bins() || n_frames == 0) {
    throw InvalidArgument("griffin_lim: magnitude shape does not match its config");
  }
  const double target_norm = mag.values.norm();
  const double* target = mag.values.data();  // row-major, same layout as the spectrogram

  StftKernel kernel(cfg);
  std::vector<std::complex<double>> spec(n_frames * n_bins);
  std::vector<std::complex<double>> rebuilt(n_frames * n_bins);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] = {target[i], 0.0};

  GriffinLimResult result;
  result.errors.reserve(n_iter);
  std::vector<double> x;
  for (std::size_t it = 0; it < n_iter; ++it) {
    kernel.synthesize(spec, n_frames, x, exec);
    kernel.analyze(x, n_frames, rebuilt, exec);
    result.errors.push_back(convergence_of(rebuilt, mag.values, target_norm));
    if (it + 1 == n_iter) break;
    // Keep the target magnitude, take the phase of the consistent estimate.
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const double r = std::sqrt(std::norm(rebuilt[i]));
      spec[i] = r > 0.0 ? rebuilt[i] * (target[i] / r) : std::complex<double>(target[i], 0.0);
    }
  }
  // The reported final error describes the emitted (clamped) waveform.
  if (std::any_of(x.begin(), x.end(), [](double v) { return std::abs(v) > 1.0; })) {
    clamp_unit(x);
    kernel.analyze(x, n_frames, rebuilt, exec);
    if (!result.errors.empty()) result.errors.back() = convergence_of(rebuilt, mag.values, target_norm);
  }
  result.waveform = Waveform(std::move(x), mag.sample_rate);
  return result;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("gaussian_filter: sigma must be positive and finite");
  }
  const auto radius = static_cast<std::size_t>(std::ceil(4.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(radius);
    k[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

Waveform gaussian_filter(const Waveform& x, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  if (x.empty()) throw InvalidArgument("gaussian_filter: empty waveform");
  const long long radius = static_cast<long long>(kernel.size() / 2);
  const auto n = x.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long long j = -radius; j <= radius; ++j) {
      const long long idx = static_cast<long long>(i) + j;
      const double v = (idx >= 0 && idx < static_cast<long long>(n))
                           ? x.samples[static_cast<std::size_t>(idx)]
                           : x.samples[reflect_index(idx, n)];
      acc += kernel[static_cast<std::size_t>(j + radius)] * v;
    }
    y[i] = acc;
  }
  return Waveform(std::move(y), x.sample_rate);
}

}  // namespace dsp
}  // namespace resyndet
