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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "resyndet/dsp.hpp"
#include "resyndet/error.hpp"
#include "resyndet/fft.hpp"
#include "test_support.hpp"

using namespace resyndet;
using namespace resyndet::dsp;
using resyndet::testing::noise;
using resyndet::testing::sine;
using resyndet::testing::voiced;

namespace {

double max_interior_error(const std::vector<double>& a, const std::vector<double>& b, std::size_t margin) {
  double err = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = margin; i + margin < n; ++i) err = std::max(err, std::abs(a[i] - b[i]));
  return err;
}

// Griffin-Lim written directly from the definitions with an O(N^2) DFT.
struct NaiveGriffinLim {
  StftConfig cfg;
  std::vector<double> w;
  std::vector<double> cos_t;
  std::vector<double> sin_t;

  explicit NaiveGriffinLim(const StftConfig& c) : cfg(c), w(make_window(c.window_kind, c.window_len)) {
    const std::size_t n = cfg.fft_len;
    cos_t.resize(n);
    sin_t.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
      cos_t[m] = std::cos(2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n));
      sin_t[m] = std::sin(2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n));
    }
  }

  static std::size_t reflect(long long i, std::size_t len) {
    const auto n = static_cast<long long>(len);
    if (n == 1) return 0;
    const long long period = 2 * (n - 1);
    long long j = ((i % period) + period) % period;
    if (j >= n) j = period - j;
    return static_cast<std::size_t>(j);
  }

  std::vector<std::complex<double>> analyze(const std::vector<double>& x, std::size_t n_frames) const {
    const std::size_t nb = cfg.n_bins();
    const std::size_t nfft = cfg.fft_len;
    std::vector<std::complex<double>> out(n_frames * nb);
    const auto pad = static_cast<long long>(cfg.window_len / 2);
    for (std::size_t t = 0; t < n_frames; ++t) {
      std::vector<double> frame(cfg.window_len);
      for (std::size_t n = 0; n < cfg.window_len; ++n) {
        const long long idx = static_cast<long long>(t * cfg.hop_len + n) - pad;
        frame[n] = w[n] * x[reflect(idx, x.size())];
      }
      for (std::size_t k = 0; k < nb; ++k) {
        double re = 0.0;
        double im = 0.0;
        for (std::size_t n = 0; n < cfg.window_len; ++n) {
          const std::size_t m = (k * n) % nfft;
          re += frame[n] * cos_t[m];
          im -= frame[n] * sin_t[m];
        }
        out[t * nb + k] = {re, im};
      }
    }
    return out;
  }

  std::vector<double> synthesize(const std::vector<std::complex<double>>& spec, std::size_t n_frames) const {
    const std::size_t nb = cfg.n_bins();
    const std::size_t nfft = cfg.fft_len;
    const std::size_t padded = (n_frames - 1) * cfg.hop_len + cfg.window_len;
    std::vector<double> acc(padded, 0.0);
    std::vector<double> norm(padded, 0.0);
    for (std::size_t t = 0; t < n_frames; ++t) {
      for (std::size_t n = 0; n < cfg.window_len; ++n) {
        double v = spec[t * nb].real() + spec[t * nb + nb - 1].real() * ((n % 2) ? -1.0 : 1.0);
        for (std::size_t k = 1; k + 1 < nb; ++k) {
          const std::size_t m = (k * n) % nfft;
          const auto& z = spec[t * nb + k];
          v += 2.0 * (z.real() * cos_t[m] - z.imag() * sin_t[m]);
        }
        acc[t * cfg.hop_len + n] += w[n] * v / static_cast<double>(nfft);
        norm[t * cfg.hop_len + n] += w[n] * w[n];
      }
    }
    std::vector<double> y(n_frames * cfg.hop_len, 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
      const std::size_t j = i + cfg.window_len / 2;
      if (j < padded && norm[j] > 1e-10) y[i] = acc[j] / norm[j];
    }
    return y;
  }

  std::vector<double> run(const Matrix& target, std::size_t n_iter) const {
    const auto n_frames = static_cast<std::size_t>(target.rows());
    const std::size_t nb = cfg.n_bins();
    std::vector<std::complex<double>> spec(n_frames * nb);
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] = target.data()[i];
    std::vector<double> x;
    for (std::size_t it = 0; it < n_iter; ++it) {
      x = synthesize(spec, n_frames);
      if (it + 1 == n_iter) break;
      const auto rebuilt = analyze(x, n_frames);
      for (std::size_t i = 0; i < spec.size(); ++i) {
        const double r = std::abs(rebuilt[i]);
        spec[i] = r > 0.0 ? rebuilt[i] * (target.data()[i] / r) : std::complex<double>(target.data()[i], 0.0);
      }
    }
    for (auto& v : x) v = std::clamp(v, -1.0, 1.0);
    return x;
  }
};

}  // namespace

TEST_CASE("windows are periodic and next_pow2 rounds up") {
  const auto w = make_window(WindowKind::kHann, 8);
  CHECK(w[0] == doctest::Approx(0.0));
  CHECK(w[4] == doctest::Approx(1.0));
  CHECK(w[2] == doctest::Approx(w[6]));
  CHECK(next_pow2(400) == 512);
  CHECK(next_pow2(512) == 512);
  CHECK(next_pow2(1) == 1);
  CHECK(StftConfig::from_ms(25.0, 10.0, 16000).fft_len == 512);
}

TEST_CASE("reflect_index mirrors without repeating the edge sample") {
  CHECK(reflect_index(-1, 5) == 1);
  CHECK(reflect_index(-2, 5) == 2);
  CHECK(reflect_index(5, 5) == 3);
  CHECK(reflect_index(6, 5) == 2);
  CHECK(reflect_index(3, 5) == 3);
  CHECK(reflect_index(-7, 5) == 1);
}

TEST_CASE("stft of silence is zero with 1 + floor(L/hop) frames") {
  const Waveform x(std::vector<double>(16000, 0.0), 16000);
  const auto cfg = StftConfig::make(400, 160);
  CHECK(cfg.fft_len == 512);
  const auto s = stft(x, cfg);
  CHECK(s.n_frames == 101);
  CHECK(s.n_bins == 257);
  for (const auto& z : s.values) CHECK(std::abs(z) == 0.0);
}

TEST_CASE("bin-centred sinusoid under a rectangular window concentrates in its bin") {
  auto cfg = StftConfig::make(512, 128, WindowKind::kRectangular);
  REQUIRE(cfg.fft_len == 512);
  std::vector<double> v(4096);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = std::sin(2.0 * std::numbers::pi * 62.0 * static_cast<double>(i) / 512.0);
  }
  const auto s = stft(Waveform(v, 16000), cfg);
  const auto mag = magnitude(s);
  // Frames whose support lies fully inside the signal.
  for (std::size_t t = 2; t + 2 < s.n_frames; ++t) {
    CHECK(mag.values(t, 62) == doctest::Approx(256.0).epsilon(1e-12));
    double other = 0.0;
    for (std::size_t k = 0; k < s.n_bins; ++k) {
      if (k != 62) other = std::max(other, mag.values(t, k));
    }
    CHECK(other < 1e-9);
  }
}

TEST_CASE("stft rejects empty input and zero hop") {
  CHECK_THROWS_AS(stft(Waveform({}, 16000), StftConfig::make(400, 160)), InvalidArgument);
  StftConfig bad = StftConfig::make(400, 160);
  bad.hop_len = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(stft(noise(1, 1000), bad), InvalidArgument);
  bad = StftConfig::make(400, 160);
  bad.fft_len = 256;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("COLA round trip restores interior samples") {
  const auto x = noise(3, 9000, 0.4);
  for (const auto& cfg : {StftConfig::make(400, 100, WindowKind::kHamming), StftConfig::make(512, 128, WindowKind::kHann),
                          StftConfig::make(1024, 256, WindowKind::kHann), StftConfig::make(400, 200, WindowKind::kRectangular),
                          StftConfig::make(256, 64, WindowKind::kHamming)}) {
    CAPTURE(cfg.window_len);
    CAPTURE(cfg.hop_len);
    REQUIRE(is_cola(cfg));
    const auto y = istft(stft(x, cfg));
    CHECK(y.size() == cfg.frames_for(x.size()) * cfg.hop_len);
    CHECK(max_interior_error(x.samples, y.samples, cfg.window_len) <= 1e-6);
  }
}

TEST_CASE("non-COLA configurations are refused by istft") {
  const auto cfg = StftConfig::make(400, 160, WindowKind::kHamming);
  CHECK_FALSE(is_cola(cfg));
  CHECK(cola_deviation(cfg) > 1e-6);
  const auto s = stft(noise(1, 4000), cfg);
  CHECK_THROWS_AS(istft(s), InvalidArgument);
}

TEST_CASE("istft is linear and maps zero to zero") {
  const auto cfg = StftConfig::make(400, 100);
  auto s = stft(noise(5, 5000, 0.2), cfg);
  const auto base = istft_unclamped(s);
  for (auto& z : s.values) z *= 2.0;
  const auto doubled = istft_unclamped(s);
  double err = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) err = std::max(err, std::abs(doubled[i] - 2.0 * base[i]));
  CHECK(err <= 1e-6);
  for (auto& z : s.values) z = 0.0;
  const auto zero = istft(s);
  CHECK(std::all_of(zero.samples.begin(), zero.samples.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("istft clamps only on final emission") {
  const auto cfg = StftConfig::make(400, 100);
  auto s = stft(sine(300.0, 4000, 0.9), cfg);
  for (auto& z : s.values) z *= 3.0;
  const auto raw = istft_unclamped(s);
  const auto out = istft(s);
  CHECK(*std::max_element(raw.begin(), raw.end()) > 1.0);
  CHECK(*std::max_element(out.samples.begin(), out.samples.end()) <= 1.0);
  CHECK(*std::min_element(out.samples.begin(), out.samples.end()) >= -1.0);
}

TEST_CASE("HTK mel scale and filterbank shape") {
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-12));
  CHECK(hz_to_mel(700.0) == doctest::Approx(781.17).epsilon(1e-4));
  CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5).epsilon(1e-12));

  const auto cfg = StftConfig::make(400, 160);
  const auto fb = mel_filterbank(80, cfg, 16000, 80.0, 7600.0);
  CHECK(fb.n_mels() == 80);
  CHECK(fb.n_bins() == 257);
  CHECK((fb.weights.array() >= 0.0).all());
  for (Eigen::Index m = 0; m < fb.weights.rows(); ++m) {
    CHECK(fb.weights.row(m).maxCoeff() > 0.0);
    CHECK(fb.weights.row(m).maxCoeff() <= 1.0);
  }
  for (std::size_t m = 1; m < fb.center_hz.size(); ++m) CHECK(fb.center_hz[m] > fb.center_hz[m - 1]);
}

TEST_CASE("mel filterbank rejects bad bands") {
  const auto cfg = StftConfig::make(400, 160);
  CHECK_THROWS_AS(mel_filterbank(64, cfg, 16000, 0.0, 9000.0), InvalidArgument);
  CHECK_THROWS_AS(mel_filterbank(64, cfg, 16000, 500.0, 400.0), InvalidArgument);
  CHECK_THROWS_AS(mel_filterbank(1, cfg, 16000, 0.0, 8000.0), InvalidArgument);
  CHECK_THROWS(mel_filterbank(200, StftConfig::make(64, 16), 16000, 0.0, 8000.0));
}

TEST_CASE("lin_to_mel is the matrix product") {
  const auto cfg = StftConfig::make(400, 160);
  const auto fb = mel_filterbank(64, cfg, 16000, 0.0, 8000.0);
  MagSpectrogram m;
  m.config = cfg;
  m.values = Matrix::Zero(7, 257);
  CHECK(lin_to_mel(m, fb).values.isZero(0.0));

  m.values(3, 40) = 2.5;
  const auto single = lin_to_mel(m, fb);
  for (Eigen::Index j = 0; j < 64; ++j) CHECK(single.values(3, j) == doctest::Approx(2.5 * fb.weights(j, 40)));

  Rng rng(9);
  for (Eigen::Index i = 0; i < m.values.size(); ++i) m.values.data()[i] = rng.uniform();
  const auto mel = lin_to_mel(m, fb);
  double err = 0.0;
  for (Eigen::Index t = 0; t < 7; ++t) {
    for (Eigen::Index j = 0; j < 64; ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < 257; ++k) acc += m.values(t, k) * fb.weights(j, k);
      err = std::max(err, std::abs(acc - mel.values(t, j)));
    }
  }
  CHECK(err <= 1e-12);
  CHECK((mel.values.array() >= 0.0).all());

  MagSpectrogram wrong;
  wrong.config = cfg;
  wrong.values = Matrix::Zero(2, 100);
  CHECK_THROWS_AS(lin_to_mel(wrong, fb), InvalidArgument);
}

TEST_CASE("filterbank pseudo-inverse satisfies the Penrose conditions") {
  for (const auto& [n_mels, fmin, fmax, cfg] :
       {std::tuple{64, 0.0, 8000.0, StftConfig::make(400, 160)}, std::tuple{80, 80.0, 7600.0, StftConfig::make(800, 200)}}) {
    const auto fb = mel_filterbank(static_cast<std::size_t>(n_mels), cfg, 16000, fmin, fmax);
    const Matrix& a = fb.weights;
    const Matrix p = filterbank_pinv(fb);
    auto rel = [](const Matrix& x, const Matrix& y) { return (x - y).norm() / std::max(1e-300, y.norm()); };
    CHECK(rel(a * p * a, a) <= 1e-8);
    CHECK(rel(p * a * p, p) <= 1e-8);
    CHECK(rel((a * p).transpose(), a * p) <= 1e-8);
    CHECK(rel((p * a).transpose(), p * a) <= 1e-8);
  }
}

TEST_CASE("near-singular filterbank is reported as rank deficient") {
  // 80 bands from 80 Hz over 257 bins: two low filters share almost the same support.
  const auto fb = mel_filterbank(80, StftConfig::make(400, 160), 16000, 80.0, 7600.0);
  CHECK_THROWS_AS(filterbank_pinv(fb), NumericalError);
}

TEST_CASE("mel pseudo-inverse recovers row-space magnitudes and maps zero to zero") {
  const auto cfg = StftConfig::make(400, 160);
  const auto fb = mel_filterbank(64, cfg, 16000, 0.0, 8000.0);
  Rng rng(4);
  MagSpectrogram m;
  m.config = cfg;
  // Non-negative combinations of filterbank rows lie in its row space.
  Matrix coeff(5, 64);
  for (Eigen::Index i = 0; i < coeff.size(); ++i) coeff.data()[i] = rng.uniform();
  m.values = coeff * fb.weights;
  const auto back = mel_to_linear_pinv(lin_to_mel(m, fb), fb);
  CHECK((back.values - m.values).norm() / m.values.norm() <= 1e-6);

  MelSpectrogram zero;
  zero.config = cfg;
  zero.values = Matrix::Zero(3, 64);
  CHECK(mel_to_linear_pinv(zero, fb).values.isZero(0.0));

  MelSpectrogram wrong;
  wrong.config = cfg;
  wrong.values = Matrix::Zero(3, 10);
  CHECK_THROWS_AS(mel_to_linear_pinv(wrong, fb), InvalidArgument);
}

TEST_CASE("mel pseudo-inverse output is clamped non-negative") {
  const auto cfg = StftConfig::make(400, 160);
  const auto fb = mel_filterbank(64, cfg, 16000, 0.0, 8000.0);
  const auto mag = magnitude(stft(voiced(2, 8000), cfg));
  const auto lin = mel_to_linear_pinv(lin_to_mel(mag, fb), fb);
  CHECK((lin.values.array() >= 0.0).all());
}

TEST_CASE("Griffin-Lim reconstructs a 440 Hz sinusoid") {
  const auto x = sine(440.0, 16000, 0.5);
  const auto cfg = StftConfig::make(400, 100);
  const auto mag = magnitude(stft(x, cfg));
  const auto gl = griffin_lim(mag, 100);
  REQUIRE(gl.errors.size() == 100);
  CHECK(gl.errors.back() <= 0.1);
  CHECK(gl.errors.back() <= gl.errors.front());
  CHECK(gl.waveform.size() == static_cast<std::size_t>(mag.values.rows()) * cfg.hop_len);
  CHECK(spectral_convergence(gl.waveform, mag) == doctest::Approx(gl.errors.back()).epsilon(1e-9));
}

TEST_CASE("Griffin-Lim matches a naive-DFT reference implementation") {
  const auto cfg = StftConfig::make(400, 100);
  const auto x = voiced(6, 2400);
  const auto mag = magnitude(stft(x, cfg));
  const std::size_t n_iter = 40;
  const auto fast = griffin_lim(mag, n_iter).waveform;
  const auto ref = NaiveGriffinLim(cfg).run(mag.values, n_iter);
  REQUIRE(fast.size() == ref.size());
  double err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(fast.samples[i] - ref[i]));
  CHECK(err <= 1e-8);
}

TEST_CASE("Griffin-Lim final error never exceeds its first error") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    for (const auto& cfg : {StftConfig::make(400, 100), StftConfig::make(1024, 256, WindowKind::kHann)}) {
      const auto x = seed % 2 ? voiced(seed, 8000) : noise(seed, 8000, 0.3);
      const auto gl = griffin_lim(magnitude(stft(x, cfg)), 100);
      CHECK(gl.errors.back() <= gl.errors.front());
    }
  }
}

TEST_CASE("Griffin-Lim keeps silence silent and validates input") {
  const auto cfg = StftConfig::make(400, 100);
  const auto mag = magnitude(stft(Waveform(std::vector<double>(3000, 0.0), 16000), cfg));
  const auto gl = griffin_lim(mag, 10);
  CHECK(std::all_of(gl.waveform.samples.begin(), gl.waveform.samples.end(), [](double v) { return v == 0.0; }));
  CHECK_THROWS_AS(griffin_lim(mag, 0), InvalidArgument);
  auto neg = mag;
  neg.values(0, 0) = -1.0;
  CHECK_THROWS_AS(griffin_lim(neg, 5), InvalidArgument);
  CHECK(kDefaultGriffinLimIterations == 100);
}

TEST_CASE("Gaussian filter keeps constants, returns its kernel for an impulse, and smooths noise") {
  const Waveform c(std::vector<double>(500, 0.3), 16000);
  const auto yc = gaussian_filter(c, 2.5);
  REQUIRE(yc.size() == c.size());
  for (double v : yc.samples) CHECK(std::abs(v - 0.3) <= 1e-9);

  const auto k = gaussian_kernel(2.0);
  CHECK(k.size() == 2 * 8 + 1);
  CHECK(std::accumulate(k.begin(), k.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> imp(101, 0.0);
  imp[50] = 1.0;
  const auto yi = gaussian_filter(Waveform(imp, 16000), 2.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < yi.size(); ++i) {
    const long long off = static_cast<long long>(i) - 50;
    const double expected = std::abs(off) <= 8 ? k[static_cast<std::size_t>(off + 8)] : 0.0;
    CHECK(std::abs(yi.samples[i] - expected) <= 1e-12);
    sum += yi.samples[i];
  }
  CHECK(std::abs(sum - 1.0) <= 1e-9);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto x = noise(seed, 4000, 0.5);
    const auto y = gaussian_filter(x, 2.0);
    auto var = [](const std::vector<double>& v) {
      const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double s = 0.0;
      for (double a : v) s += (a - m) * (a - m);
      return s / static_cast<double>(v.size());
    };
    CHECK(var(y.samples) < var(x.samples));
  }
  CHECK_THROWS_AS(gaussian_filter(c, 0.0), InvalidArgument);
  CHECK_THROWS_AS(gaussian_filter(c, -1.0), InvalidArgument);
}

TEST_CASE("dsp outputs are deterministic") {
  const auto x = voiced(8, 6000);
  const auto cfg = StftConfig::make(400, 100);
  const auto a = stft(x, cfg);
  const auto b = stft(x, cfg);
  CHECK(a.values == b.values);
  CHECK(griffin_lim(magnitude(a), 20).waveform == griffin_lim(magnitude(b), 20).waveform);
}

TEST_CASE("RealFft forward and inverse agree with the definition") {
  const std::size_t n = 16;
  RealFft fft(n);
  std::vector<double> x(n);
  Rng rng(2);
  for (auto& v : x) v = rng.normal();
  std::vector<std::complex<double>> X(fft.bins());
  fft.forward(x, X);
  for (std::size_t k = 0; k < fft.bins(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t) / double(n));
    }
    CHECK(std::abs(acc - X[k]) <= 1e-12);
  }
  std::vector<double> y(n);
  fft.inverse(X, y);
  for (std::size_t t = 0; t < n; ++t) CHECK(y[t] / double(n) == doctest::Approx(x[t]).epsilon(1e-12));
}
