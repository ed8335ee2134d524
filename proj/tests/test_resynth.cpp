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
#include <string>

#include "resyndet/dsp.hpp"
#include "resyndet/error.hpp"
#include "resyndet/resynth.hpp"
#include "test_support.hpp"

using namespace resyndet;
using namespace resyndet::resynth;
using resyndet::testing::noise;
using resyndet::testing::sine;
using resyndet::testing::voiced;

namespace {

ExternalVocoder identity_stub(std::vector<std::string> extra = {}) {
  ExternalVocoder v;
  v.command = {RESYNDET_IDENTITY_VOCODER};
  for (auto& a : extra) v.command.push_back(std::move(a));
  v.timeout = std::chrono::seconds(60);
  return v;
}

std::string bridge_error(const std::vector<Waveform>& in, const ExternalVocoder& v) {
  try {
    external_vocoder_bridge(in, v);
  } catch (const BridgeError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("method names round trip") {
  for (const char* name : {"identity", "gl-lin", "gl-mel", "gaussian"}) {
    CHECK(method_name(method_from_name(name)) == name);
  }
  CHECK(method_name(ExternalVocoder{}) == "vocoder");
  CHECK_THROWS_AS(method_from_name("wavenet"), InvalidArgument);
}

TEST_CASE("default Griffin-Lim analyses are COLA") {
  CHECK(dsp::is_cola(default_gl_stft()));
  CHECK(dsp::is_cola(default_gl_lin_stft()));
  CHECK(default_gl_stft().window_len == 400);
  CHECK(default_gl_stft().hop_len == 100);
  CHECK(default_gl_lin_stft().window_len == 400);
  CHECK(default_gl_lin_stft().hop_len == 100);
}

TEST_CASE("identity is bit-exact") {
  const auto x = voiced(1, 5000);
  CHECK(resynthesize(x, Identity{}) == x);
}

TEST_CASE("every method preserves length and the unit range") {
  for (std::size_t n : {401u, 1000u, 4321u, 8000u}) {
    auto x = voiced(n, n);
    x.samples[n / 2] = 1.0;
    for (const ResynthMethod& m :
         {ResynthMethod{Identity{}}, ResynthMethod{GriffinLimLinear{}}, ResynthMethod{GriffinLimMel{}},
          ResynthMethod{GaussianFilter{2.0}}, ResynthMethod{identity_stub()}}) {
      CAPTURE(method_name(m));
      CAPTURE(n);
      const auto y = resynthesize(x, m);
      CHECK(y.size() == x.size());
      CHECK(y.sample_rate == x.sample_rate);
      CHECK(*std::max_element(y.samples.begin(), y.samples.end()) <= 1.0);
      CHECK(*std::min_element(y.samples.begin(), y.samples.end()) >= -1.0);
    }
  }
}

TEST_CASE("GL-mel keeps silence silent") {
  const Waveform x(std::vector<double>(6000, 0.0), 16000);
  const auto y = resynthesize(x, GriffinLimMel{});
  CHECK(std::all_of(y.samples.begin(), y.samples.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("GL-lin reconstructs the magnitude of a 440 Hz sinusoid") {
  const auto x = sine(440.0, 16000, 0.5);
  GriffinLimLinear gl;
  const auto y = resynthesize(x, gl);
  const auto target = dsp::magnitude(dsp::stft(x, gl.stft));
  CHECK(dsp::spectral_convergence(y, target) <= 0.1);
}

TEST_CASE("GL-mel configured like the neural vocoder front end") {
  GriffinLimMel gl;
  gl.n_mels = 80;
  gl.fmin = 80.0;
  gl.fmax = 7600.0;
  gl.stft = dsp::StftConfig::from_ms(50.0, 12.5, 16000, dsp::WindowKind::kHamming);
  const auto x = voiced(3, 8000);
  const auto y = resynthesize(x, gl);
  CHECK(y.size() == x.size());
  // With 257 bins the two lowest of 80 bands are nearly collinear.
  gl.stft = default_gl_stft();
  CHECK_THROWS_AS(resynthesize(x, gl), NumericalError);
}

TEST_CASE("invalid method configurations are rejected") {
  GriffinLimLinear lin;
  lin.stft = dsp::StftConfig::make(400, 160);
  CHECK_THROWS_AS(Resynthesizer{lin}, InvalidArgument);
  GriffinLimMel mel;
  mel.n_iter = 0;
  CHECK_THROWS_AS(Resynthesizer{mel}, InvalidArgument);
  CHECK_THROWS_AS(Resynthesizer{ExternalVocoder{}}, InvalidArgument);
  CHECK_THROWS_AS(resynthesize(Waveform({}, 16000), Identity{}), InvalidArgument);
}

TEST_CASE("fit_length trims and zero-pads the tail") {
  Waveform y({1, 2, 3, 4}, 16000);
  CHECK(fit_length(y, 2).samples == std::vector<double>{1, 2});
  CHECK(fit_length(y, 6).samples == std::vector<double>{1, 2, 3, 4, 0, 0});
  CHECK(fit_length(y, 4) == y);
}

TEST_CASE("bridge with the identity stub returns inputs up to PCM16 rounding, in order") {
  std::vector<Waveform> in{noise(1, 3000), noise(2, 1700), voiced(3, 2500)};
  const auto out = external_vocoder_bridge(in, identity_stub());
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(out[i].size() == in[i].size());
    double err = 0.0;
    for (std::size_t k = 0; k < in[i].size(); ++k) err = std::max(err, std::abs(out[i].samples[k] - in[i].samples[k]));
    CHECK(err <= 1.0 / 32768.0);
  }
  const Resynthesizer r{identity_stub()};
  CHECK(r.run_batch(in).size() == 3);
}

TEST_CASE("bridge reports a missing output by index") {
  std::vector<Waveform> in{noise(1, 1000), noise(2, 1000), noise(3, 1000)};
  const auto msg = bridge_error(in, identity_stub({"--drop", "1"}));
  CHECK(msg.find("index 1") != std::string::npos);
}

TEST_CASE("bridge reports a non-zero exit status") {
  const auto msg = bridge_error({noise(1, 1000)}, identity_stub({"--fail"}));
  CHECK(msg.find("status 4") != std::string::npos);
}

TEST_CASE("bridge reports a command that cannot be started") {
  ExternalVocoder v;
  v.command = {"/nonexistent/vocoder"};
  CHECK_THROWS_AS(external_vocoder_bridge({noise(1, 1000)}, v), BridgeError);
}

TEST_CASE("bridge enforces its timeout") {
  ExternalVocoder v;
  v.command = {"/bin/sh", "-c", "sleep 5", "sh"};
  v.timeout = std::chrono::seconds(1);
  const auto msg = bridge_error({noise(1, 1000)}, v);
  CHECK(msg.find("time") != std::string::npos);
}

TEST_CASE("bridge rejects outputs at the wrong sample rate") {
  ExternalVocoder v;
  // Writes each input back with the sample-rate field of the header changed to 8000.
  v.command = {"/bin/sh", "-c",
               "in=$2; out=$4; for f in \"$in\"/*.wav; do n=$(basename \"$f\"); "
               "{ head -c 24 \"$f\"; printf '\\100\\037\\000\\000\\200\\076\\000\\000'; tail -c +33 \"$f\"; } > \"$out/$n\"; done",
               "sh"};
  const auto msg = bridge_error({noise(1, 1000)}, v);
  CHECK(msg.find("sample rate") != std::string::npos);
}

TEST_CASE("bridge rejects unexpected extra outputs") {
  ExternalVocoder v;
  v.command = {"/bin/sh", "-c", "cp \"$2\"/*.wav \"$4\"/ && cp \"$2\"/0.wav \"$4\"/7.wav", "sh"};
  const auto msg = bridge_error({noise(1, 1000)}, v);
  CHECK(msg.find("unexpected") != std::string::npos);
}
