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

#include "resyndet/resynth.hpp"

#include <stdlib.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <system_error>

#include "resyndet/error.hpp"
#include "resyndet/subprocess.hpp"
#include "resyndet/wav.hpp"

namespace resyndet::resynth {

namespace fs = std::filesystem;

dsp::StftConfig default_gl_stft(int sample_rate) {
  return dsp::StftConfig::from_ms(25.0, 6.25, sample_rate, dsp::WindowKind::kHamming);
}

dsp::StftConfig default_gl_lin_stft(int sample_rate) {
  return dsp::StftConfig::from_ms(25.0, 6.25, sample_rate, dsp::WindowKind::kHamming);
}

std::string method_name(const ResynthMethod& method) {
  struct Visitor {
    std::string operator()(const Identity&) const { return "identity"; }
    std::string operator()(const GriffinLimLinear&) const { return "gl-lin"; }
    std::string operator()(const GriffinLimMel&) const { return "gl-mel"; }
    std::string operator()(const GaussianFilter&) const { return "gaussian"; }
    std::string operator()(const ExternalVocoder&) const { return "vocoder"; }
  };
  return std::visit(Visitor{}, method);
}

ResynthMethod method_from_name(const std::string& name) {
  if (name == "identity") return Identity{};
  if (name == "gl-lin") return GriffinLimLinear{};
  if (name == "gl-mel") return GriffinLimMel{};
  if (name == "gaussian") return GaussianFilter{};
  if (name == "vocoder") return ExternalVocoder{};
  throw InvalidArgument("unknown re-synthesis method '" + name +
                        "' (expected identity, gl-lin, gl-mel, gaussian or vocoder)");
}

Waveform fit_length(Waveform y, std::size_t length) {
  y.samples.resize(length, 0.0);
  return y;
}

Resynthesizer::Resynthesizer(ResynthMethod method) : method_(std::move(method)) {
  if (const auto* gl = std::get_if<GriffinLimLinear>(&method_)) {
    gl->stft.validate();
    if (!dsp::is_cola(gl->stft)) throw InvalidArgument("gl-lin STFT config is not COLA-compliant");
    if (gl->n_iter < 1) throw InvalidArgument("gl-lin n_iter must be at least 1");
  } else if (const auto* mel = std::get_if<GriffinLimMel>(&method_)) {
    mel->stft.validate();
    if (!dsp::is_cola(mel->stft)) throw InvalidArgument("gl-mel STFT config is not COLA-compliant");
    if (mel->n_iter < 1) throw InvalidArgument("gl-mel n_iter must be at least 1");
    auto fb = std::make_shared<const dsp::MelFilterbank>(
        dsp::mel_filterbank(mel->n_mels, mel->stft, kDefaultSampleRate, mel->fmin,
                            mel->fmax > 0.0 ? mel->fmax : kDefaultSampleRate / 2.0));
    pinv_ = std::make_shared<const dsp::Matrix>(dsp::filterbank_pinv(*fb));
    fb_ = std::move(fb);
  } else if (const auto* g = std::get_if<GaussianFilter>(&method_)) {
    dsp::gaussian_kernel(g->sigma);
  } else if (const auto* v = std::get_if<ExternalVocoder>(&method_)) {
    if (v->command.empty()) throw InvalidArgument("external vocoder command is empty");
    if (v->timeout.count() <= 0) throw InvalidArgument("external vocoder timeout must be positive");
  }
}

Waveform Resynthesizer::transform(const Waveform& x) const {
  if (x.empty()) throw InvalidArgument("cannot re-synthesize an empty waveform");
  struct Visitor {
    const Resynthesizer& self;
    const Waveform& x;

    Waveform operator()(const Identity&) const { return x; }

    Waveform operator()(const GriffinLimLinear& gl) const {
      const auto mag = dsp::magnitude(dsp::stft(x, gl.stft, Execution::kSerial));
      return dsp::griffin_lim(mag, gl.n_iter).waveform;
    }

    Waveform operator()(const GriffinLimMel& gl) const {
      const auto fb = self.mel_inverse(gl, x.sample_rate);
      const auto mag = dsp::magnitude(dsp::stft(x, gl.stft, Execution::kSerial));
      const auto mel = dsp::lin_to_mel(mag, *fb.first);
      const auto lin = dsp::mel_to_linear_pinv(mel, *fb.first, *fb.second);
      return dsp::griffin_lim(lin, gl.n_iter).waveform;
    }

    Waveform operator()(const GaussianFilter& g) const { return dsp::gaussian_filter(x, g.sigma); }

    Waveform operator()(const ExternalVocoder& v) const {
      return std::move(external_vocoder_bridge({x}, v).front());
    }
  };
  Waveform y = std::visit(Visitor{*this, x}, method_);
  y = fit_length(std::move(y), x.size());
  clamp_unit(y.samples);
  return y;
}

Resynthesizer::MelInverse Resynthesizer::mel_inverse(const GriffinLimMel& gl, int sample_rate) const {
  if (fb_ && fb_->sample_rate == sample_rate) return {fb_, pinv_};
  auto fb = std::make_shared<const dsp::MelFilterbank>(dsp::mel_filterbank(
      gl.n_mels, gl.stft, sample_rate, gl.fmin, gl.fmax > 0.0 ? gl.fmax : sample_rate / 2.0));
  auto pinv = std::make_shared<const dsp::Matrix>(dsp::filterbank_pinv(*fb));
  return {std::move(fb), std::move(pinv)};
}

Waveform Resynthesizer::operator()(const Waveform& x) const { return transform(x); }

std::vector<Waveform> Resynthesizer::run_batch(const std::vector<Waveform>& inputs,
                                               Execution exec) const {
  if (const auto* v = std::get_if<ExternalVocoder>(&method_)) {
    auto out = external_vocoder_bridge(inputs, *v);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = fit_length(std::move(out[i]), inputs[i].size());
      clamp_unit(out[i].samples);
    }
    return out;
  }
  std::vector<Waveform> out(inputs.size());
  for_each_index(inputs.size(), exec, [&](std::size_t i) { out[i] = transform(inputs[i]); });
  return out;
}

Waveform resynthesize(const Waveform& x, const ResynthMethod& method) {
  return Resynthesizer(method)(x);
}

namespace {

class TempDir {
 public:
  TempDir() {
    auto pattern = (fs::temp_directory_path() / "resyndet-vocoder-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) throw BridgeError("cannot create temporary directory");
    path_ = pattern;
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

}  // namespace

std::vector<Waveform> external_vocoder_bridge(const std::vector<Waveform>& inputs,
                                              const ExternalVocoder& vocoder) {
  if (vocoder.command.empty()) throw InvalidArgument("external vocoder command is empty");
  if (inputs.empty()) return {};
  const int sr = inputs.front().sample_rate;
  for (const auto& x : inputs) {
    if (x.sample_rate != sr) throw InvalidArgument("vocoder batch mixes sample rates");
  }

  TempDir tmp;
  const fs::path in_dir = tmp.path() / "in";
  const fs::path out_dir = tmp.path() / "out";
  fs::create_directories(in_dir);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    wav::save_wav(in_dir / (std::to_string(i) + ".wav"), inputs[i]);
  }

  std::vector<std::string> argv = vocoder.command;
  argv.insert(argv.end(), {"--in-dir", in_dir.string(), "--out-dir", out_dir.string(),
                           "--sample-rate", std::to_string(sr)});
  const int status = run_process(argv, std::chrono::duration_cast<std::chrono::milliseconds>(vocoder.timeout));
  if (status != 0) {
    throw BridgeError("external vocoder '" + vocoder.command.front() + "' exited with status " +
                      std::to_string(status));
  }

  std::set<std::string> expected;
  for (std::size_t i = 0; i < inputs.size(); ++i) expected.insert(std::to_string(i) + ".wav");
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const auto name = entry.path().filename().string();
    if (!expected.contains(name)) throw BridgeError("external vocoder wrote unexpected output '" + name + "'");
  }

  std::vector<Waveform> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const fs::path p = out_dir / (std::to_string(i) + ".wav");
    if (!fs::exists(p)) {
      throw BridgeError("external vocoder produced no output for index " + std::to_string(i));
    }
    Waveform y;
    try {
      y = wav::load_wav(p);
    } catch (const DataError& e) {
      throw BridgeError("external vocoder output " + std::to_string(i) + " unreadable: " + e.what());
    }
    if (y.sample_rate != sr) {
      throw BridgeError("external vocoder output " + std::to_string(i) + " has sample rate " +
                        std::to_string(y.sample_rate) + ", expected " + std::to_string(sr));
    }
    out.push_back(std::move(y));
  }
  return out;
}

}  // namespace resyndet::resynth
