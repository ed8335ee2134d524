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

#include "resyndet/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "resyndet/error.hpp"

namespace resyndet::harness {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw InvalidArgument("config key '" + key + "': not a number: '" + v + "'");
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument("config key '" + key + "': not a non-negative integer: '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidArgument("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = to_size(k, v); }},
      {"out_dir", [](auto& c, auto&, auto& v) { c.out_dir = v; }},
      {"trials", [](auto& c, auto&, auto& v) { c.trials = v; }},
      {"audio_root", [](auto& c, auto&, auto& v) { c.audio_root = v; }},
      {"model", [](auto& c, auto&, auto& v) { c.model = v; }},
      {"methods", [](auto& c, auto&, auto& v) { c.methods = split_list(v); }},
      {"epsilons", [](auto& c, auto& k, auto& v) { c.epsilons = to_doubles(k, v); }},
      {"alpha", [](auto& c, auto& k, auto& v) { c.alpha = to_double(k, v); }},
      {"quantize", [](auto& c, auto& k, auto& v) { c.quantize = to_bool(k, v); }},
      {"fpr_given", [](auto& c, auto& k, auto& v) { c.fpr_given = to_doubles(k, v); }},
      {"corpus.speakers", [](auto& c, auto& k, auto& v) { c.corpus_speakers = to_size(k, v); }},
      {"corpus.utts_per_speaker", [](auto& c, auto& k, auto& v) { c.corpus_utts_per_speaker = to_size(k, v); }},
      {"corpus.duration_s", [](auto& c, auto& k, auto& v) { c.corpus_duration_s = to_double(k, v); }},
      {"corpus.trials", [](auto& c, auto& k, auto& v) { c.corpus_trials = to_size(k, v); }},
      {"train.utts_per_speaker", [](auto& c, auto& k, auto& v) { c.train_utts_per_speaker = to_size(k, v); }},
      {"train.steps", [](auto& c, auto& k, auto& v) { c.train_steps = to_size(k, v); }},
      {"train.learning_rate", [](auto& c, auto& k, auto& v) { c.train_learning_rate = to_double(k, v); }},
      {"train.hidden_dim", [](auto& c, auto& k, auto& v) { c.train_hidden_dim = to_size(k, v); }},
      {"train.embedding_dim", [](auto& c, auto& k, auto& v) { c.train_embedding_dim = to_size(k, v); }},
      {"gl.iterations", [](auto& c, auto& k, auto& v) { c.gl_iterations = to_size(k, v); }},
      {"gl_mel.bands", [](auto& c, auto& k, auto& v) { c.gl_mel_bands = to_size(k, v); }},
      {"gaussian.sigma", [](auto& c, auto& k, auto& v) { c.gaussian_sigma = to_double(k, v); }},
      {"vocoder.command", [](auto& c, auto&, auto& v) { c.vocoder_command = v; }},
      {"vocoder.timeout_s", [](auto& c, auto& k, auto& v) { c.vocoder_timeout_s = to_double(k, v); }},
      {"control.snr_db", [](auto& c, auto& k, auto& v) { c.control_snr_db = to_double(k, v); }},
      {"report.histogram_bins", [](auto& c, auto& k, auto& v) { c.histogram_bins = to_size(k, v); }},
      {"parallel", [](auto& c, auto& k, auto& v) { c.parallel = to_bool(k, v); }},
      {"resume", [](auto& c, auto& k, auto& v) { c.resume = to_bool(k, v); }},
  };
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (methods.empty()) throw InvalidArgument("config: methods must not be empty");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    resynth::method_from_name(methods[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (methods[i] == methods[j]) throw InvalidArgument("config: method '" + methods[i] + "' listed twice");
    }
  }
  if (epsilons.empty()) throw InvalidArgument("config: epsilons must not be empty");
  for (double e : epsilons) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw InvalidArgument("config: epsilons must be finite and >= 0");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("config: alpha must be positive");
  if (fpr_given.empty()) throw InvalidArgument("config: fpr_given must not be empty");
  for (double f : fpr_given) {
    if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("config: fpr_given values must lie in [0, 1]");
  }
  if (!trials.empty() && audio_root.empty()) {
    throw InvalidArgument("config: trials requires audio_root");
  }
  if (!trials.empty() && model.empty()) {
    throw InvalidArgument("config: an external trial list needs a model file");
  }
  if (gl_iterations < 1) throw InvalidArgument("config: gl.iterations must be at least 1");
  if (!(gaussian_sigma > 0.0)) throw InvalidArgument("config: gaussian.sigma must be positive");
  if (!(vocoder_timeout_s > 0.0)) throw InvalidArgument("config: vocoder.timeout_s must be positive");
  if (std::isnan(control_snr_db)) throw InvalidArgument("config: control.snr_db must be a number");
  if (histogram_bins < 1) throw InvalidArgument("config: report.histogram_bins must be at least 1");
  if (train_utts_per_speaker < 2) throw InvalidArgument("config: train.utts_per_speaker must be at least 2");
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw InvalidArgument("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

ExperimentConfig parse_config(std::istream& in, const std::string& name) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  bool have_version = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = name + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw InvalidArgument(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "format_version") {
        if (value != std::to_string(kConfigFormatVersion)) {
          throw InvalidArgument("unsupported format_version '" + value + "' (expected " +
                                std::to_string(kConfigFormatVersion) + ")");
        }
        have_version = true;
      } else {
        set_config_value(cfg, key, value);
      }
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where + e.what());
    }
  }
  if (!have_version) throw InvalidArgument(name + ": missing 'format_version = 1'");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "format_version = " << kConfigFormatVersion << '\n'
    << "seed = " << c.seed << '\n'
    << "out_dir = " << c.out_dir << '\n'
    << "trials = " << c.trials << '\n'
    << "audio_root = " << c.audio_root << '\n'
    << "model = " << c.model << '\n'
    << "methods = " << join(c.methods) << '\n'
    << "epsilons = " << join(c.epsilons) << '\n'
    << "alpha = " << fmt(c.alpha) << '\n'
    << "quantize = " << (c.quantize ? "true" : "false") << '\n'
    << "fpr_given = " << join(c.fpr_given) << '\n'
    << "corpus.speakers = " << c.corpus_speakers << '\n'
    << "corpus.utts_per_speaker = " << c.corpus_utts_per_speaker << '\n'
    << "corpus.duration_s = " << fmt(c.corpus_duration_s) << '\n'
    << "corpus.trials = " << c.corpus_trials << '\n'
    << "train.utts_per_speaker = " << c.train_utts_per_speaker << '\n'
    << "train.steps = " << c.train_steps << '\n'
    << "train.learning_rate = " << fmt(c.train_learning_rate) << '\n'
    << "train.hidden_dim = " << c.train_hidden_dim << '\n'
    << "train.embedding_dim = " << c.train_embedding_dim << '\n'
    << "gl.iterations = " << c.gl_iterations << '\n'
    << "gl_mel.bands = " << c.gl_mel_bands << '\n'
    << "gaussian.sigma = " << fmt(c.gaussian_sigma) << '\n'
    << "vocoder.command = " << c.vocoder_command << '\n'
    << "vocoder.timeout_s = " << fmt(c.vocoder_timeout_s) << '\n'
    << "control.snr_db = " << fmt(c.control_snr_db) << '\n'
    << "report.histogram_bins = " << c.histogram_bins << '\n'
    << "parallel = " << (c.parallel ? "true" : "false") << '\n'
    << "resume = " << (c.resume ? "true" : "false") << '\n';
  return o.str();
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  std::istringstream in(to_config_text(c));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    j[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  // Where results land and whether a cache is reused do not change them.
  j.erase("out_dir");
  j.erase("resume");
  j.erase("parallel");
  return j;
}

resynth::ResynthMethod make_method(const ExperimentConfig& cfg, const std::string& name) {
  auto method = resynth::method_from_name(name);
  if (auto* gl = std::get_if<resynth::GriffinLimLinear>(&method)) {
    gl->n_iter = cfg.gl_iterations;
  } else if (auto* mel = std::get_if<resynth::GriffinLimMel>(&method)) {
    mel->n_iter = cfg.gl_iterations;
    mel->n_mels = cfg.gl_mel_bands;
  } else if (auto* g = std::get_if<resynth::GaussianFilter>(&method)) {
    g->sigma = cfg.gaussian_sigma;
  } else if (auto* v = std::get_if<resynth::ExternalVocoder>(&method)) {
    std::istringstream words(cfg.vocoder_command);
    for (std::string w; words >> w;) v->command.push_back(w);
    if (v->command.empty()) throw InvalidArgument("method 'vocoder' needs vocoder.command");
    v->timeout = std::chrono::seconds(static_cast<long long>(std::ceil(cfg.vocoder_timeout_s)));
  }
  return method;
}

}  // namespace resyndet::harness
