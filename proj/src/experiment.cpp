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

#include "resyndet/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "resyndet/attack.hpp"
#include "resyndet/corpus.hpp"
#include "resyndet/error.hpp"
#include "resyndet/noise.hpp"
#include "resyndet/parallel.hpp"
#include "resyndet/random.hpp"
#include "resyndet/resynth.hpp"
#include "resyndet/wav.hpp"

namespace resyndet::harness {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kTrainSeedStream = 0x7421;
constexpr std::uint64_t kNoiseSeedStream = 0x6e6f;

class Fnv1a {
 public:
  void add(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void add(const std::string& s) {
    add(s.data(), s.size());
    add("\0", 1);
  }
  void add(double v) { add(&v, sizeof v); }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

Execution exec_of(const ExperimentConfig& cfg) { return cfg.parallel ? Execution::kParallel : Execution::kSerial; }

std::vector<std::string> unique_tests(const std::vector<Trial>& trials) {
  std::set<std::string> ids;
  for (const auto& t : trials) ids.insert(t.test);
  return {ids.begin(), ids.end()};
}

std::size_t chunk_size() { return std::max<std::size_t>(8, 4 * static_cast<std::size_t>(max_threads())); }

// Clean and noisy embeddings of one test utterance, with and without each
// re-synthesis method.
struct UtteranceRecord {
  asv::Embedding clean;
  std::vector<asv::Embedding> clean_resynth;
  asv::Embedding noisy;
  std::vector<asv::Embedding> noisy_resynth;
};

struct TrialRecord {
  std::vector<double> adversarial;
  std::vector<double> linf;
  std::vector<std::size_t> iterations;
  std::vector<std::vector<double>> adversarial_resynth;
};

json emb_json(const asv::Embedding& e) { return std::vector<double>(e.values.data(), e.values.data() + e.values.size()); }

asv::Embedding emb_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  asv::Embedding e;
  e.values = Eigen::Map<const asv::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  return e;
}

// Append-only JSONL store. Every line carries its key; lines that fail to
// parse (a write cut short by an interrupted run) are ignored.
class Cache {
 public:
  Cache(const fs::path& dir, const std::string& fingerprint, bool resume) : dir_(dir) {
    fs::create_directories(dir_);
    const fs::path fp_file = dir_ / "fingerprint";
    std::string old;
    if (std::ifstream in(fp_file); in) std::getline(in, old);
    if (!resume || old != fingerprint) {
      fs::remove(dir_ / "utterances.jsonl");
      fs::remove(dir_ / "trials.jsonl");
      std::ofstream(fp_file, std::ios::binary) << fingerprint << '\n';
    }
  }

  std::map<std::string, json> load(const std::string& name) const {
    std::map<std::string, json> out;
    std::ifstream in(dir_ / name);
    std::string line;
    while (std::getline(in, line)) {
      try {
        json j = json::parse(line);
        auto key = j.at("key").get<std::string>();
        out[std::move(key)] = std::move(j);
      } catch (const json::exception&) {
      }
    }
    return out;
  }

  void append(const std::string& name, const std::vector<json>& records) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::app);
    if (!out) throw DataError("cannot write cache file " + (dir_ / name).string());
    for (const auto& r : records) out << r.dump() << '\n';
  }

 private:
  fs::path dir_;
  std::mutex mutex_;
};

template <typename Fn>
auto staged(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(std::string("stage '") + stage + "': " + e.what(), e.code());
  } catch (const std::exception& e) {
    throw Error(std::string("stage '") + stage + "': " + e.what(), ExitCode::kData);
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  ExperimentData data;
  if (cfg.trials.empty()) {
    corpus::CorpusConfig cc;
    cc.seed = cfg.seed;
    cc.n_speakers = cfg.corpus_speakers;
    cc.utts_per_speaker = cfg.corpus_utts_per_speaker;
    cc.duration_s = cfg.corpus_duration_s;
    cc.n_trials = cfg.corpus_trials;
    auto c = corpus::synth_corpus(cc);
    data.trials = std::move(c.trials);
    for (auto& u : c.utterances) data.audio.emplace(u.id, std::move(u.audio));
    return data;
  }
  data.trials = parse_trials(fs::path(cfg.trials));
  if (data.trials.empty()) throw DataError("trial list " + cfg.trials + " is empty");
  for (const auto& t : data.trials) {
    for (const auto* id : {&t.enroll, &t.test}) {
      if (!data.audio.contains(*id)) data.audio.emplace(*id, wav::load_wav(fs::path(cfg.audio_root) / *id));
    }
  }
  return data;
}

asv::TrainConfig train_config(const ExperimentConfig& cfg) {
  asv::TrainConfig tc;
  tc.hidden_dim = cfg.train_hidden_dim;
  tc.embedding_dim = cfg.train_embedding_dim;
  tc.learning_rate = cfg.train_learning_rate;
  tc.steps = cfg.train_steps;
  tc.seed = derive_seed(cfg.seed, kTrainSeedStream);
  return tc;
}

std::vector<asv::LabeledUtterance> training_corpus(const ExperimentConfig& cfg) {
  corpus::CorpusConfig cc;
  cc.seed = cfg.seed;
  cc.n_speakers = cfg.corpus_speakers;
  cc.first_utterance = cfg.corpus_utts_per_speaker;
  cc.utts_per_speaker = cfg.train_utts_per_speaker;
  cc.duration_s = cfg.corpus_duration_s;
  cc.n_trials = 0;
  auto c = corpus::synth_corpus(cc);
  std::vector<asv::LabeledUtterance> out;
  out.reserve(c.utterances.size());
  for (auto& u : c.utterances) out.push_back({std::move(u.audio), u.speaker});
  return out;
}

asv::AsvModel load_or_train_model(const ExperimentConfig& cfg, std::ostream* log) {
  if (!cfg.model.empty()) return asv::load_model(cfg.model);
  auto result = asv::train_model(training_corpus(cfg), train_config(cfg));
  if (log) {
    *log << "[train] validation EER " << result.initial_validation_eer << " -> " << result.final_validation_eer
         << '\n';
  }
  return std::move(result.model);
}

std::string experiment_fingerprint(const ExperimentConfig& cfg, const ExperimentData& data,
                                   const asv::AsvModel& model) {
  Fnv1a h;
  h.add(std::string("resyndet-cache-1"));
  const json c = config_to_json(cfg);
  for (const char* key : {"seed", "methods", "epsilons", "alpha", "quantize", "gl.iterations", "gl_mel.bands",
                          "gaussian.sigma", "vocoder.command", "control.snr_db"}) {
    h.add(std::string(key));
    h.add(c.at(key).get<std::string>());
  }
  h.add(asv::model_to_json(model));
  std::ostringstream trials;
  write_trials(trials, data.trials);
  h.add(trials.str());
  for (const auto& [id, x] : data.audio) {
    h.add(id);
    h.add(static_cast<double>(x.sample_rate));
    h.add(x.samples.data(), x.samples.size() * sizeof(double));
  }
  return h.hex();
}

ScoreTable compute_scores(const ExperimentConfig& cfg, const ExperimentData& data, const asv::AsvModel& model,
                          std::ostream* log, std::pair<std::size_t, std::size_t>* reused) {
  cfg.validate();
  model.validate();
  const Execution exec = exec_of(cfg);
  const std::size_t nm = cfg.methods.size();
  const std::size_t ne = cfg.epsilons.size();
  std::vector<resynth::Resynthesizer> methods;
  for (const auto& name : cfg.methods) methods.emplace_back(make_method(cfg, name));
  for (double eps : cfg.epsilons) {
    attack::AttackConfig ac;
    ac.epsilon_int = eps;
    ac.alpha_int = cfg.alpha;
    ac.validate();
  }

  Cache cache(fs::path(cfg.out_dir) / "cache", experiment_fingerprint(cfg, data, model), cfg.resume);

  // Enrollment embeddings are cheap and never cached.
  std::vector<std::string> ids;
  for (const auto& [id, x] : data.audio) ids.push_back(id);
  std::vector<asv::Embedding> emb(ids.size());
  for_each_index(ids.size(), exec, [&](std::size_t i) { emb[i] = asv::embed_waveform(data.audio.at(ids[i]), model); });
  std::map<std::string, const asv::Embedding*> emb_of;
  for (std::size_t i = 0; i < ids.size(); ++i) emb_of[ids[i]] = &emb[i];

  // Genuine and noise-control re-synthesis, once per test utterance.
  const auto tests = unique_tests(data.trials);
  std::map<std::string, UtteranceRecord> utt;
  {
    auto cached = cache.load("utterances.jsonl");
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < tests.size(); ++i) {
      const auto it = cached.find(tests[i]);
      if (it == cached.end()) {
        todo.push_back(i);
        continue;
      }
      UtteranceRecord r;
      r.clean = emb_from(it->second.at("clean"));
      r.noisy = emb_from(it->second.at("noisy"));
      for (const auto& e : it->second.at("clean_resynth")) r.clean_resynth.push_back(emb_from(e));
      for (const auto& e : it->second.at("noisy_resynth")) r.noisy_resynth.push_back(emb_from(e));
      utt.emplace(tests[i], std::move(r));
    }
    if (reused) reused->first = tests.size() - todo.size();
    const std::size_t chunk = chunk_size();
    for (std::size_t start = 0; start < todo.size(); start += chunk) {
      const std::size_t n = std::min(chunk, todo.size() - start);
      // inputs[2k] is clean, inputs[2k+1] noisy.
      std::vector<Waveform> inputs(2 * n);
      for_each_index(n, exec, [&](std::size_t k) {
        const std::size_t i = todo[start + k];
        const Waveform& x = data.audio.at(tests[i]);
        inputs[2 * k] = x;
        inputs[2 * k + 1] = add_gaussian_noise(x, cfg.control_snr_db, derive_seed(cfg.seed, kNoiseSeedStream + i));
      });
      std::vector<std::vector<Waveform>> out(nm);
      for (std::size_t m = 0; m < nm; ++m) out[m] = methods[m].run_batch(inputs, exec);
      std::vector<UtteranceRecord> recs(n);
      for_each_index(n, exec, [&](std::size_t k) {
        auto& r = recs[k];
        r.clean = *emb_of.at(tests[todo[start + k]]);
        r.noisy = asv::embed_waveform(inputs[2 * k + 1], model);
        for (std::size_t m = 0; m < nm; ++m) {
          r.clean_resynth.push_back(asv::embed_waveform(out[m][2 * k], model));
          r.noisy_resynth.push_back(asv::embed_waveform(out[m][2 * k + 1], model));
        }
      });
      std::vector<json> lines;
      for (std::size_t k = 0; k < n; ++k) {
        const auto& r = recs[k];
        json cr = json::array();
        json nr = json::array();
        for (std::size_t m = 0; m < nm; ++m) {
          cr.push_back(emb_json(r.clean_resynth[m]));
          nr.push_back(emb_json(r.noisy_resynth[m]));
        }
        lines.push_back({{"key", tests[todo[start + k]]},
                         {"clean", emb_json(r.clean)},
                         {"noisy", emb_json(r.noisy)},
                         {"clean_resynth", cr},
                         {"noisy_resynth", nr}});
        utt.emplace(tests[todo[start + k]], std::move(recs[k]));
      }
      cache.append("utterances.jsonl", lines);
      if (log) *log << "[genuine] " << start + n << '/' << todo.size() << " utterances\n" << std::flush;
    }
  }

  // Attacks, one record per trial.
  std::vector<TrialRecord> trial_rec(data.trials.size());
  {
    auto cached = cache.load("trials.jsonl");
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < data.trials.size(); ++i) {
      const auto it = cached.find(std::to_string(i));
      if (it == cached.end()) {
        todo.push_back(i);
        continue;
      }
      auto& r = trial_rec[i];
      const auto& j = it->second;
      r.adversarial = j.at("adversarial").get<std::vector<double>>();
      r.linf = j.at("linf").get<std::vector<double>>();
      r.iterations = j.at("iterations").get<std::vector<std::size_t>>();
      r.adversarial_resynth = j.at("adversarial_resynth").get<std::vector<std::vector<double>>>();
    }
    if (reused) reused->second = data.trials.size() - todo.size();
    const std::size_t chunk = std::max<std::size_t>(1, chunk_size() / std::max<std::size_t>(1, ne));
    for (std::size_t start = 0; start < todo.size(); start += chunk) {
      const std::size_t n = std::min(chunk, todo.size() - start);
      // adv[k * ne + e] is trial todo[start + k] attacked at epsilons[e].
      std::vector<attack::AttackResult> adv(n * ne);
      for_each_index(n * ne, exec, [&](std::size_t q) {
        const Trial& t = data.trials[todo[start + q / ne]];
        attack::AttackConfig ac;
        ac.epsilon_int = cfg.epsilons[q % ne];
        ac.alpha_int = cfg.alpha;
        ac.is_target = t.is_target;
        ac.quantize_pcm16 = cfg.quantize;
        adv[q] = attack::bim_attack(data.audio.at(t.test), *emb_of.at(t.enroll), model, ac);
      });
      // Unchanged inputs (epsilon 0) reuse the genuine re-synthesis.
      std::vector<std::size_t> changed;
      std::vector<Waveform> inputs;
      for (std::size_t q = 0; q < n * ne; ++q) {
        if (adv[q].adversarial == data.audio.at(data.trials[todo[start + q / ne]].test)) continue;
        changed.push_back(q);
        inputs.push_back(adv[q].adversarial);
      }
      std::vector<std::vector<Waveform>> out(nm);
      for (std::size_t m = 0; m < nm; ++m) out[m] = methods[m].run_batch(inputs, exec);
      std::vector<std::vector<double>> resynth_score(n * ne, std::vector<double>(nm));
      std::vector<double> adv_score(n * ne);
      for_each_index(n * ne, exec, [&](std::size_t q) {
        const Trial& t = data.trials[todo[start + q / ne]];
        const auto& enroll = *emb_of.at(t.enroll);
        const auto pos = std::lower_bound(changed.begin(), changed.end(), q);
        if (pos != changed.end() && *pos == q) {
          const auto c = static_cast<std::size_t>(pos - changed.begin());
          adv_score[q] = asv::cosine_score(asv::embed_waveform(adv[q].adversarial, model), enroll);
          for (std::size_t m = 0; m < nm; ++m) {
            resynth_score[q][m] = asv::cosine_score(asv::embed_waveform(out[m][c], model), enroll);
          }
        } else {
          const auto& u = utt.at(t.test);
          adv_score[q] = asv::cosine_score(u.clean, enroll);
          for (std::size_t m = 0; m < nm; ++m) resynth_score[q][m] = asv::cosine_score(u.clean_resynth[m], enroll);
        }
      });
      std::vector<json> lines;
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = todo[start + k];
        const Waveform& x = data.audio.at(data.trials[i].test);
        auto& r = trial_rec[i];
        for (std::size_t e = 0; e < ne; ++e) {
          const std::size_t q = k * ne + e;
          double linf = 0.0;
          for (std::size_t s = 0; s < x.size(); ++s) {
            linf = std::max(linf, std::abs(adv[q].adversarial.samples[s] - x.samples[s]));
          }
          r.adversarial.push_back(adv_score[q]);
          r.linf.push_back(linf);
          r.iterations.push_back(adv[q].iterations);
          r.adversarial_resynth.push_back(resynth_score[q]);
        }
        lines.push_back({{"key", std::to_string(i)},
                         {"adversarial", r.adversarial},
                         {"linf", r.linf},
                         {"iterations", r.iterations},
                         {"adversarial_resynth", r.adversarial_resynth}});
      }
      cache.append("trials.jsonl", lines);
      if (log) *log << "[attack] " << start + n << '/' << todo.size() << " trials\n" << std::flush;
    }
  }

  ScoreTable table;
  table.methods = cfg.methods;
  table.epsilons = cfg.epsilons;
  for (std::size_t i = 0; i < data.trials.size(); ++i) {
    const Trial& t = data.trials[i];
    const auto& enroll = *emb_of.at(t.enroll);
    const auto& u = utt.at(t.test);
    TrialScores s;
    s.trial = t;
    s.score = asv::cosine_score(u.clean, enroll);
    s.control_score = asv::cosine_score(u.noisy, enroll);
    for (std::size_t m = 0; m < nm; ++m) {
      s.genuine_resynth.push_back(asv::cosine_score(u.clean_resynth[m], enroll));
      s.control_resynth.push_back(asv::cosine_score(u.noisy_resynth[m], enroll));
    }
    auto& r = trial_rec[i];
    s.adversarial = std::move(r.adversarial);
    s.linf = std::move(r.linf);
    s.iterations = std::move(r.iterations);
    s.adversarial_resynth = std::move(r.adversarial_resynth);
    table.trials.push_back(std::move(s));
  }
  table.validate();
  return table;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  ExperimentResult result;
  auto t0 = std::chrono::steady_clock::now();
  const ExperimentData data = staged("data", [&] { return load_experiment_data(cfg); });
  result.timings.push_back({"data", seconds_since(t0)});

  t0 = std::chrono::steady_clock::now();
  result.model = staged("model", [&] { return load_or_train_model(cfg, log); });
  result.timings.push_back({"model", seconds_since(t0)});

  t0 = std::chrono::steady_clock::now();
  std::pair<std::size_t, std::size_t> reused{0, 0};
  result.scores = staged("score", [&] { return compute_scores(cfg, data, result.model, log, &reused); });
  result.cached_utterances = reused.first;
  result.cached_trials = reused.second;
  result.timings.push_back({"score", seconds_since(t0)});

  t0 = std::chrono::steady_clock::now();
  result.report = staged("report", [&] { return make_report(result.scores, cfg.fpr_given, cfg.histogram_bins); });
  result.timings.push_back({"report", seconds_since(t0)});
  return result;
}

void write_experiment(const ExperimentConfig& cfg, const ExperimentResult& result) {
  staged("write", [&] {
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    if (cfg.model.empty()) asv::save_model(dir / "model.json", result.model);
    write_scores(dir / "scores.jsonl", result.scores);
    std::ofstream(dir / "experiment.cfg", std::ios::binary) << to_config_text(cfg);
    write_report(dir, result.report, config_to_json(cfg));
    json t = json::object();
    double total = 0.0;
    for (const auto& s : result.timings) {
      t[s.stage] = s.seconds;
      total += s.seconds;
    }
    t["total"] = total;
    t["threads"] = max_threads();
    t["cached_utterances"] = result.cached_utterances;
    t["cached_trials"] = result.cached_trials;
    std::ofstream out(dir / "timings.json", std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / "timings.json").string());
    out << t.dump(2) << '\n';
    return 0;
  });
}

Report render_report(const fs::path& dir, const ExperimentConfig& cfg) {
  const ScoreTable table = read_scores(dir / "scores.jsonl");
  Report r = make_report(table, cfg.fpr_given, cfg.histogram_bins);
  write_report(dir, r, config_to_json(cfg));
  return r;
}

}  // namespace resyndet::harness
