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

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "resyndet/asv.hpp"
#include "resyndet/attack.hpp"
#include "resyndet/config.hpp"
#include "resyndet/corpus.hpp"
#include "resyndet/detect.hpp"
#include "resyndet/error.hpp"
#include "resyndet/experiment.hpp"
#include "resyndet/report.hpp"
#include "resyndet/resynth.hpp"
#include "resyndet/trials.hpp"
#include "resyndet/wav.hpp"

namespace fs = std::filesystem;
using namespace resyndet;
using harness::ExperimentConfig;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out_dir;
  std::vector<std::string> sets;
};

// Config file, then --set key=value pairs, then --seed / --out-dir.
ExperimentConfig effective_config(const Globals& g, const std::string& default_out_dir) {
  ExperimentConfig cfg;
  if (!g.config.empty()) {
    cfg = harness::load_config(g.config);
  } else {
    cfg.out_dir = default_out_dir;
  }
  for (const auto& kv : g.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    harness::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  cfg.validate();
  return cfg;
}

corpus::CorpusConfig corpus_config(const ExperimentConfig& cfg) {
  corpus::CorpusConfig cc;
  cc.seed = cfg.seed;
  cc.n_speakers = cfg.corpus_speakers;
  cc.utts_per_speaker = cfg.corpus_utts_per_speaker;
  cc.duration_s = cfg.corpus_duration_s;
  cc.n_trials = cfg.corpus_trials;
  return cc;
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect adversarial speaker-verification inputs by re-synthesis"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Base seed for corpus, training, noise");
  app.add_option("--config", g.config, "Flat key = value config file (format_version = 1)");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--set", g.sets, "Override one config key: key=value (repeatable)");

  // corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "Write the synthetic evaluation corpus and trial list");
  bool corpus_train = false;
  corpus_cmd->add_flag("--training", corpus_train, "Write the disjoint training utterances instead");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the toy verifier");
  std::string train_utt2spk;
  std::string train_root;
  std::string train_output;
  train_cmd->add_option("--utt2spk", train_utt2spk, "Labelled list '<path> <speaker>' (default: synthetic)");
  train_cmd->add_option("--audio-root", train_root, "Root for paths in --utt2spk");
  train_cmd->add_option("--output", train_output, "Model file (default <out-dir>/model.json)");

  // score
  auto* score_cmd = app.add_subcommand("score", "Score a trial list");
  std::string model_path;
  std::string trials_path;
  std::string audio_root;
  std::string score_output;
  score_cmd->add_option("--model", model_path, "Model file")->required();
  score_cmd->add_option("--trials", trials_path, "Trial list")->required();
  score_cmd->add_option("--audio-root", audio_root, "Root for trial paths")->required();
  score_cmd->add_option("--output", score_output, "Write '<label> <enroll> <test> <score>' lines here");

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "Craft an adversarial test utterance");
  std::string enroll_path;
  std::string test_path;
  std::string output_path;
  double epsilon = 5.0;
  double alpha = 1.0;
  int is_target = 0;
  bool quantize = false;
  attack_cmd->add_option("--model", model_path, "Model file")->required();
  attack_cmd->add_option("--enroll", enroll_path, "Enrollment WAV")->required();
  attack_cmd->add_option("--test", test_path, "Test WAV")->required();
  attack_cmd->add_option("--output", output_path, "Adversarial WAV")->required();
  attack_cmd->add_option("--epsilon", epsilon, "Budget in PCM16 units")->check(CLI::NonNegativeNumber);
  attack_cmd->add_option("--alpha", alpha, "Step in PCM16 units")->check(CLI::PositiveNumber);
  attack_cmd->add_option("--is-target", is_target, "1: lower the score, 0: raise it")->check(CLI::IsMember({0, 1}));
  attack_cmd->add_flag("--quantize", quantize, "Round the result onto the PCM16 grid");

  // resynth
  auto* resynth_cmd = app.add_subcommand("resynth", "Re-synthesize one WAV file");
  std::string method = "gl-mel";
  std::string input_path;
  resynth_cmd->add_option("--method", method, "identity, gl-lin, gl-mel, gaussian or vocoder");
  resynth_cmd->add_option("--input", input_path, "Input WAV")->required();
  resynth_cmd->add_option("--output", output_path, "Output WAV")->required();

  // detect
  auto* detect_cmd = app.add_subcommand("detect", "Label one test utterance genuine or adversarial");
  std::optional<double> tau;
  std::string calibration_dir;
  double fpr = 0.01;
  detect_cmd->add_option("--model", model_path, "Model file")->required();
  detect_cmd->add_option("--enroll", enroll_path, "Enrollment WAV")->required();
  detect_cmd->add_option("--test", test_path, "Test WAV")->required();
  detect_cmd->add_option("--method", method, "Re-synthesis method");
  auto* tau_opt = detect_cmd->add_option("--tau", tau, "Detection threshold");
  detect_cmd->add_option("--calibration", calibration_dir, "Experiment output whose genuine scores calibrate tau")
      ->excludes(tau_opt);
  detect_cmd->add_option("--fpr", fpr, "Genuine false-positive budget for --calibration")->check(CLI::Range(0.0, 1.0));

  // experiment / report
  auto* exp_cmd = app.add_subcommand("experiment", "Run the full attack and detection experiment");
  bool quiet = false;
  exp_cmd->add_flag("--quiet", quiet, "No progress output");
  auto* report_cmd = app.add_subcommand("report", "Re-render report tables from <out-dir>/scores.jsonl");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (corpus_cmd->parsed()) {
      const auto cfg = effective_config(g, "corpus");
      auto cc = corpus_config(cfg);
      if (corpus_train) {
        cc.first_utterance = cfg.corpus_utts_per_speaker;
        cc.utts_per_speaker = cfg.train_utts_per_speaker;
        cc.n_trials = 0;
      }
      const auto c = corpus::synth_corpus(cc);
      corpus::write_corpus(cfg.out_dir, c);
      std::cout << "wrote " << c.utterances.size() << " utterances and " << c.trials.size() << " trials to "
                << cfg.out_dir << '\n';
    } else if (train_cmd->parsed()) {
      const auto cfg = effective_config(g, ".");
      std::vector<asv::LabeledUtterance> data;
      if (!train_utt2spk.empty()) {
        for (auto& u : corpus::load_labeled(train_root, train_utt2spk)) data.push_back({std::move(u.audio), u.speaker});
      } else {
        data = harness::training_corpus(cfg);
      }
      const auto res = asv::train_model(data, harness::train_config(cfg));
      const fs::path out = train_output.empty() ? fs::path(cfg.out_dir) / "model.json" : fs::path(train_output);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      asv::save_model(out, res.model);
      print_json({{"model", out.string()},
                  {"initial_validation_eer", res.initial_validation_eer},
                  {"final_validation_eer", res.final_validation_eer},
                  {"final_loss", res.loss_history.empty() ? 0.0 : res.loss_history.back()}});
    } else if (score_cmd->parsed()) {
      const auto model = asv::load_model(model_path);
      const auto trials = parse_trials(fs::path(trials_path));
      std::map<std::string, asv::Embedding> emb;
      for (const auto& t : trials) {
        for (const auto* id : {&t.enroll, &t.test}) {
          if (!emb.contains(*id)) emb.emplace(*id, asv::embed_waveform(wav::load_wav(fs::path(audio_root) / *id), model));
        }
      }
      std::ofstream file;
      if (!score_output.empty()) {
        file.open(score_output, std::ios::binary);
        if (!file) throw DataError("cannot write " + score_output);
      }
      std::ostream& out = score_output.empty() ? std::cout : file;
      std::vector<double> tar;
      std::vector<double> non;
      for (const auto& t : trials) {
        const double s = asv::cosine_score(emb.at(t.test), emb.at(t.enroll));
        (t.is_target ? tar : non).push_back(s);
        out << (t.is_target ? 1 : 0) << ' ' << t.enroll << ' ' << t.test << ' ' << harness::format_number(s) << '\n';
      }
      if (!tar.empty() && !non.empty()) std::cerr << "EER " << detect::compute_eer(tar, non) << '\n';
    } else if (attack_cmd->parsed()) {
      const auto model = asv::load_model(model_path);
      const auto enroll = wav::load_wav(enroll_path);
      const auto test = wav::load_wav(test_path);
      attack::AttackConfig ac;
      ac.epsilon_int = epsilon;
      ac.alpha_int = alpha;
      ac.is_target = is_target == 1;
      ac.quantize_pcm16 = quantize;
      const auto res = attack::bim_attack(test, enroll, model, ac);
      wav::save_wav(output_path, res.adversarial);
      const auto e = asv::embed_waveform(enroll, model);
      print_json({{"iterations", res.iterations},
                  {"score_before", asv::cosine_score(asv::embed_waveform(test, model), e)},
                  {"score_after", asv::cosine_score(asv::embed_waveform(res.adversarial, model), e)}});
    } else if (resynth_cmd->parsed()) {
      const auto cfg = effective_config(g, ".");
      const resynth::Resynthesizer r(harness::make_method(cfg, method));
      wav::save_wav(output_path, r(wav::load_wav(input_path)));
    } else if (detect_cmd->parsed()) {
      const auto cfg = effective_config(g, ".");
      const auto model = asv::load_model(model_path);
      const resynth::Resynthesizer r(harness::make_method(cfg, method));
      detect::DetectionThreshold th;
      if (tau) {
        th.tau = *tau;
      } else if (!calibration_dir.empty()) {
        const auto table = harness::read_scores(fs::path(calibration_dir) / "scores.jsonl");
        const auto it = std::find(table.methods.begin(), table.methods.end(), method);
        if (it == table.methods.end()) {
          throw DataError("calibration scores contain no method '" + method + "'");
        }
        const auto v = harness::variations(table, static_cast<std::size_t>(it - table.methods.begin()));
        th = detect::calibrate_threshold(v.genuine, fpr);
      } else {
        throw InvalidArgument("detect needs --tau or --calibration");
      }
      const auto e = asv::embed_waveform(wav::load_wav(enroll_path), model);
      const auto x = wav::load_wav(test_path);
      const double s = asv::cosine_score(asv::embed_waveform(x, model), e);
      const double sp = asv::cosine_score(asv::embed_waveform(r(x), model), e);
      const double d = detect::score_variation(s, sp);
      print_json({{"score", s},
                  {"score_resynth", sp},
                  {"d", d},
                  {"tau", harness::format_number(th.tau)},
                  {"adversarial", d > th.tau}});
    } else if (exp_cmd->parsed()) {
      const auto cfg = effective_config(g, "results");
      const auto result = harness::run_experiment(cfg, quiet ? nullptr : &std::cerr);
      harness::write_experiment(cfg, result);
      const auto& r = result.report;
      std::cout << "genuine EER " << harness::format_number(r.genuine_eer) << '\n';
      for (std::size_t e = 0; e < r.epsilons.size(); ++e) {
        std::cout << "eps " << harness::epsilon_label(r.epsilons[e]) << ": EER "
                  << harness::format_number(r.attacked_eer[e]);
        for (const auto& mr : r.per_method) {
          if (r.epsilons[e] > 0.0) std::cout << "  " << mr.method << " AUC " << harness::format_number(mr.auc[e]);
        }
        std::cout << '\n';
      }
      std::cout << "report written to " << cfg.out_dir << '\n';
    } else if (report_cmd->parsed()) {
      if (g.out_dir.empty()) throw InvalidArgument("report needs --out-dir");
      Globals rg = g;
      if (rg.config.empty() && fs::exists(fs::path(g.out_dir) / "experiment.cfg")) {
        rg.config = (fs::path(g.out_dir) / "experiment.cfg").string();
      }
      const auto cfg = effective_config(rg, g.out_dir);
      harness::render_report(g.out_dir, cfg);
      std::cout << "report written to " << g.out_dir << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  }
  return 0;
}
