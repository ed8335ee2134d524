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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "resyndet/wav.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using resyndet::testing::scratch_dir;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Run cli(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt";
  const std::string cmd = quote(RESYNDET_CLI) + " " + args + " > " + quote(out.string()) + " 2> " +
                          quote((dir / "stderr.txt").string());
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(out);
  std::ostringstream s;
  s << in.rdbuf();
  r.out = s.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Small but complete experiment configuration.
void write_tiny_config(const fs::path& path) {
  std::ofstream(path) << "format_version = 1\n"
                         "methods = gl-mel,gaussian\n"
                         "epsilons = 2,4\n"
                         "corpus.speakers = 3\n"
                         "corpus.utts_per_speaker = 3\n"
                         "corpus.duration_s = 0.3\n"
                         "corpus.trials = 12\n"
                         "train.utts_per_speaker = 3\n"
                         "train.steps = 10\n"
                         "train.hidden_dim = 8\n"
                         "train.embedding_dim = 4\n"
                         "gl.iterations = 4\n"
                         "report.histogram_bins = 5\n";
}

const std::string kSmallCorpus =
    "--set corpus.speakers=3 --set corpus.utts_per_speaker=3 --set corpus.duration_s=0.3 --set corpus.trials=12 "
    "--set train.utts_per_speaker=3 --set train.steps=10 --set train.hidden_dim=8 --set train.embedding_dim=4";

}  // namespace

TEST_CASE("usage errors exit with status 1") {
  const auto dir = scratch_dir("cli-usage");
  CHECK(cli("", dir).status == 1);
  CHECK(cli("frobnicate", dir).status == 1);
  CHECK(cli("corpus --bogus", dir).status == 1);
  CHECK(cli("--help", dir).status == 0);
  CHECK(cli("--config " + quote((dir / "none.cfg").string()) + " corpus", dir).status == 1);
  CHECK(cli("--set nokey corpus", dir).status == 1);
  CHECK(cli("--set unknown.key=3 corpus", dir).status == 1);
  CHECK(cli("attack --model m --enroll a --test b --output c --epsilon -1", dir).status == 1);
  CHECK(cli("report", dir).status == 1);
}

TEST_CASE("corpus, train, score, attack, resynth and detect work together") {
  const auto dir = scratch_dir("cli-flow");
  const auto corpus_dir = dir / "corpus";
  REQUIRE(cli("--seed 3 --out-dir " + quote(corpus_dir.string()) + " " + kSmallCorpus + " corpus", dir).status == 0);
  CHECK(fs::exists(corpus_dir / "trials.txt"));
  CHECK(fs::exists(corpus_dir / "utt2spk.txt"));
  CHECK(fs::exists(corpus_dir / "spk00" / "utt000.wav"));

  const auto model = dir / "model.json";
  auto r = cli("--seed 3 " + kSmallCorpus + " train --output " + quote(model.string()), dir);
  REQUIRE(r.status == 0);
  CHECK(fs::exists(model));
  CHECK(nlohmann::json::parse(r.out).contains("final_validation_eer"));

  r = cli("train --utt2spk " + quote((corpus_dir / "utt2spk.txt").string()) + " --audio-root " +
              quote(corpus_dir.string()) + " --set train.steps=5 --set train.hidden_dim=8 --set train.embedding_dim=4" +
              " --output " + quote((dir / "model2.json").string()),
          dir);
  CHECK(r.status == 0);

  r = cli("score --model " + quote(model.string()) + " --trials " + quote((corpus_dir / "trials.txt").string()) +
              " --audio-root " + quote(corpus_dir.string()),
          dir);
  REQUIRE(r.status == 0);
  std::istringstream lines(r.out);
  std::size_t n = 0;
  for (std::string l; std::getline(lines, l);) ++n;
  CHECK(n == 12);

  const auto enroll = corpus_dir / "spk00" / "utt000.wav";
  const auto test = corpus_dir / "spk01" / "utt000.wav";
  const auto adv0 = dir / "adv0.wav";
  r = cli("attack --model " + quote(model.string()) + " --enroll " + quote(enroll.string()) + " --test " +
              quote(test.string()) + " --output " + quote(adv0.string()) + " --epsilon 0",
          dir);
  REQUIRE(r.status == 0);
  CHECK(nlohmann::json::parse(r.out).at("iterations") == 0);
  const auto x = resyndet::wav::load_wav(test);
  const auto y = resyndet::wav::load_wav(adv0);
  REQUIRE(y.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(x.samples[i] - y.samples[i]) <= 1.0 / 32768.0);

  const auto adv = dir / "adv.wav";
  r = cli("attack --model " + quote(model.string()) + " --enroll " + quote(enroll.string()) + " --test " +
              quote(test.string()) + " --output " + quote(adv.string()) + " --epsilon 5",
          dir);
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("iterations") == 5);
  CHECK(j.at("score_after").get<double>() >= j.at("score_before").get<double>());

  for (const char* m : {"identity", "gl-lin", "gl-mel", "gaussian"}) {
    CAPTURE(m);
    const auto out = dir / (std::string(m) + ".wav");
    CHECK(cli(std::string("resynth --method ") + m + " --input " + quote(adv.string()) + " --output " +
                  quote(out.string()),
              dir)
              .status == 0);
    CHECK(resyndet::wav::load_wav(out).size() == x.size());
  }

  r = cli("detect --model " + quote(model.string()) + " --enroll " + quote(enroll.string()) + " --test " +
              quote(adv.string()) + " --method gaussian --tau 1e9",
          dir);
  REQUIRE(r.status == 0);
  CHECK(nlohmann::json::parse(r.out).at("adversarial") == false);
  r = cli("detect --model " + quote(model.string()) + " --enroll " + quote(enroll.string()) + " --test " +
              quote(adv.string()) + " --method gaussian --tau -1",
          dir);
  REQUIRE(r.status == 0);
  CHECK(nlohmann::json::parse(r.out).at("adversarial") == true);
  CHECK(cli("detect --model " + quote(model.string()) + " --enroll " + quote(enroll.string()) + " --test " +
                quote(adv.string()),
            dir)
            .status == 1);
}

TEST_CASE("data and bridge failures map to exit codes 2 and 3") {
  const auto dir = scratch_dir("cli-errors");
  std::ofstream(dir / "bad.wav") << "not a wav file";
  CHECK(cli("resynth --method identity --input " + quote((dir / "bad.wav").string()) + " --output " +
                quote((dir / "o.wav").string()),
            dir)
            .status == 2);
  resyndet::wav::save_wav(dir / "ok.wav", resyndet::testing::noise(1, 2000));
  const std::string stub = std::string(RESYNDET_IDENTITY_VOCODER);
  CHECK(cli("--set " + quote("vocoder.command=" + stub + " --fail") + " resynth --method vocoder --input " +
                quote((dir / "ok.wav").string()) + " --output " + quote((dir / "o.wav").string()),
            dir)
            .status == 3);
  CHECK(cli("--set " + quote("vocoder.command=" + stub) + " resynth --method vocoder --input " +
                quote((dir / "ok.wav").string()) + " --output " + quote((dir / "o.wav").string()),
            dir)
            .status == 0);
}

TEST_CASE("experiment is byte-identical across runs and report re-renders the named files") {
  const auto dir = scratch_dir("cli-experiment");
  const auto cfg = dir / "c.cfg";
  write_tiny_config(cfg);
  const auto a = dir / "a";
  const auto b = dir / "b";
  REQUIRE(cli("experiment --quiet --config " + quote(cfg.string()) + " --seed 7 --out-dir " + quote(a.string()), dir)
              .status == 0);
  REQUIRE(cli("experiment --quiet --config " + quote(cfg.string()) + " --seed 7 --out-dir " + quote(b.string()), dir)
              .status == 0);
  const std::vector<std::string> files = {"table1_eer.csv", "table2_auc.csv", "table3_dr.csv", "roc_eps2.csv",
                                          "roc_eps4.csv",   "hist_d.csv",     "control_dr.csv", "report.json",
                                          "scores.jsonl"};
  for (const auto& f : files) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }

  const auto saved = slurp(a / "report.json");
  for (const auto& f : files) {
    if (f != "scores.jsonl") fs::remove(a / f);
  }
  REQUIRE(cli("--out-dir " + quote(a.string()) + " report", dir).status == 0);
  for (const auto& f : files) CHECK(fs::exists(a / f));
  CHECK(slurp(a / "report.json") == saved);
}
