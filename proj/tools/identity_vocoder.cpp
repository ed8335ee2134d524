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

// Reference external vocoder: copies every <in-dir>/<i>.wav to <out-dir>.
// Usage: identity_vocoder [--drop <i>] [--fail] --in-dir D --out-dir D --sample-rate SR
// --drop and --fail exist to exercise the bridge's error handling.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "resyndet/wav.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Identity vocoder for the re-synthesis bridge"};
  std::string in_dir;
  std::string out_dir;
  int sample_rate = 0;
  int drop = -1;
  bool fail = false;
  app.add_option("--in-dir", in_dir)->required();
  app.add_option("--out-dir", out_dir)->required();
  app.add_option("--sample-rate", sample_rate)->required();
  app.add_option("--drop", drop, "Skip the output with this index");
  app.add_flag("--fail", fail, "Exit with status 4 without writing anything");
  CLI11_PARSE(app, argc, argv);
  if (fail) return 4;
  try {
    for (const auto& entry : fs::directory_iterator(in_dir)) {
      const auto name = entry.path().filename();
      if (drop >= 0 && name == std::to_string(drop) + ".wav") continue;
      const auto x = resyndet::wav::load_wav(entry.path());
      if (x.sample_rate != sample_rate) {
        std::cerr << "sample rate mismatch in " << name << '\n';
        return 2;
      }
      resyndet::wav::save_wav(fs::path(out_dir) / name, x);
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 0;
}
