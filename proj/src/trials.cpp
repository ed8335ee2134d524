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

#include "resyndet/trials.hpp"

#include <fstream>
#include <sstream>

#include "resyndet/error.hpp"

namespace resyndet {

std::vector<Trial> parse_trials(std::istream& in, const std::string& name) {
  std::vector<Trial> trials;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string label;
    if (!(fields >> label)) continue;
    Trial t;
    std::string extra;
    if (!(fields >> t.enroll >> t.test) || (fields >> extra)) {
      throw DataError(name + ":" + std::to_string(line_no) +
                      ": expected '<label 0|1> <enroll_path> <test_path>'");
    }
    if (label == "1") {
      t.is_target = true;
    } else if (label != "0") {
      throw DataError(name + ":" + std::to_string(line_no) + ": unknown label '" + label +
                      "' (expected 0 or 1)");
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

std::vector<Trial> parse_trials(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trial list " + path.string());
  return parse_trials(in, path.string());
}

void write_trials(std::ostream& out, const std::vector<Trial>& trials) {
  for (const auto& t : trials) out << (t.is_target ? '1' : '0') << ' ' << t.enroll << ' ' << t.test << '\n';
}

void write_trials(const std::filesystem::path& path, const std::vector<Trial>& trials) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write trial list " + path.string());
  write_trials(out, trials);
}

}  // namespace resyndet
