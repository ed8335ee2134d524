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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace resyndet {

/// One verification trial: `<label 0|1> <enroll_path> <test_path>`.
struct Trial {
  bool is_target = false;
  std::string enroll;
  std::string test;

  friend bool operator==(const Trial&, const Trial&) = default;
};

/// Parses a trial list; blank lines are skipped. Errors name the 1-based line.
std::vector<Trial> parse_trials(std::istream& in, const std::string& name = "<trials>");
std::vector<Trial> parse_trials(const std::filesystem::path& path);

void write_trials(std::ostream& out, const std::vector<Trial>& trials);
void write_trials(const std::filesystem::path& path, const std::vector<Trial>& trials);

}  // namespace resyndet
