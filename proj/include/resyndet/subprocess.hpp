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

#include <chrono>
#include <string>
#include <vector>

namespace resyndet {

/// Runs argv[0] (looked up on PATH) with the given arguments and waits for it.
/// Returns the exit status; a process killed by a signal reports 128 + signo.
/// Throws BridgeError if the process cannot be started or exceeds `timeout`,
/// in which case it is killed.
int run_process(const std::vector<std::string>& argv, std::chrono::milliseconds timeout);

}  // namespace resyndet
