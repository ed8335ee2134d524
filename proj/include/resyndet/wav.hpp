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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "resyndet/error.hpp"
#include "resyndet/waveform.hpp"

namespace resyndet::wav {

/// File is not a well-formed RIFF/WAVE container.
class MalformedWavError : public DataError {
 public:
  using DataError::DataError;
};

/// File is RIFF/WAVE but not 16-bit integer PCM.
class UnsupportedFormatError : public DataError {
 public:
  using DataError::DataError;
};

/// File has more than one channel.
class ChannelCountError : public DataError {
 public:
  using DataError::DataError;
};

/// Decodes a mono PCM16 WAV image; samples are scaled by 1/32768.
Waveform decode(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>");

/// Encodes as mono PCM16: clamp to [-1, 1], scale by 32768, round half away
/// from zero, saturate to [-32768, 32767].
std::vector<std::uint8_t> encode(const Waveform& x);

Waveform load_wav(const std::filesystem::path& path);
void save_wav(const std::filesystem::path& path, const Waveform& x);

}  // namespace resyndet::wav
