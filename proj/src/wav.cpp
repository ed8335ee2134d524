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

#include "resyndet/wav.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

namespace resyndet::wav {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

bool tag_is(const std::uint8_t* p, const char* tag) { return std::equal(p, p + 4, tag); }

}  // namespace

Waveform decode(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  if (bytes.size() < 12 || !tag_is(bytes.data(), "RIFF") || !tag_is(bytes.data() + 8, "WAVE")) {
    throw MalformedWavError(name + ": missing RIFF/WAVE header");
  }
  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) {
      throw MalformedWavError(name + ": chunk '" + std::string(chunk, chunk + 4) +
                              "' extends past end of file");
    }
    if (tag_is(chunk, "fmt ")) {
      if (size < 16) throw MalformedWavError(name + ": fmt chunk too short");
      std::uint16_t format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      sample_rate = read_u32(bytes.data() + body + 4);
      const std::uint16_t bits = read_u16(bytes.data() + body + 14);
      if (format == kFormatExtensible && size >= 26) format = read_u16(bytes.data() + body + 24);
      if (format != kFormatPcm || bits != 16) {
        throw UnsupportedFormatError(name + ": only 16-bit integer PCM is supported (format " +
                                     std::to_string(format) + ", " + std::to_string(bits) + " bits)");
      }
      if (channels != 1) {
        throw ChannelCountError(name + ": expected mono audio, found " + std::to_string(channels) +
                                " channels");
      }
      if (sample_rate == 0) throw MalformedWavError(name + ": sample rate is zero");
      have_fmt = true;
    } else if (tag_is(chunk, "data")) {
      if (!have_fmt) throw MalformedWavError(name + ": data chunk before fmt chunk");
      if (size % 2 != 0) throw MalformedWavError(name + ": odd PCM16 data size");
      const std::size_t n = size / 2;
      if (n == 0) throw MalformedWavError(name + ": no samples");
      std::vector<double> samples(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<std::int16_t>(read_u16(bytes.data() + body + 2 * i));
        samples[i] = static_cast<double>(v) / 32768.0;
      }
      return Waveform(std::move(samples), static_cast<int>(sample_rate));
    }
    pos = body + size + (size & 1u);
  }
  throw MalformedWavError(name + (have_fmt ? ": missing data chunk" : ": missing fmt chunk"));
}

std::vector<std::uint8_t> encode(const Waveform& x) {
  if (x.sample_rate <= 0) throw InvalidArgument("cannot encode a waveform with non-positive sample rate");
  const auto data_bytes = static_cast<std::uint32_t>(x.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(x.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(x.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : x.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes, path.string());
}

void save_wav(const std::filesystem::path& path, const Waveform& x) {
  const auto bytes = encode(x);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write audio file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing audio file " + path.string());
}

}  // namespace resyndet::wav
