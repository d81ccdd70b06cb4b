// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdsasr/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tdsasr/common.h"

namespace tdsasr {

namespace {

std::uint32_t le32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(path + " is not a RIFF/WAVE file");
  }
  WavData wav;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::uint32_t size = le32(&buf[pos + 4]);
    const std::size_t body = pos + 8;
    if (body + size > buf.size()) throw FormatError(path + ": truncated chunk");
    if (std::memcmp(&buf[pos], "fmt ", 4) == 0) {
      if (size < 16) throw FormatError(path + ": short fmt chunk");
      const std::uint16_t format = le16(&buf[body]);
      const std::uint16_t channels = le16(&buf[body + 2]);
      const std::uint16_t bits = le16(&buf[body + 14]);
      if (format != 1 || bits != 16) {
        throw FormatError(path + ": only 16-bit PCM is supported");
      }
      if (channels != 1) throw FormatError(path + ": only mono audio is supported");
      wav.sample_rate = static_cast<int>(le32(&buf[body + 4]));
      have_fmt = true;
    } else if (std::memcmp(&buf[pos], "data", 4) == 0) {
      if (!have_fmt) throw FormatError(path + ": data chunk before fmt chunk");
      const std::size_t n = size / 2;
      wav.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<std::int16_t>(le16(&buf[body + 2 * i]));
        wav.samples[i] = static_cast<float>(v) / 32768.0f;
      }
      return wav;
    }
    pos = body + size + (size & 1);
  }
  throw FormatError(path + ": no data chunk");
}

void write_wav(const std::string& path, std::span<const float> samples,
               int sample_rate) {
  std::string out;
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out += "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, data_bytes);
  for (float s : samples) {
    const float c = std::clamp(s, -1.0f, 32767.0f / 32768.0f);
    put16(out, static_cast<std::uint16_t>(
                   static_cast<std::int16_t>(std::lround(c * 32768.0f))));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace tdsasr
