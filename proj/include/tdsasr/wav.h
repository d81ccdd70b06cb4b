// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

namespace tdsasr {

struct WavData {
  std::vector<float> samples;  // scaled to [-1, 1)
  int sample_rate = 0;
};

/// Reads a mono 16-bit little-endian PCM WAV file.
WavData read_wav(const std::string& path);
void write_wav(const std::string& path, std::span<const float> samples,
               int sample_rate);

}  // namespace tdsasr
