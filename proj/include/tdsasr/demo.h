// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdsasr/model.h"

namespace tdsasr {

/// Small architecture of the same shape as the reference one: two
/// stride-2 convolutions, each followed by TDS blocks, then a projection.
struct ToyModelOptions {
  int input_dim = 80;
  int token_count = 9;
  int width = 80;          // w; must divide input_dim
  int channels = 2;        // c
  int kernel_size = 5;
  int tds_right_pad = 1;   // rPad of every TDS block
  int conv_right_pad = 1;  // rPad of the subsampling convolutions
  int blocks = 1;          // TDS blocks after each convolution
};

ModelSpec toy_model_spec(const ToyModelOptions& options);

/// Seeded test signal: a few harmonics whose pitch and level change every
/// 100-250 ms, plus light noise.
std::vector<float> synth_audio(double seconds, std::uint64_t seed, int sample_rate = 16000);

/// Token set, lexicon and bigram LM over eight letter tokens.
std::string demo_tokens_text();
std::string demo_lexicon_text();
std::string demo_lm_text();

struct DemoAssets {
  std::string dir;
  std::string tokens;
  std::string lexicon;
  std::string lm;
  std::string model;
  std::string config;
  std::vector<std::string> audio;       // .wav
  std::vector<std::string> alignments;  // .ali next to each .wav
};

/// Writes a complete runnable asset set (random-weight toy model included)
/// into `dir`, which is created if needed.
DemoAssets write_demo_assets(const std::string& dir, std::uint64_t seed = 1,
                             int utterances = 4, double seconds = 4.0);

}  // namespace tdsasr
