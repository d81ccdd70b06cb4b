// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdsasr/demo.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "tdsasr/bench.h"
#include "tdsasr/engine.h"
#include "tdsasr/wav.h"

namespace tdsasr {

namespace {

const std::vector<std::string> kLetters = {"a", "b", "c", "d", "e", "f", "g", "h"};

const std::vector<std::string> kWords = {"a",   "b",   "c",    "d",   "e",  "f",
                                         "g",   "h",   "ab",   "bad", "cab", "dag",
                                         "egg", "fed", "head", "hag", "ace", "beef"};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << text;
}

}  // namespace

ModelSpec toy_model_spec(const ToyModelOptions& o) {
  if (o.input_dim != o.width) throw SpecError("toy model input_dim must equal width");
  ModelSpec spec;
  spec.input_dim = o.input_dim;
  spec.token_count = o.token_count;
  auto conv = [&](int c_in, int c_out) {
    ConvLayerSpec l;
    l.conv.in_channels = o.width * c_in;
    l.conv.out_channels = o.width * c_out;
    l.conv.kernel_size = o.kernel_size;
    l.conv.stride = 2;
    l.conv.groups = o.width;
    l.conv.right_pad = o.conv_right_pad;
    l.conv.left_pad = o.kernel_size - 2 - o.conv_right_pad;
    spec.layers.push_back(l);
  };
  conv(1, o.channels);
  for (int i = 0; i < o.blocks; ++i) {
    spec.layers.push_back(TdsBlockSpec{o.channels, o.kernel_size, o.width, o.tds_right_pad, false});
  }
  conv(o.channels, o.channels);
  for (int i = 0; i < o.blocks; ++i) {
    spec.layers.push_back(TdsBlockSpec{o.channels, o.kernel_size, o.width, o.tds_right_pad, false});
  }
  spec.layers.push_back(LinearLayerSpec{o.width * o.channels, o.token_count, false});
  spec.validate();
  return spec;
}

std::vector<float> synth_audio(double seconds, std::uint64_t seed, int sample_rate) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> seg_len(0.1, 0.25);
  std::uniform_real_distribution<double> pitch(90.0, 400.0);
  std::uniform_real_distribution<double> level(0.02, 0.3);
  std::normal_distribution<double> noise(0.0, 0.003);
  const auto n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  std::vector<float> out(n);
  std::size_t i = 0;
  double phase = 0.0;
  while (i < n) {
    const auto len = static_cast<std::size_t>(seg_len(rng) * sample_rate);
    const double f0 = pitch(rng);
    const double amp = level(rng);
    const bool silent = rng() % 5 == 0;
    for (std::size_t k = 0; k < len && i < n; ++k, ++i) {
      phase += 2.0 * std::numbers::pi * f0 / sample_rate;
      double v = 0.0;
      if (!silent) {
        for (int h = 1; h <= 4; ++h) v += std::sin(h * phase) / h;
      }
      out[i] = static_cast<float>(amp * v + noise(rng));
    }
  }
  return out;
}

std::string demo_tokens_text() {
  std::string s = "#blank _\n_\n";
  for (const auto& l : kLetters) s += l + "\n";
  return s;
}

std::string demo_lexicon_text() {
  std::string s;
  for (const auto& w : kWords) {
    s += w + "\t";
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (i > 0) s += ' ';
      s += w[i];
    }
    s += '\n';
  }
  return s;
}

std::string demo_lm_text() {
  // Unigrams favour short words; a handful of bigrams reward pairs.
  std::vector<std::string> vocab = {"<s>", "</s>", "<unk>"};
  vocab.insert(vocab.end(), kWords.begin(), kWords.end());
  const std::vector<std::pair<std::string, std::string>> bigrams = {
      {"<s>", "a"},     {"a", "bad"},  {"bad", "egg"}, {"cab", "head"},
      {"fed", "beef"},  {"dag", "h"},  {"e", "ace"},   {"egg", "</s>"},
      {"head", "</s>"}, {"b", "c"},    {"c", "d"},     {"g", "hag"}};
  std::ostringstream out;
  out << "\\data\\\nngram 1=" << vocab.size() << "\nngram 2=" << bigrams.size() << "\n\n";
  out << "\\1-grams:\n";
  for (const auto& w : vocab) {
    double p = -1.0 - 0.1 * static_cast<double>(w.size());
    if (w == "<s>") p = -99.0;
    if (w == "<unk>") p = -5.0;
    out << p << '\t' << w << "\t-0.3\n";
  }
  out << "\n\\2-grams:\n";
  for (const auto& [a, b] : bigrams) out << "-0.4\t" << a << ' ' << b << '\n';
  out << "\n\\end\\\n";
  return out.str();
}

DemoAssets write_demo_assets(const std::string& dir, std::uint64_t seed, int utterances,
                             double seconds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  DemoAssets a;
  a.dir = dir;
  a.tokens = (fs::path(dir) / "tokens.txt").string();
  a.lexicon = (fs::path(dir) / "lexicon.txt").string();
  a.lm = (fs::path(dir) / "lm.arpa").string();
  a.model = (fs::path(dir) / "model.tdsm").string();
  a.config = (fs::path(dir) / "engine.conf").string();
  write_text(a.tokens, demo_tokens_text());
  write_text(a.lexicon, demo_lexicon_text());
  write_text(a.lm, demo_lm_text());

  ToyModelOptions opts;
  opts.token_count = static_cast<int>(kLetters.size()) + 1;
  save_model(Model::random(toy_model_spec(opts), seed), a.model);

  std::ostringstream conf;
  conf << "# demo engine configuration\n"
       << "model = model.tdsm\nlexicon = lexicon.txt\nlm = lm.arpa\ntokens = tokens.txt\n"
       << "chunk-ms = 750\nbeam-size = 100\ntopk = 50\nblank-threshold = 0.95\n"
       << "lm-weight = 0.5\nword-score = 1\n";
  write_text(a.config, conf.str());

  const EngineConfig cfg = EngineConfig::load(a.config);
  const Engine engine(Resources::load(cfg), cfg);
  for (int u = 0; u < utterances; ++u) {
    const std::string stem = "utt" + std::to_string(u);
    const std::string wav = (fs::path(dir) / (stem + ".wav")).string();
    write_wav(wav, synth_audio(seconds, seed * 1000 + u), cfg.frontend.sample_rate);
    // Align what a reader of the file will see, after 16-bit rounding.
    const WavData audio = read_wav(wav);
    const std::string ali = (fs::path(dir) / (stem + ".ali")).string();
    write_text(ali, alignments_to_text(offline_alignments(engine, audio.samples)));
    a.audio.push_back(wav);
    a.alignments.push_back(ali);
  }
  return a;
}

}  // namespace tdsasr
