// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

// Exhaustive reference for lexicon-constrained CTC decoding with a bigram
// LM: every frame alignment, every segmentation of its collapsed token
// string into lexicon spellings.

#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tdsasr/common.h"
#include "test_util.h"

namespace tdsasr::testing {

// Bigram table with its own back-off lookup. Words are 0..V-1, then
// <s> = V and </s> = V + 1. Values are log10.
struct BigramTable {
  int vocab = 0;
  std::vector<double> unigram;  // size V + 2
  std::vector<double> backoff;  // size V + 2
  std::map<std::pair<int, int>, double> bigram;

  int bos() const { return vocab; }
  int eos() const { return vocab + 1; }

  double ln_prob(int prev, int word) const {
    const auto it = bigram.find({prev, word});
    const double l10 = it != bigram.end() ? it->second : backoff[prev] + unigram[word];
    return l10 * std::numbers::ln10;
  }

  std::string name(int w) const {
    if (w == bos()) return "<s>";
    if (w == eos()) return "</s>";
    return "w" + std::to_string(w);
  }

  std::string arpa() const {
    std::ostringstream out;
    out.precision(9);
    out << "\\data\\\nngram 1=" << vocab + 2 << "\nngram 2=" << bigram.size() << "\n\n\\1-grams:\n";
    for (int w = 0; w < vocab + 2; ++w) {
      out << unigram[w] << ' ' << name(w) << ' ' << backoff[w] << '\n';
    }
    out << "\n\\2-grams:\n";
    for (const auto& [k, v] : bigram) out << v << ' ' << name(k.first) << ' ' << name(k.second) << '\n';
    out << "\n\\end\\\n";
    return out.str();
  }
};

struct OracleInstance {
  int tokens = 0;  // including blank
  int blank = 0;
  std::vector<std::vector<int>> spellings;  // per word
  BigramTable lm;
  Matrix emissions;

  std::string token_text() const {
    std::string s = "#blank t" + std::to_string(blank) + "\n";
    for (int t = 0; t < tokens; ++t) s += "t" + std::to_string(t) + "\n";
    return s;
  }
  std::string lexicon_text() const {
    std::string s;
    for (std::size_t w = 0; w < spellings.size(); ++w) {
      s += "w" + std::to_string(w) + "\t";
      for (std::size_t i = 0; i < spellings[w].size(); ++i) {
        s += (i ? " t" : "t") + std::to_string(spellings[w][i]);
      }
      s += "\n";
    }
    return s;
  }
};

inline OracleInstance random_oracle_instance(std::mt19937_64& rng) {
  OracleInstance in;
  in.tokens = uniform_int(rng, 2, 5);
  int max_t = 10;
  while (std::pow(static_cast<double>(in.tokens), max_t) > 2.0e5) --max_t;
  const int frames = uniform_int(rng, 1, max_t);
  in.blank = uniform_int(rng, 0, in.tokens - 1);

  std::vector<int> letters;
  for (int t = 0; t < in.tokens; ++t) {
    if (t != in.blank) letters.push_back(t);
  }
  const int words = uniform_int(rng, 1, 6);
  for (int w = 0; w < words; ++w) {
    std::vector<int> sp(uniform_int(rng, 1, 3));
    for (int& t : sp) t = letters[uniform_int(rng, 0, static_cast<int>(letters.size()) - 1)];
    in.spellings.push_back(sp);
  }

  // Values are float-representable so the ARPA text carries them exactly.
  std::uniform_real_distribution<float> lp_dist(-2.5f, -0.2f);
  std::uniform_real_distribution<float> bo_dist(-0.8f, 0.0f);
  auto lp = [&](std::mt19937_64& g) { return static_cast<double>(lp_dist(g)); };
  auto bo = [&](std::mt19937_64& g) { return static_cast<double>(bo_dist(g)); };
  in.lm.vocab = words;
  for (int w = 0; w < words + 2; ++w) {
    in.lm.unigram.push_back(lp(rng));
    in.lm.backoff.push_back(bo(rng));
  }
  for (int a = 0; a < words + 1; ++a) {  // contexts: words and <s>
    const int prev = a < words ? a : in.lm.bos();
    for (int b = 0; b < words + 1; ++b) {
      const int next = b < words ? b : in.lm.eos();
      if (uniform_int(rng, 0, 2) == 0) in.lm.bigram[{prev, next}] = lp(rng);
    }
  }

  const float temperature = std::uniform_real_distribution<float>(0.5f, 4.0f)(rng);
  Matrix logits = random_matrix(frames, in.tokens, rng, temperature);
  in.emissions = Matrix(frames, in.tokens);
  for (int t = 0; t < frames; ++t) {
    double m = -std::numeric_limits<double>::infinity();
    for (float v : logits.row(t)) m = std::max<double>(m, v);
    double z = 0.0;
    for (float v : logits.row(t)) z += std::exp(v - m);
    for (int k = 0; k < in.tokens; ++k) {
      in.emissions(t, k) = static_cast<float>(logits(t, k) - m - std::log(z));
    }
  }
  return in;
}

struct OracleResult {
  std::vector<int> words;
  double score = -std::numeric_limits<double>::infinity();
};

inline OracleResult brute_force_decode(const OracleInstance& in, double alpha, double beta) {
  const int T = in.emissions.rows();
  const int N = in.tokens;

  // Best segmentation of a collapsed token string, memoized by string.
  std::map<std::vector<int>, OracleResult> seg_cache;
  auto best_segmentation = [&](const std::vector<int>& toks) -> const OracleResult& {
    auto it = seg_cache.find(toks);
    if (it != seg_cache.end()) return it->second;
    OracleResult best;
    std::vector<int> chosen;
    std::function<void(std::size_t, int, double)> rec = [&](std::size_t pos, int prev, double lm) {
      if (pos == toks.size()) {
        const double total = alpha * (lm + in.lm.ln_prob(prev, in.lm.eos())) +
                             beta * static_cast<double>(chosen.size());
        if (total > best.score) {
          best.score = total;
          best.words = chosen;
        }
        return;
      }
      for (std::size_t w = 0; w < in.spellings.size(); ++w) {
        const auto& sp = in.spellings[w];
        if (pos + sp.size() > toks.size()) continue;
        if (!std::equal(sp.begin(), sp.end(), toks.begin() + pos)) continue;
        chosen.push_back(static_cast<int>(w));
        rec(pos + sp.size(), static_cast<int>(w), lm + in.lm.ln_prob(prev, static_cast<int>(w)));
        chosen.pop_back();
      }
    };
    rec(0, in.lm.bos(), 0.0);
    return seg_cache.emplace(toks, best).first->second;
  };

  OracleResult best;
  std::vector<int> align(T, 0);
  while (true) {
    double ac = 0.0;
    std::vector<int> toks;
    int prev = -1;
    for (int t = 0; t < T; ++t) {
      ac += in.emissions(t, align[t]);
      if (align[t] != prev && align[t] != in.blank) toks.push_back(align[t]);
      prev = align[t];
    }
    const OracleResult& seg = best_segmentation(toks);
    if (seg.score > -std::numeric_limits<double>::infinity()) {
      const double total = ac + seg.score;
      if (total > best.score) {
        best.score = total;
        best.words = seg.words;
      }
    }
    int i = T - 1;
    while (i >= 0 && ++align[i] == N) align[i--] = 0;
    if (i < 0) break;
  }
  return best;
}

}  // namespace tdsasr::testing
