// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdsasr/lm.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tdsasr/common.h"

namespace tdsasr {

namespace {

constexpr double kLn10 = std::numbers::ln10;

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

bool LmState::operator<(const LmState& o) const {
  if (length != o.length) return length < o.length;
  for (int i = 0; i < length; ++i) {
    if (words[i] != o.words[i]) return words[i] < o.words[i];
  }
  return false;
}

std::size_t LmState::hash() const {
  std::size_t h = static_cast<std::size_t>(length);
  for (int i = 0; i < length; ++i) h = mix(h, static_cast<std::size_t>(words[i]));
  return h;
}

std::size_t ArpaLm::KeyHash::operator()(const Key& k) const {
  std::size_t h = static_cast<std::size_t>(k.length);
  for (int i = 0; i < k.length; ++i) h = mix(h, static_cast<std::size_t>(k.ids[i]));
  return h;
}

ArpaLm ArpaLm::parse(std::string_view text) {
  ArpaLm lm;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  enum class Section { kPreamble, kData, kNgrams, kEnd } section = Section::kPreamble;
  int current = 0;
  std::vector<std::size_t> declared;

  auto fail = [&](const std::string& what) {
    throw FormatError("ARPA line " + std::to_string(lineno) + ": " + what);
  };

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line == "\\data\\") {
      section = Section::kData;
      continue;
    }
    if (line == "\\end\\") {
      section = Section::kEnd;
      break;
    }
    if (line.starts_with("\\") && line.ends_with("-grams:")) {
      const int n = std::atoi(std::string(line.substr(1)).c_str());
      if (n < 1 || n > static_cast<int>(declared.size())) fail("unexpected section");
      current = n;
      section = Section::kNgrams;
      continue;
    }
    switch (section) {
      case Section::kPreamble:
        break;
      case Section::kData: {
        if (!line.starts_with("ngram ")) fail("expected 'ngram N=count'");
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail("expected 'ngram N=count'");
        const int n = std::atoi(std::string(line.substr(6, eq - 6)).c_str());
        if (n != static_cast<int>(declared.size()) + 1) fail("ngram orders out of sequence");
        if (n > kMaxLmOrder) fail("order above " + std::to_string(kMaxLmOrder));
        declared.push_back(std::stoull(std::string(line.substr(eq + 1))));
        break;
      }
      case Section::kNgrams: {
        std::istringstream ls{std::string(line)};
        std::vector<std::string> fields;
        std::string f;
        while (ls >> f) fields.push_back(f);
        if (static_cast<int>(fields.size()) != current + 1 &&
            static_cast<int>(fields.size()) != current + 2) {
          fail("wrong field count for a " + std::to_string(current) + "-gram");
        }
        Entry e;
        try {
          e.logprob = std::stof(fields[0]);
          if (static_cast<int>(fields.size()) == current + 2) {
            e.backoff = std::stof(fields[current + 1]);
          }
        } catch (const std::exception&) {
          fail("bad number");
        }
        Key key;
        key.length = current;
        for (int i = 0; i < current; ++i) {
          const std::string& w = fields[1 + i];
          if (current == 1) {
            if (lm.vocab_index_.count(w)) fail("duplicate unigram " + w);
            lm.vocab_index_[w] = lm.vocab_size();
            lm.vocab_.push_back(w);
          }
          const auto it = lm.vocab_index_.find(w);
          if (it == lm.vocab_index_.end()) fail("word '" + w + "' has no unigram");
          key.ids[i] = it->second;
        }
        lm.ngrams_[key] = e;
        if (static_cast<int>(lm.counts_.size()) < current) lm.counts_.resize(current, 0);
        ++lm.counts_[current - 1];
        break;
      }
      case Section::kEnd:
        break;
    }
  }
  if (declared.empty()) throw FormatError("ARPA text has no \\data\\ section");
  if (section != Section::kEnd) throw FormatError("ARPA text missing \\end\\");
  lm.order_ = static_cast<int>(declared.size());
  lm.counts_.resize(lm.order_, 0);

  auto lookup = [&](const char* w) {
    const auto it = lm.vocab_index_.find(w);
    return it == lm.vocab_index_.end() ? -1 : it->second;
  };
  lm.bos_ = lookup("<s>");
  lm.eos_ = lookup("</s>");
  if (lm.bos_ < 0 || lm.eos_ < 0) throw FormatError("ARPA model lacks <s> or </s>");
  lm.unk_ = lookup("<unk>");
  if (lm.unk_ < 0) {
    lm.unk_ = lm.vocab_size();
    lm.vocab_index_["<unk>"] = lm.unk_;
    lm.vocab_.push_back("<unk>");
    Key k;
    k.length = 1;
    k.ids[0] = lm.unk_;
    lm.ngrams_[k] = Entry{-100.0f, 0.0f};
  }
  return lm;
}

ArpaLm ArpaLm::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::size_t ArpaLm::ngram_count(int n) const {
  if (n < 1 || n > order_) return 0;
  return counts_[n - 1];
}

int ArpaLm::index(std::string_view word) const {
  const auto it = vocab_index_.find(std::string(word));
  return it == vocab_index_.end() ? unk_ : it->second;
}

LmState ArpaLm::begin() const {
  LmState s;
  if (order_ > 1) {
    s.words[0] = bos_;
    s.length = 1;
  }
  return s;
}

const ArpaLm::Entry* ArpaLm::find(const std::int32_t* ids, int n) const {
  Key k;
  k.length = n;
  std::copy(ids, ids + n, k.ids.begin());
  const auto it = ngrams_.find(k);
  return it == ngrams_.end() ? nullptr : &it->second;
}

double ArpaLm::score(const LmState& state, int word, LmState* next) const {
  std::array<std::int32_t, kMaxLmOrder> buf{};
  const int ctx = std::min<int>(state.length, order_ - 1);
  const int skip = state.length - ctx;
  for (int i = 0; i < ctx; ++i) buf[i] = state.words[skip + i];
  buf[ctx] = word;

  double backoff = 0.0;
  double result = 0.0;
  bool found = false;
  for (int n = ctx; n >= 0; --n) {
    // Query is the last n context words followed by `word`.
    if (const Entry* e = find(&buf[ctx - n], n + 1)) {
      result = e->logprob + backoff;
      found = true;
      break;
    }
    if (n > 0) {
      if (const Entry* h = find(&buf[ctx - n], n)) backoff += h->backoff;
    }
  }
  if (!found) throw InputError("LM word index " + std::to_string(word) + " out of range");

  if (next != nullptr) {
    LmState s;
    const int keep = std::min(ctx + 1, order_ - 1);
    for (int i = 0; i < keep; ++i) s.words[i] = buf[ctx + 1 - keep + i];
    s.length = keep;
    *next = s;
  }
  return result * kLn10;
}

double ArpaLm::finish(const LmState& state) const { return score(state, eos_); }

}  // namespace tdsasr
