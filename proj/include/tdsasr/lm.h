// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tdsasr {

inline constexpr int kMaxLmOrder = 6;

/// Word context of an n-gram query: the most recent words, oldest first.
struct LmState {
  std::array<std::int32_t, kMaxLmOrder - 1> words{};
  std::int32_t length = 0;

  bool operator==(const LmState& o) const {
    if (length != o.length) return false;
    for (int i = 0; i < length; ++i) {
      if (words[i] != o.words[i]) return false;
    }
    return true;
  }
  bool operator<(const LmState& o) const;
  std::size_t hash() const;
};

/// Back-off n-gram model read from ARPA text. Scores are natural-log.
///
/// A word missing from the vocabulary maps to `<unk>`; when the model has
/// no `<unk>` entry one is added with log10 probability -100.
class ArpaLm {
 public:
  static ArpaLm parse(std::string_view text);
  static ArpaLm load(const std::string& path);

  int order() const { return order_; }
  int vocab_size() const { return static_cast<int>(vocab_.size()); }
  std::size_t ngram_count(int n) const;

  /// Vocabulary index, or the `<unk>` index for unknown words.
  int index(std::string_view word) const;
  const std::string& word(int i) const { return vocab_.at(i); }

  LmState begin() const;
  /// log p(word | state); writes the successor state when `next` is set.
  double score(const LmState& state, int word, LmState* next = nullptr) const;
  /// log p(</s> | state).
  double finish(const LmState& state) const;

 private:
  struct Key {
    std::array<std::int32_t, kMaxLmOrder> ids{};
    std::int32_t length = 0;
    bool operator==(const Key& o) const {
      return length == o.length && ids == o.ids;
    }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  struct Entry {
    float logprob = 0.0f;  // log10
    float backoff = 0.0f;  // log10
  };

  const Entry* find(const std::int32_t* ids, int n) const;

  int order_ = 0;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> vocab_index_;
  std::unordered_map<Key, Entry, KeyHash> ngrams_;
  std::vector<std::size_t> counts_;
  int bos_ = -1;
  int eos_ = -1;
  int unk_ = -1;
};

}  // namespace tdsasr
