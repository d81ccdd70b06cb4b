// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tdsasr {

/// Output token inventory, including the reserved CTC blank.
///
/// File format: a header line `#blank <token>` followed by one token per
/// line; the blank must be one of the listed tokens. Tokens starting with
/// U+2581 begin a new word and a token spelled `|` separates words.
class TokenSet {
 public:
  TokenSet(std::vector<std::string> tokens, int blank);
  static TokenSet parse(std::string_view text);
  static TokenSet load(const std::string& path);

  int size() const { return static_cast<int>(tokens_.size()); }
  int blank() const { return blank_; }
  const std::string& token(int i) const { return tokens_.at(i); }
  std::optional<int> find(std::string_view token) const;

  bool has_word_markers() const { return has_markers_; }
  bool starts_word(int token) const;
  bool is_separator(int token) const;
  /// Token text with any word-start marker removed.
  std::string strip_marker(int token) const;

  std::string to_text() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int blank_ = 0;
  bool has_markers_ = false;
};

/// Word spellings over tokens, compiled into a trie. Node 0 is the root.
///
/// File format: `word<TAB>tok1 tok2 ...`, one spelling per line; a word may
/// appear on several lines.
class Lexicon {
 public:
  struct Node {
    std::vector<std::pair<int, int>> children;  // (token, node), sorted
    std::vector<int> words;                     // words spelled to here
  };

  using Entry = std::pair<std::string, std::vector<std::string>>;

  static Lexicon build(const TokenSet& tokens, const std::vector<Entry>& entries);
  static Lexicon parse(std::string_view text, const TokenSet& tokens);
  static Lexicon load(const std::string& path, const TokenSet& tokens);

  static constexpr int kRoot = 0;

  int child(int node, int token) const;
  const Node& node(int i) const { return nodes_.at(i); }
  int node_count() const { return static_cast<int>(nodes_.size()); }

  int word_count() const { return static_cast<int>(words_.size()); }
  const std::string& word(int id) const { return words_.at(id); }
  std::optional<int> find_word(std::string_view word) const;
  const std::vector<std::vector<int>>& spellings(int id) const {
    return spellings_.at(id);
  }

  /// Every (word, spelling) pair recovered by walking the trie.
  std::vector<std::pair<int, std::vector<int>>> trie_paths() const;

 private:
  std::vector<Node> nodes_;
  std::vector<std::string> words_;
  std::vector<std::vector<std::vector<int>>> spellings_;
  std::unordered_map<std::string, int> word_index_;
};

}  // namespace tdsasr
