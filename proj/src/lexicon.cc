// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdsasr/lexicon.h"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "tdsasr/common.h"

namespace tdsasr {

namespace {

constexpr std::string_view kWordMarker = "\xE2\x96\x81";  // U+2581
constexpr std::string_view kSeparator = "|";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

TokenSet::TokenSet(std::vector<std::string> tokens, int blank)
    : tokens_(std::move(tokens)), blank_(blank) {
  if (tokens_.empty()) throw FormatError("token set is empty");
  if (blank < 0 || blank >= size()) throw FormatError("blank index out of range");
  for (int i = 0; i < size(); ++i) {
    if (tokens_[i].empty()) throw FormatError("empty token at index " + std::to_string(i));
    if (!index_.emplace(tokens_[i], i).second) {
      throw FormatError("duplicate token '" + tokens_[i] + "'");
    }
    if (i != blank_ && (tokens_[i].starts_with(kWordMarker) || tokens_[i] == kSeparator)) {
      has_markers_ = true;
    }
  }
}

TokenSet TokenSet::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::optional<std::string> blank;
  std::vector<std::string> tokens;
  while (std::getline(in, line)) {
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (!blank) {
      if (!t.starts_with("#blank")) {
        throw FormatError("token set must start with a '#blank <token>' header");
      }
      const std::string_view name = trim(t.substr(6));
      if (name.empty()) throw FormatError("token set header names no blank");
      blank = std::string(name);
      continue;
    }
    tokens.emplace_back(t);
  }
  if (!blank) throw FormatError("token set is empty");
  const auto it = std::find(tokens.begin(), tokens.end(), *blank);
  if (it == tokens.end()) {
    throw FormatError("blank token '" + *blank + "' is not in the token list");
  }
  const int blank_index = static_cast<int>(it - tokens.begin());
  return TokenSet(std::move(tokens), blank_index);
}

TokenSet TokenSet::load(const std::string& path) { return parse(read_file(path)); }

std::optional<int> TokenSet::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool TokenSet::starts_word(int token) const {
  return token != blank_ && tokens_.at(token).starts_with(kWordMarker);
}

bool TokenSet::is_separator(int token) const {
  return token != blank_ && tokens_.at(token) == kSeparator;
}

std::string TokenSet::strip_marker(int token) const {
  const std::string& t = tokens_.at(token);
  if (starts_word(token)) return t.substr(kWordMarker.size());
  return t;
}

std::string TokenSet::to_text() const {
  std::string out = "#blank " + tokens_[blank_] + "\n";
  for (const auto& t : tokens_) out += t + "\n";
  return out;
}

Lexicon Lexicon::build(const TokenSet& tokens, const std::vector<Entry>& entries) {
  Lexicon lex;
  lex.nodes_.emplace_back();
  for (const auto& [word, spelling] : entries) {
    if (word.empty()) throw FormatError("lexicon entry with empty word");
    if (spelling.empty()) throw FormatError("lexicon word '" + word + "' has no tokens");
    std::vector<int> ids;
    for (const auto& tok : spelling) {
      const auto id = tokens.find(tok);
      if (!id) {
        throw FormatError("lexicon word '" + word + "' uses unknown token '" + tok + "'");
      }
      if (*id == tokens.blank()) {
        throw FormatError("lexicon word '" + word + "' spells with the blank token");
      }
      ids.push_back(*id);
    }
    auto [it, inserted] = lex.word_index_.emplace(word, lex.word_count());
    if (inserted) {
      lex.words_.push_back(word);
      lex.spellings_.emplace_back();
    }
    const int wid = it->second;
    auto& sp = lex.spellings_[wid];
    if (std::find(sp.begin(), sp.end(), ids) != sp.end()) continue;
    sp.push_back(ids);

    int node = kRoot;
    for (int tok : ids) {
      int next = lex.child(node, tok);
      if (next < 0) {
        next = lex.node_count();
        lex.nodes_.emplace_back();
        auto& ch = lex.nodes_[node].children;
        ch.insert(std::lower_bound(ch.begin(), ch.end(), std::make_pair(tok, 0)),
                  {tok, next});
      }
      node = next;
    }
    lex.nodes_[node].words.push_back(wid);
  }
  return lex;
}

Lexicon Lexicon::parse(std::string_view text, const TokenSet& tokens) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<Entry> entries;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError("lexicon line " + std::to_string(lineno) + " has no TAB");
    }
    Entry e;
    e.first = std::string(trim(std::string_view(line).substr(0, tab)));
    std::istringstream ts(line.substr(tab + 1));
    std::string tok;
    while (ts >> tok) e.second.push_back(tok);
    entries.push_back(std::move(e));
  }
  return build(tokens, entries);
}

Lexicon Lexicon::load(const std::string& path, const TokenSet& tokens) {
  return parse(read_file(path), tokens);
}

int Lexicon::child(int node, int token) const {
  const auto& ch = nodes_[node].children;
  const auto it = std::lower_bound(ch.begin(), ch.end(), std::make_pair(token, 0));
  if (it == ch.end() || it->first != token) return -1;
  return it->second;
}

std::optional<int> Lexicon::find_word(std::string_view word) const {
  const auto it = word_index_.find(std::string(word));
  if (it == word_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::pair<int, std::vector<int>>> Lexicon::trie_paths() const {
  std::vector<std::pair<int, std::vector<int>>> out;
  std::vector<int> path;
  std::function<void(int)> walk = [&](int n) {
    for (int w : nodes_[n].words) out.emplace_back(w, path);
    for (const auto& [tok, next] : nodes_[n].children) {
      path.push_back(tok);
      walk(next);
      path.pop_back();
    }
  };
  walk(kRoot);
  return out;
}

}  // namespace tdsasr
