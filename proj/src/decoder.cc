// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdsasr/decoder.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace tdsasr {

namespace {

std::atomic<std::int64_t> g_live_links{0};

// Immutable word history shared between hypotheses; newest word first.
struct WordLink {
  WordLink(int w, std::int64_t f, std::shared_ptr<const WordLink> p)
      : word(w), frame(f), prev(std::move(p)) {
    g_live_links.fetch_add(1, std::memory_order_relaxed);
  }
  ~WordLink() { g_live_links.fetch_sub(1, std::memory_order_relaxed); }
  WordLink(const WordLink&) = delete;
  WordLink& operator=(const WordLink&) = delete;

  int word;
  std::int64_t frame;
  std::shared_ptr<const WordLink> prev;
};

using History = std::shared_ptr<const WordLink>;

std::vector<const WordLink*> chain(const History& h) {
  std::vector<const WordLink*> out;
  for (const WordLink* p = h.get(); p != nullptr; p = p->prev.get()) out.push_back(p);
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<DecodedWord> to_words(const History& h) {
  std::vector<DecodedWord> out;
  for (const WordLink* p : chain(h)) out.push_back({p->word, p->frame});
  return out;
}

struct HypKey {
  int node;
  int prev;
  LmState lm;
  bool operator==(const HypKey& o) const {
    return node == o.node && prev == o.prev && lm == o.lm;
  }
};

struct HypKeyHash {
  std::size_t operator()(const HypKey& k) const {
    std::size_t h = k.lm.hash();
    h ^= static_cast<std::size_t>(k.node) * 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::size_t>(k.prev) * 0xc2b2ae3d27d4eb4fULL + (h << 6);
    return h;
  }
};

}  // namespace

std::int64_t live_word_links() { return g_live_links.load(); }

struct DecoderState::Hyp {
  int node = Lexicon::kRoot;
  int prev = 0;
  LmState lm_state;
  double acoustic = 0.0;
  double lm = 0.0;
  int words = 0;  // including finalized words
  double score = 0.0;
  History history;
};

namespace {

using Hyp = DecoderState::Hyp;

// Beam order: score, then lower previous token, then fewer words.
bool ranks_before(const Hyp& a, const Hyp& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.prev != b.prev) return a.prev < b.prev;
  if (a.words != b.words) return a.words < b.words;
  if (a.node != b.node) return a.node < b.node;
  return a.lm_state < b.lm_state;
}

}  // namespace

DecoderState::DecoderState() = default;
DecoderState::~DecoderState() = default;
DecoderState::DecoderState(DecoderState&&) noexcept = default;
DecoderState& DecoderState::operator=(DecoderState&&) noexcept = default;

std::vector<HypothesisView> DecoderState::hypotheses() const {
  std::vector<HypothesisView> out;
  for (const auto& h : beam_) {
    out.push_back({h.node, h.prev, h.acoustic, h.lm, h.words, h.score,
                   to_words(h.history)});
  }
  return out;
}

void DecoderConfig::validate() const {
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (!(blank_threshold >= 0.0)) throw ConfigError("blank_threshold must be >= 0");
  if (history_chunks < 0) throw ConfigError("history_chunks must be >= 0");
  if (!std::isfinite(lm_weight) || !std::isfinite(word_score)) {
    throw ConfigError("lm_weight and word_score must be finite");
  }
}

CtcBeamDecoder::CtcBeamDecoder(const TokenSet& tokens, const Lexicon& lexicon,
                               const ArpaLm* lm, DecoderConfig config)
    : tokens_(&tokens), lexicon_(&lexicon), lm_(lm), config_(config) {
  config_.validate();
  lex_to_lm_.resize(lexicon.word_count(), 0);
  if (lm_ != nullptr) {
    for (int w = 0; w < lexicon.word_count(); ++w) {
      lex_to_lm_[w] = lm_->index(lexicon.word(w));
    }
  }
}

DecoderState CtcBeamDecoder::start() const {
  DecoderState st;
  Hyp h;
  h.prev = tokens_->blank();
  if (lm_ != nullptr) h.lm_state = lm_->begin();
  st.beam_.push_back(std::move(h));
  return st;
}

void CtcBeamDecoder::step(DecoderState& st, std::span<const float> row) const {
  const int blank = tokens_->blank();
  const std::vector<int> candidates =
      std::exp(static_cast<double>(row[blank])) > config_.blank_threshold
          ? std::vector<int>{blank}
          : acoustic_prune(row, config_.top_k, blank);
  const std::int64_t frame = st.frames_;
  const double alpha = config_.lm_weight;
  const double beta = config_.word_score;
  auto total = [&](double ac, double lm, int words) {
    return ac + alpha * lm + beta * words;
  };

  std::vector<Hyp> next;
  next.reserve(st.beam_.size() * 2);
  std::unordered_map<HypKey, std::size_t, HypKeyHash> slot;
  slot.reserve(st.beam_.size() * 4);

  auto offer = [&](const Hyp& parent, int node, int prev, const LmState& lms,
                   double ac, double lm, int words, int new_word) {
    const double s = total(ac, lm, words);
    auto make = [&] {
      Hyp h;
      h.node = node;
      h.prev = prev;
      h.lm_state = lms;
      h.acoustic = ac;
      h.lm = lm;
      h.words = words;
      h.score = s;
      h.history = new_word >= 0
                      ? std::make_shared<const WordLink>(new_word, frame, parent.history)
                      : parent.history;
      return h;
    };
    const HypKey key{node, prev, lms};
    const auto it = slot.find(key);
    if (it == slot.end()) {
      slot.emplace(key, next.size());
      next.push_back(make());
      return;
    }
    Hyp& existing = next[it->second];
    const bool better = s > existing.score ||
                        (s == existing.score && words < existing.words);
    if (config_.merge == MergeMode::kMax) {
      if (better) existing = make();
      return;
    }
    const double hi = std::max(s, existing.score);
    const double merged = hi + std::log1p(std::exp(-std::abs(s - existing.score)));
    if (better) existing = make();
    existing.acoustic += merged - existing.score;
    existing.score = total(existing.acoustic, existing.lm, existing.words);
  };

  for (const Hyp& h : st.beam_) {
    for (int tok : candidates) {
      const double ac = h.acoustic + row[tok];
      if (tok == blank || tok == h.prev) {
        // Blank, or a repeat of the previous label: no new token.
        offer(h, h.node, tok, h.lm_state, ac, h.lm, h.words, -1);
        continue;
      }
      const int child = lexicon_->child(h.node, tok);
      if (child < 0) continue;
      const Lexicon::Node& n = lexicon_->node(child);
      if (!n.children.empty()) {
        offer(h, child, tok, h.lm_state, ac, h.lm, h.words, -1);
      }
      for (int w : n.words) {
        LmState next_state = h.lm_state;
        double lm_delta = 0.0;
        if (lm_ != nullptr) lm_delta = lm_->score(h.lm_state, lex_to_lm_[w], &next_state);
        offer(h, Lexicon::kRoot, tok, next_state, ac, h.lm + lm_delta, h.words + 1, w);
      }
    }
  }

  std::sort(next.begin(), next.end(), ranks_before);
  if (static_cast<int>(next.size()) > config_.beam_size) {
    next.resize(config_.beam_size);
  }
  st.beam_ = std::move(next);
  ++st.frames_;
}

PartialTranscript CtcBeamDecoder::decode_chunk(DecoderState& st,
                                               const Matrix& emissions) const {
  if (st.finished_) throw InputError("decoder stream already finalized");
  if (emissions.rows() > 0) {
    if (emissions.cols() != tokens_->size()) {
      throw InputError("emission width " + std::to_string(emissions.cols()) +
                       " != token count " + std::to_string(tokens_->size()));
    }
    for (int t = 0; t < emissions.rows(); ++t) step(st, emissions.row(t));
    ++st.chunks_;
    if (config_.history_chunks > 0 && st.chunks_ % config_.history_chunks == 0) {
      prune_history(st);
    }
  }
  PartialTranscript out;
  out.finalized = st.finalized_;
  out.tentative = to_words(st.beam_.front().history);
  return out;
}

void CtcBeamDecoder::prune_history(DecoderState& st) const {
  if (st.beam_.empty()) return;
  std::vector<std::vector<const WordLink*>> chains;
  chains.reserve(st.beam_.size());
  for (const auto& h : st.beam_) chains.push_back(chain(h.history));

  std::size_t common = chains.front().size();
  for (const auto& c : chains) {
    std::size_t i = 0;
    while (i < common && i < c.size() && c[i] == chains.front()[i]) ++i;
    common = i;
  }
  if (common == 0) return;

  for (std::size_t i = 0; i < common; ++i) {
    st.finalized_.push_back({chains.front()[i]->word, chains.front()[i]->frame});
  }
  // Re-root the unshared suffixes; shared tails stay shared.
  std::unordered_map<const WordLink*, History> rebuilt;
  for (std::size_t h = 0; h < st.beam_.size(); ++h) {
    History cur;
    for (std::size_t i = common; i < chains[h].size(); ++i) {
      const WordLink* old = chains[h][i];
      auto it = rebuilt.find(old);
      if (it == rebuilt.end()) {
        it = rebuilt.emplace(old, std::make_shared<const WordLink>(old->word, old->frame, cur))
                 .first;
      }
      cur = it->second;
    }
    st.beam_[h].history = cur;
  }
}

Transcript CtcBeamDecoder::finalize(DecoderState& st) const {
  if (st.result_) return *st.result_;
  const double alpha = config_.lm_weight;
  auto finish = [&](const LmState& s) { return lm_ != nullptr ? lm_->finish(s) : 0.0; };

  const Hyp* best = nullptr;
  double best_total = -std::numeric_limits<double>::infinity();
  int completion = -1;
  for (const Hyp& h : st.beam_) {
    if (h.node != Lexicon::kRoot) continue;
    const double t = h.score + alpha * finish(h.lm_state);
    if (t > best_total) {
      best_total = t;
      best = &h;
    }
  }
  if (!config_.drop_partial_words) {
    // Complete mid-word hypotheses with the best word below their node.
    for (const Hyp& h : st.beam_) {
      if (h.node == Lexicon::kRoot) continue;
      std::vector<int> stack{h.node};
      while (!stack.empty()) {
        const int n = stack.back();
        stack.pop_back();
        const auto& node = lexicon_->node(n);
        for (const auto& c : node.children) stack.push_back(c.second);
        for (int w : node.words) {
          LmState ns = h.lm_state;
          double lmw = 0.0;
          if (lm_ != nullptr) lmw = lm_->score(h.lm_state, lex_to_lm_[w], &ns);
          const double t = h.score + alpha * (lmw + finish(ns)) + config_.word_score;
          if (t > best_total) {
            best_total = t;
            best = &h;
            completion = w;
          }
        }
      }
    }
  }
  if (best == nullptr) {
    // Nothing ends on a word boundary; drop the trailing partial word.
    best = &st.beam_.front();
    best_total = best->score + alpha * finish(best->lm_state);
  }

  Transcript t;
  t.words = st.finalized_;
  for (const auto& w : to_words(best->history)) t.words.push_back(w);
  if (completion >= 0) t.words.push_back({completion, std::max<std::int64_t>(0, st.frames_ - 1)});
  t.score = best_total;
  st.finished_ = true;
  st.result_ = t;
  return t;
}

std::vector<std::string> CtcBeamDecoder::words(const std::vector<DecodedWord>& ws) const {
  std::vector<std::string> out;
  out.reserve(ws.size());
  for (const auto& w : ws) out.push_back(lexicon_->word(w.word));
  return out;
}

std::vector<int> acoustic_prune(std::span<const float> row, int k, int blank) {
  const int n = static_cast<int>(row.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (k >= n) return idx;
  k = std::max(k, 1);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return a < b;
  });
  idx.resize(k);
  if (std::find(idx.begin(), idx.end(), blank) == idx.end()) idx.push_back(blank);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<GreedyToken> greedy_decode(const Matrix& emissions, int blank) {
  std::vector<GreedyToken> out;
  int prev = -1;
  for (int t = 0; t < emissions.rows(); ++t) {
    const auto row = emissions.row(t);
    const int best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best != blank && best != prev) out.push_back({best, t});
    prev = best;
  }
  return out;
}

std::vector<GreedyWord> greedy_words(const std::vector<GreedyToken>& tokens,
                                     const TokenSet& token_set,
                                     double frame_stride_ms,
                                     double future_context_ms) {
  std::vector<GreedyWord> out;
  bool open = false;
  auto close = [&] {
    if (open) {
      out.back().available_ms =
          static_cast<double>(out.back().last_frame) * frame_stride_ms + future_context_ms;
    }
    open = false;
  };
  for (const auto& t : tokens) {
    if (token_set.is_separator(t.token)) {
      close();
      continue;
    }
    const bool starts = !token_set.has_word_markers() || token_set.starts_word(t.token);
    if (starts || !open) {
      close();
      out.push_back({"", t.frame, t.frame, 0.0});
      open = true;
    }
    out.back().text += token_set.strip_marker(t.token);
    out.back().last_frame = t.frame;
  }
  close();
  return out;
}

}  // namespace tdsasr
