// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tdsasr/common.h"
#include "tdsasr/lexicon.h"
#include "tdsasr/lm.h"

namespace tdsasr {

enum class MergeMode { kMax, kLogSumExp };

struct DecoderConfig {
  int beam_size = 100;
  /// Tokens expanded per frame, by acoustic score; blank is always kept.
  int top_k = 50;
  /// A frame whose blank posterior exceeds this proposes only blank.
  double blank_threshold = 0.95;
  double lm_weight = 1.0;
  double word_score = 0.0;
  /// Run history pruning after this many chunks; 0 disables it.
  int history_chunks = 16;
  MergeMode merge = MergeMode::kMax;
  /// At end of stream, a trailing partial word is dropped rather than
  /// completed with the best-scoring word under its trie node.
  bool drop_partial_words = true;

  void validate() const;
};

struct DecodedWord {
  int word = -1;
  /// Emission frame of the word's last token.
  std::int64_t frame = 0;

  bool operator==(const DecodedWord&) const = default;
};

struct PartialTranscript {
  std::vector<DecodedWord> finalized;
  std::vector<DecodedWord> tentative;
};

struct Transcript {
  std::vector<DecodedWord> words;
  double score = 0.0;
};

/// Snapshot of one beam entry, for inspection and tests.
struct HypothesisView {
  int node = 0;
  int prev_token = 0;
  double acoustic = 0.0;
  double lm = 0.0;
  int words = 0;
  double score = 0.0;
  std::vector<DecodedWord> history;  // not yet finalized, oldest first
};

/// Number of word-history links alive across all decoders in the process.
std::int64_t live_word_links();

/// Per-stream search state.
class DecoderState {
 public:
  DecoderState();
  ~DecoderState();
  DecoderState(DecoderState&&) noexcept;
  DecoderState& operator=(DecoderState&&) noexcept;

  std::int64_t frames() const { return frames_; }
  std::int64_t chunks() const { return chunks_; }
  bool finished() const { return finished_; }
  const std::vector<DecodedWord>& finalized() const { return finalized_; }
  std::vector<HypothesisView> hypotheses() const;

  struct Hyp;  // defined by the decoder

 private:
  friend class CtcBeamDecoder;

  std::vector<Hyp> beam_;
  std::vector<DecodedWord> finalized_;
  std::int64_t frames_ = 0;
  std::int64_t chunks_ = 0;
  bool finished_ = false;
  std::optional<Transcript> result_;
};

/// Lexicon-constrained CTC prefix search with n-gram shallow fusion.
///
/// A hypothesis is identified by (trie node, previous label, LM context);
/// hypotheses sharing that key are merged. Scores are
/// acoustic + lm_weight * lm + word_score * words, with the LM queried when
/// a spelling completes and once more for `</s>` at finalize.
///
/// The decoder references the token set, lexicon and LM; they must outlive
/// it. It is immutable and may be shared between streams.
class CtcBeamDecoder {
 public:
  CtcBeamDecoder(const TokenSet& tokens, const Lexicon& lexicon,
                 const ArpaLm* lm, DecoderConfig config);

  const DecoderConfig& config() const { return config_; }
  const Lexicon& lexicon() const { return *lexicon_; }

  DecoderState start() const;
  /// Extends the search by every row of `emissions` (log-posteriors).
  PartialTranscript decode_chunk(DecoderState& state, const Matrix& emissions) const;
  /// Moves the word prefix shared by every hypothesis to the finalized list.
  void prune_history(DecoderState& state) const;
  Transcript finalize(DecoderState& state) const;

  std::vector<std::string> words(const std::vector<DecodedWord>& ws) const;

 private:
  void step(DecoderState& state, std::span<const float> row) const;

  const TokenSet* tokens_;
  const Lexicon* lexicon_;
  const ArpaLm* lm_;
  DecoderConfig config_;
  std::vector<int> lex_to_lm_;
};

/// Indices of the `k` most probable tokens (ties to the lower index) plus
/// the blank, in ascending order.
std::vector<int> acoustic_prune(std::span<const float> row, int k, int blank);

struct GreedyToken {
  int token = 0;
  std::int64_t frame = 0;  // first frame of the run
};

/// Per-frame argmax (ties to the lower index), repeats merged, blanks removed.
std::vector<GreedyToken> greedy_decode(const Matrix& emissions, int blank);

struct GreedyWord {
  std::string text;
  std::int64_t first_frame = 0;
  std::int64_t last_frame = 0;
  /// last_frame * frame_stride_ms + future_context_ms.
  double available_ms = 0.0;
};

std::vector<GreedyWord> greedy_words(const std::vector<GreedyToken>& tokens,
                                     const TokenSet& token_set,
                                     double frame_stride_ms,
                                     double future_context_ms);

}  // namespace tdsasr
