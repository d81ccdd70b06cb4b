// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "decoder_oracle.h"
#include "tdsasr/decoder.h"

namespace tdsasr {
namespace {

using testing::OracleInstance;
using testing::random_oracle_instance;
using testing::uniform_int;

// Owns the parsed resources for one oracle instance.
struct Resources {
  TokenSet tokens;
  Lexicon lexicon;
  ArpaLm lm;

  explicit Resources(const OracleInstance& in)
      : tokens(TokenSet::parse(in.token_text())),
        lexicon(Lexicon::parse(in.lexicon_text(), tokens)),
        lm(ArpaLm::parse(in.lm.arpa())) {}
};

DecoderConfig exhaustive(int tokens, double alpha, double beta) {
  DecoderConfig c;
  c.beam_size = 10000;
  c.top_k = tokens;
  c.blank_threshold = 1.0;
  c.lm_weight = alpha;
  c.word_score = beta;
  c.history_chunks = 0;
  return c;
}

std::vector<std::string> oracle_words(const std::vector<int>& ws) {
  std::vector<std::string> out;
  for (int w : ws) out.push_back("w" + std::to_string(w));
  return out;
}

Transcript decode_in_chunks(const CtcBeamDecoder& dec, const Matrix& em,
                            const std::vector<int>& sizes) {
  DecoderState st = dec.start();
  int at = 0;
  for (int s : sizes) {
    dec.decode_chunk(st, em.slice_rows(at, at + s));
    at += s;
  }
  return dec.finalize(st);
}


bool is_prefix(const std::vector<DecodedWord>& a, const std::vector<DecodedWord>& b) {
  return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

TEST(BeamSearch, MatchesExhaustiveSearchWhenUnpruned) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> alpha_d(0.0, 2.0), beta_d(-1.0, 2.0);
  int nonempty = 0;
  for (int trial = 0; trial < 600; ++trial) {
    const OracleInstance in = random_oracle_instance(rng);
    const double alpha = alpha_d(rng), beta = beta_d(rng);
    const auto expect = testing::brute_force_decode(in, alpha, beta);
    ASSERT_TRUE(std::isfinite(expect.score));

    Resources s(in);
    const CtcBeamDecoder dec(s.tokens, s.lexicon, &s.lm,
                             exhaustive(in.tokens, alpha, beta));
    DecoderState st = dec.start();
    dec.decode_chunk(st, in.emissions);
    const Transcript got = dec.finalize(st);

    EXPECT_NEAR(got.score, expect.score, 1e-6) << "trial " << trial;
    // Exact score ties between different word sequences are left alone.
    if (std::abs(got.score - expect.score) < 1e-6) {
      EXPECT_EQ(dec.words(got.words), oracle_words(expect.words)) << "trial " << trial;
    }
    nonempty += !expect.words.empty();
  }
  EXPECT_GT(nonempty, 200);
}

TEST(BeamSearch, ChunkingDoesNotChangeTheResult) {
  std::mt19937_64 rng(78);
  for (int trial = 0; trial < 200; ++trial) {
    const OracleInstance in = random_oracle_instance(rng);
    Resources s(in);
    DecoderConfig c = exhaustive(in.tokens, 0.8, 0.5);
    c.beam_size = uniform_int(rng, 1, 8);
    c.top_k = uniform_int(rng, 1, in.tokens);
    const CtcBeamDecoder dec(s.tokens, s.lexicon, &s.lm, c);
    const Transcript whole = decode_in_chunks(dec, in.emissions, {in.emissions.rows()});
    const Transcript parts =
        decode_in_chunks(dec, in.emissions, testing::random_partition(in.emissions.rows(), rng));
    EXPECT_EQ(parts.words, whole.words);
    EXPECT_EQ(parts.score, whole.score);
  }
}

TEST(BeamSearch, HistoryPruningIsLossless) {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 300; ++trial) {
    const OracleInstance in = random_oracle_instance(rng);
    Resources s(in);
    DecoderConfig c = exhaustive(in.tokens, 1.0, 0.3);
    c.beam_size = uniform_int(rng, 1, 20);
    const CtcBeamDecoder plain(s.tokens, s.lexicon, &s.lm, c);
    c.history_chunks = 1;
    const CtcBeamDecoder pruned(s.tokens, s.lexicon, &s.lm, c);

    const int T = in.emissions.rows();
    const Transcript a = decode_in_chunks(plain, in.emissions, {T});
    DecoderState st = pruned.start();
    std::vector<DecodedWord> last;
    for (int t = 0; t < T; ++t) {
      const PartialTranscript p = pruned.decode_chunk(st, in.emissions.slice_rows(t, t + 1));
      EXPECT_TRUE(is_prefix(last, p.finalized));
      last = p.finalized;
    }
    const Transcript b = pruned.finalize(st);
    EXPECT_TRUE(is_prefix(last, b.words));
    EXPECT_EQ(b.words, a.words) << "trial " << trial;
    EXPECT_NEAR(b.score, a.score, 1e-9);
  }
}

TEST(BeamSearch, ScoreIsTheWeightedSumOfItsParts) {
  std::mt19937_64 rng(80);
  for (MergeMode mode : {MergeMode::kMax, MergeMode::kLogSumExp}) {
    for (int trial = 0; trial < 100; ++trial) {
      const OracleInstance in = random_oracle_instance(rng);
      Resources s(in);
      DecoderConfig c = exhaustive(in.tokens, 1.7, -0.4);
      c.merge = mode;
      c.beam_size = uniform_int(rng, 2, 30);
      const CtcBeamDecoder dec(s.tokens, s.lexicon, &s.lm, c);
      DecoderState st = dec.start();
      for (int t = 0; t < in.emissions.rows(); ++t) {
        dec.decode_chunk(st, in.emissions.slice_rows(t, t + 1));
        const auto hyps = st.hypotheses();
        ASSERT_FALSE(hyps.empty());
        ASSERT_LE(static_cast<int>(hyps.size()), c.beam_size);
        for (std::size_t i = 0; i < hyps.size(); ++i) {
          const auto& h = hyps[i];
          EXPECT_NEAR(h.score, h.acoustic + 1.7 * h.lm - 0.4 * h.words, 1e-6);
          if (i > 0) {
            EXPECT_GE(hyps[i - 1].score, h.score);
          }
        }
      }
    }
  }
}

TEST(BeamSearch, LogSumExpMergeNeverScoresBelowMax) {
  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 100; ++trial) {
    const OracleInstance in = random_oracle_instance(rng);
    Resources s(in);
    DecoderConfig c = exhaustive(in.tokens, 1.0, 0.0);
    const CtcBeamDecoder viterbi(s.tokens, s.lexicon, &s.lm, c);
    c.merge = MergeMode::kLogSumExp;
    const CtcBeamDecoder summed(s.tokens, s.lexicon, &s.lm, c);
    const double a = decode_in_chunks(viterbi, in.emissions, {in.emissions.rows()}).score;
    const double b = decode_in_chunks(summed, in.emissions, {in.emissions.rows()}).score;
    EXPECT_GE(b, a - 1e-9);
  }
}

// Fixed four-token setup: blank, a, b, c with words "ab", "a", "c".
struct Small {
  TokenSet tokens = TokenSet::parse("#blank _\n_\na\nb\nc\n");
  Lexicon lexicon = Lexicon::parse("ab\ta b\na\ta\nc\tc\n", tokens);
};

Matrix rows_from_probs(const std::vector<std::vector<double>>& probs) {
  Matrix m(static_cast<int>(probs.size()), static_cast<int>(probs[0].size()));
  for (int t = 0; t < m.rows(); ++t) {
    for (int k = 0; k < m.cols(); ++k) m(t, k) = static_cast<float>(std::log(probs[t][k]));
  }
  return m;
}

TEST(BeamSearch, ConfidentBlankFrameProposesOnlyBlank) {
  Small s;
  DecoderConfig c;
  c.blank_threshold = 0.95;
  const CtcBeamDecoder dec(s.tokens, s.lexicon, nullptr, c);
  DecoderState st = dec.start();
  dec.decode_chunk(st, rows_from_probs({{0.99, 0.004, 0.003, 0.003}}));
  auto hyps = st.hypotheses();
  ASSERT_EQ(hyps.size(), 1u);
  EXPECT_EQ(hyps[0].prev_token, 0);
  EXPECT_EQ(hyps[0].node, Lexicon::kRoot);

  // Below the threshold the other tokens are expanded too.
  dec.decode_chunk(st, rows_from_probs({{0.9, 0.05, 0.03, 0.02}}));
  EXPECT_GT(st.hypotheses().size(), 1u);
}

TEST(BeamSearch, EmptyChunkLeavesStateUntouched) {
  Small s;
  const CtcBeamDecoder dec(s.tokens, s.lexicon, nullptr, DecoderConfig{});
  DecoderState st = dec.start();
  dec.decode_chunk(st, rows_from_probs({{0.2, 0.5, 0.2, 0.1}, {0.3, 0.1, 0.5, 0.1}}));
  const auto before = st.hypotheses();
  const auto frames = st.frames();
  dec.decode_chunk(st, Matrix(0, 4));
  const auto after = st.hypotheses();
  EXPECT_EQ(st.frames(), frames);
  ASSERT_EQ(after.size(), before.size());
  for (std::size_t i = 0; i < after.size(); ++i) {
    EXPECT_EQ(after[i].node, before[i].node);
    EXPECT_EQ(after[i].score, before[i].score);
    EXPECT_EQ(after[i].history, before[i].history);
  }
}

TEST(BeamSearch, RecognizesAClearUtterance) {
  Small s;
  const CtcBeamDecoder dec(s.tokens, s.lexicon, nullptr, DecoderConfig{});
  DecoderState st = dec.start();
  // a a _ b _ c c _
  const double h = 0.97, l = 0.01;
  dec.decode_chunk(st, rows_from_probs({{l, h, l, l}, {l, h, l, l}, {h, l, l, l}, {l, l, h, l},
                                        {h, l, l, l}, {l, l, l, h}, {l, l, l, h}, {h, l, l, l}}));
  const Transcript t = dec.finalize(st);
  EXPECT_EQ(dec.words(t.words), (std::vector<std::string>{"ab", "c"}));
  EXPECT_EQ(t.words[0].frame, 3);
  EXPECT_EQ(t.words[1].frame, 5);
}

TEST(BeamSearch, TrailingPartialWordPolicy) {
  // "c _ a" where "a" only starts the word "ab".
  const TokenSet ts = TokenSet::parse("#blank _\n_\na\nb\nc\n");
  const Lexicon lex = Lexicon::parse("ab\ta b\nc\tc\n", ts);
  const double h = 0.97, l = 0.01;
  const Matrix em = rows_from_probs({{l, l, l, h}, {h, l, l, l}, {l, h, l, l}});
  DecoderConfig c;
  const CtcBeamDecoder drop(ts, lex, nullptr, c);
  c.drop_partial_words = false;
  const CtcBeamDecoder complete(ts, lex, nullptr, c);
  EXPECT_EQ(drop.words(decode_in_chunks(drop, em, {3}).words), (std::vector<std::string>{"c"}));
  EXPECT_EQ(complete.words(decode_in_chunks(complete, em, {3}).words),
            (std::vector<std::string>{"c", "ab"}));
}

TEST(BeamSearch, DecodingAfterFinalizeIsRejected) {
  Small s;
  const CtcBeamDecoder dec(s.tokens, s.lexicon, nullptr, DecoderConfig{});
  DecoderState st = dec.start();
  const Transcript a = dec.finalize(st);
  EXPECT_TRUE(a.words.empty());
  EXPECT_THROW(dec.decode_chunk(st, rows_from_probs({{0.25, 0.25, 0.25, 0.25}})), InputError);
  EXPECT_EQ(dec.finalize(st).score, a.score);
  DecoderState other = dec.start();
  EXPECT_THROW(dec.decode_chunk(other, Matrix(1, 3)), InputError);
}

TEST(BeamSearch, HistoryLinksAreReleased) {
  const std::int64_t base = live_word_links();
  std::mt19937_64 rng(82);
  {
    const OracleInstance in = random_oracle_instance(rng);
    Resources s(in);
    const CtcBeamDecoder dec(s.tokens, s.lexicon, &s.lm, exhaustive(in.tokens, 1.0, 2.0));
    DecoderState st = dec.start();
    dec.decode_chunk(st, in.emissions);
    dec.prune_history(st);
    dec.finalize(st);
  }
  EXPECT_EQ(live_word_links(), base);
}

TEST(BeamSearch, RejectsBadConfig) {
  DecoderConfig c;
  c.beam_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = DecoderConfig{};
  c.top_k = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = DecoderConfig{};
  c.blank_threshold = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = DecoderConfig{};
  c.lm_weight = std::nan("");
  EXPECT_THROW(c.validate(), ConfigError);
  c = DecoderConfig{};
  c.history_chunks = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(AcousticPrune, KeepsTopKAndBlank) {
  const std::vector<float> row = {-1.0f, -0.5f, -3.0f, -0.2f};
  EXPECT_EQ(acoustic_prune(row, 2, 2), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(acoustic_prune(row, 2, 3), (std::vector<int>{1, 3}));
  EXPECT_EQ(acoustic_prune(row, 10, 0), (std::vector<int>{0, 1, 2, 3}));
  const std::vector<float> tie = {-1.0f, -1.0f, -1.0f};
  EXPECT_EQ(acoustic_prune(tie, 1, 2), (std::vector<int>{0, 2}));
}

TEST(Greedy, CollapsesRepeatsAcrossBlanksOnly) {
  // a a _ a -> two a tokens
  const Matrix em = rows_from_probs({{0.1, 0.8, 0.1}, {0.1, 0.8, 0.1}, {0.8, 0.1, 0.1},
                                     {0.1, 0.8, 0.1}});
  const auto toks = greedy_decode(em, 0);
  ASSERT_EQ(toks.size(), 2u);
  EXPECT_EQ(toks[0].frame, 0);
  EXPECT_EQ(toks[1].frame, 3);
  EXPECT_EQ(toks[1].token, 1);
}

TEST(Greedy, SmallerLookaheadMakesWordsAvailableSooner) {
  const TokenSet ts = TokenSet::parse("#blank _\n_\n\xE2\x96\x81h\ni\n\xE2\x96\x81y\no\n");
  const std::vector<GreedyToken> toks = {{1, 2}, {2, 4}, {3, 9}, {4, 11}};
  const auto late = greedy_words(toks, ts, 80.0, 250.0);
  const auto early = greedy_words(toks, ts, 80.0, 40.0);
  ASSERT_EQ(late.size(), 2u);
  EXPECT_EQ(late[0].text, "hi");
  EXPECT_EQ(late[1].text, "yo");
  EXPECT_EQ(late[0].available_ms, 4 * 80.0 + 250.0);
  for (std::size_t i = 0; i < late.size(); ++i) {
    EXPECT_LT(early[i].available_ms, late[i].available_ms);
  }
}

TEST(Lexicon, TriePathsSpellEveryWord) {
  const TokenSet ts = TokenSet::parse("#blank _\n_\na\nb\nc\n");
  const Lexicon lex = Lexicon::parse("ab\ta b\nabc\ta b c\nba\tb a\nab\ta c\nx\tb a\n", ts);
  EXPECT_EQ(lex.word_count(), 4);
  std::map<int, std::vector<std::vector<int>>> seen;
  for (const auto& [word, path] : lex.trie_paths()) seen[word].push_back(path);
  for (int w = 0; w < lex.word_count(); ++w) {
    auto a = seen[w], b = lex.spellings(w);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b) << lex.word(w);
  }
  // Homophones share one node.
  int node = Lexicon::kRoot;
  for (int t : {2, 1}) node = lex.child(node, t);
  EXPECT_EQ(lex.node(node).words.size(), 2u);
  EXPECT_EQ(lex.child(Lexicon::kRoot, 3), -1);
}

TEST(Lexicon, RejectsMalformedInput) {
  const TokenSet ts = TokenSet::parse("#blank _\n_\na\n");
  EXPECT_THROW(Lexicon::parse("a a\n", ts), FormatError);
  EXPECT_THROW(Lexicon::parse("a\tq\n", ts), FormatError);
  EXPECT_THROW(Lexicon::parse("a\t_\n", ts), FormatError);
  EXPECT_THROW(Lexicon::parse("a\t\n", ts), FormatError);
  EXPECT_THROW(TokenSet::parse("a\nb\n"), FormatError);
  EXPECT_THROW(TokenSet::parse("#blank z\na\n"), FormatError);
}

TEST(ArpaLm, BackoffArithmetic) {
  const char* text =
      "\\data\\\nngram 1=4\nngram 2=2\n\n\\1-grams:\n"
      "-1.0 <s> -0.5\n-0.7 a -0.25\n-0.9 b\n-1.2 </s>\n\n"
      "\\2-grams:\n-0.3 <s> a\n-0.1 a b\n\n\\end\\\n";
  const ArpaLm lm = ArpaLm::parse(text);
  EXPECT_EQ(lm.order(), 2);
  EXPECT_EQ(lm.ngram_count(1), 4u);
  const double ln10 = std::log(10.0);
  LmState s = lm.begin();
  LmState next;
  EXPECT_NEAR(lm.score(s, lm.index("a"), &next), -0.3 * ln10, 1e-6);
  EXPECT_NEAR(lm.score(next, lm.index("b")), -0.1 * ln10, 1e-6);
  EXPECT_NEAR(lm.score(s, lm.index("b")), (-0.5 - 0.9) * ln10, 1e-6);
  EXPECT_NEAR(lm.finish(next), (-0.25 - 1.2) * ln10, 1e-6);
  EXPECT_THROW(ArpaLm::parse("\\data\\\nngram 1=1\n\n\\1-grams:\n-1 a\n\n\\end\\\n"),
               FormatError);
  EXPECT_THROW(ArpaLm::parse("garbage"), FormatError);
}

TEST(ArpaLm, ParsesOracleTables) {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 50; ++trial) {
    const OracleInstance in = random_oracle_instance(rng);
    const ArpaLm lm = ArpaLm::parse(in.lm.arpa());
    for (int a = 0; a <= in.lm.vocab; ++a) {
      const int prev = a < in.lm.vocab ? a : in.lm.bos();
      LmState st = lm.begin();
      if (prev != in.lm.bos()) lm.score(lm.begin(), lm.index(in.lm.name(prev)), &st);
      for (int w = 0; w < in.lm.vocab; ++w) {
        EXPECT_NEAR(lm.score(st, lm.index(in.lm.name(w))), in.lm.ln_prob(prev, w), 1e-6);
      }
      EXPECT_NEAR(lm.finish(st), in.lm.ln_prob(prev, in.lm.eos()), 1e-6);
    }
  }
}

}  // namespace
}  // namespace tdsasr
