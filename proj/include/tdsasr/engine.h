// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tdsasr/decoder.h"
#include "tdsasr/features.h"
#include "tdsasr/lexicon.h"
#include "tdsasr/lm.h"
#include "tdsasr/model.h"

namespace tdsasr {

/// Engine settings. The text form is one `key = value` per line with `#`
/// comments; keys match the command-line flags:
///
///   model, lexicon, lm, tokens        file paths (lm may be empty)
///   chunk-ms                          audio per chunk (> 0)
///   workers                           worker threads (>= 1)
///   beam-size, topk, blank-threshold  search pruning
///   lm-weight, word-score             shallow fusion weights
///   history-chunks                    history pruning period (0 = off)
///   merge                             max | logsumexp
///   partial-words                     drop | complete
///   norm-window, norm-eps             local feature normalization
///   sample-rate                       input sample rate in Hz
///   max-streams                       open-stream limit
struct EngineConfig {
  double chunk_ms = 750.0;
  int workers = 1;
  DecoderConfig decoder;
  FrontendConfig frontend;
  std::string model_path;
  std::string lexicon_path;
  std::string lm_path;
  std::string tokens_path;
  int max_streams = 1024;

  void validate() const;
  /// Applies one key; throws ConfigError for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Applies every `key = value` line of `text` on top of this config.
  void merge_text(std::string_view text);
  static EngineConfig load(const std::string& path);
  static const std::vector<std::string>& keys();
  /// Keys that may differ between streams of one engine.
  static const std::vector<std::string>& stream_keys();
};

/// Read-only artifacts shared by every stream.
struct Resources {
  std::shared_ptr<const Model> model;
  std::shared_ptr<const TokenSet> tokens;
  std::shared_ptr<const Lexicon> lexicon;
  std::shared_ptr<const ArpaLm> lm;  // optional

  static Resources load(const EngineConfig& config);
};

/// One word as shown to a consumer. `emit_ms` is the audio consumed by the
/// stream when the event was produced; `audio_end_ms` is where the word's
/// last token sits on the emission timeline.
struct TranscriptEvent {
  std::string word;
  double emit_ms = 0.0;
  double audio_end_ms = 0.0;
  bool final = false;
};

struct StreamTranscript {
  std::vector<TranscriptEvent> words;  // all final
  double score = 0.0;

  std::vector<std::string> text() const;
};

struct StreamStats {
  std::int64_t samples_received = 0;
  std::int64_t feature_frames = 0;
  std::size_t buffered_samples = 0;
  std::size_t model_buffered_frames = 0;
  std::int64_t emission_frames = 0;
  std::size_t finalized_words = 0;
  /// Words held in per-hypothesis histories across the beam.
  std::size_t history_words = 0;
};

using StreamId = std::uint64_t;

/// Multi-stream online recognizer. Shareable between threads; each stream
/// must be driven by one caller at a time.
class Engine {
 public:
  Engine(Resources resources, EngineConfig config);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const EngineConfig& config() const { return config_; }
  const Resources& resources() const { return resources_; }
  /// Spacing of emission frames in ms.
  double frame_stride_ms() const;

  StreamId create_stream(const std::map<std::string, std::string>& overrides = {});
  /// Newly finalized words followed by the current tentative words; empty
  /// when the chunk produced no emission frames.
  std::vector<TranscriptEvent> push_audio(StreamId id, const AudioChunk& chunk);
  /// Finalized plus tentative words as currently displayed.
  std::vector<std::string> displayed_words(StreamId id) const;
  StreamStats stats(StreamId id) const;
  /// Drains the model's lookahead, finalizes and releases the stream.
  StreamTranscript close_stream(StreamId id);
  std::size_t open_streams() const;

  /// Whole-utterance reference path: batch features, full-sequence model,
  /// one decoding pass.
  StreamTranscript transcribe_offline(std::span<const float> audio) const;

 private:
  struct Session;
  std::shared_ptr<Session> find(StreamId id) const;
  std::unique_ptr<Session> make_session(const EngineConfig& config) const;
  std::vector<TranscriptEvent> events_for(Session& s, const PartialTranscript& p) const;
  StreamTranscript final_transcript(const Session& s, const Transcript& t) const;

  Resources resources_;
  EngineConfig config_;
  mutable std::mutex mu_;
  std::unordered_map<StreamId, std::shared_ptr<Session>> sessions_;
  StreamId next_id_ = 1;
};

struct StreamInput {
  std::vector<float> audio;
  std::map<std::string, std::string> overrides;
};

/// One processed chunk. Times are ms since the run started. The last record
/// of each stream (`flush`) is the close.
struct ChunkTiming {
  int stream = 0;
  int chunk = 0;
  double release_ms = 0.0;
  double start_ms = 0.0;
  double end_ms = 0.0;
  double audio_ms = 0.0;  // stream audio consumed after this chunk
  bool flush = false;
  std::vector<std::string> displayed;
};

enum class Pacing {
  kAsFastAsPossible,
  /// Chunk k is released once its audio would have been captured live.
  kRealTime,
};

struct ConcurrentResult {
  std::vector<StreamTranscript> transcripts;
  std::vector<ChunkTiming> timings;  // in completion order
  double wall_ms = 0.0;
};

/// Processes every input on a pool of `workers` threads. Chunks of one
/// stream run strictly in order; streams interleave freely.
ConcurrentResult run_concurrent(Engine& engine, const std::vector<StreamInput>& inputs,
                                int workers, Pacing pacing = Pacing::kAsFastAsPossible);

/// Sample count of one chunk at the engine's rate.
std::size_t chunk_samples(const EngineConfig& config);

}  // namespace tdsasr
