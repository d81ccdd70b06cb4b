// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "tdsasr/engine.h"

namespace tdsasr {

/// Processing time over audio duration.
double compute_rtf(double processing_time_s, double audio_duration_s);
/// Audio seconds processed per wall-clock second.
double compute_throughput(double total_audio_s, double wall_clock_s);

/// Reference word timing; text form is `word start_ms end_ms` per line.
struct WordAlignment {
  std::string word;
  double start_ms = 0.0;
  double end_ms = 0.0;
};

std::vector<WordAlignment> parse_alignments(std::string_view text);
std::vector<WordAlignment> load_alignments(const std::string& path);
std::string alignments_to_text(const std::vector<WordAlignment>& words);
/// Throws InputError unless 0 <= start < end and words are ordered and
/// non-overlapping.
void check_alignments(const std::vector<WordAlignment>& words);

struct EmittedWord {
  std::string word;
  double available_ms = 0.0;  // since stream start
};
using EmissionLog = std::vector<EmittedWord>;

struct LatencyReport {
  double mean_ms = 0.0;
  std::vector<double> per_word_ms;
};

/// Mean of (availability - reference end) over words. Refuses to measure
/// (MeasurementError) unless the emitted words equal the reference words.
LatencyReport user_perceived_latency(const std::vector<WordAlignment>& reference,
                                     const EmissionLog& log);

/// What a stream showed at some moment.
struct DisplaySnapshot {
  double time_ms = 0.0;
  std::vector<std::string> words;
};

/// A word counts as shown at the first snapshot after which the displayed
/// prefix up to and including it never differs from `final_words` again.
/// Snapshots must be in time order; the last should show the final text.
EmissionLog availability_from_snapshots(const std::vector<DisplaySnapshot>& snapshots,
                                        const std::vector<std::string>& final_words);

/// Per-stream snapshots from a timing log, in chunk order.
std::vector<std::vector<DisplaySnapshot>> snapshots_by_stream(
    const std::vector<ChunkTiming>& timings, int streams);

/// Discrete-event model of a pool of workers serving chunked streams in
/// virtual time. Chunk k of a stream lasting D ms is released at
/// min((k + 1) * chunk_ms, D), runs after the previous chunk of its stream
/// and occupies one worker for its cost.
struct VirtualStream {
  double duration_ms = 0.0;
  std::vector<double> chunk_cost_ms;
};

struct VirtualChunk {
  int stream = 0;
  int chunk = 0;
  double release_ms = 0.0;
  double start_ms = 0.0;
  double end_ms = 0.0;
};

std::vector<VirtualChunk> simulate_schedule(const std::vector<VirtualStream>& streams,
                                            double chunk_ms, int workers);

/// Scripted recognizer with a fixed cost per chunk: after each chunk it
/// shows exactly the reference words whose end time lies in the audio
/// consumed so far.
struct FakeRecognizer {
  std::vector<WordAlignment> script;
  double duration_ms = 0.0;
  double chunk_cost_ms = 0.0;

  int chunk_count(double chunk_ms) const;
  std::vector<std::string> displayed_after(int chunk, double chunk_ms) const;
};

/// Latency over `streams` identical copies of a fake recognizer stream
/// sharing `workers` workers.
LatencyReport fake_latency(const FakeRecognizer& fake, double chunk_ms, int streams,
                           int workers);

struct SweepRow {
  std::string axis;
  double value = 0.0;
  int streams = 0;
  double chunk_ms = 0.0;
  double throughput = 0.0;
  double rtf = 0.0;
  double mean_latency_ms = 0.0;
};

std::string sweep_csv_header();
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Per-chunk processing costs of a real engine on one utterance, measured
/// by running it alone and as fast as possible. The final entry is the
/// close.
struct MeasuredStream {
  double duration_ms = 0.0;
  std::vector<double> chunk_cost_ms;
  std::vector<std::vector<std::string>> displayed;  // after each chunk
  std::vector<std::string> final_words;
};

MeasuredStream measure_stream(Engine& engine, const std::vector<float>& audio);

/// Reference alignments read off the offline transcript: each word ends
/// where its last token is emitted.
std::vector<WordAlignment> offline_alignments(const Engine& engine,
                                              const std::vector<float>& audio);

/// Metrics for `streams` concurrent copies of the measured workloads
/// (assigned round-robin), each released in real time and served by
/// `workers` workers in virtual time.
SweepRow simulate_workload(const std::vector<MeasuredStream>& workload,
                           const std::vector<std::vector<WordAlignment>>& references,
                           double chunk_ms, int streams, int workers);

}  // namespace tdsasr
