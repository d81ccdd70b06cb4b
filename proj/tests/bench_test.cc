// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tdsasr/bench.h"
#include "tdsasr/demo.h"
#include "tdsasr/engine.h"
#include "tdsasr/wav.h"

namespace tdsasr {
namespace {

std::vector<WordAlignment> how_are_you() {
  return {{"how", 0, 200}, {"are", 200, 400}, {"you", 400, 600}};
}

std::vector<WordAlignment> random_script(std::mt19937_64& rng, double duration_ms) {
  std::vector<WordAlignment> out;
  std::uniform_real_distribution<double> gap(0.0, 300.0), len(50.0, 600.0);
  double t = gap(rng);
  int i = 0;
  while (true) {
    const double end = t + len(rng);
    if (end > duration_ms) break;
    out.push_back({"w" + std::to_string(i++), t, end});
    t = end + gap(rng);
  }
  return out;
}

TEST(Metrics, RealTimeFactorAndThroughput) {
  EXPECT_DOUBLE_EQ(compute_rtf(2, 10), 0.2);
  EXPECT_DOUBLE_EQ(compute_rtf(10, 10), 1.0);
  EXPECT_DOUBLE_EQ(compute_throughput(40, 10), 4.0);
  EXPECT_DOUBLE_EQ(compute_throughput(10, 10), 1.0);
  for (double k : {0.001, 3.0, 1e6}) {
    EXPECT_DOUBLE_EQ(compute_rtf(2 * k, 10 * k), 0.2);
    EXPECT_DOUBLE_EQ(compute_throughput(40 * k, 10 * k), 4.0);
  }
  EXPECT_THROW(compute_rtf(1, 0), MeasurementError);
  EXPECT_THROW(compute_throughput(1, -1), MeasurementError);

  // Pooled over streams: total processing over total audio.
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(1, 20);
  double proc = 0, audio = 0;
  for (int s = 0; s < 40; ++s) {
    proc += d(rng);
    audio += d(rng);
  }
  EXPECT_DOUBLE_EQ(compute_rtf(proc, audio), proc / audio);
}

TEST(Latency, WorkedExample) {
  const EmissionLog log = {{"how", 600}, {"are", 600}, {"you", 1100}};
  const LatencyReport r = user_perceived_latency(how_are_you(), log);
  EXPECT_NEAR(r.mean_ms, 366.67, 0.01);
  EXPECT_EQ(r.per_word_ms, (std::vector<double>{400, 200, 500}));

  // Same numbers from the scheduler: 500 ms chunks at RTF 0.2 each.
  const FakeRecognizer fake{how_are_you(), 1000, 100};
  EXPECT_NEAR(fake_latency(fake, 500, 1, 1).mean_ms, 366.67, 0.01);
}

TEST(Latency, EmissionAtWordEndIsZero) {
  EmissionLog log;
  for (const auto& w : how_are_you()) log.push_back({w.word, w.end_ms});
  EXPECT_EQ(user_perceived_latency(how_are_you(), log).mean_ms, 0.0);
}

TEST(Latency, MatchesPlainRecomputation) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto ref = random_script(rng, 20000);
    if (ref.empty()) continue;
    EmissionLog log;
    std::uniform_real_distribution<double> delay(0, 2000);
    for (const auto& w : ref) log.push_back({w.word, w.end_ms + delay(rng)});
    // Column of differences, then its average.
    std::vector<double> col;
    for (std::size_t i = 0; i < ref.size(); ++i) col.push_back(log[i].available_ms - ref[i].end_ms);
    double total = 0;
    for (double v : col) total += v;
    EXPECT_NEAR(user_perceived_latency(ref, log).mean_ms, total / col.size(), 1e-9);
  }
}

TEST(Latency, RefusesWrongTranscripts) {
  const auto ref = how_are_you();
  EXPECT_THROW(user_perceived_latency(ref, {{"how", 1}, {"are", 1}}), MeasurementError);
  EXPECT_THROW(user_perceived_latency(ref, {{"how", 1}, {"is", 1}, {"you", 1}}), MeasurementError);
  EXPECT_THROW(user_perceived_latency({}, {}), MeasurementError);
}

TEST(Availability, WordCountsOnceItStopsChanging) {
  const std::vector<std::string> final_words = {"a", "b", "c"};
  const std::vector<DisplaySnapshot> snaps = {
      {100, {"a"}},
      {200, {"a", "x"}},       // b shown wrongly
      {300, {"a", "b"}},
      {400, {"a", "b", "c", "d"}},  // extra word retracted later
      {500, {"a", "b"}},
      {600, {"a", "b", "c"}},
  };
  const EmissionLog log = availability_from_snapshots(snaps, final_words);
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log[0].available_ms, 100);
  EXPECT_EQ(log[1].available_ms, 300);
  EXPECT_EQ(log[2].available_ms, 600);
  EXPECT_THROW(availability_from_snapshots({{100, {"a"}}}, final_words), MeasurementError);
}

TEST(Alignments, TextRoundTripAndChecks) {
  const auto ref = how_are_you();
  const auto back = parse_alignments(alignments_to_text(ref));
  ASSERT_EQ(back.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    EXPECT_EQ(back[i].word, ref[i].word);
    EXPECT_EQ(back[i].end_ms, ref[i].end_ms);
  }
  EXPECT_NO_THROW(check_alignments(ref));
  EXPECT_THROW(check_alignments({{"a", 100, 50}}), InputError);
  EXPECT_THROW(check_alignments({{"a", -1, 50}}), InputError);
  EXPECT_THROW(check_alignments({{"a", 0, 100}, {"b", 50, 150}}), InputError);
  EXPECT_THROW(parse_alignments("a 1\n"), Error);
}

// Finish time of every chunk when one stream owns a worker: the chunk waits
// for its audio and for its predecessor.
std::vector<double> finish_times(double duration, double chunk, double cost) {
  std::vector<double> done;
  for (int k = 0; k * chunk < duration - 1e-9; ++k) {
    const double release = std::min((k + 1) * chunk, duration);
    done.push_back(std::max(release, done.empty() ? 0.0 : done.back()) + cost);
  }
  return done;
}

TEST(FakeModel, LatencyDecomposesExactly) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const double C = 50.0 * std::uniform_int_distribution<int>(2, 20)(rng);
    const int chunks = std::uniform_int_distribution<int>(1, 12)(rng);
    const double c = 5.0 * std::uniform_int_distribution<int>(1, 2 * static_cast<int>(C) / 5)(rng);
    const double D = C * chunks;
    const auto script = random_script(rng, D);
    if (script.empty()) continue;
    const FakeRecognizer fake{script, D, c};
    const LatencyReport r = fake_latency(fake, C, 1, 1);
    ASSERT_EQ(r.per_word_ms.size(), script.size());
    double sum = 0;
    for (std::size_t i = 0; i < script.size(); ++i) {
      // Chunk whose audio contains the word end.
      const int k = static_cast<int>(std::ceil(script[i].end_ms / C)) - 1;
      const double done = c <= C ? (k + 1) * C + c : C + (k + 1) * c;
      EXPECT_EQ(r.per_word_ms[i], done - script[i].end_ms);
      sum += done - script[i].end_ms;
    }
    EXPECT_NEAR(r.mean_ms, sum / script.size(), 1e-9);
  }
}

TEST(FakeModel, PartialLastChunk) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const double D = std::uniform_real_distribution<double>(300, 8000)(rng);
    const double C = std::uniform_real_distribution<double>(100, 1200)(rng);
    const double c = std::uniform_real_distribution<double>(1, 1500)(rng);
    const auto script = random_script(rng, D);
    if (script.empty()) continue;
    const auto done = finish_times(D, C, c);
    const LatencyReport r = fake_latency(FakeRecognizer{script, D, c}, C, 1, 1);
    for (std::size_t i = 0; i < script.size(); ++i) {
      std::size_t k = 0;
      while (std::min((k + 1) * C, D) < script[i].end_ms) ++k;
      EXPECT_NEAR(r.per_word_ms[i], done[k] - script[i].end_ms, 1e-6);
    }
  }
}

TEST(FakeModel, StreamsDoNotInterfereWithEnoughWorkers) {
  const FakeRecognizer fake{how_are_you(), 1000, 100};
  const double alone = fake_latency(fake, 250, 1, 1).mean_ms;
  EXPECT_EQ(fake_latency(fake, 250, 6, 6).mean_ms, alone);
  EXPECT_EQ(fake_latency(fake, 250, 6, 8).mean_ms, alone);
  EXPECT_GT(fake_latency(fake, 250, 6, 1).mean_ms, alone);
}

TEST(FakeModel, LatencyGrowsWithChunkSize) {
  std::mt19937_64 rng(5);
  const auto script = random_script(rng, 10000);
  const FakeRecognizer fake{script, 10000, 0};
  double last = -1;
  for (double chunk : {100.0, 250.0, 500.0, 750.0, 1000.0, 2000.0}) {
    FakeRecognizer f = fake;
    f.chunk_cost_ms = 0.1 * chunk;
    const double l = fake_latency(f, chunk, 4, 2).mean_ms;
    EXPECT_GE(l, last);
    // Lower bound: every word waits at least for the processing.
    EXPECT_GE(l, f.chunk_cost_ms);
    last = l;
  }
}

TEST(Schedule, WorkersNeverRunTwoChunksAtOnce) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int workers = std::uniform_int_distribution<int>(1, 4)(rng);
    std::vector<VirtualStream> streams;
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int s = 0; s < n; ++s) {
      VirtualStream v;
      v.duration_ms = std::uniform_real_distribution<double>(100, 3000)(rng);
      const int chunks = static_cast<int>(std::ceil(v.duration_ms / 250.0));
      for (int k = 0; k <= chunks; ++k) {
        v.chunk_cost_ms.push_back(std::uniform_real_distribution<double>(1, 400)(rng));
      }
      streams.push_back(v);
    }
    const auto sched = simulate_schedule(streams, 250, workers);
    std::size_t total = 0;
    for (const auto& s : streams) total += s.chunk_cost_ms.size();
    ASSERT_EQ(sched.size(), total);
    // At any chunk start, at most `workers` chunks are running.
    for (const auto& a : sched) {
      int running = 0;
      for (const auto& b : sched) running += b.start_ms <= a.start_ms && a.start_ms < b.end_ms;
      EXPECT_LE(running, workers);
      EXPECT_GE(a.start_ms, a.release_ms);
    }
    for (const auto& a : sched) {
      for (const auto& b : sched) {
        if (a.stream == b.stream && b.chunk == a.chunk + 1) {
          EXPECT_GE(b.start_ms, a.end_ms);
        }
      }
    }
  }
}

MeasuredStream synthetic_measured(double duration, double chunk, double cost,
                                  const std::vector<WordAlignment>& script) {
  const FakeRecognizer f{script, duration, cost};
  MeasuredStream m;
  m.duration_ms = duration;
  for (int k = 0; k < f.chunk_count(chunk); ++k) {
    m.chunk_cost_ms.push_back(cost);
    m.displayed.push_back(f.displayed_after(k, chunk));
  }
  m.chunk_cost_ms.push_back(0.0);
  m.displayed.push_back(m.displayed.back());
  for (const auto& w : script) m.final_words.push_back(w.word);
  return m;
}

TEST(Workload, ThroughputScalesWithStreamsUntilWorkersSaturate) {
  const auto script = how_are_you();
  const MeasuredStream m = synthetic_measured(1000, 250, 50, script);
  const SweepRow one = simulate_workload({m}, {script}, 250, 1, 8);
  const SweepRow two = simulate_workload({m}, {script}, 250, 2, 8);
  EXPECT_NEAR(two.throughput, 2 * one.throughput, 1e-9);
  EXPECT_NEAR(one.rtf, 0.2, 1e-9);
  EXPECT_EQ(two.mean_latency_ms, one.mean_latency_ms);
  // Past saturation the pool is always busy: throughput is capped at
  // workers / rtf.
  const SweepRow many = simulate_workload({m}, {script}, 250, 64, 2);
  EXPECT_LE(many.throughput, 2 / 0.2 + 1e-9);
  EXPECT_GT(many.throughput, 0.9 * 2 / 0.2);
}

TEST(Sweep, CsvHasOneRowPerValue) {
  std::vector<SweepRow> rows;
  for (int s : {1, 2, 4, 8}) rows.push_back({"streams", double(s), s, 750, 1.0 * s, 0.1, 300});
  const std::string csv = sweep_csv(rows);
  std::istringstream in(csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], sweep_csv_header());
  EXPECT_EQ(lines[1].substr(0, 10), "streams,1,");
  EXPECT_EQ(sweep_csv({}), sweep_csv_header() + "\n");
}

TEST(Workload, MeasuredEngineRunIsConsistent) {
  const DemoAssets a = write_demo_assets(::testing::TempDir() + "/bench_demo", 5, 1, 3.0);
  EngineConfig c = EngineConfig::load(a.config);
  Engine e(Resources::load(c), c);
  const auto audio = read_wav(a.audio[0]).samples;
  const MeasuredStream m = measure_stream(e, audio);
  const auto ref = offline_alignments(e, audio);
  EXPECT_EQ(m.chunk_cost_ms.size(), m.displayed.size());
  const std::size_t n = chunk_samples(c);
  EXPECT_EQ(m.chunk_cost_ms.size(), (audio.size() + n - 1) / n + 1);
  ASSERT_EQ(m.final_words.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_EQ(m.final_words[i], ref[i].word);
  check_alignments(ref);
  const SweepRow r = simulate_workload({m}, {ref}, c.chunk_ms, 2, 1);
  EXPECT_GT(r.mean_latency_ms, 0.0);
  EXPECT_GT(r.throughput, 0.0);
  EXPECT_GT(r.rtf, 0.0);
  // The shipped alignment files are the same offline read-off.
  const auto shipped = load_alignments(a.alignments[0]);
  ASSERT_EQ(shipped.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_EQ(shipped[i].word, ref[i].word);
}

}  // namespace
}  // namespace tdsasr
