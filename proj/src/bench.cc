// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdsasr/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace tdsasr {

double compute_rtf(double processing_time_s, double audio_duration_s) {
  if (!(processing_time_s > 0.0) || !(audio_duration_s > 0.0)) {
    throw MeasurementError("RTF needs positive processing time and audio duration");
  }
  return processing_time_s / audio_duration_s;
}

double compute_throughput(double total_audio_s, double wall_clock_s) {
  if (!(wall_clock_s > 0.0) || !(total_audio_s > 0.0)) {
    throw MeasurementError("throughput needs positive audio and wall-clock time");
  }
  return total_audio_s / wall_clock_s;
}

std::vector<WordAlignment> parse_alignments(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<WordAlignment> out;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    WordAlignment w;
    if (!(ls >> w.word)) continue;
    std::string extra;
    if (!(ls >> w.start_ms >> w.end_ms) || (ls >> extra)) {
      throw FormatError("alignment line " + std::to_string(lineno) +
                        ": expected 'word start_ms end_ms'");
    }
    out.push_back(std::move(w));
  }
  check_alignments(out);
  return out;
}

std::vector<WordAlignment> load_alignments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_alignments(ss.str());
}

std::string alignments_to_text(const std::vector<WordAlignment>& words) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const auto& w : words) out << w.word << ' ' << w.start_ms << ' ' << w.end_ms << '\n';
  return out.str();
}

void check_alignments(const std::vector<WordAlignment>& words) {
  double prev_end = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& w = words[i];
    if (!(w.start_ms >= 0.0) || !(w.start_ms < w.end_ms)) {
      throw InputError("alignment for '" + w.word + "' needs 0 <= start < end");
    }
    if (w.start_ms < prev_end) {
      throw InputError("alignment for '" + w.word + "' overlaps the previous word");
    }
    prev_end = w.end_ms;
  }
}

LatencyReport user_perceived_latency(const std::vector<WordAlignment>& reference,
                                     const EmissionLog& log) {
  if (reference.size() != log.size()) {
    throw MeasurementError("transcript has " + std::to_string(log.size()) +
                           " words, reference has " + std::to_string(reference.size()));
  }
  if (reference.empty()) throw MeasurementError("no words to measure");
  LatencyReport r;
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference[i].word != log[i].word) {
      throw MeasurementError("word " + std::to_string(i) + " is '" + log[i].word +
                             "', reference says '" + reference[i].word + "'");
    }
    const double d = log[i].available_ms - reference[i].end_ms;
    r.per_word_ms.push_back(d);
    sum += d;
  }
  r.mean_ms = sum / static_cast<double>(reference.size());
  return r;
}

EmissionLog availability_from_snapshots(const std::vector<DisplaySnapshot>& snapshots,
                                        const std::vector<std::string>& final_words) {
  const std::size_t n = snapshots.size();
  // stable[j]: how many leading final words every snapshot from j on shows.
  std::vector<std::size_t> stable(n + 1, final_words.size());
  for (std::size_t j = n; j-- > 0;) {
    const auto& w = snapshots[j].words;
    std::size_t m = 0;
    while (m < w.size() && m < final_words.size() && w[m] == final_words[m]) ++m;
    stable[j] = std::min(stable[j + 1], m);
  }
  EmissionLog log;
  std::size_t j = 0;
  for (std::size_t i = 0; i < final_words.size(); ++i) {
    while (j < n && stable[j] <= i) ++j;
    if (j == n) {
      throw MeasurementError("word '" + final_words[i] + "' is never shown stably");
    }
    log.push_back({final_words[i], snapshots[j].time_ms});
  }
  return log;
}

std::vector<std::vector<DisplaySnapshot>> snapshots_by_stream(
    const std::vector<ChunkTiming>& timings, int streams) {
  std::vector<std::vector<const ChunkTiming*>> by(streams);
  for (const auto& t : timings) {
    if (t.stream < 0 || t.stream >= streams) throw InputError("stream index out of range");
    by[t.stream].push_back(&t);
  }
  std::vector<std::vector<DisplaySnapshot>> out(streams);
  for (int s = 0; s < streams; ++s) {
    std::sort(by[s].begin(), by[s].end(),
              [](const ChunkTiming* a, const ChunkTiming* b) { return a->chunk < b->chunk; });
    for (const ChunkTiming* t : by[s]) out[s].push_back({t->end_ms, t->displayed});
  }
  return out;
}

std::vector<VirtualChunk> simulate_schedule(const std::vector<VirtualStream>& streams,
                                            double chunk_ms, int workers) {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(chunk_ms > 0.0)) throw ConfigError("chunk_ms must be > 0");
  std::vector<double> worker_free(workers, 0.0);
  std::vector<std::size_t> next(streams.size(), 0);
  std::vector<double> prev_done(streams.size(), 0.0);
  std::vector<VirtualChunk> out;
  auto ready_time = [&](std::size_t s) {
    const double release =
        std::min(static_cast<double>(next[s] + 1) * chunk_ms, streams[s].duration_ms);
    return std::make_pair(std::max(release, prev_done[s]), release);
  };
  while (true) {
    // Earliest-ready chunk first, ties to the lower stream.
    std::size_t pick = streams.size();
    double pick_ready = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < streams.size(); ++s) {
      if (next[s] >= streams[s].chunk_cost_ms.size()) continue;
      const double r = ready_time(s).first;
      if (r < pick_ready) {
        pick_ready = r;
        pick = s;
      }
    }
    if (pick == streams.size()) break;
    const auto w = std::min_element(worker_free.begin(), worker_free.end());
    VirtualChunk c;
    c.stream = static_cast<int>(pick);
    c.chunk = static_cast<int>(next[pick]);
    c.release_ms = ready_time(pick).second;
    c.start_ms = std::max(pick_ready, *w);
    c.end_ms = c.start_ms + streams[pick].chunk_cost_ms[next[pick]];
    *w = c.end_ms;
    prev_done[pick] = c.end_ms;
    ++next[pick];
    out.push_back(c);
  }
  return out;
}

int FakeRecognizer::chunk_count(double chunk_ms) const {
  return static_cast<int>(std::ceil(duration_ms / chunk_ms - 1e-9));
}

std::vector<std::string> FakeRecognizer::displayed_after(int chunk, double chunk_ms) const {
  const double heard = std::min(static_cast<double>(chunk + 1) * chunk_ms, duration_ms);
  std::vector<std::string> out;
  for (const auto& w : script) {
    if (w.end_ms <= heard) out.push_back(w.word);
  }
  return out;
}

LatencyReport fake_latency(const FakeRecognizer& fake, double chunk_ms, int streams,
                           int workers) {
  const int chunks = fake.chunk_count(chunk_ms);
  VirtualStream vs{fake.duration_ms, std::vector<double>(chunks, fake.chunk_cost_ms)};
  const auto schedule =
      simulate_schedule(std::vector<VirtualStream>(streams, vs), chunk_ms, workers);
  std::vector<std::vector<DisplaySnapshot>> snaps(streams);
  for (const auto& c : schedule) {
    snaps[c.stream].push_back({c.end_ms, fake.displayed_after(c.chunk, chunk_ms)});
  }
  std::vector<std::string> words;
  for (const auto& w : fake.script) words.push_back(w.word);
  LatencyReport all;
  double sum = 0.0;
  for (int s = 0; s < streams; ++s) {
    const auto r = user_perceived_latency(fake.script, availability_from_snapshots(snaps[s], words));
    for (double d : r.per_word_ms) {
      all.per_word_ms.push_back(d);
      sum += d;
    }
  }
  if (!all.per_word_ms.empty()) all.mean_ms = sum / static_cast<double>(all.per_word_ms.size());
  return all;
}

std::string sweep_csv_header() {
  return "axis,value,streams,chunk_ms,throughput,rtf,mean_latency_ms";
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << sweep_csv_header() << '\n';
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.axis << ',' << r.value << ',' << r.streams << ',' << r.chunk_ms << ','
        << r.throughput << ',' << r.rtf << ',' << r.mean_latency_ms << '\n';
  }
  return out.str();
}

MeasuredStream measure_stream(Engine& engine, const std::vector<float>& audio) {
  using Clock = std::chrono::steady_clock;
  auto ms = [](Clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
  const EngineConfig& cfg = engine.config();
  const std::size_t cs = chunk_samples(cfg);
  MeasuredStream m;
  m.duration_ms = 1000.0 * static_cast<double>(audio.size()) / cfg.frontend.sample_rate;
  const StreamId id = engine.create_stream();
  try {
    for (std::size_t begin = 0; begin < audio.size(); begin += cs) {
      const std::size_t end = std::min(audio.size(), begin + cs);
      const auto t = Clock::now();
      engine.push_audio(id, AudioChunk{std::span<const float>(audio).subspan(begin, end - begin),
                                       cfg.frontend.sample_rate});
      m.chunk_cost_ms.push_back(ms(Clock::now() - t));
      m.displayed.push_back(engine.displayed_words(id));
    }
  } catch (...) {
    engine.close_stream(id);
    throw;
  }
  const auto t = Clock::now();
  const StreamTranscript final = engine.close_stream(id);
  m.chunk_cost_ms.push_back(ms(Clock::now() - t));
  m.final_words = final.text();
  m.displayed.push_back(m.final_words);
  return m;
}

std::vector<WordAlignment> offline_alignments(const Engine& engine,
                                              const std::vector<float>& audio) {
  const double stride = engine.frame_stride_ms();
  std::vector<WordAlignment> out;
  for (const auto& w : engine.transcribe_offline(audio).words) {
    out.push_back({w.word, w.audio_end_ms - stride, w.audio_end_ms});
  }
  check_alignments(out);
  return out;
}

SweepRow simulate_workload(const std::vector<MeasuredStream>& workload,
                           const std::vector<std::vector<WordAlignment>>& references,
                           double chunk_ms, int streams, int workers) {
  if (workload.empty() || workload.size() != references.size()) {
    throw InputError("workload and references must be non-empty and the same size");
  }
  if (streams < 1) throw ConfigError("streams must be >= 1");
  std::vector<VirtualStream> vs;
  for (int s = 0; s < streams; ++s) {
    const auto& m = workload[s % workload.size()];
    vs.push_back({m.duration_ms, m.chunk_cost_ms});
  }
  const auto schedule = simulate_schedule(vs, chunk_ms, workers);

  std::vector<std::vector<DisplaySnapshot>> snaps(streams);
  std::vector<double> prev_done(streams, 0.0);
  double busy = 0.0;
  double makespan = 0.0;
  double audio = 0.0;
  for (const auto& c : schedule) {
    const auto& m = workload[c.stream % workload.size()];
    snaps[c.stream].push_back({c.end_ms, m.displayed[c.chunk]});
    // Time from the chunk being ready to being done, queueing included.
    busy += c.end_ms - std::max(c.release_ms, prev_done[c.stream]);
    prev_done[c.stream] = c.end_ms;
    makespan = std::max(makespan, c.end_ms);
  }
  for (const auto& v : vs) audio += v.duration_ms;

  double latency_sum = 0.0;
  std::size_t latency_words = 0;
  for (int s = 0; s < streams; ++s) {
    const std::size_t k = s % workload.size();
    if (references[k].empty()) continue;
    const auto r = user_perceived_latency(
        references[k], availability_from_snapshots(snaps[s], workload[k].final_words));
    for (double d : r.per_word_ms) latency_sum += d;
    latency_words += r.per_word_ms.size();
  }

  SweepRow row;
  row.streams = streams;
  row.chunk_ms = chunk_ms;
  row.throughput = compute_throughput(audio / 1000.0, makespan / 1000.0);
  row.rtf = compute_rtf(busy / 1000.0, audio / 1000.0);
  row.mean_latency_ms =
      latency_words > 0 ? latency_sum / static_cast<double>(latency_words) : 0.0;
  return row;
}

}  // namespace tdsasr
