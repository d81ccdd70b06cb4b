// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdsasr/engine.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace tdsasr {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto v = trim(value);
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

}  // namespace

const std::vector<std::string>& EngineConfig::keys() {
  static const std::vector<std::string> k = {
      "model",          "lexicon",     "lm",         "tokens",         "chunk-ms",
      "workers",        "beam-size",   "topk",       "blank-threshold", "lm-weight",
      "word-score",     "history-chunks", "merge",   "partial-words",  "norm-window",
      "norm-eps",       "sample-rate", "max-streams"};
  return k;
}

const std::vector<std::string>& EngineConfig::stream_keys() {
  static const std::vector<std::string> k = {
      "beam-size", "topk", "blank-threshold", "lm-weight", "word-score",
      "history-chunks", "merge", "partial-words", "norm-window", "norm-eps"};
  return k;
}

void EngineConfig::set(std::string_view key, std::string_view value) {
  const std::string v(trim(value));
  if (key == "model") {
    model_path = v;
  } else if (key == "lexicon") {
    lexicon_path = v;
  } else if (key == "lm") {
    lm_path = v;
  } else if (key == "tokens") {
    tokens_path = v;
  } else if (key == "chunk-ms") {
    chunk_ms = parse_number<double>(key, v);
  } else if (key == "workers") {
    workers = parse_number<int>(key, v);
  } else if (key == "beam-size") {
    decoder.beam_size = parse_number<int>(key, v);
  } else if (key == "topk") {
    decoder.top_k = parse_number<int>(key, v);
  } else if (key == "blank-threshold") {
    decoder.blank_threshold = parse_number<double>(key, v);
  } else if (key == "lm-weight") {
    decoder.lm_weight = parse_number<double>(key, v);
  } else if (key == "word-score") {
    decoder.word_score = parse_number<double>(key, v);
  } else if (key == "history-chunks") {
    decoder.history_chunks = parse_number<int>(key, v);
  } else if (key == "merge") {
    if (v == "max") {
      decoder.merge = MergeMode::kMax;
    } else if (v == "logsumexp") {
      decoder.merge = MergeMode::kLogSumExp;
    } else {
      throw ConfigError("merge must be 'max' or 'logsumexp'");
    }
  } else if (key == "partial-words") {
    if (v == "drop") {
      decoder.drop_partial_words = true;
    } else if (v == "complete") {
      decoder.drop_partial_words = false;
    } else {
      throw ConfigError("partial-words must be 'drop' or 'complete'");
    }
  } else if (key == "norm-window") {
    frontend.norm_window = parse_number<int>(key, v);
  } else if (key == "norm-eps") {
    frontend.norm_eps = parse_number<double>(key, v);
  } else if (key == "sample-rate") {
    frontend.sample_rate = parse_number<int>(key, v);
  } else if (key == "max-streams") {
    max_streams = parse_number<int>(key, v);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

void EngineConfig::merge_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

EngineConfig EngineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  EngineConfig c;
  c.merge_text(ss.str());
  // Relative artifact paths are taken from the config file's directory.
  const auto base = std::filesystem::path(path).parent_path();
  for (std::string* p : {&c.model_path, &c.lexicon_path, &c.lm_path, &c.tokens_path}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) {
      *p = (base / *p).string();
    }
  }
  return c;
}

void EngineConfig::validate() const {
  if (!(chunk_ms > 0.0) || !std::isfinite(chunk_ms)) throw ConfigError("chunk-ms must be > 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (max_streams < 1) throw ConfigError("max-streams must be >= 1");
  decoder.validate();
  frontend.validate();
}

std::size_t chunk_samples(const EngineConfig& config) {
  return static_cast<std::size_t>(
      std::max(1.0, std::round(config.chunk_ms * config.frontend.sample_rate / 1000.0)));
}

Resources Resources::load(const EngineConfig& config) {
  if (config.model_path.empty() || config.tokens_path.empty() || config.lexicon_path.empty()) {
    throw ConfigError("model, tokens and lexicon paths are required");
  }
  Resources r;
  r.model = std::make_shared<const Model>(load_model(config.model_path));
  r.tokens = std::make_shared<const TokenSet>(TokenSet::load(config.tokens_path));
  r.lexicon = std::make_shared<const Lexicon>(Lexicon::load(config.lexicon_path, *r.tokens));
  if (!config.lm_path.empty()) {
    r.lm = std::make_shared<const ArpaLm>(ArpaLm::load(config.lm_path));
  }
  return r;
}

std::vector<std::string> StreamTranscript::text() const {
  std::vector<std::string> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(w.word);
  return out;
}

struct Engine::Session {
  Session(const Resources& r, const EngineConfig& c)
      : config(c),
        decoder(*r.tokens, *r.lexicon, r.lm.get(), c.decoder),
        extractor(c.frontend),
        normalizer(c.frontend),
        model_state(r.model->new_stream()),
        dec_state(decoder.start()) {}

  std::mutex mu;
  EngineConfig config;
  CtcBeamDecoder decoder;
  FeatureExtractor extractor;
  LocalNormalizer normalizer;
  StreamState model_state;
  DecoderState dec_state;
  std::size_t reported_final = 0;
  std::vector<std::string> displayed;
};

Engine::Engine(Resources resources, EngineConfig config)
    : resources_(std::move(resources)), config_(std::move(config)) {
  config_.validate();
  if (!resources_.model || !resources_.tokens || !resources_.lexicon) {
    throw ConfigError("engine needs a model, a token set and a lexicon");
  }
  const ModelSpec& spec = resources_.model->spec();
  if (spec.token_count != resources_.tokens->size()) {
    throw ConfigError("model emits " + std::to_string(spec.token_count) +
                      " tokens but the token set has " +
                      std::to_string(resources_.tokens->size()));
  }
  if (spec.input_dim != config_.frontend.num_mels) {
    throw ConfigError("model expects " + std::to_string(spec.input_dim) +
                      "-dim features, frontend makes " +
                      std::to_string(config_.frontend.num_mels));
  }
}

Engine::~Engine() = default;

double Engine::frame_stride_ms() const {
  const ModelSpec& spec = resources_.model->spec();
  return static_cast<double>(spec.frame_ms) * spec.subsampling();
}

std::unique_ptr<Engine::Session> Engine::make_session(const EngineConfig& config) const {
  return std::make_unique<Session>(resources_, config);
}

StreamId Engine::create_stream(const std::map<std::string, std::string>& overrides) {
  EngineConfig c = config_;
  const auto& allowed = EngineConfig::stream_keys();
  for (const auto& [k, v] : overrides) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ConfigError("'" + k + "' cannot be set per stream");
    }
    c.set(k, v);
  }
  c.validate();
  std::shared_ptr<Session> s = make_session(c);
  std::lock_guard lock(mu_);
  if (static_cast<int>(sessions_.size()) >= config_.max_streams) {
    throw ResourceError("open stream limit (" + std::to_string(config_.max_streams) +
                        ") reached");
  }
  const StreamId id = next_id_++;
  sessions_.emplace(id, std::move(s));
  return id;
}

std::shared_ptr<Engine::Session> Engine::find(StreamId id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    throw InputError("unknown or closed stream " + std::to_string(id));
  }
  return it->second;
}

std::size_t Engine::open_streams() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::vector<TranscriptEvent> Engine::events_for(Session& s, const PartialTranscript& p) const {
  const double stride = frame_stride_ms();
  const double emit_ms = 1000.0 * static_cast<double>(s.extractor.samples_received()) /
                         s.config.frontend.sample_rate;
  const Lexicon& lex = *resources_.lexicon;
  std::vector<TranscriptEvent> out;
  for (std::size_t i = s.reported_final; i < p.finalized.size(); ++i) {
    const auto& w = p.finalized[i];
    out.push_back({lex.word(w.word), emit_ms, static_cast<double>(w.frame + 1) * stride, true});
  }
  s.reported_final = p.finalized.size();
  for (const auto& w : p.tentative) {
    out.push_back({lex.word(w.word), emit_ms, static_cast<double>(w.frame + 1) * stride, false});
  }
  s.displayed.clear();
  for (const auto& w : p.finalized) s.displayed.push_back(lex.word(w.word));
  for (const auto& w : p.tentative) s.displayed.push_back(lex.word(w.word));
  return out;
}

std::vector<TranscriptEvent> Engine::push_audio(StreamId id, const AudioChunk& chunk) {
  const auto s = find(id);
  std::lock_guard lock(s->mu);
  const auto frames = s->extractor.extract_frames(chunk);
  Matrix feats(0, resources_.model->spec().input_dim);
  for (const auto& f : frames) feats.append_row(s->normalizer.normalize(f).values);
  const Matrix em = resources_.model->forward_chunk(s->model_state, feats);
  if (em.rows() == 0) return {};
  return events_for(*s, s->decoder.decode_chunk(s->dec_state, em));
}

std::vector<std::string> Engine::displayed_words(StreamId id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->displayed;
}

StreamStats Engine::stats(StreamId id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mu);
  StreamStats st;
  st.samples_received = s->extractor.samples_received();
  st.feature_frames = s->extractor.frames_emitted();
  st.buffered_samples = s->extractor.buffered_samples();
  st.model_buffered_frames = s->model_state.buffered_frames();
  st.emission_frames = s->model_state.frames_out();
  st.finalized_words = s->dec_state.finalized().size();
  for (const auto& h : s->dec_state.hypotheses()) st.history_words += h.history.size();
  return st;
}

StreamTranscript Engine::final_transcript(const Session& s, const Transcript& t) const {
  const double stride = frame_stride_ms();
  const double emit_ms = 1000.0 * static_cast<double>(s.extractor.samples_received()) /
                         s.config.frontend.sample_rate;
  StreamTranscript out;
  out.score = t.score;
  for (const auto& w : t.words) {
    out.words.push_back({resources_.lexicon->word(w.word), emit_ms,
                         static_cast<double>(w.frame + 1) * stride, true});
  }
  return out;
}

StreamTranscript Engine::close_stream(StreamId id) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) {
      throw InputError("unknown or closed stream " + std::to_string(id));
    }
    s = std::move(it->second);
    sessions_.erase(it);
  }
  std::lock_guard lock(s->mu);
  // Samples short of a full analysis window are dropped.
  const Matrix em = resources_.model->finish_stream(s->model_state);
  if (em.rows() > 0) s->decoder.decode_chunk(s->dec_state, em);
  return final_transcript(*s, s->decoder.finalize(s->dec_state));
}

StreamTranscript Engine::transcribe_offline(std::span<const float> audio) const {
  const auto s = make_session(config_);
  const auto frames =
      s->extractor.extract_frames(AudioChunk{audio, config_.frontend.sample_rate});
  Matrix feats(0, resources_.model->spec().input_dim);
  for (const auto& f : frames) feats.append_row(s->normalizer.normalize(f).values);
  const Matrix em = resources_.model->forward_full(feats);
  if (em.rows() > 0) s->decoder.decode_chunk(s->dec_state, em);
  return final_transcript(*s, s->decoder.finalize(s->dec_state));
}

ConcurrentResult run_concurrent(Engine& engine, const std::vector<StreamInput>& inputs,
                                int workers, Pacing pacing) {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  using Clock = std::chrono::steady_clock;
  const EngineConfig& cfg = engine.config();
  const std::size_t cs = chunk_samples(cfg);
  const double rate = cfg.frontend.sample_rate;

  struct Task {
    int stream;
    int chunk;
    double release_ms;
  };
  const int n = static_cast<int>(inputs.size());
  std::vector<StreamId> ids(n);
  std::vector<int> chunk_count(n);
  for (int i = 0; i < n; ++i) {
    ids[i] = engine.create_stream(inputs[i].overrides);
    chunk_count[i] = static_cast<int>((inputs[i].audio.size() + cs - 1) / cs);
  }
  auto release_of = [&](int stream, int chunk) {
    if (pacing == Pacing::kAsFastAsPossible) return 0.0;
    const double duration = 1000.0 * static_cast<double>(inputs[stream].audio.size()) / rate;
    return std::min(static_cast<double>(chunk + 1) * cfg.chunk_ms, duration);
  };

  ConcurrentResult result;
  result.transcripts.resize(n);
  std::mutex mu;
  std::condition_variable cv;
  std::vector<Task> queue;
  for (int i = 0; i < n; ++i) queue.push_back({i, 0, release_of(i, 0)});
  int remaining = n;
  const auto t0 = Clock::now();
  auto since = [&](Clock::time_point t) {
    return std::chrono::duration<double, std::milli>(t - t0).count();
  };
  std::exception_ptr failure;

  auto worker = [&] {
    std::unique_lock lock(mu);
    while (true) {
      if (remaining == 0 || failure) return;
      if (queue.empty()) {
        cv.wait(lock);
        continue;
      }
      const auto it = std::min_element(queue.begin(), queue.end(), [](const Task& a, const Task& b) {
        if (a.release_ms != b.release_ms) return a.release_ms < b.release_ms;
        return a.stream < b.stream;
      });
      const auto release_at =
          t0 + std::chrono::duration_cast<Clock::duration>(
                   std::chrono::duration<double, std::milli>(it->release_ms));
      if (Clock::now() < release_at) {
        cv.wait_until(lock, release_at);
        continue;
      }
      const Task task = *it;
      queue.erase(it);
      lock.unlock();

      ChunkTiming timing;
      timing.stream = task.stream;
      timing.chunk = task.chunk;
      timing.release_ms = task.release_ms;
      const auto& audio = inputs[task.stream].audio;
      const bool flush = task.chunk == chunk_count[task.stream];
      try {
        timing.start_ms = since(Clock::now());
        if (flush) {
          result.transcripts[task.stream] = engine.close_stream(ids[task.stream]);
          timing.displayed = result.transcripts[task.stream].text();
          timing.audio_ms = 1000.0 * static_cast<double>(audio.size()) / rate;
        } else {
          const std::size_t begin = static_cast<std::size_t>(task.chunk) * cs;
          const std::size_t end = std::min(audio.size(), begin + cs);
          engine.push_audio(ids[task.stream],
                            AudioChunk{std::span<const float>(audio).subspan(begin, end - begin),
                                       cfg.frontend.sample_rate});
          timing.displayed = engine.displayed_words(ids[task.stream]);
          timing.audio_ms = 1000.0 * static_cast<double>(end) / rate;
        }
        timing.end_ms = since(Clock::now());
        timing.flush = flush;
      } catch (...) {
        lock.lock();
        if (!failure) failure = std::current_exception();
        cv.notify_all();
        return;
      }

      lock.lock();
      result.timings.push_back(std::move(timing));
      if (flush) {
        --remaining;
      } else {
        const int next = task.chunk + 1;
        const double rel = next == chunk_count[task.stream]
                               ? release_of(task.stream, next - 1)
                               : release_of(task.stream, next);
        queue.push_back({task.stream, next, rel});
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) {
    for (int i = 0; i < n; ++i) {
      try {
        engine.close_stream(ids[i]);
      } catch (const InputError&) {
      }
    }
    std::rethrow_exception(failure);
  }
  result.wall_ms = since(Clock::now());
  return result;
}

}  // namespace tdsasr
