// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: transcribe, bench, inspect, init-model and
// demo-assets.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "tdsasr/bench.h"
#include "tdsasr/demo.h"
#include "tdsasr/engine.h"
#include "tdsasr/wav.h"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace tdsasr;

namespace {

struct EngineFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
};

void add_engine_flags(CLI::App* cmd, EngineFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key = value config file; flags override it");
  for (const auto& key : EngineConfig::keys()) {
    cmd->add_option("--" + key, flags.values[key]);
  }
}

EngineConfig engine_config(const EngineFlags& flags) {
  EngineConfig c = flags.config_path.empty() ? EngineConfig{} : EngineConfig::load(flags.config_path);
  for (const auto& [k, v] : flags.values) {
    if (!v.empty()) c.set(k, v);
  }
  c.validate();
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json event_json(const TranscriptEvent& e) {
  return json{{"word", e.word}, {"emit_ms", e.emit_ms}, {"audio_end_ms", e.audio_end_ms},
              {"final", e.final}};
}

int run_transcribe(const EngineFlags& flags, const std::string& audio_path, bool offline) {
  const EngineConfig cfg = engine_config(flags);
  Engine engine(Resources::load(cfg), cfg);
  const WavData wav = read_wav(audio_path);
  if (wav.sample_rate != cfg.frontend.sample_rate) {
    throw ConfigError("audio is " + std::to_string(wav.sample_rate) + " Hz, engine expects " +
                      std::to_string(cfg.frontend.sample_rate));
  }
  if (offline) {
    for (const auto& w : engine.transcribe_offline(wav.samples).words) {
      std::cout << event_json(w).dump() << '\n';
    }
    return 0;
  }
  const StreamId id = engine.create_stream();
  const std::size_t cs = chunk_samples(cfg);
  for (std::size_t b = 0; b < wav.samples.size(); b += cs) {
    const std::size_t e = std::min(wav.samples.size(), b + cs);
    const auto events = engine.push_audio(
        id, AudioChunk{std::span<const float>(wav.samples).subspan(b, e - b), wav.sample_rate});
    for (const auto& ev : events) std::cout << event_json(ev).dump() << '\n';
  }
  for (const auto& w : engine.close_stream(id).words) std::cout << event_json(w).dump() << '\n';
  return 0;
}

struct Workload {
  std::vector<std::vector<float>> audio;
  std::vector<std::string> stems;
};

Workload load_workload(const std::string& dir, int sample_rate) {
  Workload w;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".wav") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no .wav files in " + dir);
  for (const auto& f : files) {
    WavData d = read_wav(f.string());
    if (d.sample_rate != sample_rate) {
      throw ConfigError(f.string() + " is not " + std::to_string(sample_rate) + " Hz");
    }
    w.audio.push_back(std::move(d.samples));
    w.stems.push_back(f.stem().string());
  }
  return w;
}

std::vector<std::vector<WordAlignment>> load_references(const Engine& engine, const Workload& w,
                                                        const std::string& alignments) {
  std::vector<std::vector<WordAlignment>> refs;
  for (std::size_t i = 0; i < w.audio.size(); ++i) {
    if (alignments.empty()) {
      refs.push_back(offline_alignments(engine, w.audio[i]));
    } else if (fs::is_directory(alignments)) {
      refs.push_back(load_alignments((fs::path(alignments) / (w.stems[i] + ".ali")).string()));
    } else {
      if (w.audio.size() != 1) {
        throw InputError("an alignment file needs exactly one utterance; pass a directory");
      }
      refs.push_back(load_alignments(alignments));
    }
  }
  return refs;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

struct BenchArgs {
  std::string mode = "rtf";
  int streams = 1;
  std::string audio_dir;
  std::string alignments;
  std::string out;
  std::string axis = "streams";
  std::string values;
  bool realtime = false;
};

int run_bench(const EngineFlags& flags, const BenchArgs& a) {
  EngineConfig cfg = engine_config(flags);
  const Resources res = Resources::load(cfg);
  Workload work = load_workload(a.audio_dir, cfg.frontend.sample_rate);
  std::vector<SweepRow> rows;

  auto measured = [&](EngineConfig c) {
    Engine e(res, c);
    std::vector<MeasuredStream> m;
    for (const auto& audio : work.audio) m.push_back(measure_stream(e, audio));
    return m;
  };

  if (a.mode == "rtf" || a.mode == "throughput") {
    Engine engine(res, cfg);
    std::vector<StreamInput> inputs;
    double audio_ms = 0.0;
    for (int s = 0; s < a.streams; ++s) {
      inputs.push_back({work.audio[s % work.audio.size()], {}});
      audio_ms += 1000.0 * static_cast<double>(inputs.back().audio.size()) / cfg.frontend.sample_rate;
    }
    const auto r = run_concurrent(engine, inputs, cfg.workers,
                                  a.realtime ? Pacing::kRealTime : Pacing::kAsFastAsPossible);
    std::vector<double> first(a.streams, -1.0), last(a.streams, 0.0);
    for (const auto& t : r.timings) {
      if (first[t.stream] < 0 || t.release_ms < first[t.stream]) first[t.stream] = t.release_ms;
      last[t.stream] = std::max(last[t.stream], t.end_ms);
    }
    double span = 0.0;
    for (int s = 0; s < a.streams; ++s) span += last[s] - std::max(0.0, first[s]);
    SweepRow row;
    row.axis = a.mode;
    row.value = a.streams;
    row.streams = a.streams;
    row.chunk_ms = cfg.chunk_ms;
    row.throughput = compute_throughput(audio_ms / 1000.0, r.wall_ms / 1000.0);
    row.rtf = compute_rtf(span / 1000.0, audio_ms / 1000.0);
    rows.push_back(row);
  } else if (a.mode == "latency") {
    const Engine ref_engine(res, cfg);
    const auto refs = load_references(ref_engine, work, a.alignments);
    SweepRow row = simulate_workload(measured(cfg), refs, cfg.chunk_ms, a.streams, cfg.workers);
    row.axis = "latency";
    row.value = cfg.chunk_ms;
    rows.push_back(row);
  } else if (a.mode == "sweep") {
    const Engine ref_engine(res, cfg);
    const auto refs = load_references(ref_engine, work, a.alignments);
    const auto values = parse_values(a.values);
    if (a.axis == "streams") {
      const auto m = measured(cfg);
      for (double v : values) {
        SweepRow row = simulate_workload(m, refs, cfg.chunk_ms, static_cast<int>(v), cfg.workers);
        row.axis = "streams";
        row.value = v;
        rows.push_back(row);
      }
    } else if (a.axis == "chunk_ms") {
      for (double v : values) {
        EngineConfig c = cfg;
        c.chunk_ms = v;
        SweepRow row = simulate_workload(measured(c), refs, v, a.streams, cfg.workers);
        row.axis = "chunk_ms";
        row.value = v;
        rows.push_back(row);
      }
    } else {
      throw ConfigError("--axis must be 'streams' or 'chunk_ms'");
    }
  } else {
    throw ConfigError("--mode must be rtf, throughput, latency or sweep");
  }

  const std::string csv = sweep_csv(rows);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream(a.out) << csv;
  }
  return 0;
}

ModelSpec spec_from(const std::string& spec_path, bool reference, int tokens) {
  if (reference) return ModelSpec::reference(tokens);
  if (spec_path.empty()) throw ConfigError("give --spec FILE or --reference");
  return ModelSpec::parse(read_file(spec_path));
}

int run_inspect(const std::string& model_path, const std::string& spec_path, bool reference,
                int tokens) {
  ModelSpec spec = model_path.empty() ? spec_from(spec_path, reference, tokens)
                                      : load_model(model_path).spec();
  spec.validate();
  json j{{"layers", spec.layers.size()},
         {"input_dim", spec.input_dim},
         {"token_count", spec.token_count},
         {"subsampling", spec.subsampling()},
         {"frame_stride_ms", spec.subsampling() * spec.frame_ms},
         {"future_context_frames", spec.future_context_frames()},
         {"future_context_ms", future_context_ms(spec)},
         {"receptive_field_frames", spec.receptive_field_frames()},
         {"receptive_field_ms", receptive_field_ms(spec)},
         {"parameters", parameter_count(spec)}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming TDS/CTC speech recognizer"};
  app.require_subcommand(1);

  EngineFlags tflags;
  std::string audio;
  bool offline = false;
  auto* transcribe = app.add_subcommand("transcribe", "Stream a WAV file, print JSON-lines events");
  add_engine_flags(transcribe, tflags);
  transcribe->add_option("--audio", audio, "16-bit mono WAV")->required();
  transcribe->add_flag("--offline", offline, "Use the whole-utterance path");

  EngineFlags bflags;
  BenchArgs bargs;
  auto* bench = app.add_subcommand("bench", "RTF, throughput and latency measurements (CSV)");
  add_engine_flags(bench, bflags);
  bench->add_option("--mode", bargs.mode)->check(CLI::IsMember({"rtf", "throughput", "latency", "sweep"}));
  bench->add_option("--streams", bargs.streams)->check(CLI::PositiveNumber);
  bench->add_option("--audio-dir", bargs.audio_dir)->required();
  bench->add_option("--alignments", bargs.alignments, "File or directory of <stem>.ali");
  bench->add_option("--out", bargs.out, "CSV path (default stdout)");
  bench->add_option("--axis", bargs.axis)->check(CLI::IsMember({"streams", "chunk_ms"}));
  bench->add_option("--values", bargs.values, "Comma-separated sweep values");
  bench->add_flag("--realtime", bargs.realtime, "Release chunks on the wall clock (rtf/throughput)");

  std::string model_path, spec_path;
  bool reference = false;
  int tokens = 5000;
  auto* inspect = app.add_subcommand("inspect", "Architecture arithmetic for a spec or model");
  inspect->add_option("--model", model_path);
  inspect->add_option("--spec", spec_path);
  inspect->add_flag("--reference", reference);
  inspect->add_option("--tokens", tokens);

  std::string init_spec, init_out;
  bool init_reference = false;
  int init_tokens = 5000;
  std::uint64_t seed = 1;
  auto* init = app.add_subcommand("init-model", "Write a model file with seeded random weights");
  init->add_option("--spec", init_spec);
  init->add_flag("--reference", init_reference);
  init->add_option("--tokens", init_tokens);
  init->add_option("--seed", seed);
  init->add_option("--out", init_out)->required();

  std::string demo_dir;
  int utterances = 4;
  double seconds = 4.0;
  std::uint64_t demo_seed = 1;
  auto* demo = app.add_subcommand("demo-assets", "Write a toy model, lexicon, LM and audio");
  demo->add_option("--out", demo_dir)->required();
  demo->add_option("--seed", demo_seed);
  demo->add_option("--utterances", utterances)->check(CLI::PositiveNumber);
  demo->add_option("--seconds", seconds)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*transcribe) return run_transcribe(tflags, audio, offline);
    if (*bench) return run_bench(bflags, bargs);
    if (*inspect) return run_inspect(model_path, spec_path, reference, tokens);
    if (*init) {
      save_model(Model::random(spec_from(init_spec, init_reference, init_tokens), seed), init_out);
      return 0;
    }
    if (*demo) {
      const DemoAssets a = write_demo_assets(demo_dir, demo_seed, utterances, seconds);
      std::cout << "wrote " << a.audio.size() << " utterances to " << a.dir << '\n'
                << "config: " << a.config << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
