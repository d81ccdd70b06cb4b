// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tdsasr/common.h"
#include "tdsasr/kernels.h"

namespace tdsasr {

/// Convolution layer, optionally followed by ReLU and layer normalization.
/// Used for the channel-increasing (and subsampling) layers between TDS
/// groups.
struct ConvLayerSpec {
  ConvSpec conv;
  bool relu = true;
  bool layer_norm = true;

  bool operator==(const ConvLayerSpec&) const = default;
};

/// TDS(c, kw, w, rPad): grouped conv over w groups of c channels, stride 1,
/// padding {kw - 1 - rPad, rPad}, followed by a two-layer pointwise
/// feedforward; both halves are residual and layer-normalized.
struct TdsBlockSpec {
  int channels = 0;     // c
  int kernel_size = 1;  // kw
  int width = 0;        // w
  int right_pad = 0;    // rPad
  bool shared_conv_weights = false;

  int dim() const { return channels * width; }
  ConvSpec conv_spec() const;

  bool operator==(const TdsBlockSpec&) const = default;
};

struct LinearLayerSpec {
  int in = 0;
  int out = 0;
  bool relu = false;

  bool operator==(const LinearLayerSpec&) const = default;
};

using LayerSpec = std::variant<ConvLayerSpec, TdsBlockSpec, LinearLayerSpec>;

/// Declarative acoustic-model architecture. The last layer must be a
/// linear projection onto `token_count` outputs; log-softmax is implicit.
struct ModelSpec {
  int input_dim = 80;
  int token_count = 0;
  int frame_ms = 10;
  float layer_norm_eps = 1e-5f;
  std::vector<LayerSpec> layers;

  void validate() const;

  /// Product of all layer strides.
  int subsampling() const;
  /// Lookahead into the input frame stream, in input frames.
  int future_context_frames() const;
  int receptive_field_frames() const;

  std::string to_text() const;
  static ModelSpec parse(std::string_view text);

  /// Architecture with two 15-, three 19-, four 23- and five 27-channel TDS
  /// blocks over 80-dim input, total stride 8 and 25 frames of lookahead.
  static ModelSpec reference(int token_count = 5000);

  bool operator==(const ModelSpec&) const = default;
};

double future_context_ms(const ModelSpec& spec);
double receptive_field_ms(const ModelSpec& spec);
std::size_t parameter_count(const ModelSpec& spec);

struct ConvLayerWeights {
  ConvWeights conv;
  LayerNormParams norm;
};

struct TdsBlockWeights {
  ConvWeights conv;
  LayerNormParams norm1;
  LinearWeights fc1;
  LinearWeights fc2;
  LayerNormParams norm2;
};

using LayerWeights =
    std::variant<ConvLayerWeights, TdsBlockWeights, LinearWeights>;

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

class Model;

/// Everything one stream needs to resume the acoustic model where it
/// stopped: per-layer conv buffers plus the TDS residual queues.
class StreamState {
 public:
  std::int64_t frames_in() const { return frames_in_; }
  std::int64_t frames_out() const { return frames_out_; }
  bool finished() const { return finished_; }
  /// Frames currently held across all layers.
  std::size_t buffered_frames() const;

 private:
  friend class Model;
  struct Layer {
    std::optional<ConvState> conv;
    Matrix residual;
  };

  std::uint64_t model_id_ = 0;
  std::vector<Layer> layers_;
  std::int64_t frames_in_ = 0;
  std::int64_t frames_out_ = 0;
  bool finished_ = false;
};

/// Immutable acoustic model; safe to share between threads.
class Model {
 public:
  /// Validates the spec and every weight shape.
  static Model build(ModelSpec spec, std::vector<LayerWeights> weights);
  /// Seeded pseudo-random weights, scaled by fan-in.
  static Model random(ModelSpec spec, std::uint64_t seed);
  static Model from_tensors(ModelSpec spec, std::vector<NamedTensor> tensors);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<LayerWeights>& weights() const { return weights_; }
  std::vector<NamedTensor> tensors() const;
  std::uint64_t id() const { return id_; }

  /// Emissions (log-posteriors) for a whole utterance.
  Matrix forward_full(const Matrix& features) const;

  StreamState new_stream() const;
  /// Emission rows that became computable after appending `features`.
  Matrix forward_chunk(StreamState& state, const Matrix& features) const;
  /// End of stream: applies right padding at every layer and drains.
  Matrix finish_stream(StreamState& state) const;

 private:
  Model() = default;
  Matrix layer_full(std::size_t i, const Matrix& x) const;
  Matrix layer_stream(std::size_t i, StreamState::Layer& st, const Matrix& x,
                      bool finish) const;
  void check_state(const StreamState& state) const;

  ModelSpec spec_;
  std::vector<LayerWeights> weights_;
  std::uint64_t id_ = 0;
};

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace tdsasr
