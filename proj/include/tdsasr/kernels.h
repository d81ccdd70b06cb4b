// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tdsasr/common.h"

namespace tdsasr {

/// Grouped 1-D convolution over time (cross-correlation, no kernel flip).
///
/// Channels are laid out group-major: input channel `g * in_per_group + i`
/// belongs to group `g`. Output frame `t` reads padded input frames
/// `t * stride .. t * stride + kernel_size - 1`, where the padded sequence
/// is `left_pad` zero frames, the input, then `right_pad` zero frames.
/// `left_pad + right_pad == kernel_size - stride` keeps the output length
/// at `floor(T / stride)` and makes `right_pad` the layer's lookahead.
///
/// With `shared_weights` every group applies the same filter bank, so the
/// weight tensor holds a single group's filters.
struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel_size = 1;
  int stride = 1;
  int groups = 1;
  int left_pad = 0;
  int right_pad = 0;
  bool shared_weights = false;

  /// Throws SpecError when any invariant is violated.
  void validate() const;

  int in_per_group() const { return in_channels / groups; }
  int out_per_group() const { return out_channels / groups; }

  /// Weight tensor shape: {filters, kernel_size, in_per_group}.
  std::vector<int> weight_shape() const;
  std::size_t weight_count() const;
  std::size_t bias_count() const;
  std::size_t parameter_count() const { return weight_count() + bias_count(); }

  /// Output length of a full-sequence call on `input_frames` frames.
  int output_frames(int input_frames) const;

  bool operator==(const ConvSpec&) const = default;
};

struct ConvWeights {
  std::vector<float> weight;
  std::vector<float> bias;
};

/// Row-wise affine map y = x W + b with W stored {in, out}.
struct LinearWeights {
  int in = 0;
  int out = 0;
  std::vector<float> weight;
  std::vector<float> bias;
};

/// Scalar-gain/scalar-bias layer normalization over the feature axis.
struct LayerNormParams {
  float gain = 1.0f;
  float bias = 0.0f;
  float eps = 1e-5f;
};

/// Per-stream buffered input for a streaming convolution.
///
/// Holds the padded-coordinate frames that future outputs still need
/// (fewer than kernel_size of them between calls) together with the index
/// of the next output frame, which carries the stride phase across chunks.
class ConvState {
 public:
  explicit ConvState(const ConvSpec& spec);

  int buffered_frames() const { return buffer_.rows(); }
  std::int64_t outputs_emitted() const { return next_output_; }
  bool finished() const { return finished_; }

 private:
  friend Matrix conv1d_forward(const ConvSpec&, const ConvWeights&,
                               const Matrix&, ConvState&);
  friend Matrix conv1d_finish(const ConvSpec&, const ConvWeights&,
                              ConvState&);

  Matrix buffer_;
  std::int64_t origin_ = 0;  // padded index of buffer_ row 0
  std::int64_t next_output_ = 0;
  bool finished_ = false;
};

/// Full-sequence convolution with both paddings applied.
Matrix conv1d_forward(const ConvSpec& spec, const ConvWeights& weights,
                      const Matrix& input);

/// Streaming convolution: consumes `input`, returns every output frame
/// whose window is now complete. Left padding is materialized when the
/// state is created, so it is applied once per stream.
Matrix conv1d_forward(const ConvSpec& spec, const ConvWeights& weights,
                      const Matrix& input, ConvState& state);

/// End of stream: appends the right padding and drains remaining outputs.
Matrix conv1d_finish(const ConvSpec& spec, const ConvWeights& weights,
                     ConvState& state);

void check_conv_weights(const ConvSpec& spec, const ConvWeights& weights);
void check_linear_weights(const LinearWeights& weights);

Matrix linear(const LinearWeights& weights, const Matrix& input);
void relu_inplace(Matrix& m);
void add_inplace(Matrix& dst, const Matrix& src);

/// Normalizes each row by its own mean and variance, then applies the
/// scalar affine transform. Rows never interact.
Matrix layernorm(const LayerNormParams& params, const Matrix& input);

Matrix log_softmax(const Matrix& input);

}  // namespace tdsasr
