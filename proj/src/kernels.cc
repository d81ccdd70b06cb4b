// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdsasr/kernels.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace tdsasr {

namespace {

// One output frame of a grouped convolution. `window` points at the first of
// the kernel_size padded input frames; frames are contiguous rows.
void conv_frame(const ConvSpec& spec, const ConvWeights& w,
                const float* window, float* out) {
  const int ipg = spec.in_per_group();
  const int opg = spec.out_per_group();
  const int kw = spec.kernel_size;
  const int in_ch = spec.in_channels;
  const std::size_t filter_len = static_cast<std::size_t>(kw) * ipg;
  for (int g = 0; g < spec.groups; ++g) {
    const float* x_group = window + static_cast<std::size_t>(g) * ipg;
    for (int o = 0; o < opg; ++o) {
      const int filter = spec.shared_weights ? o : g * opg + o;
      const float* f = w.weight.data() + filter * filter_len;
      float acc = w.bias[filter];
      for (int k = 0; k < kw; ++k) {
        const float* x = x_group + static_cast<std::size_t>(k) * in_ch;
        const float* fk = f + static_cast<std::size_t>(k) * ipg;
        for (int i = 0; i < ipg; ++i) acc += fk[i] * x[i];
      }
      out[g * opg + o] = acc;
    }
  }
}

void check_input(const ConvSpec& spec, const Matrix& input) {
  if (input.rows() > 0 && input.cols() != spec.in_channels) {
    throw SpecError("conv input has " + std::to_string(input.cols()) +
                    " channels, expected " + std::to_string(spec.in_channels));
  }
}

}  // namespace

void ConvSpec::validate() const {
  if (in_channels <= 0 || out_channels <= 0) {
    throw SpecError("conv channels must be positive");
  }
  if (groups <= 0 || in_channels % groups != 0 || out_channels % groups != 0) {
    throw SpecError("conv channels (" + std::to_string(in_channels) + ", " +
                    std::to_string(out_channels) +
                    ") not divisible by groups " + std::to_string(groups));
  }
  if (kernel_size <= 0 || stride <= 0) {
    throw SpecError("conv kernel_size and stride must be positive");
  }
  if (kernel_size < stride) {
    throw SpecError("conv kernel_size must be at least the stride");
  }
  if (left_pad < 0 || right_pad < 0) {
    throw SpecError("conv padding must be non-negative");
  }
  if (left_pad + right_pad != kernel_size - stride) {
    throw SpecError("conv padding must satisfy left_pad + right_pad == "
                    "kernel_size - stride (got " + std::to_string(left_pad) +
                    " + " + std::to_string(right_pad) + " for kw=" +
                    std::to_string(kernel_size) +
                    ", stride=" + std::to_string(stride) + ")");
  }
}

std::vector<int> ConvSpec::weight_shape() const {
  const int filters = shared_weights ? out_per_group() : out_channels;
  return {filters, kernel_size, in_per_group()};
}

std::size_t ConvSpec::weight_count() const {
  const std::size_t filters = shared_weights ? out_per_group() : out_channels;
  return filters * kernel_size * in_per_group();
}

std::size_t ConvSpec::bias_count() const {
  return shared_weights ? out_per_group() : out_channels;
}

int ConvSpec::output_frames(int input_frames) const {
  const int padded = left_pad + input_frames + right_pad;
  if (padded < kernel_size) return 0;
  return (padded - kernel_size) / stride + 1;
}

void check_conv_weights(const ConvSpec& spec, const ConvWeights& weights) {
  spec.validate();
  if (weights.weight.size() != spec.weight_count() ||
      weights.bias.size() != spec.bias_count()) {
    throw SpecError("conv weights have " + std::to_string(weights.weight.size()) +
                    "+" + std::to_string(weights.bias.size()) +
                    " elements, expected " + std::to_string(spec.weight_count()) +
                    "+" + std::to_string(spec.bias_count()));
  }
}

void check_linear_weights(const LinearWeights& w) {
  if (w.in <= 0 || w.out <= 0 ||
      w.weight.size() != static_cast<std::size_t>(w.in) * w.out ||
      w.bias.size() != static_cast<std::size_t>(w.out)) {
    throw SpecError("linear weights do not match shape " +
                    std::to_string(w.in) + "x" + std::to_string(w.out));
  }
}

ConvState::ConvState(const ConvSpec& spec)
    : buffer_(spec.left_pad, spec.in_channels) {}

Matrix conv1d_forward(const ConvSpec& spec, const ConvWeights& weights,
                      const Matrix& input) {
  check_input(spec, input);
  Matrix padded(spec.left_pad, spec.in_channels);
  padded.append_rows(input);
  padded.append_rows(Matrix(spec.right_pad, spec.in_channels));
  const int n_out = spec.output_frames(input.rows());
  Matrix out(n_out, spec.out_channels);
  for (int t = 0; t < n_out; ++t) {
    conv_frame(spec, weights, padded.row(t * spec.stride).data(),
               out.row(t).data());
  }
  return out;
}

Matrix conv1d_forward(const ConvSpec& spec, const ConvWeights& weights,
                      const Matrix& input, ConvState& state) {
  check_input(spec, input);
  if (state.finished_) throw InputError("conv stream already finished");
  state.buffer_.append_rows(input);

  Matrix out(0, spec.out_channels);
  std::vector<float> frame(spec.out_channels);
  std::int64_t start = state.next_output_ * spec.stride - state.origin_;
  while (start + spec.kernel_size <= state.buffer_.rows()) {
    conv_frame(spec, weights, state.buffer_.row(static_cast<int>(start)).data(),
               frame.data());
    out.append_row(frame);
    ++state.next_output_;
    start += spec.stride;
  }
  const int drop = static_cast<int>(
      std::min<std::int64_t>(start, state.buffer_.rows()));
  state.buffer_.erase_front_rows(drop);
  state.origin_ += drop;
  return out;
}

Matrix conv1d_finish(const ConvSpec& spec, const ConvWeights& weights,
                     ConvState& state) {
  if (state.finished_) return Matrix(0, spec.out_channels);
  Matrix out = conv1d_forward(spec, weights,
                              Matrix(spec.right_pad, spec.in_channels), state);
  state.finished_ = true;
  state.buffer_ = Matrix(0, spec.in_channels);
  return out;
}

Matrix linear(const LinearWeights& w, const Matrix& input) {
  if (input.rows() > 0 && input.cols() != w.in) {
    throw SpecError("linear input width " + std::to_string(input.cols()) +
                    " != " + std::to_string(w.in));
  }
  const int rows = input.rows();
  Matrix out(rows, w.out);
  constexpr int kBlock = 4;
  for (int r0 = 0; r0 < rows; r0 += kBlock) {
    const int nb = std::min(kBlock, rows - r0);
    for (int b = 0; b < nb; ++b) {
      std::copy(w.bias.begin(), w.bias.end(), out.row(r0 + b).begin());
    }
    for (int i = 0; i < w.in; ++i) {
      const float* __restrict wi = w.weight.data() + static_cast<std::size_t>(i) * w.out;
      for (int b = 0; b < nb; ++b) {
        const float xi = input(r0 + b, i);
        float* __restrict y = out.row(r0 + b).data();
        for (int j = 0; j < w.out; ++j) y[j] += xi * wi[j];
      }
    }
  }
  return out;
}

void relu_inplace(Matrix& m) {
  float* p = m.data();
  const std::size_t n = static_cast<std::size_t>(m.rows()) * m.cols();
  for (std::size_t i = 0; i < n; ++i) p[i] = std::max(p[i], 0.0f);
}

void add_inplace(Matrix& dst, const Matrix& src) {
  if (dst.rows() != src.rows() || dst.cols() != src.cols()) {
    throw SpecError("residual shape mismatch");
  }
  float* d = dst.data();
  const float* s = src.data();
  const std::size_t n = static_cast<std::size_t>(dst.rows()) * dst.cols();
  for (std::size_t i = 0; i < n; ++i) d[i] += s[i];
}

Matrix layernorm(const LayerNormParams& p, const Matrix& input) {
  Matrix out(input.rows(), input.cols());
  const int n = input.cols();
  for (int r = 0; r < input.rows(); ++r) {
    auto x = input.row(r);
    double sum = 0.0;
    for (float v : x) sum += v;
    const double mean = sum / n;
    double sq = 0.0;
    for (float v : x) sq += (v - mean) * (v - mean);
    const double inv = 1.0 / std::sqrt(sq / n + p.eps);
    auto y = out.row(r);
    for (int j = 0; j < n; ++j) {
      y[j] = static_cast<float>(p.gain * ((x[j] - mean) * inv) + p.bias);
    }
  }
  return out;
}

Matrix log_softmax(const Matrix& input) {
  Matrix out(input.rows(), input.cols());
  for (int r = 0; r < input.rows(); ++r) {
    auto x = input.row(r);
    const float mx = *std::max_element(x.begin(), x.end());
    double sum = 0.0;
    for (float v : x) sum += std::exp(static_cast<double>(v) - mx);
    const double lse = mx + std::log(sum);
    auto y = out.row(r);
    for (std::size_t j = 0; j < x.size(); ++j) {
      y[j] = static_cast<float>(x[j] - lse);
    }
  }
  return out;
}

}  // namespace tdsasr
