// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tdsasr/common.h"

namespace tdsasr {

struct FrontendConfig {
  int sample_rate = 16000;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int fft_size = 512;
  int num_mels = 80;
  double low_hz = 0.0;
  double high_hz = 0.0;  // 0 means Nyquist
  double log_floor = 1e-10;
  int norm_window = 300;
  double norm_eps = 1e-5;
  int norm_recompute_interval = 10000;

  void validate() const;
  int window_samples() const;
  int hop_samples() const;
};

/// Mono PCM in [-1, 1]. Non-owning; may be empty.
struct AudioChunk {
  std::span<const float> samples;
  int sample_rate = 16000;
};

struct FeatureFrame {
  std::int64_t index = 0;
  std::vector<float> values;
};

/// Triangular mel filters on the HTK mel scale, applied to a power spectrum.
class MelFilterbank {
 public:
  explicit MelFilterbank(const FrontendConfig& config);

  int num_mels() const { return static_cast<int>(filters_.size()); }
  int num_bins() const { return num_bins_; }
  void apply(std::span<const float> power, std::span<float> out) const;
  /// Dense weight of filter `m` at FFT bin `k` (for tests and inspection).
  float weight(int m, int k) const;

  static double hz_to_mel(double hz);

 private:
  struct Filter {
    int first_bin = 0;
    std::vector<float> weights;
  };
  std::vector<Filter> filters_;
  int num_bins_ = 0;
};

/// Streaming log-mel extractor for one stream.
///
/// Emits one frame per complete analysis window at every hop. Samples that
/// later windows still need are held between calls, so any chunking of the
/// same audio yields bit-identical frames.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(FrontendConfig config);
  ~FeatureExtractor();
  FeatureExtractor(FeatureExtractor&&) noexcept;
  FeatureExtractor& operator=(FeatureExtractor&&) noexcept;
  FeatureExtractor(const FeatureExtractor&) = delete;
  FeatureExtractor& operator=(const FeatureExtractor&) = delete;

  std::vector<FeatureFrame> extract_frames(const AudioChunk& chunk);

  const FrontendConfig& config() const { return config_; }
  std::int64_t frames_emitted() const { return next_index_; }
  std::size_t buffered_samples() const { return pending_.size(); }
  std::int64_t samples_received() const { return samples_received_; }

 private:
  struct Fft;

  FrontendConfig config_;
  std::shared_ptr<const MelFilterbank> mel_;
  std::vector<float> window_;
  std::unique_ptr<Fft> fft_;
  std::vector<float> pending_;
  std::int64_t next_index_ = 0;
  std::int64_t samples_received_ = 0;
};

/// Causal per-dimension mean/variance normalization over the current frame
/// and up to `window - 1` previous frames.
class LocalNormalizer {
 public:
  LocalNormalizer(int dim, int window = 300, double eps = 1e-5,
                  int recompute_interval = 10000);
  explicit LocalNormalizer(const FrontendConfig& config);

  FeatureFrame normalize(const FeatureFrame& frame);

  int dim() const { return dim_; }
  int window() const { return window_; }
  int size() const { return count_; }
  /// Largest relative gap between the running sums and a fresh
  /// recomputation over the buffered frames.
  double running_sum_drift() const;

 private:
  void recompute();

  int dim_;
  int window_;
  double eps_;
  int recompute_interval_;
  std::vector<float> ring_;
  int head_ = 0;  // slot of the oldest frame
  int count_ = 0;
  std::vector<double> sum_;
  std::vector<double> sumsq_;
  std::int64_t pushes_since_recompute_ = 0;
};

Matrix frames_to_matrix(const std::vector<FeatureFrame>& frames, int dim);

}  // namespace tdsasr
