// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdsasr/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

namespace tdsasr {

namespace {

// FFTW's planner is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct FeatureExtractor::Fft {
  explicit Fft(int n) : size(n) {
    in = fftwf_alloc_real(n);
    out = fftwf_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftwf_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }
  ~Fft() {
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftwf_destroy_plan(plan);
    }
    fftwf_free(in);
    fftwf_free(out);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  int size;
  float* in = nullptr;
  fftwf_complex* out = nullptr;
  fftwf_plan plan = nullptr;
};

void FrontendConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  if (window_samples() <= 0 || hop_samples() <= 0) {
    throw ConfigError("window and hop must cover at least one sample");
  }
  if (fft_size < window_samples() || (fft_size & (fft_size - 1)) != 0) {
    throw ConfigError("fft_size must be a power of two >= window length");
  }
  if (num_mels <= 0) throw ConfigError("num_mels must be positive");
  const double nyquist = sample_rate / 2.0;
  const double hi = high_hz > 0 ? high_hz : nyquist;
  if (low_hz < 0 || hi > nyquist || low_hz >= hi) {
    throw ConfigError("mel frequency range is invalid");
  }
  if (!(log_floor > 0)) throw ConfigError("log_floor must be positive");
  if (norm_window <= 0) throw ConfigError("norm_window must be positive");
  if (!(norm_eps > 0)) throw ConfigError("norm_eps must be positive");
  if (norm_recompute_interval <= 0) {
    throw ConfigError("norm_recompute_interval must be positive");
  }
}

int FrontendConfig::window_samples() const {
  return static_cast<int>(std::lround(window_ms * sample_rate / 1000.0));
}

int FrontendConfig::hop_samples() const {
  return static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0));
}

double MelFilterbank::hz_to_mel(double hz) {
  return 1127.0 * std::log(1.0 + hz / 700.0);
}

MelFilterbank::MelFilterbank(const FrontendConfig& config) {
  config.validate();
  num_bins_ = config.fft_size / 2 + 1;
  const double hi = config.high_hz > 0 ? config.high_hz : config.sample_rate / 2.0;
  const double mel_lo = hz_to_mel(config.low_hz);
  const double mel_hi = hz_to_mel(hi);
  const double step = (mel_hi - mel_lo) / (config.num_mels + 1);
  const double bin_hz = static_cast<double>(config.sample_rate) / config.fft_size;

  filters_.resize(config.num_mels);
  for (int m = 0; m < config.num_mels; ++m) {
    const double left = mel_lo + m * step;
    const double center = left + step;
    const double right = center + step;
    Filter& f = filters_[m];
    f.first_bin = -1;
    for (int k = 0; k < num_bins_; ++k) {
      const double mel = hz_to_mel(k * bin_hz);
      double w = 0.0;
      if (mel > left && mel <= center) {
        w = (mel - left) / (center - left);
      } else if (mel > center && mel < right) {
        w = (right - mel) / (right - center);
      }
      if (w > 0.0) {
        if (f.first_bin < 0) f.first_bin = k;
        f.weights.resize(k - f.first_bin + 1, 0.0f);
        f.weights.back() = static_cast<float>(w);
      }
    }
    if (f.first_bin < 0) f.first_bin = 0;
  }
}

void MelFilterbank::apply(std::span<const float> power,
                          std::span<float> out) const {
  for (std::size_t m = 0; m < filters_.size(); ++m) {
    const Filter& f = filters_[m];
    double acc = 0.0;
    for (std::size_t j = 0; j < f.weights.size(); ++j) {
      acc += static_cast<double>(f.weights[j]) * power[f.first_bin + j];
    }
    out[m] = static_cast<float>(acc);
  }
}

float MelFilterbank::weight(int m, int k) const {
  const Filter& f = filters_.at(m);
  const int j = k - f.first_bin;
  if (j < 0 || j >= static_cast<int>(f.weights.size())) return 0.0f;
  return f.weights[j];
}

FeatureExtractor::FeatureExtractor(FrontendConfig config)
    : config_(config),
      mel_(std::make_shared<MelFilterbank>(config)),
      fft_(std::make_unique<Fft>(config.fft_size)) {
  const int n = config_.window_samples();
  window_.resize(n);
  for (int i = 0; i < n; ++i) {
    window_[i] = static_cast<float>(
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (n - 1)));
  }
}

FeatureExtractor::~FeatureExtractor() = default;
FeatureExtractor::FeatureExtractor(FeatureExtractor&&) noexcept = default;
FeatureExtractor& FeatureExtractor::operator=(FeatureExtractor&&) noexcept = default;

std::vector<FeatureFrame> FeatureExtractor::extract_frames(const AudioChunk& chunk) {
  if (chunk.sample_rate != config_.sample_rate) {
    throw ConfigError("chunk sample rate " + std::to_string(chunk.sample_rate) +
                      " != stream rate " + std::to_string(config_.sample_rate));
  }
  for (float s : chunk.samples) {
    if (!std::isfinite(s)) throw InputError("audio chunk contains non-finite samples");
  }
  std::vector<FeatureFrame> frames;
  if (chunk.samples.empty()) return frames;

  pending_.insert(pending_.end(), chunk.samples.begin(), chunk.samples.end());
  samples_received_ += static_cast<std::int64_t>(chunk.samples.size());

  const int win = config_.window_samples();
  const int hop = config_.hop_samples();
  const int bins = config_.fft_size / 2 + 1;
  std::vector<float> power(bins);
  std::size_t start = 0;
  while (start + win <= pending_.size()) {
    std::fill(fft_->in, fft_->in + fft_->size, 0.0f);
    for (int i = 0; i < win; ++i) fft_->in[i] = pending_[start + i] * window_[i];
    fftwf_execute(fft_->plan);
    for (int k = 0; k < bins; ++k) {
      const float re = fft_->out[k][0];
      const float im = fft_->out[k][1];
      power[k] = re * re + im * im;
    }
    FeatureFrame f;
    f.index = next_index_++;
    f.values.resize(config_.num_mels);
    mel_->apply(power, f.values);
    for (float& v : f.values) {
      v = static_cast<float>(std::log(std::max<double>(v, config_.log_floor)));
    }
    frames.push_back(std::move(f));
    start += hop;
  }
  pending_.erase(pending_.begin(),
                 pending_.begin() + static_cast<std::ptrdiff_t>(
                                        std::min(start, pending_.size())));
  return frames;
}

LocalNormalizer::LocalNormalizer(int dim, int window, double eps,
                                 int recompute_interval)
    : dim_(dim), window_(window), eps_(eps),
      recompute_interval_(recompute_interval),
      ring_(static_cast<std::size_t>(dim) * window),
      sum_(dim, 0.0), sumsq_(dim, 0.0) {
  if (dim <= 0 || window <= 0 || !(eps > 0) || recompute_interval <= 0) {
    throw ConfigError("invalid local normalizer settings");
  }
}

LocalNormalizer::LocalNormalizer(const FrontendConfig& c)
    : LocalNormalizer(c.num_mels, c.norm_window, c.norm_eps,
                      c.norm_recompute_interval) {}

FeatureFrame LocalNormalizer::normalize(const FeatureFrame& frame) {
  if (static_cast<int>(frame.values.size()) != dim_) {
    throw InputError("frame has " + std::to_string(frame.values.size()) +
                     " values, normalizer expects " + std::to_string(dim_));
  }
  if (count_ == window_) {
    const float* old = &ring_[static_cast<std::size_t>(head_) * dim_];
    for (int d = 0; d < dim_; ++d) {
      sum_[d] -= old[d];
      sumsq_[d] -= static_cast<double>(old[d]) * old[d];
    }
    std::copy(frame.values.begin(), frame.values.end(),
              ring_.begin() + static_cast<std::ptrdiff_t>(head_) * dim_);
    head_ = (head_ + 1) % window_;
  } else {
    const int slot = (head_ + count_) % window_;
    std::copy(frame.values.begin(), frame.values.end(),
              ring_.begin() + static_cast<std::ptrdiff_t>(slot) * dim_);
    ++count_;
  }
  for (int d = 0; d < dim_; ++d) {
    sum_[d] += frame.values[d];
    sumsq_[d] += static_cast<double>(frame.values[d]) * frame.values[d];
  }
  if (++pushes_since_recompute_ >= recompute_interval_) recompute();

  FeatureFrame out;
  out.index = frame.index;
  out.values.resize(dim_);
  for (int d = 0; d < dim_; ++d) {
    const double mean = sum_[d] / count_;
    const double var = std::max(0.0, sumsq_[d] / count_ - mean * mean);
    out.values[d] =
        static_cast<float>((frame.values[d] - mean) / std::sqrt(var + eps_));
  }
  return out;
}

void LocalNormalizer::recompute() {
  std::fill(sum_.begin(), sum_.end(), 0.0);
  std::fill(sumsq_.begin(), sumsq_.end(), 0.0);
  for (int i = 0; i < count_; ++i) {
    const float* f = &ring_[static_cast<std::size_t>((head_ + i) % window_) * dim_];
    for (int d = 0; d < dim_; ++d) {
      sum_[d] += f[d];
      sumsq_[d] += static_cast<double>(f[d]) * f[d];
    }
  }
  pushes_since_recompute_ = 0;
}

double LocalNormalizer::running_sum_drift() const {
  double worst = 0.0;
  for (int d = 0; d < dim_; ++d) {
    double s = 0.0;
    double sq = 0.0;
    for (int i = 0; i < count_; ++i) {
      const float v = ring_[static_cast<std::size_t>((head_ + i) % window_) * dim_ + d];
      s += v;
      sq += static_cast<double>(v) * v;
    }
    worst = std::max(worst, std::abs(s - sum_[d]) / std::max(1.0, std::abs(s)));
    worst = std::max(worst, std::abs(sq - sumsq_[d]) / std::max(1.0, std::abs(sq)));
  }
  return worst;
}

Matrix frames_to_matrix(const std::vector<FeatureFrame>& frames, int dim) {
  Matrix m(0, dim);
  for (const auto& f : frames) m.append_row(f.values);
  return m;
}

}  // namespace tdsasr
