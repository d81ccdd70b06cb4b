// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdsasr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration value or an inconsistent combination of settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed runtime input (non-finite samples, wrong emission width, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// Model or layer specification that cannot be built.
class SpecError : public Error {
 public:
  using Error::Error;
};

// Unreadable or corrupt file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A bounded resource (open streams, ...) is exhausted.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// A metric was asked for on data that does not meet its preconditions.
class MeasurementError : public Error {
 public:
  using Error::Error;
};

/// Dense row-major float matrix. Rows are time frames throughout the
/// library; the column count is kept even when there are no rows.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, float fill = 0.0f);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }

  std::span<float> row(int r) {
    return {data_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }
  std::span<const float> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }

  float& operator()(int r, int c) {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  float operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  void append_row(std::span<const float> values);
  void append_rows(const Matrix& other);
  void erase_front_rows(int n);
  Matrix slice_rows(int begin, int end) const;

  bool operator==(const Matrix& other) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<float> data_;
};

/// Largest absolute elementwise difference; throws on shape mismatch.
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace tdsasr
