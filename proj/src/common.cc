// Copyright 2026 The tdsasr Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdsasr/common.h"

#include <algorithm>
#include <cmath>

namespace tdsasr {

Matrix::Matrix(int rows, int cols, float fill)
    : rows_(rows), cols_(cols),
      data_(static_cast<std::size_t>(rows) * cols, fill) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("negative matrix shape");
}

void Matrix::append_row(std::span<const float> values) {
  if (rows_ == 0 && data_.empty() && cols_ == 0) {
    cols_ = static_cast<int>(values.size());
  }
  if (static_cast<int>(values.size()) != cols_) {
    throw std::invalid_argument("append_row: column mismatch");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

void Matrix::append_rows(const Matrix& other) {
  if (other.rows_ == 0) {
    if (rows_ == 0 && cols_ == 0) cols_ = other.cols_;
    return;
  }
  if (rows_ == 0 && cols_ == 0) cols_ = other.cols_;
  if (other.cols_ != cols_) {
    throw std::invalid_argument("append_rows: column mismatch");
  }
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  rows_ += other.rows_;
}

void Matrix::erase_front_rows(int n) {
  n = std::clamp(n, 0, rows_);
  data_.erase(data_.begin(),
              data_.begin() + static_cast<std::ptrdiff_t>(n) * cols_);
  rows_ -= n;
}

Matrix Matrix::slice_rows(int begin, int end) const {
  begin = std::clamp(begin, 0, rows_);
  end = std::clamp(end, begin, rows_);
  Matrix out(end - begin, cols_);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin) * cols_,
            data_.begin() + static_cast<std::ptrdiff_t>(end) * cols_,
            out.data_.begin());
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("max_abs_diff: shape mismatch");
  }
  double worst = 0.0;
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) {
      worst = std::max(worst, std::abs(static_cast<double>(a(r, c)) - b(r, c)));
    }
  }
  return worst;
}

}  // namespace tdsasr
