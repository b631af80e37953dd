#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "localmax/errors.hpp"

namespace localmax {

/// Dense row-major matrix of doubles. Rows are samples throughout the library.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m;
    m.rows_ = rows.size();
    m.cols_ = rows.size() ? rows.begin()->size() : 0;
    m.data_.reserve(m.rows_ * m.cols_);
    for (const auto& r : rows) {
      if (r.size() != m.cols_) throw ConfigError("Matrix::from_rows: ragged rows");
      m.data_.insert(m.data_.end(), r.begin(), r.end());
    }
    return m;
  }

  static Matrix column(std::span<const double> values) {
    Matrix m(values.size(), 1);
    for (std::size_t i = 0; i < values.size(); ++i) m.data_[i] = values[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Rows [a_i ; b_i] side by side. Both inputs must have matching row counts.
inline Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ConfigError("hconcat: row count mismatch");
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    auto ra = a.row(i);
    auto rb = b.row(i);
    std::copy(ra.begin(), ra.end(), dst.begin());
    std::copy(rb.begin(), rb.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

inline Matrix select_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = m.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

inline Matrix column_slice(const Matrix& m, std::size_t first, std::size_t count) {
  if (first + count > m.cols()) throw ConfigError("column_slice: out of range");
  Matrix out(m.rows(), count);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = m(i, first + j);
  return out;
}

} // namespace localmax
