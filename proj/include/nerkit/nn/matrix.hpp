#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace nerkit::nn {

// Dense row-major matrix of doubles. A row vector is a 1 x n matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;
  std::string shape_string() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator*=(double s);

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a [n x k] * b [k x m]
Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b, a [k x n], b [k x m] -> [n x m]
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * b^T, a [n x k], b [m x k] -> [n x m]
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// Adds a 1 x cols bias to every row in place.
void add_row_bias(Matrix& m, const Matrix& bias);
// Column sums as a 1 x cols matrix.
Matrix column_sums(const Matrix& m);
Matrix transpose(const Matrix& m);
// Columns [begin, begin + count).
Matrix slice_cols(const Matrix& m, std::size_t begin, std::size_t count);
void add_into_cols(Matrix& dst, const Matrix& src, std::size_t begin);
Matrix hconcat(const std::vector<const Matrix*>& parts);

double max_abs_difference(const Matrix& a, const Matrix& b);

}  // namespace nerkit::nn
