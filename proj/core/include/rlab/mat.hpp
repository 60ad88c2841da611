#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rlab {

/// Thrown when an operation fails to converge or produces non-finite values.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown on shape mismatches and invalid arguments.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Dense real matrix, row-major, 64-bit floats.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw DimensionError("Mat: data length != rows*cols");
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  /// First `n` rows as a copy.
  Mat top_rows(std::size_t n) const;
  /// First `p` columns as a copy.
  Mat left_cols(std::size_t p) const;
  /// Leading principal p x p submatrix.
  Mat top_left(std::size_t p) const;

  Mat transposed() const;
  double trace() const;
  bool all_finite() const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

Mat matmul(const Mat& a, const Mat& b);     // a * b
Mat matmul_tn(const Mat& a, const Mat& b);  // a^T * b
Mat matmul_nt(const Mat& a, const Mat& b);  // a * b^T

/// a^T * a, exploiting symmetry.
Mat gram(const Mat& a);

bool is_symmetric(const Mat& a, double tol = 1e-12);

}  // namespace rlab
