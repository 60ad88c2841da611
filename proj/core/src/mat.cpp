#include "rlab/mat.hpp"

#include <cmath>

namespace rlab {

Mat Mat::top_rows(std::size_t n) const {
  if (n > rows_) throw DimensionError("top_rows: n > rows");
  Mat out(n, cols_);
  std::copy(data_.begin(), data_.begin() + n * cols_, out.data_.begin());
  return out;
}

Mat Mat::left_cols(std::size_t p) const {
  if (p > cols_) throw DimensionError("left_cols: p > cols");
  Mat out(rows_, p);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < p; ++j) out(i, j) = (*this)(i, j);
  return out;
}

Mat Mat::top_left(std::size_t p) const {
  if (p > rows_ || p > cols_) throw DimensionError("top_left: p out of range");
  Mat out(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) out(i, j) = (*this)(i, j);
  return out;
}

Mat Mat::transposed() const {
  Mat out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

double Mat::trace() const {
  double t = 0.0;
  std::size_t k = rows_ < cols_ ? rows_ : cols_;
  for (std::size_t i = 0; i < k; ++i) t += (*this)(i, i);
  return t;
}

bool Mat::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dims differ");
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_tn: row counts differ");
  Mat c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aki * b(k, j);
    }
  }
  return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_nt: col counts differ");
  Mat c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  }
  return c;
}

Mat gram(const Mat& a) {
  Mat g(a.cols(), a.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    for (std::size_t i = 0; i < a.cols(); ++i) {
      double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = i; j < a.cols(); ++j) g(i, j) += aki * a(k, j);
    }
  }
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

bool is_symmetric(const Mat& a, double tol) {
  if (a.rows() != a.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::fabs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

}  // namespace rlab
