// SPDX-License-Identifier: Apache-2.0
#include "asrz/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "asrz/error.hpp"

namespace asrz {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_finite(const Matrix& m, const char* op) {
  if (!m.all_finite()) {
    throw Error(ErrorCode::NonFiniteValue, std::string(op) + " produced a non-finite value");
  }
}

}  // namespace

Matrix::Matrix(size_t rows, size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::DimensionMismatch,
                "data length " + std::to_string(data_.size()) + " != " +
                    std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw Error(ErrorCode::DimensionMismatch, "ragged initializer rows");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(size_t n) {
  Matrix m(n, n);
  for (size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::top_rows(size_t n) const {
  if (n > rows_) {
    throw Error(ErrorCode::DimensionMismatch,
                "top_rows(" + std::to_string(n) + ") of " + shape(*this));
  }
  return Matrix(n, cols_,
                std::vector<double>(data_.begin(), data_.begin() + n * cols_));
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "matmul " + shape(a) + " * " + shape(b));
  }
  Matrix c(a.rows(), b.cols());
  for (size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (size_t t = 0; t < a.cols(); ++t) {
      const double s = a(i, t);
      if (s == 0.0) continue;
      auto brow = b.row(t);
      for (size_t j = 0; j < out.size(); ++j) out[j] += s * brow[j];
    }
  }
  require_finite(c, "matmul");
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "matmul_at_b " + shape(a) + " , " + shape(b));
  }
  Matrix c(a.cols(), b.cols());
  for (size_t t = 0; t < a.rows(); ++t) {
    auto arow = a.row(t);
    auto brow = b.row(t);
    for (size_t i = 0; i < arow.size(); ++i) {
      const double s = arow[i];
      if (s == 0.0) continue;
      auto out = c.row(i);
      for (size_t j = 0; j < brow.size(); ++j) out[j] += s * brow[j];
    }
  }
  require_finite(c, "matmul_at_b");
  return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "matmul_a_bt " + shape(a) + " , " + shape(b));
  }
  Matrix c(a.rows(), b.rows());
  for (size_t i = 0; i < a.rows(); ++i) {
    auto arow = a.row(i);
    for (size_t j = 0; j < b.rows(); ++j) {
      auto brow = b.row(j);
      double acc = 0.0;
      for (size_t t = 0; t < arow.size(); ++t) acc += arow[t] * brow[t];
      c(i, j) = acc;
    }
  }
  require_finite(c, "matmul_a_bt");
  return c;
}

void add_row_inplace(Matrix& x, const Matrix& row_vector) {
  if (row_vector.rows() != 1 || row_vector.cols() != x.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "add_row " + shape(x) + " + " + shape(row_vector));
  }
  auto bias = row_vector.row(0);
  for (size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
}

Matrix column_sums(const Matrix& x) {
  Matrix s(1, x.cols());
  auto out = s.row(0);
  for (size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  return s;
}

Matrix relu_clip(const Matrix& x, double cap) {
  if (!(cap > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "relu cap must be positive");
  }
  Matrix y = x;
  for (double& v : y.values()) v = std::min(std::max(v, 0.0), cap);
  return y;
}

Matrix softmax_rows(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row(i);
    auto out = y.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - mx);
      total += out[j];
    }
    for (double& v : out) v /= total;
  }
  return y;
}

Matrix log_softmax_rows(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row(i);
    const double lse = log_sum_exp(in);
    auto out = y.row(i);
    for (size_t j = 0; j < in.size(); ++j) out[j] = in[j] - lse;
  }
  return y;
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) {
    throw Error(ErrorCode::EmptyInput, "log_sum_exp of empty sequence");
  }
  const double mx = *std::max_element(xs.begin(), xs.end());
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double total = 0.0;
  for (double v : xs) total += std::exp(v - mx);
  return mx + std::log(total);
}

double log_add(double a, double b) noexcept {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

uint64_t Rng::next_u64() noexcept {
  state_ += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::below(uint64_t n) noexcept {
  // Rejection sampling removes modulo bias.
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % n;
  uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double Rng::normal() noexcept {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t mix_seed(uint64_t seed, uint64_t stream) noexcept {
  Rng r(seed ^ (stream * 0xD1B54A32D192ED03ULL));
  r.next_u64();
  return r.next_u64();
}

}  // namespace asrz
