// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace asrz {

// Dense row-major matrix of 64-bit reals.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(size_t rows, size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(size_t n);

  size_t rows() const noexcept { return rows_; }
  size_t cols() const noexcept { return cols_; }
  size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(size_t r, size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  std::span<double> row(size_t r) noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  // First `n` rows as a new matrix.
  Matrix top_rows(size_t n) const;
  bool all_finite() const noexcept;

  bool operator==(const Matrix&) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

// c = a * b. Throws DimensionMismatch when inner dimensions disagree and
// NonFiniteValue if the product overflows.
Matrix matmul(const Matrix& a, const Matrix& b);
// aᵀ * b
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
// a * bᵀ
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

// Adds a 1×n row vector to every row of `x`.
void add_row_inplace(Matrix& x, const Matrix& row_vector);
// Column sums as a 1×n matrix.
Matrix column_sums(const Matrix& x);

inline constexpr double kDefaultReluCap = 20.0;

Matrix relu_clip(const Matrix& x, double cap = kDefaultReluCap);
Matrix softmax_rows(const Matrix& x);
Matrix log_softmax_rows(const Matrix& x);

// ln Σ exp(xs), shifted by the maximum. Entries may be -inf; an all -inf input
// yields -inf. Throws EmptyInput on an empty span.
double log_sum_exp(std::span<const double> xs);
// Two-argument form used in the inner loops of the dynamic programs.
double log_add(double a, double b) noexcept;

inline double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// SplitMix64 (Steele, Lea & Flood 2014): state advances by the golden-ratio
// increment 0x9E3779B97F4A7C15 and each output is the state passed through
// the variant-13 finalizer. Sequences are identical on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) noexcept : state_(seed) {}

  uint64_t next_u64() noexcept;
  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n); n > 0.
  uint64_t below(uint64_t n) noexcept;
  // Standard normal via Box-Muller (no cached second variate).
  double normal() noexcept;

  uint64_t state() const noexcept { return state_; }

 private:
  uint64_t state_;
};

// Derives an independent child seed from a parent seed and a stream tag.
uint64_t mix_seed(uint64_t seed, uint64_t stream) noexcept;

}  // namespace asrz
