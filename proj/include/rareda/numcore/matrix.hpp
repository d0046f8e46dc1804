#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rareda {

/// Thrown for every contract violation in the library (shape mismatch,
/// non-finite values, malformed files, infeasible configurations).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A NaN or Inf reached a guarded computation.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// Dense row-major matrix of doubles.
///
/// A 1×n matrix doubles as a row vector. Values are plain data: copying a
/// Matrix copies its storage, and a const Matrix may be shared across threads.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  bool all_finite() const noexcept;
  /// Throws Error naming `what` if any entry is NaN or infinite.
  /// Throws NonFiniteError.
  void require_finite(const std::string& what) const;

  std::string shape_string() const;

  friend bool operator==(const Matrix& a, const Matrix& b) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a·bᵀ without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Matrix& operator+=(Matrix& a, const Matrix& b);

/// y += alpha·x, entry-wise; shapes must match.
void add_scaled(Matrix& y, double alpha, const Matrix& x);

/// Row-wise softmax with row-max subtraction. Requires K ≥ 2 and finite input.
Matrix softmax_rows(const Matrix& logits);

/// 1×cols vector of column sums.
Matrix column_sums(const Matrix& a);
/// 1×cols vector of column means.
Matrix column_means(const Matrix& a);

double frobenius_sq(const Matrix& a);
double max_abs(const Matrix& a);

/// Rows of `a` selected by `indices`, in order; indices may repeat.
Matrix gather_rows(const Matrix& a, std::span<const std::size_t> indices);
/// Vertical concatenation; column counts must match.
Matrix vstack(const Matrix& top, const Matrix& bottom);

}  // namespace rareda
