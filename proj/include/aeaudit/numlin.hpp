#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace aeaudit {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);
  static Matrix column(std::span<const double> values);
  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  Vector row_vector(std::size_t i) const;
  Vector col_vector(std::size_t j) const;
  void set_col(std::size_t j, std::span<const double> values);

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  Matrix transpose() const;
  /// Columns [first, first + count).
  Matrix leading_cols(std::size_t count) const;

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

/// Row vector times matrix: x·M.
Vector row_times(std::span<const double> x, const Matrix& m);
/// Matrix times column vector: M·x.
Vector times_col(const Matrix& m, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);
double distance(std::span<const double> a, std::span<const double> b);
Vector add(std::span<const double> a, std::span<const double> b);
Vector subtract(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> a, double s);

Vector column_means(const Matrix& x);
Matrix subtract_row(const Matrix& x, std::span<const double> r);
Matrix add_row(const Matrix& x, std::span<const double> r);

double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
/// max |AᵀA − I|
double orthonormality_error(const Matrix& a);

struct SvdResult {
  Matrix u;           ///< m×r, orthonormal columns
  Vector sigma;       ///< r values, descending, non-negative
  Matrix v;           ///< n×r, orthonormal columns
  std::size_t sweeps = 0;
};

/// Thin SVD X = U·diag(σ)·Vᵀ with r = min(m, n).
///
/// One-sided Jacobi (Hestenes) rotations on column pairs; a pair is rotated
/// while |aᵢ·aⱼ| / (‖aᵢ‖‖aⱼ‖) exceeds 1e-12 and the iteration is capped at
/// 100 sweeps. Each right-singular vector is signed so that its
/// largest-magnitude entry is positive. Equal singular values keep the
/// order the sweeps produced; callers needing a canonical basis for a
/// repeated value should compare subspaces rather than vectors.
SvdResult svd(const Matrix& x);

/// Orthonormal basis of col(a) by twice-iterated modified Gram-Schmidt.
/// Throws DegenerateBasis when a column is (numerically) dependent.
Matrix orthonormal_basis(const Matrix& a);

/// Principal angles between col(a) and col(b), ascending, in [0, π/2].
std::vector<double> principal_angles(const Matrix& a, const Matrix& b);

/// Euclidean distance from a to the nearest row of x.
double pairwise_min_distance(const Matrix& x, std::span<const double> a);
/// Index of the row of x nearest to a (first on ties).
std::size_t nearest_row(const Matrix& x, std::span<const double> a);

}  // namespace aeaudit
