#include "aeaudit/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "aeaudit/error.hpp"

namespace aeaudit {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorKind::ShapeMismatch,
         std::string(what) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
             " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

void require_len(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    fail(ErrorKind::ShapeMismatch, std::string(what) + ": length " + std::to_string(a.size()) +
                                       " vs " + std::to_string(b.size()));
  }
}

constexpr double kJacobiTolerance = 1e-12;
constexpr std::size_t kMaxSweeps = 100;

struct JacobiOutput {
  Matrix a;  // columns are σⱼ·uⱼ
  Matrix v;
  std::size_t sweeps = 0;
};

// Hestenes one-sided Jacobi on a tall (m ≥ n) matrix.
JacobiOutput one_sided_jacobi(Matrix a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix v = Matrix::identity(n);

  std::size_t sweep = 0;
  double residual = 0.0;
  for (; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    residual = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          const double ap = a(k, p), aq = a(k, q);
          alpha += ap * ap;
          beta += aq * aq;
          gamma += ap * aq;
        }
        if (alpha == 0.0 || beta == 0.0) continue;
        const double rel = std::abs(gamma) / std::sqrt(alpha * beta);
        residual = std::max(residual, rel);
        if (rel <= kJacobiTolerance) continue;
        rotated = true;

        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < m; ++k) {
          const double ap = a(k, p), aq = a(k, q);
          a(k, p) = c * ap - s * aq;
          a(k, q) = s * ap + c * aq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vp = v(k, p), vq = v(k, q);
          v(k, p) = c * vp - s * vq;
          v(k, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
  if (sweep == kMaxSweeps) {
    fail(ErrorKind::Numerical, "svd: Jacobi sweeps did not converge after " +
                                   std::to_string(kMaxSweeps) +
                                   " sweeps; residual off-diagonal ratio " + std::to_string(residual));
  }
  return {std::move(a), std::move(v), sweep + 1};
}

// Extend the orthonormal columns already placed in `u` (flags in `filled`)
// to a full orthonormal set using canonical basis vectors.
void complete_orthonormal(Matrix& u, std::vector<bool>& filled) {
  const std::size_t m = u.rows();
  for (std::size_t j = 0; j < u.cols(); ++j) {
    if (filled[j]) continue;
    Vector best;
    double best_norm = -1.0;
    for (std::size_t e = 0; e < m; ++e) {
      Vector cand(m, 0.0);
      cand[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < u.cols(); ++k) {
          if (!filled[k]) continue;
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += u(i, k) * cand[i];
          for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * u(i, k);
        }
      }
      const double nrm = norm(cand);
      if (nrm > best_norm + 1e-12) {
        best_norm = nrm;
        best = std::move(cand);
      }
    }
    for (double& x : best) x /= best_norm;
    u.set_col(j, best);
    filled[j] = true;
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    fail(ErrorKind::ShapeMismatch, "matrix data length " + std::to_string(data_.size()) +
                                       " does not match " + std::to_string(rows_) + "x" +
                                       std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) fail(ErrorKind::ShapeMismatch, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, Vector(values.begin(), values.end()));
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) fail(ErrorKind::ShapeMismatch, "from_rows: ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

Vector Matrix::row_vector(std::size_t i) const {
  auto r = row(i);
  return {r.begin(), r.end()};
}

Vector Matrix::col_vector(std::size_t j) const {
  Vector c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

void Matrix::set_col(std::size_t j, std::span<const double> values) {
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = values[i];
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::leading_cols(std::size_t count) const {
  if (count > cols_) fail(ErrorKind::InputDomain, "leading_cols: count exceeds column count");
  Matrix out(rows_, count);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = (*this)(i, j);
  return out;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorKind::ShapeMismatch, "matmul: inner dimensions " + std::to_string(a.cols()) +
                                       " and " + std::to_string(b.rows()));
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) fail(ErrorKind::ShapeMismatch, "matmul_tn: row counts differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aki * b(k, j);
    }
  return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix add");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix subtract");
  Matrix c = a;
  for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (double& x : c.data()) x *= s;
  return c;
}

Vector row_times(std::span<const double> x, const Matrix& m) {
  if (x.size() != m.rows()) fail(ErrorKind::ShapeMismatch, "row_times: length mismatch");
  Vector out(m.cols(), 0.0);
  for (std::size_t k = 0; k < m.rows(); ++k)
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += x[k] * m(k, j);
  return out;
}

Vector times_col(const Matrix& m, std::span<const double> x) {
  if (x.size() != m.cols()) fail(ErrorKind::ShapeMismatch, "times_col: length mismatch");
  Vector out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = dot(m.row(i), x);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_len(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  require_len(a, b, "distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

Vector add(std::span<const double> a, std::span<const double> b) {
  require_len(a, b, "add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  require_len(a, b, "subtract");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scaled(std::span<const double> a, double s) {
  Vector out(a.begin(), a.end());
  for (double& x : out) x *= s;
  return out;
}

Vector column_means(const Matrix& x) {
  Vector mean(x.cols(), 0.0);
  if (x.rows() == 0) return mean;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += x(i, j);
  for (double& v : mean) v /= static_cast<double>(x.rows());
  return mean;
}

Matrix subtract_row(const Matrix& x, std::span<const double> r) {
  if (r.size() != x.cols()) fail(ErrorKind::ShapeMismatch, "subtract_row: length mismatch");
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) -= r[j];
  return out;
}

Matrix add_row(const Matrix& x, std::span<const double> r) {
  if (r.size() != x.cols()) fail(ErrorKind::ShapeMismatch, "add_row: length mismatch");
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += r[j];
  return out;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double x : a.data()) m = std::max(m, std::abs(x));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double orthonormality_error(const Matrix& a) {
  return max_abs_diff(matmul_tn(a, a), Matrix::identity(a.cols()));
}

SvdResult svd(const Matrix& x) {
  if (x.rows() == 0 || x.cols() == 0) fail(ErrorKind::InputDomain, "svd: empty matrix");
  if (!x.all_finite()) fail(ErrorKind::InputDomain, "svd: input contains NaN or Inf");

  const bool wide = x.rows() < x.cols();
  JacobiOutput jac = one_sided_jacobi(wide ? x.transpose() : x);
  const std::size_t m = jac.a.rows();
  const std::size_t r = jac.a.cols();

  Vector norms(r);
  for (std::size_t j = 0; j < r; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += jac.a(k, j) * jac.a(k, j);
    norms[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return norms[i] > norms[j]; });

  const double sigma_max = norms[order.front()];
  const double zero_cut =
      sigma_max * static_cast<double>(std::max(m, r)) * std::numeric_limits<double>::epsilon();

  Matrix left(m, r);
  Matrix right(r, r);
  Vector sigma(r);
  std::vector<bool> filled(r, false);
  for (std::size_t jj = 0; jj < r; ++jj) {
    const std::size_t j = order[jj];
    sigma[jj] = norms[j];
    for (std::size_t k = 0; k < r; ++k) right(k, jj) = jac.v(k, j);
    if (norms[j] > zero_cut && norms[j] > 0.0) {
      for (std::size_t k = 0; k < m; ++k) left(k, jj) = jac.a(k, j) / norms[j];
      filled[jj] = true;
    }
  }
  complete_orthonormal(left, filled);

  SvdResult out;
  out.sigma = std::move(sigma);
  out.sweeps = jac.sweeps;
  if (wide) {
    out.u = std::move(right);
    out.v = std::move(left);
  } else {
    out.u = std::move(left);
    out.v = std::move(right);
  }

  // Largest-magnitude entry of each right-singular vector is positive.
  for (std::size_t j = 0; j < r; ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t k = 0; k < out.v.rows(); ++k) {
      if (std::abs(out.v(k, j)) > best) {
        best = std::abs(out.v(k, j));
        arg = k;
      }
    }
    if (out.v(arg, j) < 0.0) {
      for (std::size_t k = 0; k < out.v.rows(); ++k) out.v(k, j) = -out.v(k, j);
      for (std::size_t k = 0; k < out.u.rows(); ++k) out.u(k, j) = -out.u(k, j);
    }
  }
  return out;
}

Matrix orthonormal_basis(const Matrix& a) {
  if (a.cols() == 0 || a.rows() < a.cols()) {
    fail(ErrorKind::DegenerateBasis, "orthonormal_basis: " + std::to_string(a.cols()) +
                                         " columns cannot be independent in dimension " +
                                         std::to_string(a.rows()));
  }
  if (!a.all_finite()) fail(ErrorKind::InputDomain, "orthonormal_basis: non-finite input");
  Matrix q = a;
  for (std::size_t j = 0; j < q.cols(); ++j) {
    Vector col = q.col_vector(j);
    const double original = norm(col);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < q.rows(); ++i) proj += q(i, k) * col[i];
        for (std::size_t i = 0; i < q.rows(); ++i) col[i] -= proj * q(i, k);
      }
    }
    const double nrm = norm(col);
    if (original == 0.0 || nrm <= 1e-10 * original) {
      fail(ErrorKind::DegenerateBasis,
           "orthonormal_basis: column " + std::to_string(j) + " is linearly dependent");
    }
    for (double& x : col) x /= nrm;
    q.set_col(j, col);
  }
  return q;
}

std::vector<double> principal_angles(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    fail(ErrorKind::ShapeMismatch, "principal_angles: row counts " + std::to_string(a.rows()) +
                                       " and " + std::to_string(b.rows()));
  }
  const Matrix qa = orthonormal_basis(a);
  const Matrix qb = orthonormal_basis(b);
  const SvdResult s = svd(matmul_tn(qa, qb));
  std::vector<double> angles;
  angles.reserve(s.sigma.size());
  for (double c : s.sigma) angles.push_back(std::acos(std::clamp(c, 0.0, 1.0)));
  std::sort(angles.begin(), angles.end());
  return angles;
}

double pairwise_min_distance(const Matrix& x, std::span<const double> a) {
  return distance(x.row(nearest_row(x, a)), a);
}

std::size_t nearest_row(const Matrix& x, std::span<const double> a) {
  if (a.size() != x.cols()) {
    fail(ErrorKind::ShapeMismatch, "pairwise_min_distance: point has length " +
                                       std::to_string(a.size()) + ", data has " +
                                       std::to_string(x.cols()) + " columns");
  }
  if (x.rows() == 0) fail(ErrorKind::InputDomain, "pairwise_min_distance: empty data");
  std::size_t best = 0;
  double best_d = squared_distance(x.row(0), a);
  for (std::size_t i = 1; i < x.rows(); ++i) {
    const double d = squared_distance(x.row(i), a);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace aeaudit
