#pragma once

// Independent reference implementations used as test oracles. They avoid
// the library's own helpers on purpose.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "aeaudit/numlin.hpp"

namespace oracle {

inline aeaudit::Matrix random_matrix(std::size_t m, std::size_t n, std::mt19937_64& gen,
                                     double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  aeaudit::Matrix a(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = nd(gen);
  return a;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = nd(gen);
  return v;
}

inline aeaudit::Matrix naive_matmul(const aeaudit::Matrix& a, const aeaudit::Matrix& b) {
  aeaudit::Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += (long double)a(i, k) * b(k, j);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

inline double brute_min_distance(const aeaudit::Matrix& x, const std::vector<double>& a) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    long double s = 0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const long double d = (long double)x(i, j) - a[j];
      s += d * d;
    }
    best = std::min(best, static_cast<double>(std::sqrt(s)));
  }
  return best;
}

// Labels of 4-connected components of {mask == true} by recursive-free DFS
// over an explicit stack; -1 where the mask is false. Components are numbered
// in order of their first cell in row-major order.
inline std::vector<int> flood_fill_labels(const std::vector<std::vector<bool>>& mask) {
  const std::size_t ny = mask.size(), nx = ny ? mask[0].size() : 0;
  std::vector<int> label(nx * ny, -1);
  int next = 0;
  for (std::size_t i = 0; i < ny; ++i)
    for (std::size_t j = 0; j < nx; ++j) {
      if (!mask[i][j] || label[i * nx + j] >= 0) continue;
      std::vector<std::pair<std::size_t, std::size_t>> stack{{i, j}};
      label[i * nx + j] = next;
      while (!stack.empty()) {
        auto [ci, cj] = stack.back();
        stack.pop_back();
        const long di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const long ni = (long)ci + di[k], nj = (long)cj + dj[k];
          if (ni < 0 || nj < 0 || ni >= (long)ny || nj >= (long)nx) continue;
          if (!mask[ni][nj] || label[ni * nx + nj] >= 0) continue;
          label[ni * nx + nj] = next;
          stack.push_back({(std::size_t)ni, (std::size_t)nj});
        }
      }
      ++next;
    }
  return label;
}

// Central difference of f along every coordinate of x.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double fp = f(x);
    x[i] = keep - h;
    const double fm = f(x);
    x[i] = keep;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i] + b[i] * b[i];
  }
  return den == 0 ? std::sqrt(num) : std::sqrt(num) / std::sqrt(den / 2);
}

// Naive mean squared error, one sample.
inline double mse(const std::vector<double>& x, const std::vector<double>& y) {
  long double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += ((long double)x[i] - y[i]) * ((long double)x[i] - y[i]);
  return static_cast<double>(s / x.size());
}

}  // namespace oracle
