/*
 * linalg.hpp
 *
 * Small dense vectors and matrices. Everything here is tiny (subsystem
 * state dimensions are single digits), so plain std::vector storage is
 * all that is needed.
 */

#ifndef IMPSYM_LINALG_HPP_
#define IMPSYM_LINALG_HPP_

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace impsym {

using Vec = std::vector<double>;

struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;  // row-major

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), a(r * c, fill) {}

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  bool empty() const { return rows == 0 || cols == 0; }

  bool operator==(const Mat&) const = default;
};

inline Vec matvec(const Mat& m, const Vec& x) {
  if (m.cols != x.size())
    throw std::invalid_argument("matvec: dimension mismatch");
  Vec y(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline void axpy(double a, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline double inf_norm(const Vec& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline double inf_dist(const Vec& x, const Vec& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("inf_dist: dimension mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

/* Axis-aligned interval box. */
struct Box {
  Vec lo;
  Vec hi;

  std::size_t dim() const { return lo.size(); }

  bool valid() const {
    if (lo.size() != hi.size()) return false;
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i])) return false;
    return true;
  }

  bool contains(const Vec& x, double tol = 0.0) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
      if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
    return true;
  }

  /* shortest side length; the eta-tilde bound of grid quantization */
  double min_side() const {
    double m = hi[0] - lo[0];
    for (std::size_t i = 1; i < dim(); ++i) m = std::min(m, hi[i] - lo[i]);
    return m;
  }

  bool operator==(const Box&) const = default;
};

}  // namespace impsym

#endif  // IMPSYM_LINALG_HPP_
