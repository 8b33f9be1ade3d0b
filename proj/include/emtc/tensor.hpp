#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "emtc/common.hpp"

namespace emtc {

/// Dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

  double* row(int r) { return a.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const { return a.data() + static_cast<std::size_t>(r) * cols; }

  void fill(double v) { a.assign(a.size(), v); }
  std::size_t size() const { return a.size(); }
};

/// Dense row-major rank-3 tensor (n x t x d); the layout used for sample
/// batches (sample, timestamp, channel).
struct Tensor3 {
  int n = 0;
  int t = 0;
  int d = 0;
  std::vector<double> a;

  Tensor3() = default;
  Tensor3(int n_, int t_, int d_, double fill = 0.0)
      : n(n_), t(t_), d(d_), a(static_cast<std::size_t>(n_) * t_ * d_, fill) {}

  double& operator()(int i, int j, int k) {
    return a[(static_cast<std::size_t>(i) * t + j) * d + k];
  }
  double operator()(int i, int j, int k) const {
    return a[(static_cast<std::size_t>(i) * t + j) * d + k];
  }

  double* row(int i, int j) { return a.data() + (static_cast<std::size_t>(i) * t + j) * d; }
  const double* row(int i, int j) const {
    return a.data() + (static_cast<std::size_t>(i) * t + j) * d;
  }

  void fill(double v) { a.assign(a.size(), v); }
  std::size_t size() const { return a.size(); }
};

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(m.a); }
inline bool all_finite(const Tensor3& t) { return all_finite(t.a); }

inline double squared_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace emtc
