#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "emtc/common.hpp"
#include "emtc/tensor.hpp"

namespace emtc {

/// Top-2 principal components via cyclic Jacobi on the covariance matrix.
/// Deterministic: eigenvector signs are fixed so the largest-magnitude
/// coordinate is positive.
inline Matrix pca_2d(const Matrix& F) {
  const int N = F.rows, d = F.cols;
  if (N < 1 || d < 1) throw ArgumentError("pca_2d: empty input");

  std::vector<double> mean(d, 0.0);
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < d; ++k) mean[k] += F(i, k);
  for (double& m : mean) m /= N;

  Matrix cov(d, d);
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < d; ++a) {
      double xa = F(i, a) - mean[a];
      for (int b = a; b < d; ++b) cov(a, b) += xa * (F(i, b) - mean[b]);
    }
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) {
      cov(a, b) /= N;
      cov(b, a) = cov(a, b);
    }

  // Jacobi eigen decomposition
  Matrix vec(d, d);
  for (int a = 0; a < d; ++a) vec(a, a) = 1.0;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) off += cov(p, q) * cov(p, q);
    if (off < 1e-24) break;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        if (std::fabs(cov(p, q)) < 1e-300) continue;
        double theta = 0.5 * (cov(q, q) - cov(p, p)) / cov(p, q);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
        double c = 1.0 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < d; ++k) {
          double akp = cov(k, p), akq = cov(k, q);
          cov(k, p) = c * akp - s * akq;
          cov(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < d; ++k) {
          double apk = cov(p, k), aqk = cov(q, k);
          cov(p, k) = c * apk - s * aqk;
          cov(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < d; ++k) {
          double vkp = vec(k, p), vkq = vec(k, q);
          vec(k, p) = c * vkp - s * vkq;
          vec(k, q) = s * vkp + c * vkq;
        }
      }
  }

  std::vector<int> order(d);
  for (int k = 0; k < d; ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&cov](int a, int b) { return cov(a, a) > cov(b, b); });

  Matrix out(N, 2);
  for (int axis = 0; axis < 2 && axis < d; ++axis) {
    int col = order[axis];
    int arg = 0;
    for (int k = 1; k < d; ++k)
      if (std::fabs(vec(k, col)) > std::fabs(vec(arg, col))) arg = k;
    double sign = vec(arg, col) >= 0 ? 1.0 : -1.0;
    for (int i = 0; i < N; ++i) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += (F(i, k) - mean[k]) * vec(k, col);
      out(i, axis) = s * sign;
    }
  }
  return out;
}

/// Exact O(N^2) t-SNE with early exaggeration and momentum; deterministic
/// given the seed. Good enough for the archive-sized datasets this tool
/// plots (N <= a few hundred).
inline Matrix tsne_2d(const Matrix& F, double perplexity = 30.0, int iters = 500,
                      std::uint64_t seed = 0) {
  const int N = F.rows, d = F.cols;
  if (N < 4) throw ArgumentError("tsne_2d: need at least 4 points");
  perplexity = std::min(perplexity, (N - 1) / 3.0);

  Matrix dist2(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        double r = F(i, k) - F(j, k);
        s += r * r;
      }
      dist2(i, j) = s;
      dist2(j, i) = s;
    }

  // per-point bandwidth by binary search on perplexity
  Matrix P(N, N);
  const double target = std::log(perplexity);
  for (int i = 0; i < N; ++i) {
    double lo = 1e-20, hi = 1e20, beta = 1.0;
    std::vector<double> row(N, 0.0);
    for (int it = 0; it < 64; ++it) {
      double sum = 0.0, dotsum = 0.0;
      for (int j = 0; j < N; ++j) {
        if (j == i) continue;
        row[j] = std::exp(-beta * dist2(i, j));
        sum += row[j];
        dotsum += beta * dist2(i, j) * row[j];
      }
      double entropy = std::log(sum) + dotsum / sum;
      if (std::fabs(entropy - target) < 1e-5) break;
      if (entropy > target) {
        lo = beta;
        beta = (hi > 1e19) ? beta * 2 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = (lo < 1e-19) ? beta / 2 : 0.5 * (beta + lo);
      }
      (void)lo;
    }
    double sum = 0.0;
    for (int j = 0; j < N; ++j)
      if (j != i) sum += row[j];
    for (int j = 0; j < N; ++j)
      if (j != i) P(i, j) = row[j] / std::max(sum, 1e-300);
  }
  // symmetrize
  double ptot = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) ptot += P(i, j);
  Matrix Psym(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) Psym(i, j) = std::max((P(i, j) + P(j, i)) / ptot, 1e-12);

  Rng rng(mix_seed(seed, 0x75e0ULL));
  Matrix Y(N, 2), dY(N, 2), vel(N, 2);
  for (double& y : Y.a) y = 1e-4 * rng.normal();

  for (int iter = 0; iter < iters; ++iter) {
    const double exaggeration = iter < 100 ? 4.0 : 1.0;
    const double momentum = iter < 250 ? 0.5 : 0.8;
    // q_ij and gradient
    Matrix Q(N, N);
    double qtot = 0.0;
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j) {
        double s = 0.0;
        for (int k = 0; k < 2; ++k) {
          double r = Y(i, k) - Y(j, k);
          s += r * r;
        }
        double q = 1.0 / (1.0 + s);
        Q(i, j) = q;
        Q(j, i) = q;
        qtot += 2.0 * q;
      }
    dY.fill(0.0);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        if (j == i) continue;
        double q = Q(i, j);
        double mult = (exaggeration * Psym(i, j) - q / qtot) * q;
        for (int k = 0; k < 2; ++k) dY(i, k) += 4.0 * mult * (Y(i, k) - Y(j, k));
      }
    for (int i = 0; i < N; ++i)
      for (int k = 0; k < 2; ++k) {
        vel(i, k) = momentum * vel(i, k) - 100.0 * dY(i, k);
        Y(i, k) += vel(i, k);
      }
  }
  return Y;
}

}  // namespace emtc
