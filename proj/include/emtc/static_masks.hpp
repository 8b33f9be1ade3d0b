#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "emtc/common.hpp"
#include "emtc/masking.hpp"
#include "emtc/tensor.hpp"

namespace emtc {

enum class MaskPolicy { evolving, random, uniform, variance, frequency };

inline const char* mask_policy_name(MaskPolicy p) {
  switch (p) {
    case MaskPolicy::evolving: return "evolving";
    case MaskPolicy::random: return "random";
    case MaskPolicy::uniform: return "uniform";
    case MaskPolicy::variance: return "variance";
    case MaskPolicy::frequency: return "frequency";
  }
  return "?";
}

inline MaskPolicy mask_policy_from_name(const std::string& s) {
  if (s == "evolving") return MaskPolicy::evolving;
  if (s == "random") return MaskPolicy::random;
  if (s == "uniform") return MaskPolicy::uniform;
  if (s == "variance") return MaskPolicy::variance;
  if (s == "frequency") return MaskPolicy::frequency;
  throw ArgumentError("unknown mask policy: " + s);
}

/// Fixed masking baseline: computed once before training, never updated.
struct StaticMaskPolicy {
  MaskPolicy kind = MaskPolicy::random;
  double keep_ratio = 0.75;
  std::uint64_t seed = 0;
};

namespace static_mask_detail {

/// Keep the k highest-scoring timestamps; ties keep the earlier index.
inline void keep_top_k(const std::vector<double>& score, int k, double* mask_row) {
  const int T = static_cast<int>(score.size());
  std::vector<int> idx(T);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&score](int a, int b) { return score[a] > score[b]; });
  for (int r = 0; r < k; ++r) mask_row[idx[r]] = 1.0;
}

/// Band-limited energy score: magnitude at t of the reconstruction from the
/// top-m DFT components, summed over variates. Naive O(T^2) transform.
inline std::vector<double> frequency_score(const Tensor3& X, int i, int m) {
  const int T = X.t, D = X.d;
  std::vector<double> score(T, 0.0);
  std::vector<double> re(T), im(T), mag(T);
  const double w0 = 6.283185307179586 / T;
  for (int ch = 0; ch < D; ++ch) {
    for (int f = 0; f < T; ++f) {
      double sr = 0.0, si = 0.0;
      for (int t = 0; t < T; ++t) {
        double x = X(i, t, ch);
        sr += x * std::cos(w0 * f * t);
        si -= x * std::sin(w0 * f * t);
      }
      re[f] = sr;
      im[f] = si;
      mag[f] = std::sqrt(sr * sr + si * si);
    }
    std::vector<int> order(T);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&mag](int a, int b) { return mag[a] > mag[b]; });
    for (int t = 0; t < T; ++t) {
      double sr = 0.0, si = 0.0;
      for (int r = 0; r < m; ++r) {
        int f = order[r];
        double c = std::cos(w0 * f * t), s = std::sin(w0 * f * t);
        sr += re[f] * c - im[f] * s;
        si += re[f] * s + im[f] * c;
      }
      score[t] += std::sqrt(sr * sr + si * si) / T;
    }
  }
  return score;
}

}  // namespace static_mask_detail

/// Fixed N x T mask per policy, k = max(1, ceil(keep_ratio * T)) kept
/// timestamps per sample.
inline Matrix static_mask(const Tensor3& X, const StaticMaskPolicy& policy) {
  using namespace static_mask_detail;
  const int N = X.n, T = X.t, D = X.d;
  const int k = mask_keep_count(policy.keep_ratio, T);
  Matrix mask(N, T);

  switch (policy.kind) {
    case MaskPolicy::evolving:
      throw ArgumentError("static_mask: evolving is not a static policy");
    case MaskPolicy::random: {
      std::vector<int> idx(T);
      for (int i = 0; i < N; ++i) {
        Rng rng(mix_seed(policy.seed, static_cast<std::uint64_t>(i)));
        std::iota(idx.begin(), idx.end(), 0);
        // Fisher-Yates prefix of size k
        for (int r = 0; r < k; ++r) {
          int pick = r + rng.uniform_int(T - r);
          std::swap(idx[r], idx[pick]);
          mask(i, idx[r]) = 1.0;
        }
      }
      break;
    }
    case MaskPolicy::uniform: {
      // Evenly spaced: indices floor(j*T/k), j = 0..k-1, starting at 0.
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < k; ++j)
          mask(i, static_cast<int>(static_cast<long long>(j) * T / k)) = 1.0;
      break;
    }
    case MaskPolicy::variance: {
      std::vector<double> score(T);
      for (int i = 0; i < N; ++i) {
        for (int t = 0; t < T; ++t) {
          double mean = 0.0;
          for (int ch = 0; ch < D; ++ch) mean += X(i, t, ch);
          mean /= D;
          double var = 0.0;
          for (int ch = 0; ch < D; ++ch) {
            double r = X(i, t, ch) - mean;
            var += r * r;
          }
          score[t] = var / D;
        }
        keep_top_k(score, k, mask.row(i));
      }
      break;
    }
    case MaskPolicy::frequency: {
      const int m = std::max(1, static_cast<int>(std::ceil(policy.keep_ratio * T - 1e-12)));
      for (int i = 0; i < N; ++i) {
        std::vector<double> score = frequency_score(X, i, m);
        keep_top_k(score, k, mask.row(i));
      }
      break;
    }
  }
  return mask;
}

}  // namespace emtc
