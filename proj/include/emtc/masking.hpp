#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "emtc/common.hpp"
#include "emtc/tensor.hpp"

namespace emtc {

/// Content-aware attention projections for one view.
struct AttentionViewParams {
  Matrix wq;  // d x d_k
  Matrix wk;  // d x d_k
};

struct AttentionParams {
  std::vector<AttentionViewParams> views;
  int d_k = 0;
};

inline AttentionParams init_attention(int V, int d, int d_k, Rng& rng) {
  AttentionParams p;
  p.d_k = d_k;
  p.views.resize(V);
  double s = std::sqrt(1.0 / d);
  for (auto& vp : p.views) {
    vp.wq = Matrix(d, d_k);
    vp.wk = Matrix(d, d_k);
    for (double& w : vp.wq.a) w = rng.uniform(-s, s);
    for (double& w : vp.wk.a) w = rng.uniform(-s, s);
  }
  return p;
}

struct AttentionCache {
  Tensor3 q;     // N x T x d_k
  Tensor3 k;     // N x T x d_k
  Tensor3 attn;  // N x T x T, rows sum to 1
};

/// Row-softmax of Q K^T / sqrt(d_k). Throws on non-finite logits, naming
/// the sample.
inline AttentionCache attention_map(const Tensor3& F, const AttentionViewParams& p, int d_k) {
  const int N = F.n, T = F.t, d = F.d;
  AttentionCache c;
  c.q = Tensor3(N, T, d_k);
  c.k = Tensor3(N, T, d_k);
  c.attn = Tensor3(N, T, T);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));

  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < T; ++j) {
      const double* f = F.row(i, j);
      double* q = c.q.row(i, j);
      double* k = c.k.row(i, j);
      for (int m = 0; m < d_k; ++m) {
        double sq = 0.0, sk = 0.0;
        for (int r = 0; r < d; ++r) {
          sq += f[r] * p.wq(r, m);
          sk += f[r] * p.wk(r, m);
        }
        q[m] = sq;
        k[m] = sk;
      }
    }
    for (int r = 0; r < T; ++r) {
      double* row = c.attn.row(i, r);
      const double* q = c.q.row(i, r);
      double mx = -std::numeric_limits<double>::infinity();
      for (int s = 0; s < T; ++s) {
        double logit = 0.0;
        const double* k = c.k.row(i, s);
        for (int m = 0; m < d_k; ++m) logit += q[m] * k[m];
        logit *= scale;
        if (!std::isfinite(logit))
          throw NumericError("attention_map: non-finite logit at sample " + std::to_string(i));
        row[s] = logit;
        mx = std::max(mx, logit);
      }
      double z = 0.0;
      for (int s = 0; s < T; ++s) {
        row[s] = std::exp(row[s] - mx);
        z += row[s];
      }
      double inv = 1.0 / z;
      for (int s = 0; s < T; ++s) row[s] *= inv;
    }
  }
  return c;
}

/// Scalar per-timestamp saliency: mean attention received as a key
/// (column mean). Each sample's importances sum to 1.
inline Matrix timestamp_importance(const Tensor3& attn) {
  const int N = attn.n, T = attn.t;
  Matrix imp(N, T);
  const double inv = 1.0 / T;
  for (int i = 0; i < N; ++i) {
    double* out = imp.row(i);
    for (int r = 0; r < T; ++r) {
      const double* row = attn.row(i, r);
      for (int s = 0; s < T; ++s) out[s] += row[s] * inv;
    }
  }
  return imp;
}

/// Per-view mask bundle: soft scores, hard 0/1 masks, per-sample thresholds.
struct ViewMask {
  Matrix importance;               // N x T
  Matrix mask;                     // N x T, entries 0 or 1
  std::vector<double> thresholds;  // N
};

struct MaskSet {
  std::vector<ViewMask> views;
  double keep_ratio = 1.0;
};

inline int mask_keep_count(double keep_ratio, int T) {
  return std::max(1, static_cast<int>(std::ceil(keep_ratio * T - 1e-12)));
}

/// Quantile thresholding: per sample keep exactly max(1, ceil(keep_ratio*T))
/// timestamps with the highest importance; ties keep the earlier timestamp.
inline ViewMask threshold_mask(const Matrix& importance, double keep_ratio) {
  if (keep_ratio <= 0.0 || keep_ratio > 1.0)
    throw ArgumentError("threshold_mask: keep_ratio must be in (0,1]");
  const int N = importance.rows, T = importance.cols;
  const int k = mask_keep_count(keep_ratio, T);
  ViewMask vm;
  vm.importance = importance;
  vm.mask = Matrix(N, T);
  vm.thresholds.resize(N);
  std::vector<int> idx(T);
  for (int i = 0; i < N; ++i) {
    const double* imp = importance.row(i);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [imp](int a, int b) { return imp[a] > imp[b]; });
    for (int r = 0; r < k; ++r) vm.mask(i, idx[r]) = 1.0;
    vm.thresholds[i] = imp[idx[k - 1]];
  }
  return vm;
}

/// Zero out masked timestamps across all variates.
inline Tensor3 apply_mask(const Tensor3& X, const Matrix& mask) {
  if (X.n != mask.rows || X.t != mask.cols) throw ShapeError("apply_mask: shape mismatch");
  Tensor3 out = X;
  for (int i = 0; i < X.n; ++i)
    for (int j = 0; j < X.t; ++j) {
      double m = mask(i, j);
      double* row = out.row(i, j);
      for (int c = 0; c < X.d; ++c) row[c] *= m;
    }
  return out;
}

/// Sigmoid surrogate sigma(sharpness * (importance - threshold)); the
/// backward half of the straight-through estimator (and the forward mask in
/// gradient-check mode).
inline Matrix soft_mask_for_backward(const Matrix& importance, const std::vector<double>& thresholds,
                                     double sharpness) {
  if (sharpness <= 0.0) throw ArgumentError("soft_mask_for_backward: sharpness must be > 0");
  Matrix soft(importance.rows, importance.cols);
  for (int i = 0; i < importance.rows; ++i) {
    double tau = thresholds[i];
    for (int j = 0; j < importance.cols; ++j) {
      double z = sharpness * (importance(i, j) - tau);
      soft(i, j) = 1.0 / (1.0 + std::exp(-z));
    }
  }
  return soft;
}

/// d soft / d importance for the surrogate above (thresholds detached).
inline Matrix soft_mask_grad(const Matrix& importance, const std::vector<double>& thresholds,
                             double sharpness) {
  Matrix g(importance.rows, importance.cols);
  for (int i = 0; i < importance.rows; ++i) {
    double tau = thresholds[i];
    for (int j = 0; j < importance.cols; ++j) {
      double z = sharpness * (importance(i, j) - tau);
      double s = 1.0 / (1.0 + std::exp(-z));
      g(i, j) = sharpness * s * (1.0 - s);
    }
  }
  return g;
}

/// Backward of timestamp_importance: a gradient on column means spreads
/// uniformly over rows.
inline Tensor3 importance_backward(const Matrix& d_imp, int T) {
  Tensor3 d_attn(d_imp.rows, T, T);
  const double inv = 1.0 / T;
  for (int i = 0; i < d_imp.rows; ++i)
    for (int r = 0; r < T; ++r) {
      double* row = d_attn.row(i, r);
      const double* gi = d_imp.row(i);
      for (int s = 0; s < T; ++s) row[s] = gi[s] * inv;
    }
  return d_attn;
}

struct AttentionViewGrads {
  Matrix wq;
  Matrix wk;
};

/// Backprop through softmax(QK^T/sqrt(d_k)): accumulates projection grads
/// into `g` and the representation gradient into d_F.
inline void attention_backward(const Tensor3& F, const AttentionViewParams& p, int d_k,
                               const AttentionCache& cache, const Tensor3& d_attn,
                               AttentionViewGrads& g, Tensor3& d_F) {
  const int N = F.n, T = F.t, d = F.d;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k));

  if (g.wq.size() == 0) {
    g.wq = Matrix(d, d_k);
    g.wk = Matrix(d, d_k);
  }

  Tensor3 d_q(N, T, d_k), d_kk(N, T, d_k);
  std::vector<double> d_logit(T);
  for (int i = 0; i < N; ++i) {
    for (int r = 0; r < T; ++r) {
      const double* a = cache.attn.row(i, r);
      const double* da = d_attn.row(i, r);
      double dot = 0.0;
      for (int s = 0; s < T; ++s) dot += da[s] * a[s];
      for (int s = 0; s < T; ++s) d_logit[s] = a[s] * (da[s] - dot) * scale;
      double* dq = d_q.row(i, r);
      const double* q = cache.q.row(i, r);
      for (int s = 0; s < T; ++s) {
        if (d_logit[s] == 0.0) continue;
        const double* k = cache.k.row(i, s);
        double* dk = d_kk.row(i, s);
        for (int m = 0; m < d_k; ++m) {
          dq[m] += d_logit[s] * k[m];
          dk[m] += d_logit[s] * q[m];
        }
      }
    }
  }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < T; ++j) {
      const double* f = F.row(i, j);
      const double* dq = d_q.row(i, j);
      const double* dk = d_kk.row(i, j);
      double* df = d_F.row(i, j);
      for (int r = 0; r < d; ++r) {
        double acc = 0.0;
        const double* wq = p.wq.row(r);
        const double* wk = p.wk.row(r);
        double* gq = g.wq.row(r);
        double* gk = g.wk.row(r);
        for (int m = 0; m < d_k; ++m) {
          gq[m] += f[r] * dq[m];
          gk[m] += f[r] * dk[m];
          acc += dq[m] * wq[m] + dk[m] * wk[m];
        }
        df[r] += acc;
      }
    }
}

}  // namespace emtc
