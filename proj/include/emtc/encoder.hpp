#pragma once

#include <cmath>
#include <vector>

#include "emtc/common.hpp"
#include "emtc/tensor.hpp"

namespace emtc {

/// Smooth nonlinearity with f(0)=0. Gaussian-error-linear keeps the encoder
/// non-odd, so temporal pooling does not cancel symmetric oscillations.
inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865476)); }

inline double gelu_grad(double x) {
  double phi = 0.5 * (1.0 + std::erf(x * 0.7071067811865476));
  double pdf = 0.3989422804014327 * std::exp(-0.5 * x * x);
  return phi + x * pdf;
}

/// One view-specific encoder: per-channel temporal convolution (same
/// padding, width k_v) -> linear channel mix D->d -> gelu.
struct ViewEncoderParams {
  Matrix kernel;               // D x k_v, per-channel temporal filter
  Matrix mix;                  // d x D
  std::vector<double> bias;    // d

  int kernel_width() const { return kernel.cols; }
};

struct EncoderParams {
  std::vector<ViewEncoderParams> views;
  int in_dim = 0;   // D
  int out_dim = 0;  // d

  int n_views() const { return static_cast<int>(views.size()); }
};

inline int encoder_kernel_width(int view) {
  static const int widths[4] = {3, 5, 9, 15};
  return widths[view % 4];
}

/// Fan-in-scaled uniform init; biases start at zero.
inline EncoderParams init_encoder(int V, int D, int d, Rng& rng) {
  EncoderParams p;
  p.in_dim = D;
  p.out_dim = d;
  p.views.resize(V);
  for (int v = 0; v < V; ++v) {
    int k = encoder_kernel_width(v);
    ViewEncoderParams& vp = p.views[v];
    vp.kernel = Matrix(D, k);
    double sk = std::sqrt(1.0 / k);
    for (double& w : vp.kernel.a) w = rng.uniform(-sk, sk);
    vp.mix = Matrix(d, D);
    double sm = std::sqrt(1.0 / D);
    for (double& w : vp.mix.a) w = rng.uniform(-sm, sm);
    vp.bias.assign(d, 0.0);
  }
  return p;
}

/// Caches kept from the forward pass for backpropagation.
struct ViewEncoderCache {
  Tensor3 conv_out;  // N x T x D
  Tensor3 preact;    // N x T x d
  Tensor3 out;       // N x T x d
};

inline ViewEncoderCache encode_one_view(const Tensor3& X, const ViewEncoderParams& p) {
  const int N = X.n, T = X.t, D = X.d;
  const int d = static_cast<int>(p.bias.size());
  const int k = p.kernel_width();
  const int off = (k - 1) / 2;

  ViewEncoderCache c;
  c.conv_out = Tensor3(N, T, D);
  c.preact = Tensor3(N, T, d);
  c.out = Tensor3(N, T, d);

  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < T; ++j) {
      double* conv_row = c.conv_out.row(i, j);
      for (int ch = 0; ch < D; ++ch) {
        double s = 0.0;
        const double* w = p.kernel.row(ch);
        for (int u = 0; u < k; ++u) {
          int src = j + u - off;
          if (src >= 0 && src < T) s += w[u] * X(i, src, ch);
        }
        conv_row[ch] = s;
      }
      double* pre = c.preact.row(i, j);
      double* out = c.out.row(i, j);
      for (int m = 0; m < d; ++m) {
        double s = p.bias[m];
        const double* w = p.mix.row(m);
        for (int ch = 0; ch < D; ++ch) s += w[ch] * conv_row[ch];
        pre[m] = s;
        out[m] = gelu(s);
      }
    }
  }
  return c;
}

/// Multi-view generation: view v is produced by encoder v only.
inline std::vector<Tensor3> encode_views(const Tensor3& X, const EncoderParams& params) {
  if (X.d != params.in_dim) throw ShapeError("encode_views: variate count mismatch");
  if (!all_finite(X)) throw NumericError("encode_views: non-finite input");
  std::vector<Tensor3> out;
  out.reserve(params.views.size());
  for (const auto& vp : params.views) out.push_back(encode_one_view(X, vp).out);
  return out;
}

struct ViewEncoderGrads {
  Matrix kernel;
  Matrix mix;
  std::vector<double> bias;
};

/// Backprop one view. Accumulates parameter gradients into `g` and, when
/// dX is non-null, the input gradient into *dX.
inline void encode_one_view_backward(const Tensor3& X, const ViewEncoderParams& p,
                                     const ViewEncoderCache& cache, const Tensor3& d_out,
                                     ViewEncoderGrads& g, Tensor3* dX) {
  const int N = X.n, T = X.t, D = X.d;
  const int d = static_cast<int>(p.bias.size());
  const int k = p.kernel_width();
  const int off = (k - 1) / 2;

  if (g.kernel.size() == 0) {
    g.kernel = Matrix(D, k);
    g.mix = Matrix(d, D);
    g.bias.assign(d, 0.0);
  }

  std::vector<double> d_conv(D);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < T; ++j) {
      const double* pre = cache.preact.row(i, j);
      const double* go = d_out.row(i, j);
      const double* conv_row = cache.conv_out.row(i, j);
      for (int ch = 0; ch < D; ++ch) d_conv[ch] = 0.0;
      for (int m = 0; m < d; ++m) {
        double dpre = go[m] * gelu_grad(pre[m]);
        g.bias[m] += dpre;
        const double* w = p.mix.row(m);
        double* gw = g.mix.row(m);
        for (int ch = 0; ch < D; ++ch) {
          gw[ch] += dpre * conv_row[ch];
          d_conv[ch] += dpre * w[ch];
        }
      }
      for (int ch = 0; ch < D; ++ch) {
        const double* w = p.kernel.row(ch);
        double* gk = g.kernel.row(ch);
        for (int u = 0; u < k; ++u) {
          int src = j + u - off;
          if (src < 0 || src >= T) continue;
          gk[u] += d_conv[ch] * X(i, src, ch);
          if (dX) (*dX)(i, src, ch) += d_conv[ch] * w[u];
        }
      }
    }
  }
}

/// Fuse per-view representations: mean over views then mean over time
/// (order irrelevant by linearity). Returns N x d.
inline Matrix fuse_views(const std::vector<Tensor3>& views) {
  if (views.empty()) throw ArgumentError("fuse_views: no views");
  const int N = views[0].n, T = views[0].t, d = views[0].d;
  for (const auto& v : views)
    if (v.n != N || v.t != T || v.d != d) throw ShapeError("fuse_views: shape mismatch");
  Matrix fused(N, d);
  const double inv = 1.0 / (static_cast<double>(views.size()) * T);
  for (const auto& v : views)
    for (int i = 0; i < N; ++i) {
      double* out = fused.row(i);
      for (int j = 0; j < T; ++j) {
        const double* row = v.row(i, j);
        for (int m = 0; m < d; ++m) out[m] += row[m] * inv;
      }
    }
  return fused;
}

/// d fused / d view entry is the constant 1/(V*T); spread a fused gradient
/// back over every view timestamp.
inline void fuse_views_backward(const Matrix& d_fused, int V, int T,
                                std::vector<Tensor3>& d_views) {
  const double inv = 1.0 / (static_cast<double>(V) * T);
  for (int v = 0; v < V; ++v)
    for (int i = 0; i < d_fused.rows; ++i) {
      const double* gf = d_fused.row(i);
      for (int j = 0; j < T; ++j) {
        double* row = d_views[v].row(i, j);
        for (int m = 0; m < d_fused.cols; ++m) row[m] += gf[m] * inv;
      }
    }
}

}  // namespace emtc
