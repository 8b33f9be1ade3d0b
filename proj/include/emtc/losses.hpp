#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "emtc/common.hpp"
#include "emtc/tensor.hpp"

namespace emtc {

/// Per-view reconstruction head: a per-timestamp linear map d -> D.
struct ViewDecoderParams {
  Matrix w;                  // D x d
  std::vector<double> b;     // D
};

struct DecoderParams {
  std::vector<ViewDecoderParams> views;
};

inline DecoderParams init_decoder(int V, int D, int d, Rng& rng) {
  DecoderParams p;
  p.views.resize(V);
  double s = std::sqrt(1.0 / d);
  for (auto& vp : p.views) {
    vp.w = Matrix(D, d);
    for (double& w : vp.w.a) w = rng.uniform(-s, s);
    vp.b.assign(D, 0.0);
  }
  return p;
}

/// Linear semantic bridges between ordered view pairs, d -> d with bias.
struct CrossViewTransforms {
  int V = 0;
  std::vector<Matrix> w;                // indexed pair_index(i,j)
  std::vector<std::vector<double>> b;

  int pair_index(int i, int j) const { return i * V + j; }
};

inline CrossViewTransforms init_transforms(int V, int d, Rng& rng) {
  CrossViewTransforms t;
  t.V = V;
  t.w.resize(static_cast<std::size_t>(V) * V);
  t.b.resize(static_cast<std::size_t>(V) * V);
  double s = std::sqrt(1.0 / d);
  for (int i = 0; i < V; ++i)
    for (int j = 0; j < V; ++j) {
      if (i == j) continue;
      Matrix& w = t.w[t.pair_index(i, j)];
      w = Matrix(d, d);
      for (double& x : w.a) x = rng.uniform(-s, s);
      t.b[t.pair_index(i, j)].assign(d, 0.0);
    }
  return t;
}

/// Reconstruct X from one view's representation.
inline Tensor3 decode_view(const Tensor3& F, const ViewDecoderParams& p) {
  const int N = F.n, T = F.t, d = F.d;
  const int D = static_cast<int>(p.b.size());
  Tensor3 out(N, T, D);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < T; ++j) {
      const double* f = F.row(i, j);
      double* o = out.row(i, j);
      for (int c = 0; c < D; ++c) {
        double s = p.b[c];
        const double* w = p.w.row(c);
        for (int m = 0; m < d; ++m) s += w[m] * f[m];
        o[c] = s;
      }
    }
  return out;
}

/// Intra-view reconstruction loss: sum_v ||X - R_v(F_v)||_F^2, batch-mean
/// normalized (divided by N).
inline double intra_loss(const Tensor3& X, const std::vector<Tensor3>& views,
                         const DecoderParams& decoders) {
  double loss = 0.0;
  for (std::size_t v = 0; v < views.size(); ++v) {
    Tensor3 rec = decode_view(views[v], decoders.views[v]);
    if (rec.n != X.n || rec.t != X.t || rec.d != X.d)
      throw ShapeError("intra_loss: decoder output shape mismatch");
    for (std::size_t q = 0; q < X.a.size(); ++q) {
      double r = X.a[q] - rec.a[q];
      loss += r * r;
    }
  }
  return loss / X.n;
}

struct ViewDecoderGrads {
  Matrix w;
  std::vector<double> b;
};

/// Accumulates weight * d(intra)/d{F_v, decoder_v} for one view.
inline void intra_backward_view(const Tensor3& X, const Tensor3& F, const ViewDecoderParams& p,
                                double weight, Tensor3& d_F, ViewDecoderGrads& g) {
  const int N = X.n, T = X.t, D = X.d, d = F.d;
  if (g.w.size() == 0) {
    g.w = Matrix(D, d);
    g.b.assign(D, 0.0);
  }
  const double scale = 2.0 * weight / N;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < T; ++j) {
      const double* f = F.row(i, j);
      const double* x = X.row(i, j);
      double* df = d_F.row(i, j);
      for (int c = 0; c < D; ++c) {
        double rec = p.b[c];
        const double* w = p.w.row(c);
        for (int m = 0; m < d; ++m) rec += w[m] * f[m];
        double dres = scale * (rec - x[c]);
        g.b[c] += dres;
        double* gw = g.w.row(c);
        for (int m = 0; m < d; ++m) {
          gw[m] += dres * f[m];
          df[m] += dres * w[m];
        }
      }
    }
}

inline Tensor3 transform_view(const Tensor3& F, const Matrix& w, const std::vector<double>& b) {
  const int N = F.n, T = F.t, d = F.d;
  Tensor3 out(N, T, d);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < T; ++j) {
      const double* f = F.row(i, j);
      double* o = out.row(i, j);
      for (int r = 0; r < d; ++r) {
        double s = b[r];
        const double* wr = w.row(r);
        for (int m = 0; m < d; ++m) s += wr[m] * f[m];
        o[r] = s;
      }
    }
  return out;
}

/// Inter-view consistency loss: sum over unordered pairs of both directed
/// residuals ||F_j - T_ij(F_i)||_F^2, batch-mean normalized. Zero for V=1.
inline double inter_loss(const std::vector<Tensor3>& views, const CrossViewTransforms& transforms) {
  const int V = static_cast<int>(views.size());
  if (V < 1) throw ArgumentError("inter_loss: no views");
  double loss = 0.0;
  for (int i = 0; i < V; ++i)
    for (int j = i + 1; j < V; ++j) {
      for (auto [src, dst] : {std::pair{i, j}, std::pair{j, i}}) {
        Tensor3 mapped = transform_view(views[src], transforms.w[transforms.pair_index(src, dst)],
                                        transforms.b[transforms.pair_index(src, dst)]);
        for (std::size_t q = 0; q < mapped.a.size(); ++q) {
          double r = views[dst].a[q] - mapped.a[q];
          loss += r * r;
        }
      }
    }
  return loss / views[0].n;
}

struct TransformGrads {
  int V = 0;
  std::vector<Matrix> w;
  std::vector<std::vector<double>> b;

  int pair_index(int i, int j) const { return i * V + j; }
};

/// Accumulates weight * d(inter)/d{F, transforms} over every ordered pair.
inline void inter_backward(const std::vector<Tensor3>& views, const CrossViewTransforms& tr,
                           double weight, std::vector<Tensor3>& d_views, TransformGrads& g) {
  const int V = static_cast<int>(views.size());
  if (V < 2) return;
  const int N = views[0].n, T = views[0].t, d = views[0].d;
  if (g.w.empty()) {
    g.V = V;
    g.w.resize(static_cast<std::size_t>(V) * V);
    g.b.resize(static_cast<std::size_t>(V) * V);
    for (int i = 0; i < V; ++i)
      for (int j = 0; j < V; ++j) {
        if (i == j) continue;
        g.w[g.pair_index(i, j)] = Matrix(d, d);
        g.b[g.pair_index(i, j)].assign(d, 0.0);
      }
  }
  const double scale = 2.0 * weight / N;
  std::vector<double> res(d);
  for (int src = 0; src < V; ++src)
    for (int dst = 0; dst < V; ++dst) {
      if (src == dst) continue;
      const Matrix& w = tr.w[tr.pair_index(src, dst)];
      const std::vector<double>& b = tr.b[tr.pair_index(src, dst)];
      Matrix& gw = g.w[g.pair_index(src, dst)];
      std::vector<double>& gb = g.b[g.pair_index(src, dst)];
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < T; ++j) {
          const double* fs = views[src].row(i, j);
          const double* fd = views[dst].row(i, j);
          double* dfs = d_views[src].row(i, j);
          double* dfd = d_views[dst].row(i, j);
          for (int r = 0; r < d; ++r) {
            double mapped = b[r];
            const double* wr = w.row(r);
            for (int m = 0; m < d; ++m) mapped += wr[m] * fs[m];
            res[r] = mapped - fd[r];  // -(F_dst - mapped)
          }
          for (int r = 0; r < d; ++r) {
            double dr = scale * res[r];
            dfd[r] -= dr;
            gb[r] += dr;
            double* gwr = gw.row(r);
            const double* wr = w.row(r);
            for (int m = 0; m < d; ++m) {
              gwr[m] += dr * fs[m];
              dfs[m] += dr * wr[m];
            }
          }
        }
    }
}

constexpr double kCosineEps = 1e-12;

/// Cosine similarity with an epsilon guard against zero norms.
inline double cosine_sim(const double* a, const double* b, int d) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int m = 0; m < d; ++m) {
    dot += a[m] * b[m];
    na += a[m] * a[m];
    nb += b[m] * b[m];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb) + kCosineEps);
}

inline double cosine_sim(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("cosine_sim: dimension mismatch");
  return cosine_sim(a.data(), b.data(), static_cast<int>(a.size()));
}

/// One uniformly drawn same-cluster partner per anchor; anchors whose
/// cluster is a singleton get -1 (skipped this epoch).
inline std::vector<int> sample_positives(const std::vector<int>& labels, Rng& rng) {
  const int N = static_cast<int>(labels.size());
  std::vector<std::vector<int>> members;
  for (int i = 0; i < N; ++i) {
    int l = labels[i];
    if (l >= static_cast<int>(members.size())) members.resize(l + 1);
    members[l].push_back(i);
  }
  std::vector<int> pos(N, -1);
  for (int i = 0; i < N; ++i) {
    const auto& cluster = members[labels[i]];
    if (cluster.size() < 2) continue;
    int pick = rng.uniform_int(static_cast<int>(cluster.size()) - 1);
    int j = cluster[pick];
    if (j == i) j = cluster.back();
    pos[i] = j;
  }
  return pos;
}

/// Cluster-guided contrastive loss. For anchor i with positive p:
///   -log exp(sim(i,p)/tau) / sum_{j != i} exp(sim(i,j)/tau)
/// (the positive appears once in the denominator), mean over anchors with a
/// positive. Returns 0 when every cluster is a singleton.
inline double contrastive_loss_with_positives(const Matrix& F, const std::vector<int>& positives,
                                              double tau, bool* all_skipped = nullptr) {
  const int N = F.rows, d = F.cols;
  if (tau <= 0.0) throw ArgumentError("contrastive_loss: tau must be > 0");
  int anchors = 0;
  double loss = 0.0;
  std::vector<double> sims(N);
  for (int i = 0; i < N; ++i) {
    if (positives[i] < 0) continue;
    anchors++;
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      sims[j] = cosine_sim(F.row(i), F.row(j), d) / tau;
      mx = std::max(mx, sims[j]);
    }
    double z = 0.0;
    for (int j = 0; j < N; ++j)
      if (j != i) z += std::exp(sims[j] - mx);
    loss += (mx + std::log(z)) - sims[positives[i]];
  }
  if (all_skipped) *all_skipped = (anchors == 0);
  if (anchors == 0) return 0.0;
  return loss / anchors;
}

struct ContrastConfig {
  double temperature = 0.5;
  std::uint64_t positive_sampling_seed = 0;
};

/// Spec-facing wrapper: draws the positives from the epoch-seeded RNG.
inline double contrastive_loss(const Matrix& F, const std::vector<int>& labels,
                               const ContrastConfig& cfg, bool* all_skipped = nullptr) {
  Rng rng(cfg.positive_sampling_seed);
  std::vector<int> pos = sample_positives(labels, rng);
  return contrastive_loss_with_positives(F, pos, cfg.temperature, all_skipped);
}

/// Accumulates weight * d(contrastive)/dF into d_F.
inline void contrastive_backward(const Matrix& F, const std::vector<int>& positives, double tau,
                                 double weight, Matrix& d_F) {
  const int N = F.rows, d = F.cols;
  int anchors = 0;
  for (int i = 0; i < N; ++i)
    if (positives[i] >= 0) anchors++;
  if (anchors == 0) return;

  // Pairwise similarities and norms once; O(N^2 d).
  std::vector<double> norms(N);
  for (int i = 0; i < N; ++i) {
    double s = 0.0;
    const double* f = F.row(i);
    for (int m = 0; m < d; ++m) s += f[m] * f[m];
    norms[i] = std::sqrt(s);
  }
  Matrix sim(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double s = cosine_sim(F.row(i), F.row(j), d);
      sim(i, j) = s;
      sim(j, i) = s;
    }

  const double inv_anchors = weight / anchors;
  std::vector<double> p(N);
  for (int i = 0; i < N; ++i) {
    if (positives[i] < 0) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < N; ++j)
      if (j != i) mx = std::max(mx, sim(i, j) / tau);
    double z = 0.0;
    for (int j = 0; j < N; ++j)
      if (j != i) {
        p[j] = std::exp(sim(i, j) / tau - mx);
        z += p[j];
      }
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      double coef = (p[j] / z - (j == positives[i] ? 1.0 : 0.0)) / tau * inv_anchors;
      if (coef == 0.0) continue;
      // d sim(i,j) / d F_i and / d F_j
      const double* fi = F.row(i);
      const double* fj = F.row(j);
      double den = norms[i] * norms[j] + kCosineEps;
      double s = sim(i, j);
      double* gi = d_F.row(i);
      double* gj = d_F.row(j);
      double ni = std::max(norms[i], 1e-300), nj = std::max(norms[j], 1e-300);
      for (int m = 0; m < d; ++m) {
        gi[m] += coef * (fj[m] / den - s * fi[m] * nj / (ni * den));
        gj[m] += coef * (fi[m] / den - s * fj[m] * ni / (nj * den));
      }
    }
  }
}

}  // namespace emtc
