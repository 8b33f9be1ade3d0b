#pragma once

#include <string>
#include <vector>

#include "emtc/common.hpp"
#include "emtc/encoder.hpp"
#include "emtc/losses.hpp"
#include "emtc/masking.hpp"

namespace emtc {

/// Every trainable block: V encoders, V attention projections, V decoders,
/// V*(V-1) cross-view transforms.
struct ModelParams {
  EncoderParams encoder;
  AttentionParams attention;
  DecoderParams decoder;
  CrossViewTransforms transforms;
  int V = 0, in_dim = 0, embed_dim = 0, attn_dim = 0;
};

inline ModelParams init_model(int V, int D, int d, int d_k, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x1417ULL));
  ModelParams m;
  m.V = V;
  m.in_dim = D;
  m.embed_dim = d;
  m.attn_dim = d_k;
  m.encoder = init_encoder(V, D, d, rng);
  m.attention = init_attention(V, d, d_k, rng);
  m.decoder = init_decoder(V, D, d, rng);
  m.transforms = init_transforms(V, d, rng);
  return m;
}

/// Gradient accumulator mirroring ModelParams.
struct ModelGrads {
  std::vector<ViewEncoderGrads> encoder;
  std::vector<AttentionViewGrads> attention;
  std::vector<ViewDecoderGrads> decoder;
  TransformGrads transforms;
};

inline ModelGrads make_zero_grads(const ModelParams& m) {
  ModelGrads g;
  g.encoder.resize(m.V);
  g.attention.resize(m.V);
  g.decoder.resize(m.V);
  for (int v = 0; v < m.V; ++v) {
    g.encoder[v].kernel = Matrix(m.in_dim, m.encoder.views[v].kernel_width());
    g.encoder[v].mix = Matrix(m.embed_dim, m.in_dim);
    g.encoder[v].bias.assign(m.embed_dim, 0.0);
    g.attention[v].wq = Matrix(m.embed_dim, m.attn_dim);
    g.attention[v].wk = Matrix(m.embed_dim, m.attn_dim);
    g.decoder[v].w = Matrix(m.in_dim, m.embed_dim);
    g.decoder[v].b.assign(m.in_dim, 0.0);
  }
  g.transforms.V = m.V;
  g.transforms.w.resize(static_cast<std::size_t>(m.V) * m.V);
  g.transforms.b.resize(static_cast<std::size_t>(m.V) * m.V);
  for (int i = 0; i < m.V; ++i)
    for (int j = 0; j < m.V; ++j) {
      if (i == j) continue;
      g.transforms.w[g.transforms.pair_index(i, j)] = Matrix(m.embed_dim, m.embed_dim);
      g.transforms.b[g.transforms.pair_index(i, j)].assign(m.embed_dim, 0.0);
    }
  return g;
}

/// A named view of one parameter tensor's flat storage; the same order is
/// produced for ModelParams and ModelGrads so optimizers and checks can zip.
struct TensorRef {
  std::string name;
  std::vector<double>* data;
};

inline std::vector<TensorRef> collect_tensors(ModelParams& m) {
  std::vector<TensorRef> out;
  for (int v = 0; v < m.V; ++v) {
    std::string p = "view" + std::to_string(v) + ".";
    out.push_back({p + "conv_kernel", &m.encoder.views[v].kernel.a});
    out.push_back({p + "channel_mix", &m.encoder.views[v].mix.a});
    out.push_back({p + "encoder_bias", &m.encoder.views[v].bias});
    out.push_back({p + "attn_wq", &m.attention.views[v].wq.a});
    out.push_back({p + "attn_wk", &m.attention.views[v].wk.a});
    out.push_back({p + "decoder_w", &m.decoder.views[v].w.a});
    out.push_back({p + "decoder_b", &m.decoder.views[v].b});
  }
  for (int i = 0; i < m.V; ++i)
    for (int j = 0; j < m.V; ++j) {
      if (i == j) continue;
      std::string p = "transform" + std::to_string(i) + "to" + std::to_string(j) + ".";
      out.push_back({p + "w", &m.transforms.w[m.transforms.pair_index(i, j)].a});
      out.push_back({p + "b", &m.transforms.b[m.transforms.pair_index(i, j)]});
    }
  return out;
}

inline std::vector<TensorRef> collect_tensors(ModelGrads& g, int V) {
  std::vector<TensorRef> out;
  for (int v = 0; v < V; ++v) {
    std::string p = "view" + std::to_string(v) + ".";
    out.push_back({p + "conv_kernel", &g.encoder[v].kernel.a});
    out.push_back({p + "channel_mix", &g.encoder[v].mix.a});
    out.push_back({p + "encoder_bias", &g.encoder[v].bias});
    out.push_back({p + "attn_wq", &g.attention[v].wq.a});
    out.push_back({p + "attn_wk", &g.attention[v].wk.a});
    out.push_back({p + "decoder_w", &g.decoder[v].w.a});
    out.push_back({p + "decoder_b", &g.decoder[v].b});
  }
  for (int i = 0; i < V; ++i)
    for (int j = 0; j < V; ++j) {
      if (i == j) continue;
      std::string p = "transform" + std::to_string(i) + "to" + std::to_string(j) + ".";
      out.push_back({p + "w", &g.transforms.w[g.transforms.pair_index(i, j)].a});
      out.push_back({p + "b", &g.transforms.b[g.transforms.pair_index(i, j)]});
    }
  return out;
}

}  // namespace emtc
