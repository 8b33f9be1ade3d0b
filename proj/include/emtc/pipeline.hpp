#pragma once

#include <optional>
#include <vector>

#include "emtc/common.hpp"
#include "emtc/encoder.hpp"
#include "emtc/losses.hpp"
#include "emtc/masking.hpp"
#include "emtc/model.hpp"
#include "emtc/tensor.hpp"

namespace emtc {

/// How the per-view timestamp masks are produced for one epoch.
enum class MaskingMode {
  evolving,  // attention-scored, thresholded, straight-through gradients
  all_ones,  // IVM ablated
  fixed,     // a static policy mask, shared by all views
};

/// hard: binary masks forward, sigmoid surrogate backward (training).
/// soft: sigmoid surrogate in BOTH directions against frozen thresholds
/// (finite-difference checks need a differentiable forward).
enum class MaskForward { hard, soft };

struct PipelineConfig {
  double keep_ratio = 0.75;
  double sharpness = 10.0;
  double alpha = 1.0;  // weight of intra loss
  double beta = 0.5;   // weight of inter loss
  double tau = 0.5;    // contrastive temperature
  bool use_intra = true;
  bool use_inter = true;
  bool use_contra = true;
  MaskingMode masking = MaskingMode::evolving;
  MaskForward mask_forward = MaskForward::hard;
};

/// Forward caches for one epoch: raw-pass encodings and attention (evolving
/// mode only), the masks, and the masked-pass encodings all losses consume.
struct PipelineState {
  std::vector<ViewEncoderCache> pass1;
  std::vector<AttentionCache> attn;
  MaskSet masks;
  std::vector<Matrix> applied_mask;  // multiplier actually used (hard or soft)
  std::vector<Tensor3> masked_inputs;
  std::vector<ViewEncoderCache> pass2;
  Matrix fused;  // N x d
  double l_intra = 0.0, l_inter = 0.0, l_contra = 0.0, l_total = 0.0;
  bool contra_all_skipped = false;
};

/// Weighted sum of the three training terms.
inline double total_loss(double l_contra, double l_intra, double l_inter, double alpha,
                         double beta) {
  return l_contra + alpha * l_intra + beta * l_inter;
}

/// Representation pass: raw encode -> mask -> re-encode -> fuse, plus the
/// reconstruction and consistency losses. The contrastive term is added
/// separately once cluster labels exist (see add_contrastive).
///
/// `fixed_mask` is required in fixed mode. `frozen_thresholds` (per view,
/// per sample) is used by soft mode; training callers leave it empty.
inline PipelineState forward_repr(const ModelParams& model, const Tensor3& X,
                                  const PipelineConfig& cfg, const Matrix* fixed_mask = nullptr,
                                  const std::vector<std::vector<double>>* frozen_thresholds = nullptr) {
  const int V = model.V, N = X.n, T = X.t;
  PipelineState st;
  st.applied_mask.resize(V);
  st.masks.keep_ratio = cfg.keep_ratio;
  st.masks.views.resize(V);

  if (cfg.masking == MaskingMode::evolving) {
    st.pass1.reserve(V);
    st.attn.reserve(V);
    for (int v = 0; v < V; ++v) {
      st.pass1.push_back(encode_one_view(X, model.encoder.views[v]));
      st.attn.push_back(attention_map(st.pass1[v].out, model.attention.views[v], model.attn_dim));
      Matrix imp = timestamp_importance(st.attn[v].attn);
      st.masks.views[v] = threshold_mask(imp, cfg.keep_ratio);
      if (cfg.mask_forward == MaskForward::soft) {
        const std::vector<double>& taus =
            frozen_thresholds ? (*frozen_thresholds)[v] : st.masks.views[v].thresholds;
        st.applied_mask[v] = soft_mask_for_backward(imp, taus, cfg.sharpness);
        if (frozen_thresholds) st.masks.views[v].thresholds = taus;
      } else {
        st.applied_mask[v] = st.masks.views[v].mask;
      }
    }
  } else if (cfg.masking == MaskingMode::fixed) {
    if (!fixed_mask) throw ArgumentError("forward_repr: fixed mode needs a mask");
    for (int v = 0; v < V; ++v) {
      st.masks.views[v].mask = *fixed_mask;
      st.applied_mask[v] = *fixed_mask;
    }
  } else {
    Matrix ones(N, T, 1.0);
    for (int v = 0; v < V; ++v) {
      st.masks.views[v].mask = ones;
      st.applied_mask[v] = ones;
    }
  }

  st.masked_inputs.reserve(V);
  st.pass2.reserve(V);
  std::vector<Tensor3> views;
  views.reserve(V);
  for (int v = 0; v < V; ++v) {
    st.masked_inputs.push_back(apply_mask(X, st.applied_mask[v]));
    st.pass2.push_back(encode_one_view(st.masked_inputs[v], model.encoder.views[v]));
    views.push_back(st.pass2[v].out);  // copy kept small relative to caches
  }
  st.fused = fuse_views(views);

  if (cfg.use_intra) st.l_intra = intra_loss(X, views, model.decoder);
  if (cfg.use_inter && V > 1) st.l_inter = inter_loss(views, model.transforms);
  st.l_total = total_loss(0.0, st.l_intra, st.l_inter, cfg.alpha, cfg.beta);
  return st;
}

/// Contrastive term on the fused embedding, given this epoch's cluster
/// labels' sampled positives. Completes l_total.
inline void add_contrastive(PipelineState& st, const PipelineConfig& cfg,
                            const std::vector<int>& positives) {
  if (cfg.use_contra)
    st.l_contra =
        contrastive_loss_with_positives(st.fused, positives, cfg.tau, &st.contra_all_skipped);
  st.l_total = total_loss(st.l_contra, st.l_intra, st.l_inter, cfg.alpha, cfg.beta);
}

/// Full backward. Gradients flow into encoder parameters through both the
/// masked re-encoding and (evolving mode) the straight-through mask path
/// into the attention projections and the raw-pass encoding. Thresholds are
/// treated as constants, matching the surrogate's contract.
inline ModelGrads backward(const ModelParams& model, const Tensor3& X, const PipelineConfig& cfg,
                           const PipelineState& st, const std::vector<int>& positives) {
  const int V = model.V, N = X.n, T = X.t, d = model.embed_dim;
  ModelGrads g = make_zero_grads(model);

  // d loss / d fused
  Matrix d_fused(N, d);
  if (cfg.use_contra) contrastive_backward(st.fused, positives, cfg.tau, 1.0, d_fused);

  // d loss / d F_v (masked-pass outputs)
  std::vector<Tensor3> d_views(V, Tensor3(N, T, d));
  fuse_views_backward(d_fused, V, T, d_views);
  if (cfg.use_intra)
    for (int v = 0; v < V; ++v)
      intra_backward_view(X, st.pass2[v].out, model.decoder.views[v], cfg.alpha, d_views[v],
                          g.decoder[v]);
  if (cfg.use_inter && V > 1) {
    std::vector<Tensor3> views;
    views.reserve(V);
    for (int v = 0; v < V; ++v) views.push_back(st.pass2[v].out);
    inter_backward(views, model.transforms, cfg.beta, d_views, g.transforms);
  }

  const bool mask_grad_path = (cfg.masking == MaskingMode::evolving);
  for (int v = 0; v < V; ++v) {
    Tensor3 d_masked(N, T, X.d);
    encode_one_view_backward(st.masked_inputs[v], model.encoder.views[v], st.pass2[v], d_views[v],
                             g.encoder[v], mask_grad_path ? &d_masked : nullptr);
    if (!mask_grad_path) continue;

    // d loss / d mask value, then surrogate derivative into importance.
    const ViewMask& vm = st.masks.views[v];
    Matrix d_imp(N, T);
    Matrix sg = soft_mask_grad(vm.importance, vm.thresholds, cfg.sharpness);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < T; ++j) {
        double dm = 0.0;
        const double* dx = d_masked.row(i, j);
        const double* x = X.row(i, j);
        for (int c = 0; c < X.d; ++c) dm += dx[c] * x[c];
        d_imp(i, j) = dm * sg(i, j);
      }

    Tensor3 d_attn = importance_backward(d_imp, T);
    Tensor3 d_raw(N, T, d);
    attention_backward(st.pass1[v].out, model.attention.views[v], model.attn_dim, st.attn[v],
                       d_attn, g.attention[v], d_raw);
    encode_one_view_backward(X, model.encoder.views[v], st.pass1[v], d_raw, g.encoder[v], nullptr);
  }
  return g;
}

}  // namespace emtc
