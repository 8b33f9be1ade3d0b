#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <string>
#include <vector>

#include "emtc/adam.hpp"
#include "emtc/common.hpp"
#include "emtc/dataset.hpp"
#include "emtc/kmeans.hpp"
#include "emtc/metrics.hpp"
#include "emtc/model.hpp"
#include "emtc/pipeline.hpp"
#include "emtc/static_masks.hpp"

namespace emtc {

/// Every knob of one experiment. Defaults are the library's own choices;
/// everything is overridable from config files and CLI flags.
struct ExperimentConfig {
  int views = 3;       // V
  int embed_dim = 64;  // d
  int attn_dim = 32;   // d_k
  double keep_ratio = 0.75;
  double temperature = 0.5;
  double alpha = 1.0;
  double beta = 0.5;
  double learning_rate = 1e-3;
  int epochs = 200;
  double mask_sharpness = 10.0;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  int clusters = 0;  // 0 = take g from dataset labels
  bool use_ivm = true;
  bool use_mev = true;
  bool use_intra = true;
  bool use_inter = true;
  bool use_contra = true;
  MaskPolicy mask_policy = MaskPolicy::evolving;
  double plateau_tol = 1e-6;
  int plateau_patience = 10;

  int effective_views() const { return use_mev ? views : 1; }

  PipelineConfig pipeline() const {
    PipelineConfig p;
    p.keep_ratio = keep_ratio;
    p.sharpness = mask_sharpness;
    p.alpha = alpha;
    p.beta = beta;
    p.tau = temperature;
    p.use_intra = use_intra;
    p.use_inter = use_inter;
    p.use_contra = use_contra;
    if (!use_ivm)
      p.masking = MaskingMode::all_ones;
    else if (mask_policy == MaskPolicy::evolving)
      p.masking = MaskingMode::evolving;
    else
      p.masking = MaskingMode::fixed;
    return p;
  }
};

struct EpochRecord {
  int epoch = 0;
  double l_total = 0.0, l_contra = 0.0, l_intra = 0.0, l_inter = 0.0;
  double acc = std::nan(""), nmi = std::nan(""), ari = std::nan("");
  double mask_change = 0.0;
  double seconds = 0.0;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  ModelParams model;
  ClusterState clusters;
  TrainTrace trace;
  int epochs_run = 0;
  double seconds = 0.0;
};

namespace trainer_detail {

inline int resolve_g(const TimeSeriesDataset& ds, const ExperimentConfig& cfg) {
  int g = cfg.clusters > 0 ? cfg.clusters : ds.g_hint;
  if (g < 1)
    throw ArgumentError("train: cluster count unknown (no labels and no --clusters)");
  if (ds.n() < g) throw ArgumentError("train: fewer samples than clusters");
  return g;
}

inline double mask_change_rate(const MaskSet& cur, const MaskSet& prev) {
  if (prev.views.empty()) return 0.0;
  double changed = 0.0, total = 0.0;
  for (std::size_t v = 0; v < cur.views.size(); ++v) {
    const Matrix& a = cur.views[v].mask;
    const Matrix& b = prev.views[v].mask;
    for (std::size_t q = 0; q < a.a.size(); ++q) {
      changed += (a.a[q] != b.a[q]) ? 1.0 : 0.0;
      total += 1.0;
    }
  }
  return total > 0.0 ? changed / total : 0.0;
}

}  // namespace trainer_detail

/// One full training run per Algorithm-1 order: raw encode, mask, re-encode
/// with reconstruction/consistency losses, k-means label update, contrastive
/// term, one Adam step. Stops at `epochs` or after `plateau_patience`
/// consecutive epochs with |delta L_total| < plateau_tol. Deterministic for
/// a given (config, seed).
/// Per-epoch observer, e.g. for mask-evolution dumps.
using MaskObserver = std::function<void(int epoch, const MaskSet&)>;

inline TrainResult train(const TimeSeriesDataset& dataset, const ExperimentConfig& cfg,
                         std::uint64_t seed, const MaskObserver& mask_observer = {}) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  const int g = trainer_detail::resolve_g(dataset, cfg);
  const Tensor3& X = dataset.samples;
  const int V = cfg.effective_views();

  TrainResult result;
  result.model = init_model(V, X.d, cfg.embed_dim, cfg.attn_dim, seed);
  PipelineConfig pcfg = cfg.pipeline();

  Matrix fixed;
  const Matrix* fixed_ptr = nullptr;
  if (pcfg.masking == MaskingMode::fixed) {
    StaticMaskPolicy policy{cfg.mask_policy, cfg.keep_ratio, mix_seed(seed, 0x5a717cULL)};
    fixed = static_mask(X, policy);
    fixed_ptr = &fixed;
  }

  AdamOptimizer adam({cfg.learning_rate, 0.9, 0.999, 1e-8});
  MaskSet prev_masks;
  double prev_loss = std::nan("");
  int plateau_run = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t_epoch = clock::now();
    PipelineState st = forward_repr(result.model, X, pcfg, fixed_ptr);
    if (!std::isfinite(st.l_intra) || !std::isfinite(st.l_inter))
      throw NumericError("train: non-finite reconstruction loss at epoch " +
                         std::to_string(epoch) + " (intra=" + std::to_string(st.l_intra) +
                         ", inter=" + std::to_string(st.l_inter) + ")");

    ClusterState clusters = kmeans(st.fused, g, seed + static_cast<std::uint64_t>(epoch));
    Rng pos_rng(mix_seed(seed, 0x9051711e5ULL + static_cast<std::uint64_t>(epoch)));
    std::vector<int> positives = sample_positives(clusters.labels, pos_rng);
    add_contrastive(st, pcfg, positives);
    if (!std::isfinite(st.l_total))
      throw NumericError("train: non-finite total loss at epoch " + std::to_string(epoch) +
                         " (contra=" + std::to_string(st.l_contra) + ")");

    ModelGrads grads = backward(result.model, X, pcfg, st, positives);
    auto params = collect_tensors(result.model);
    auto gtens = collect_tensors(grads, V);
    std::vector<std::vector<double>*> pv;
    std::vector<const std::vector<double>*> gv;
    pv.reserve(params.size());
    gv.reserve(gtens.size());
    for (auto& p : params) pv.push_back(p.data);
    for (auto& gr : gtens) gv.push_back(gr.data);
    adam.step(pv, gv);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.l_total = st.l_total;
    rec.l_contra = st.l_contra;
    rec.l_intra = st.l_intra;
    rec.l_inter = st.l_inter;
    rec.mask_change = trainer_detail::mask_change_rate(st.masks, prev_masks);
    if (dataset.has_labels()) {
      rec.acc = clustering_accuracy(dataset.labels, clusters.labels).first;
      rec.nmi = nmi(dataset.labels, clusters.labels);
      rec.ari = ari(dataset.labels, clusters.labels);
    }
    rec.seconds = std::chrono::duration<double>(clock::now() - t_epoch).count();
    result.trace.epochs.push_back(rec);
    if (mask_observer) mask_observer(epoch, st.masks);
    prev_masks = st.masks;

    if (std::isfinite(prev_loss) && std::fabs(st.l_total - prev_loss) < cfg.plateau_tol) {
      if (++plateau_run >= cfg.plateau_patience) {
        result.epochs_run = epoch + 1;
        break;
      }
    } else {
      plateau_run = 0;
    }
    prev_loss = st.l_total;
    result.epochs_run = epoch + 1;
  }

  // Final clustering on the final fused embedding.
  PipelineState st = forward_repr(result.model, X, pcfg, fixed_ptr);
  result.clusters = kmeans(st.fused, g, seed + static_cast<std::uint64_t>(result.epochs_run));
  result.clusters.epoch = result.epochs_run;
  result.seconds = std::chrono::duration<double>(clock::now() - t_start).count();
  return result;
}

/// Aggregates over a seed list.
struct MetricStats {
  double mean = 0.0;
  double stdev = 0.0;
};

inline MetricStats metric_stats(const std::vector<double>& xs) {
  MetricStats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stdev = std::sqrt(var / xs.size());
  return s;
}

struct SeedRun {
  std::uint64_t seed = 0;
  EvalReport eval;
  int epochs_run = 0;
  double final_loss = 0.0;
  double seconds = 0.0;
};

struct RunSummary {
  std::vector<SeedRun> per_seed;
  MetricStats acc, f1, nmi_s, ari_s;
};

/// Train once per seed and evaluate the final clustering against ground
/// truth. Requires labels (the experiment protocol always has them). Seeds
/// run as independent parallel tasks; results aggregate in seed order, so
/// the summary does not depend on scheduling.
inline RunSummary run_seeds(const TimeSeriesDataset& dataset, const ExperimentConfig& cfg,
                            std::vector<TrainResult>* keep_results = nullptr,
                            std::vector<TrainTrace>* keep_traces = nullptr) {
  if (!dataset.has_labels())
    throw ArgumentError("run_seeds: dataset has no labels to evaluate against");
  std::vector<std::future<TrainResult>> futures;
  futures.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds)
    futures.push_back(std::async(std::launch::async,
                                 [&dataset, &cfg, seed]() { return train(dataset, cfg, seed); }));
  RunSummary summary;
  std::vector<double> accs, f1s, nmis, aris;
  for (std::size_t idx = 0; idx < cfg.seeds.size(); ++idx) {
    std::uint64_t seed = cfg.seeds[idx];
    TrainResult r = futures[idx].get();
    SeedRun sr;
    sr.seed = seed;
    sr.eval = evaluate_clustering(dataset.labels, r.clusters.labels);
    sr.epochs_run = r.epochs_run;
    sr.final_loss = r.trace.epochs.empty() ? std::nan("") : r.trace.epochs.back().l_total;
    sr.seconds = r.seconds;
    accs.push_back(sr.eval.acc);
    f1s.push_back(sr.eval.f1);
    nmis.push_back(sr.eval.nmi);
    aris.push_back(sr.eval.ari);
    summary.per_seed.push_back(sr);
    if (keep_traces) keep_traces->push_back(r.trace);
    if (keep_results) keep_results->push_back(std::move(r));
  }
  summary.acc = metric_stats(accs);
  summary.f1 = metric_stats(f1s);
  summary.nmi_s = metric_stats(nmis);
  summary.ari_s = metric_stats(aris);
  return summary;
}

/// One cell of the key-component ablation grid.
struct AblationCell {
  bool use_ivm = true;
  bool use_mev = true;
  RunSummary summary;
};

/// The 2x2 {±IVM, ±MEV} grid with shared seeds, rows in the reporting order
/// (full, -IVM, -MEV, -both).
inline std::vector<AblationCell> run_ablation(const TimeSeriesDataset& dataset,
                                              const ExperimentConfig& base) {
  std::vector<AblationCell> cells;
  const bool grid[4][2] = {{true, true}, {false, true}, {true, false}, {false, false}};
  for (auto& row : grid) {
    ExperimentConfig cfg = base;
    cfg.use_ivm = row[0];
    cfg.use_mev = row[1];
    AblationCell cell;
    cell.use_ivm = row[0];
    cell.use_mev = row[1];
    cell.summary = run_seeds(dataset, cfg);
    cells.push_back(std::move(cell));
  }
  return cells;
}

}  // namespace emtc
