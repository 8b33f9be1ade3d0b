#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "emtc/common.hpp"
#include "emtc/tensor.hpp"

namespace emtc {

/// A loaded multivariate time-series collection: N samples of shape T x D,
/// plus optional ground-truth class labels remapped to 0..g-1.
struct TimeSeriesDataset {
  std::string name;
  Tensor3 samples;          // N x T x D
  std::vector<int> labels;  // empty when the source carries no labels
  int g_hint = 0;           // number of classes when labels are present

  int n() const { return samples.n; }
  int t() const { return samples.t; }
  int d() const { return samples.d; }
  bool has_labels() const { return !labels.empty(); }
};

/// Per-sample, per-channel z-normalization over time. Channels with zero
/// variance become all-zero.
inline TimeSeriesDataset znormalize(const TimeSeriesDataset& ds) {
  if (ds.n() == 0) throw EmptyDataError("znormalize: empty dataset");
  TimeSeriesDataset out = ds;
  const int N = ds.n(), T = ds.t(), D = ds.d();
  for (int i = 0; i < N; ++i) {
    for (int c = 0; c < D; ++c) {
      double mean = 0.0;
      for (int j = 0; j < T; ++j) mean += ds.samples(i, j, c);
      mean /= T;
      double var = 0.0;
      for (int j = 0; j < T; ++j) {
        double r = ds.samples(i, j, c) - mean;
        var += r * r;
      }
      var /= T;
      double sd = std::sqrt(var);
      if (sd < 1e-12) {
        for (int j = 0; j < T; ++j) out.samples(i, j, c) = 0.0;
      } else {
        for (int j = 0; j < T; ++j) out.samples(i, j, c) = (ds.samples(i, j, c) - mean) / sd;
      }
    }
  }
  return out;
}

/// Force every sample to length target_T: zero-pad at the end or truncate
/// at the end.
inline TimeSeriesDataset pad_or_truncate(const TimeSeriesDataset& ds, int target_T) {
  if (target_T < 1) throw ArgumentError("pad_or_truncate: target_T must be >= 1");
  if (ds.t() == target_T) return ds;
  TimeSeriesDataset out;
  out.name = ds.name;
  out.labels = ds.labels;
  out.g_hint = ds.g_hint;
  out.samples = Tensor3(ds.n(), target_T, ds.d());
  const int keep = std::min(ds.t(), target_T);
  for (int i = 0; i < ds.n(); ++i)
    for (int j = 0; j < keep; ++j)
      for (int c = 0; c < ds.d(); ++c) out.samples(i, j, c) = ds.samples(i, j, c);
  return out;
}

/// Concatenate two datasets sample-wise (used for train+test split merging).
/// Shorter samples are padded up to the longer length first.
inline TimeSeriesDataset concat(const TimeSeriesDataset& a, const TimeSeriesDataset& b) {
  if (a.d() != b.d()) throw ShapeError("concat: variate count mismatch");
  if (a.has_labels() != b.has_labels())
    throw ArgumentError("concat: label presence mismatch between splits");
  int T = std::max(a.t(), b.t());
  TimeSeriesDataset pa = pad_or_truncate(a, T);
  TimeSeriesDataset pb = pad_or_truncate(b, T);
  TimeSeriesDataset out;
  out.name = a.name;
  out.samples = Tensor3(a.n() + b.n(), T, a.d());
  for (int i = 0; i < pa.n(); ++i)
    for (int j = 0; j < T; ++j)
      for (int c = 0; c < a.d(); ++c) out.samples(i, j, c) = pa.samples(i, j, c);
  for (int i = 0; i < pb.n(); ++i)
    for (int j = 0; j < T; ++j)
      for (int c = 0; c < a.d(); ++c) out.samples(pa.n() + i, j, c) = pb.samples(i, j, c);
  if (a.has_labels()) {
    out.labels = pa.labels;
    out.labels.insert(out.labels.end(), pb.labels.begin(), pb.labels.end());
    int g = 0;
    for (int l : out.labels) g = std::max(g, l + 1);
    out.g_hint = g;
  }
  return out;
}

}  // namespace emtc
