#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "emtc/common.hpp"
#include "emtc/tensor.hpp"

namespace emtc {

struct ClusterState {
  std::vector<int> labels;  // N, values in 0..g-1
  Matrix centroids;         // g x d
  double inertia = 0.0;
  int epoch = 0;
};

namespace kmeans_detail {

inline double sq_dist(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) {
    double r = a[k] - b[k];
    s += r * r;
  }
  return s;
}

/// Nearest centroid; when distances tie, an anchor label that attains the
/// minimum is kept, otherwise the lowest centroid index wins.
inline int assign_point(const Matrix& F, const Matrix& centroids, int i, int current) {
  const int g = centroids.rows;
  double best = std::numeric_limits<double>::infinity();
  int best_c = 0;
  for (int c = 0; c < g; ++c) {
    double dist = sq_dist(F.row(i), centroids.row(c), F.cols);
    if (dist < best) {
      best = dist;
      best_c = c;
    }
  }
  if (current >= 0 && current < g && sq_dist(F.row(i), centroids.row(current), F.cols) == best)
    return current;
  return best_c;
}

/// Means of assigned members; empty clusters keep their previous centroid.
inline void recompute_centroids(const Matrix& F, const std::vector<int>& labels, Matrix& centroids,
                                std::vector<int>& counts) {
  const int g = centroids.rows, d = F.cols;
  counts.assign(g, 0);
  Matrix sums(g, d);
  for (int i = 0; i < F.rows; ++i) {
    counts[labels[i]]++;
    const double* x = F.row(i);
    double* c = sums.row(labels[i]);
    for (int k = 0; k < d; ++k) c[k] += x[k];
  }
  for (int c = 0; c < g; ++c)
    if (counts[c] > 0) {
      double inv = 1.0 / counts[c];
      double* row = centroids.row(c);
      for (int k = 0; k < d; ++k) row[k] = sums(c, k) * inv;
    }
}

inline double compute_inertia(const Matrix& F, const std::vector<int>& labels,
                              const Matrix& centroids) {
  double s = 0.0;
  for (int i = 0; i < F.rows; ++i) s += sq_dist(F.row(i), centroids.row(labels[i]), F.cols);
  return s;
}

/// k-means++ seeding: first centroid uniform, the rest sampled with
/// probability proportional to squared distance from the chosen set.
inline Matrix kmeanspp_init(const Matrix& F, int g, Rng& rng) {
  const int N = F.rows, d = F.cols;
  Matrix centroids(g, d);
  std::vector<double> dist2(N, std::numeric_limits<double>::infinity());
  int first = rng.uniform_int(N);
  std::copy(F.row(first), F.row(first) + d, centroids.row(0));
  for (int c = 1; c < g; ++c) {
    double total = 0.0;
    for (int i = 0; i < N; ++i) {
      dist2[i] = std::min(dist2[i], sq_dist(F.row(i), centroids.row(c - 1), d));
      total += dist2[i];
    }
    int pick;
    if (total <= 0.0) {
      pick = rng.uniform_int(N);
    } else {
      double r = rng.uniform01() * total;
      double acc = 0.0;
      pick = N - 1;
      for (int i = 0; i < N; ++i) {
        acc += dist2[i];
        if (r < acc) {
          pick = i;
          break;
        }
      }
    }
    std::copy(F.row(pick), F.row(pick) + d, centroids.row(c));
  }
  return centroids;
}

}  // namespace kmeans_detail

/// Reseed every empty cluster to the point farthest from that cluster's
/// (stale) centroid, then run one tie-preserving reassignment pass. Repeats
/// until every cluster id is populated. A state with no empty clusters is
/// returned unchanged.
inline ClusterState repair_empty_clusters(ClusterState state, const Matrix& F) {
  using namespace kmeans_detail;
  const int g = state.centroids.rows, N = F.rows, d = F.cols;
  std::vector<int> counts(g, 0);
  for (int l : state.labels) counts[l]++;
  bool any_empty = false;
  for (int c = 0; c < g; ++c) any_empty |= (counts[c] == 0);
  if (!any_empty) return state;

  for (int round = 0; round < g + 1; ++round) {
    bool repaired = false;
    for (int c = 0; c < g; ++c) {
      if (counts[c] > 0) continue;
      repaired = true;
      // Steal the farthest point whose donor cluster keeps at least one member.
      double best = -1.0;
      int pick = -1;
      for (int i = 0; i < N; ++i) {
        if (counts[state.labels[i]] <= 1) continue;
        double dist = sq_dist(F.row(i), state.centroids.row(c), d);
        if (dist > best) {
          best = dist;
          pick = i;
        }
      }
      if (pick < 0) break;  // N < g leftovers; nothing stealable
      counts[state.labels[pick]]--;
      state.labels[pick] = c;
      counts[c] = 1;
      std::copy(F.row(pick), F.row(pick) + d, state.centroids.row(c));
    }
    if (!repaired) break;
    recompute_centroids(F, state.labels, state.centroids, counts);
    for (int i = 0; i < N; ++i) state.labels[i] = assign_point(F, state.centroids, i, state.labels[i]);
    recompute_centroids(F, state.labels, state.centroids, counts);
    bool still_empty = false;
    for (int c = 0; c < g; ++c) still_empty |= (counts[c] == 0);
    if (!still_empty) break;
  }
  state.inertia = compute_inertia(F, state.labels, state.centroids);
  return state;
}

/// Lloyd's algorithm with k-means++ seeding, n_init restarts (lowest inertia
/// wins, ties to the lowest restart index), at most max_iter sweeps, stopping
/// when assignments fix. Deterministic for a given seed.
inline ClusterState kmeans(const Matrix& F, int g, std::uint64_t seed, int n_init = 10,
                           int max_iter = 300) {
  using namespace kmeans_detail;
  const int N = F.rows;
  if (g < 1) throw ArgumentError("kmeans: g must be >= 1");
  if (N < g) throw ArgumentError("kmeans: fewer points than clusters");
  if (!all_finite(F)) throw NumericError("kmeans: non-finite input");

  ClusterState best;
  best.inertia = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < n_init; ++restart) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(restart)));
    ClusterState st;
    st.centroids = kmeanspp_init(F, g, rng);
    st.labels.assign(N, -1);
    for (int i = 0; i < N; ++i) st.labels[i] = assign_point(F, st.centroids, i, -1);
    std::vector<int> counts;
    for (int iter = 0; iter < max_iter; ++iter) {
      recompute_centroids(F, st.labels, st.centroids, counts);
      bool empty = false;
      for (int c = 0; c < g; ++c) empty |= (counts[c] == 0);
      if (empty) st = repair_empty_clusters(std::move(st), F);
      bool changed = false;
      for (int i = 0; i < N; ++i) {
        int next = assign_point(F, st.centroids, i, st.labels[i]);
        if (next != st.labels[i]) {
          st.labels[i] = next;
          changed = true;
        }
      }
      if (!changed) break;
    }
    std::vector<int> final_counts(g, 0);
    for (int l : st.labels) final_counts[l]++;
    bool empty = false;
    for (int c = 0; c < g; ++c) empty |= (final_counts[c] == 0);
    if (empty) st = repair_empty_clusters(std::move(st), F);
    recompute_centroids(F, st.labels, st.centroids, counts);
    st.inertia = compute_inertia(F, st.labels, st.centroids);
    if (st.inertia < best.inertia) best = std::move(st);
  }
  return best;
}

}  // namespace emtc
