#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "emtc/common.hpp"

namespace emtc {

/// External clustering evaluation on one (truth, prediction) pair.
struct EvalReport {
  double acc = 0.0;
  double f1 = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  std::vector<int> mapping;  // predicted cluster index -> matched class (-1 = unmatched)
  int n = 0;
};

namespace metric_detail {

/// Compress arbitrary integer labels to 0..k-1, preserving sorted value order.
inline std::vector<int> compress(const std::vector<int>& labels, int& k_out) {
  std::vector<int> uniq = labels;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::map<int, int> idx;
  for (std::size_t i = 0; i < uniq.size(); ++i) idx[uniq[i]] = static_cast<int>(i);
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = idx[labels[i]];
  k_out = static_cast<int>(uniq.size());
  return out;
}

/// counts[p][t] = #samples with predicted cluster p and true class t.
inline std::vector<std::vector<long>> contingency(const std::vector<int>& truth,
                                                  const std::vector<int>& pred, int& kt, int& kp) {
  std::vector<int> t = compress(truth, kt);
  std::vector<int> p = compress(pred, kp);
  std::vector<std::vector<long>> counts(kp, std::vector<long>(kt, 0));
  for (std::size_t i = 0; i < t.size(); ++i) counts[p[i]][t[i]]++;
  return counts;
}

/// Minimum-cost perfect assignment on an n x n matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns row -> column.
inline std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double INF = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, INF);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      int i0 = p[j0], j1 = 0;
      double delta = INF;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

inline void check_pair(const std::vector<int>& truth, const std::vector<int>& pred) {
  if (truth.size() != pred.size())
    throw ArgumentError("metrics: truth/pred length mismatch");
  if (truth.empty()) throw ArgumentError("metrics: empty label vectors");
}

inline double comb2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace metric_detail

/// Clustering accuracy under the optimal cluster-to-class assignment
/// (contingency matrix padded square, exact Kuhn-Munkres). Returns the
/// accuracy and the predicted-cluster -> class mapping.
inline std::pair<double, std::vector<int>> clustering_accuracy(const std::vector<int>& truth,
                                                               const std::vector<int>& pred) {
  using namespace metric_detail;
  check_pair(truth, pred);
  int kt = 0, kp = 0;
  auto counts = contingency(truth, pred, kt, kp);
  const int m = std::max(kt, kp);
  std::vector<std::vector<double>> cost(m, std::vector<double>(m, 0.0));
  for (int p = 0; p < kp; ++p)
    for (int t = 0; t < kt; ++t) cost[p][t] = -static_cast<double>(counts[p][t]);
  std::vector<int> assign = hungarian(cost);
  long matched = 0;
  std::vector<int> mapping(kp, -1);
  for (int p = 0; p < kp; ++p) {
    int t = assign[p];
    if (t < kt) {
      mapping[p] = t;
      matched += counts[p][t];
    }
  }
  return {static_cast<double>(matched) / static_cast<double>(truth.size()), mapping};
}

/// Macro-averaged F1 after applying the accuracy-optimal cluster mapping.
inline double matched_f1(const std::vector<int>& truth, const std::vector<int>& pred) {
  using namespace metric_detail;
  check_pair(truth, pred);
  int kt = 0, kp = 0;
  std::vector<int> t = compress(truth, kt);
  std::vector<int> p = compress(pred, kp);
  std::vector<int> mapping = clustering_accuracy(truth, pred).second;
  std::vector<int> mapped(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) mapped[i] = mapping[p[i]];

  double f1_sum = 0.0;
  for (int c = 0; c < kt; ++c) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (mapped[i] == c && t[i] == c) tp++;
      if (mapped[i] == c && t[i] != c) fp++;
      if (mapped[i] != c && t[i] == c) fn++;
    }
    double prec = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    double rec = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    f1_sum += (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  return f1_sum / kt;
}

/// Normalized mutual information, arithmetic-mean normalization, natural log.
/// Two trivial single-cluster partitions compare as 1.
inline double nmi(const std::vector<int>& truth, const std::vector<int>& pred) {
  using namespace metric_detail;
  check_pair(truth, pred);
  int kt = 0, kp = 0;
  auto counts = contingency(truth, pred, kt, kp);
  const double n = static_cast<double>(truth.size());
  std::vector<double> row(kp, 0.0), col(kt, 0.0);
  for (int p = 0; p < kp; ++p)
    for (int t = 0; t < kt; ++t) {
      row[p] += counts[p][t];
      col[t] += counts[p][t];
    }
  double ht = 0.0, hp = 0.0, mi = 0.0;
  for (int t = 0; t < kt; ++t)
    if (col[t] > 0) ht -= (col[t] / n) * std::log(col[t] / n);
  for (int p = 0; p < kp; ++p)
    if (row[p] > 0) hp -= (row[p] / n) * std::log(row[p] / n);
  for (int p = 0; p < kp; ++p)
    for (int t = 0; t < kt; ++t)
      if (counts[p][t] > 0) {
        double pij = counts[p][t] / n;
        mi += pij * std::log(pij * n * n / (row[p] * col[t]));
      }
  if (ht == 0.0 && hp == 0.0) return 1.0;
  if (ht == 0.0 || hp == 0.0) return 0.0;
  return mi / ((ht + hp) / 2.0);
}

/// Adjusted Rand index (pair-counting, chance-corrected). Degenerate
/// agreement (zero max-index spread) compares as 1.
inline double ari(const std::vector<int>& truth, const std::vector<int>& pred) {
  using namespace metric_detail;
  check_pair(truth, pred);
  int kt = 0, kp = 0;
  auto counts = contingency(truth, pred, kt, kp);
  const double n = static_cast<double>(truth.size());
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  std::vector<double> row(kp, 0.0), col(kt, 0.0);
  for (int p = 0; p < kp; ++p)
    for (int t = 0; t < kt; ++t) {
      sum_ij += comb2(static_cast<double>(counts[p][t]));
      row[p] += counts[p][t];
      col[t] += counts[p][t];
    }
  for (int p = 0; p < kp; ++p) sum_a += comb2(row[p]);
  for (int t = 0; t < kt; ++t) sum_b += comb2(col[t]);
  const double total = comb2(n);
  const double expected = sum_a * sum_b / total;
  const double max_index = (sum_a + sum_b) / 2.0;
  if (max_index == expected) return 1.0;
  return (sum_ij - expected) / (max_index - expected);
}

inline EvalReport evaluate_clustering(const std::vector<int>& truth, const std::vector<int>& pred) {
  EvalReport r;
  auto [acc, mapping] = clustering_accuracy(truth, pred);
  r.acc = acc;
  r.mapping = std::move(mapping);
  r.f1 = matched_f1(truth, pred);
  r.nmi = nmi(truth, pred);
  r.ari = ari(truth, pred);
  r.n = static_cast<int>(truth.size());
  return r;
}

}  // namespace emtc
