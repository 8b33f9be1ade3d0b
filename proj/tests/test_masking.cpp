#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "emtc/masking.hpp"
#include "oracles.hpp"

using namespace emtc;

namespace {

AttentionViewParams random_attn(int d, int d_k, std::uint64_t seed) {
  Rng rng(seed);
  AttentionParams p = init_attention(1, d, d_k, rng);
  return p.views[0];
}

Tensor3 random_repr(int N, int T, int d, std::uint64_t seed) {
  Rng rng(seed);
  Tensor3 F(N, T, d);
  for (double& x : F.a) x = rng.normal();
  return F;
}

/// Scalar-loop attention oracle.
Tensor3 naive_attention(const Tensor3& F, const AttentionViewParams& p, int d_k) {
  const int N = F.n, T = F.t, d = F.d;
  Tensor3 attn(N, T, T);
  for (int i = 0; i < N; ++i) {
    for (int r = 0; r < T; ++r) {
      std::vector<double> logits(T);
      for (int s = 0; s < T; ++s) {
        double dot = 0.0;
        for (int m = 0; m < d_k; ++m) {
          double q = 0.0, k = 0.0;
          for (int c = 0; c < d; ++c) {
            q += F(i, r, c) * p.wq(c, m);
            k += F(i, s, c) * p.wk(c, m);
          }
          dot += q * k;
        }
        logits[s] = dot / std::sqrt(static_cast<double>(d_k));
      }
      double z = 0.0;
      for (int s = 0; s < T; ++s) z += std::exp(logits[s]);
      for (int s = 0; s < T; ++s) attn(i, r, s) = std::exp(logits[s]) / z;
    }
  }
  return attn;
}

std::vector<int> rank_order(const double* v, int n) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [v](int a, int b) { return v[a] > v[b]; });
  return idx;
}

}  // namespace

TEST_CASE("attention rows") {
  SUBCASE("equal timestamp representations give uniform attention") {
    Tensor3 F(1, 4, 3);
    for (int j = 0; j < 4; ++j)
      for (int c = 0; c < 3; ++c) F(0, j, c) = 0.7 * (c + 1);
    AttentionCache c = attention_map(F, random_attn(3, 2, 5), 2);
    for (int r = 0; r < 4; ++r)
      for (int s = 0; s < 4; ++s) CHECK(c.attn(0, r, s) == doctest::Approx(0.25).epsilon(1e-9));
  }
  SUBCASE("T=1 attends to itself") {
    Tensor3 F = random_repr(2, 1, 3, 7);
    AttentionCache c = attention_map(F, random_attn(3, 2, 9), 2);
    CHECK(c.attn(0, 0, 0) == 1.0);
    CHECK(c.attn(1, 0, 0) == 1.0);
  }
  SUBCASE("matches the scalar-loop oracle") {
    Tensor3 F = random_repr(2, 3, 2, 11);
    AttentionViewParams p = random_attn(2, 2, 13);
    AttentionCache c = attention_map(F, p, 2);
    Tensor3 ref = naive_attention(F, p, 2);
    for (std::size_t q = 0; q < ref.a.size(); ++q)
      CHECK(c.attn.a[q] == doctest::Approx(ref.a[q]).epsilon(1e-9));
  }
  SUBCASE("rows sum to one on arbitrary finite inputs") {
    Tensor3 F = random_repr(3, 7, 4, 17);
    for (double& x : F.a) x *= 13.0;  // stress the softmax shift
    AttentionCache c = attention_map(F, random_attn(4, 3, 19), 3);
    for (int i = 0; i < 3; ++i)
      for (int r = 0; r < 7; ++r) {
        double s = 0.0;
        for (int j = 0; j < 7; ++j) s += c.attn(i, r, j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
      }
  }
  SUBCASE("non-finite logits raise with the sample index") {
    Tensor3 F = random_repr(2, 3, 2, 23);
    F(1, 0, 0) = std::nan("");
    try {
      attention_map(F, random_attn(2, 2, 29), 2);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("sample 1") != std::string::npos);
    }
  }
}

TEST_CASE("timestamp importance") {
  SUBCASE("uniform attention gives uniform importance") {
    Tensor3 attn(1, 4, 4, 0.25);
    Matrix imp = timestamp_importance(attn);
    for (int j = 0; j < 4; ++j) CHECK(imp(0, j) == doctest::Approx(0.25));
  }
  SUBCASE("attention concentrated on one column") {
    Tensor3 attn(1, 3, 3);
    for (int r = 0; r < 3; ++r) attn(0, r, 0) = 1.0;
    Matrix imp = timestamp_importance(attn);
    CHECK(imp(0, 0) == doctest::Approx(1.0));
    CHECK(imp(0, 1) == doctest::Approx(0.0));
    CHECK(imp(0, 2) == doctest::Approx(0.0));
  }
  SUBCASE("random row-stochastic matrix: column means, sums to one") {
    Rng rng(31);
    Tensor3 attn(1, 3, 3);
    for (int r = 0; r < 3; ++r) {
      double z = 0.0;
      for (int s = 0; s < 3; ++s) {
        attn(0, r, s) = rng.uniform01() + 0.01;
        z += attn(0, r, s);
      }
      for (int s = 0; s < 3; ++s) attn(0, r, s) /= z;
    }
    Matrix imp = timestamp_importance(attn);
    double total = 0.0;
    for (int s = 0; s < 3; ++s) {
      double col = (attn(0, 0, s) + attn(0, 1, s) + attn(0, 2, s)) / 3.0;
      CHECK(imp(0, s) == doctest::Approx(col).epsilon(1e-9));
      total += imp(0, s);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("threshold_mask") {
  SUBCASE("keeps the top half") {
    Matrix imp(1, 4);
    double v[4] = {0.4, 0.1, 0.3, 0.2};
    for (int j = 0; j < 4; ++j) imp(0, j) = v[j];
    ViewMask vm = threshold_mask(imp, 0.5);
    CHECK(vm.mask(0, 0) == 1.0);
    CHECK(vm.mask(0, 1) == 0.0);
    CHECK(vm.mask(0, 2) == 1.0);
    CHECK(vm.mask(0, 3) == 0.0);
    CHECK(vm.thresholds[0] == 0.3);
  }
  SUBCASE("keep_ratio 1.0 keeps everything") {
    Matrix imp(2, 5, 0.2);
    ViewMask vm = threshold_mask(imp, 1.0);
    for (double m : vm.mask.a) CHECK(m == 1.0);
  }
  SUBCASE("ties keep earlier timestamps") {
    Matrix imp(1, 4, 0.25);
    ViewMask vm = threshold_mask(imp, 0.5);
    CHECK(vm.mask(0, 0) == 1.0);
    CHECK(vm.mask(0, 1) == 1.0);
    CHECK(vm.mask(0, 2) == 0.0);
    CHECK(vm.mask(0, 3) == 0.0);
  }
  SUBCASE("exact keep count and threshold consistency on random inputs") {
    Rng rng(37);
    for (int trial = 0; trial < 200; ++trial) {
      int T = 1 + rng.uniform_int(30);
      double ratio = 0.01 + 0.99 * rng.uniform01();
      Matrix imp(1, T);
      for (double& x : imp.a) x = rng.uniform01();
      ViewMask vm = threshold_mask(imp, ratio);
      int kept = 0;
      for (double m : vm.mask.a) kept += (m == 1.0);
      CHECK(kept == std::max(1, static_cast<int>(std::ceil(ratio * T - 1e-12))));
      for (int j = 0; j < T; ++j)
        if (vm.mask(0, j) == 1.0) CHECK(imp(0, j) >= vm.thresholds[0]);
    }
  }
  SUBCASE("raising an importance never drops its own mask bit") {
    Rng rng(41);
    for (int trial = 0; trial < 50; ++trial) {
      int T = 6;
      Matrix imp(1, T);
      for (double& x : imp.a) x = rng.uniform01();
      ViewMask before = threshold_mask(imp, 0.5);
      int t = rng.uniform_int(T);
      imp(0, t) += 0.5;
      ViewMask after = threshold_mask(imp, 0.5);
      if (before.mask(0, t) == 1.0) CHECK(after.mask(0, t) == 1.0);
    }
  }
  SUBCASE("bad keep_ratio rejected") {
    Matrix imp(1, 3, 0.3);
    CHECK_THROWS_AS(threshold_mask(imp, 0.0), ArgumentError);
    CHECK_THROWS_AS(threshold_mask(imp, 1.5), ArgumentError);
  }
}

TEST_CASE("apply_mask") {
  Rng rng(43);
  Tensor3 X(2, 4, 3);
  for (double& x : X.a) x = rng.normal();

  SUBCASE("all ones is the identity") {
    Matrix ones(2, 4, 1.0);
    CHECK(apply_mask(X, ones).a == X.a);
  }
  SUBCASE("single surviving timestamp") {
    Matrix m(2, 4);
    m(0, 2) = 1.0;
    m(1, 0) = 1.0;
    Tensor3 out = apply_mask(X, m);
    for (int j = 0; j < 4; ++j)
      for (int c = 0; c < 3; ++c) {
        CHECK(out(0, j, c) == (j == 2 ? X(0, j, c) : 0.0));
        CHECK(out(1, j, c) == (j == 0 ? X(1, j, c) : 0.0));
      }
  }
  SUBCASE("elementwise product matches the loop oracle exactly") {
    Matrix m(2, 4);
    for (double& x : m.a) x = rng.uniform01() < 0.5 ? 0.0 : 1.0;
    Tensor3 out = apply_mask(X, m);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 4; ++j)
        for (int c = 0; c < 3; ++c) CHECK(out(i, j, c) == X(i, j, c) * m(i, j));
  }
}

TEST_CASE("soft mask surrogate") {
  Matrix imp(1, 3);
  imp(0, 0) = 0.5;
  imp(0, 1) = 0.6;
  imp(0, 2) = 0.1;
  std::vector<double> tau{0.5};

  SUBCASE("midpoint is one half") {
    Matrix s = soft_mask_for_backward(imp, tau, 10.0);
    CHECK(s(0, 0) == doctest::Approx(0.5));
  }
  SUBCASE("sigma(1) at sharpness 10 and gap 0.1") {
    Matrix s = soft_mask_for_backward(imp, tau, 10.0);
    CHECK(s(0, 1) == doctest::Approx(0.7311).epsilon(1e-4));
  }
  SUBCASE("saturates to the hard mask as sharpness grows") {
    Matrix hard = threshold_mask(imp, 2.0 / 3.0).mask;
    Matrix s = soft_mask_for_backward(imp, tau, 1e6);
    CHECK(s(0, 1) == doctest::Approx(hard(0, 1)).epsilon(1e-6));
    CHECK(s(0, 2) == doctest::Approx(hard(0, 2)).epsilon(1e-6));
  }
  SUBCASE("sharpness must be positive") {
    CHECK_THROWS_AS(soft_mask_for_backward(imp, tau, 0.0), ArgumentError);
  }
}

TEST_CASE("positive rescaling of F preserves importance ranking under uniform queries") {
  // Construct W_q so every timestamp projects to the same query vector:
  // W_q reads only channel 0 and channel 0 is constant over time.
  const int N = 1, T = 6, d = 3, d_k = 2;
  Rng rng(47);
  Tensor3 F(N, T, d);
  for (int j = 0; j < T; ++j) {
    F(0, j, 0) = 1.0;  // constant channel -> uniform queries
    F(0, j, 1) = rng.normal();
    F(0, j, 2) = rng.normal();
  }
  AttentionViewParams p;
  p.wq = Matrix(d, d_k);
  p.wq(0, 0) = 0.8;
  p.wq(0, 1) = -0.6;
  p.wk = Matrix(d, d_k);
  for (double& x : p.wk.a) x = rng.normal();

  Matrix imp1 = timestamp_importance(attention_map(F, p, d_k).attn);
  Tensor3 F3 = F;
  for (double& x : F3.a) x *= 3.0;
  Matrix imp3 = timestamp_importance(attention_map(F3, p, d_k).attn);
  CHECK(rank_order(imp1.row(0), T) == rank_order(imp3.row(0), T));
}

TEST_CASE("attention backward matches finite differences") {
  const int N = 2, T = 4, d = 3, d_k = 2;
  Tensor3 F = random_repr(N, T, d, 53);
  AttentionViewParams p = random_attn(d, d_k, 59);
  Rng rng(61);
  Tensor3 W(N, T, T);
  for (double& x : W.a) x = rng.normal();

  auto loss = [&]() {
    Tensor3 attn = attention_map(F, p, d_k).attn;
    double s = 0.0;
    for (std::size_t q = 0; q < attn.a.size(); ++q) s += W.a[q] * attn.a[q];
    return s;
  };

  AttentionCache cache = attention_map(F, p, d_k);
  AttentionViewGrads g;
  Tensor3 dF(N, T, d);
  attention_backward(F, p, d_k, cache, W, g, dF);

  CHECK(oracle::max_rel_err(g.wq.a, oracle::finite_diff(p.wq.a, loss)) < 1e-4);
  CHECK(oracle::max_rel_err(g.wk.a, oracle::finite_diff(p.wk.a, loss)) < 1e-4);
  CHECK(oracle::max_rel_err(dF.a, oracle::finite_diff(F.a, loss)) < 1e-4);
}
