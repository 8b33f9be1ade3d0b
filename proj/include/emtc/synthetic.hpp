#pragma once

#include <cmath>
#include <sstream>
#include <string>

#include "emtc/common.hpp"
#include "emtc/dataset.hpp"

namespace emtc {

/// Parameters for the synthetic benchmark generator used by the scaling and
/// recovery experiments. Timestamps split into an informative prefix and a
/// redundant suffix shared by all clusters.
struct SyntheticSpec {
  int n_per_cluster = 10;
  int g = 3;
  int T = 64;
  int D = 3;
  double redundancy_fraction = 0.5;  // fraction of timestamps with no cluster signal
  double noise_std = 0.1;
  std::uint64_t seed = 0;
};

/// Cluster prototype value at (timestamp, channel). Informative stamps carry
/// a cluster-specific offset plus a sinusoid with cluster-specific frequency
/// and phase; redundant stamps are a flat segment identical across clusters.
inline double synthetic_prototype(const SyntheticSpec& spec, int cluster, int t, int ch) {
  const int t_info = spec.T - static_cast<int>(std::lround(spec.redundancy_fraction * spec.T));
  if (t >= t_info) return 0.5;
  const double amp = 1.0;
  const double offset = 2.5 * cluster;
  const double freq = static_cast<double>(cluster + 1);
  const double phase = 6.283185307179586 * cluster / spec.g + 1.5707963267948966 * ch / spec.D;
  const double span = t_info > 0 ? static_cast<double>(t_info) : 1.0;
  return offset + amp * std::sin(6.283185307179586 * freq * t / span + phase);
}

/// Deterministic synthetic dataset: g * n_per_cluster samples, cluster-major
/// order, Gaussian noise on every timestamp.
inline TimeSeriesDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.g < 2) throw ArgumentError("generate_synthetic: need g >= 2");
  if (spec.n_per_cluster < 1 || spec.T < 1 || spec.D < 1)
    throw ArgumentError("generate_synthetic: sizes must be positive");
  if (spec.redundancy_fraction < 0.0 || spec.redundancy_fraction > 1.0)
    throw ArgumentError("generate_synthetic: redundancy_fraction must be in [0,1]");

  const int N = spec.g * spec.n_per_cluster;
  TimeSeriesDataset ds;
  std::ostringstream name;
  name << "synthetic_g" << spec.g << "_n" << N << "_T" << spec.T << "_D" << spec.D << "_r"
       << spec.redundancy_fraction << "_s" << spec.seed;
  ds.name = name.str();
  ds.samples = Tensor3(N, spec.T, spec.D);
  ds.labels.resize(N);
  ds.g_hint = spec.g;

  Rng rng(mix_seed(spec.seed, 0x5eedda7aULL));
  for (int c = 0; c < spec.g; ++c) {
    for (int s = 0; s < spec.n_per_cluster; ++s) {
      const int i = c * spec.n_per_cluster + s;
      ds.labels[i] = c;
      for (int t = 0; t < spec.T; ++t)
        for (int ch = 0; ch < spec.D; ++ch)
          ds.samples(i, t, ch) =
              synthetic_prototype(spec, c, t, ch) + spec.noise_std * rng.normal();
    }
  }
  return ds;
}

}  // namespace emtc
