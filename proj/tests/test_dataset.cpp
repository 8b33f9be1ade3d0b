#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "emtc/dataset.hpp"
#include "emtc/kmeans.hpp"
#include "emtc/synthetic.hpp"
#include "emtc/ts_format.hpp"

using namespace emtc;

namespace {

const char* kTinyTs =
    "@problemName tiny\n"
    "@timeStamps false\n"
    "@dimensions 2\n"
    "@equalLength true\n"
    "@seriesLength 3\n"
    "@classLabel true a b\n"
    "@data\n"
    "1,2,3:4,5,6:a\n"
    "7,8,9:1,2,3:b\n";

TimeSeriesDataset parse_str(const std::string& s) {
  std::istringstream in(s);
  return parse_ts_stream(in, "test");
}

}  // namespace

TEST_CASE("ts parser reads the two-sample fixture") {
  TimeSeriesDataset ds = parse_str(kTinyTs);
  CHECK(ds.n() == 2);
  CHECK(ds.t() == 3);
  CHECK(ds.d() == 2);
  CHECK(ds.labels == std::vector<int>{0, 1});
  CHECK(ds.g_hint == 2);
  CHECK(ds.samples(0, 0, 0) == 1.0);
  CHECK(ds.samples(0, 2, 1) == 6.0);
  CHECK(ds.samples(1, 0, 1) == 1.0);
  CHECK(ds.name == "tiny");
}

TEST_CASE("ts parser error paths") {
  SUBCASE("ragged dimensions name the line") {
    const std::string bad =
        "@problemName bad\n@classLabel false\n@data\n"
        "1,2,3:4,5\n";
    CHECK_THROWS_AS(parse_str(bad), FormatError);
    try {
      parse_str(bad);
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
  }
  SUBCASE("malformed header") {
    CHECK_THROWS_AS(parse_str("@dimensions nope\n@data\n1,2:x\n"), FormatError);
  }
  SUBCASE("bad numeric token") {
    CHECK_THROWS_AS(parse_str("@classLabel false\n@data\n1,zap,3\n"), FormatError);
  }
  SUBCASE("empty data section") {
    CHECK_THROWS_AS(parse_str("@problemName e\n@classLabel false\n@data\n"), EmptyDataError);
  }
  SUBCASE("undeclared class token") {
    const std::string bad = "@classLabel true a b\n@data\n1,2:c\n";
    CHECK_THROWS_AS(parse_str(bad), FormatError);
  }
}

TEST_CASE("ts parser pads unequal lengths and remaps sparse labels") {
  const std::string mixed =
      "@problemName mixed\n@classLabel true x y z\n@data\n"
      "1,2:z\n"
      "3,4,5,6:x\n";
  TimeSeriesDataset ds = parse_str(mixed);
  CHECK(ds.t() == 4);
  CHECK(ds.samples(0, 2, 0) == 0.0);  // padded
  CHECK(ds.samples(0, 3, 0) == 0.0);
  // only x and z appear; remapped contiguously in declared order
  CHECK(ds.labels == std::vector<int>{1, 0});
  CHECK(ds.g_hint == 2);
}

TEST_CASE("parse -> serialize -> parse round trip") {
  SyntheticSpec spec;
  spec.n_per_cluster = 4;
  spec.g = 3;
  spec.T = 10;
  spec.D = 2;
  spec.noise_std = 0.3;
  spec.seed = 7;
  TimeSeriesDataset ds = generate_synthetic(spec);

  std::ostringstream out;
  serialize_ts(ds, out);
  TimeSeriesDataset back = parse_str(out.str());
  REQUIRE(back.n() == ds.n());
  REQUIRE(back.t() == ds.t());
  REQUIRE(back.d() == ds.d());
  CHECK(back.labels == ds.labels);
  double max_err = 0.0;
  for (std::size_t i = 0; i < ds.samples.a.size(); ++i)
    max_err = std::max(max_err, std::fabs(ds.samples.a[i] - back.samples.a[i]));
  CHECK(max_err < 1e-9);
}

TEST_CASE("znormalize") {
  TimeSeriesDataset ds;
  ds.samples = Tensor3(1, 3, 2);
  for (int j = 0; j < 3; ++j) ds.samples(0, j, 0) = j + 1;  // 1,2,3
  for (int j = 0; j < 3; ++j) ds.samples(0, j, 1) = 5.0;    // constant

  TimeSeriesDataset z = znormalize(ds);
  CHECK(z.samples(0, 0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(z.samples(0, 1, 0) == doctest::Approx(0.0).epsilon(1e-4));
  CHECK(z.samples(0, 2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
  for (int j = 0; j < 3; ++j) CHECK(z.samples(0, j, 1) == 0.0);

  SUBCASE("idempotent") {
    TimeSeriesDataset zz = znormalize(z);
    for (std::size_t i = 0; i < z.samples.a.size(); ++i)
      CHECK(std::fabs(zz.samples.a[i] - z.samples.a[i]) < 1e-6);
  }
  SUBCASE("empty dataset rejected") {
    TimeSeriesDataset empty;
    CHECK_THROWS_AS(znormalize(empty), EmptyDataError);
  }
}

TEST_CASE("pad_or_truncate") {
  TimeSeriesDataset ds;
  ds.samples = Tensor3(1, 5, 1);
  for (int j = 0; j < 5; ++j) ds.samples(0, j, 0) = j + 1;

  TimeSeriesDataset shorter = pad_or_truncate(ds, 3);
  CHECK(shorter.t() == 3);
  CHECK(shorter.samples(0, 2, 0) == 3.0);

  TimeSeriesDataset longer = pad_or_truncate(shorter, 5);
  CHECK(longer.t() == 5);
  CHECK(longer.samples(0, 2, 0) == 3.0);
  CHECK(longer.samples(0, 3, 0) == 0.0);
  CHECK(longer.samples(0, 4, 0) == 0.0);

  TimeSeriesDataset same = pad_or_truncate(ds, 5);
  CHECK(same.samples.a == ds.samples.a);

  CHECK_THROWS_AS(pad_or_truncate(ds, 0), ArgumentError);
}

TEST_CASE("synthetic generator contracts") {
  SUBCASE("prototypes differ everywhere when nothing is redundant") {
    SyntheticSpec spec;
    spec.g = 2;
    spec.redundancy_fraction = 0.0;
    spec.noise_std = 0.0;
    spec.T = 32;
    spec.D = 2;
    for (int t = 0; t < spec.T; ++t)
      for (int ch = 0; ch < spec.D; ++ch)
        CHECK(synthetic_prototype(spec, 0, t, ch) != synthetic_prototype(spec, 1, t, ch));
  }
  SUBCASE("full redundancy collapses the prototypes") {
    SyntheticSpec spec;
    spec.g = 3;
    spec.redundancy_fraction = 1.0;
    spec.noise_std = 0.0;
    TimeSeriesDataset ds = generate_synthetic(spec);
    for (int i = 1; i < ds.n(); ++i)
      for (int j = 0; j < ds.t(); ++j)
        for (int c = 0; c < ds.d(); ++c)
          CHECK(ds.samples(i, j, c) == ds.samples(0, j, c));
  }
  SUBCASE("same seed is bit-identical, different seed is not") {
    SyntheticSpec spec;
    TimeSeriesDataset a = generate_synthetic(spec);
    TimeSeriesDataset b = generate_synthetic(spec);
    CHECK(a.samples.a == b.samples.a);
    spec.seed = 1;
    TimeSeriesDataset c = generate_synthetic(spec);
    CHECK(a.samples.a != c.samples.a);
  }
  SUBCASE("g < 2 rejected") {
    SyntheticSpec spec;
    spec.g = 1;
    CHECK_THROWS_AS(generate_synthetic(spec), ArgumentError);
  }
}

TEST_CASE("noise-free separable data is solved by nearest centroid on raw series") {
  SyntheticSpec spec;
  spec.n_per_cluster = 5;
  spec.g = 3;
  spec.T = 24;
  spec.D = 2;
  spec.redundancy_fraction = 0.0;
  spec.noise_std = 0.0;
  TimeSeriesDataset ds = generate_synthetic(spec);

  // nearest centroid on the flattened raw series
  const int dim = ds.t() * ds.d();
  Matrix flat(ds.n(), dim);
  for (int i = 0; i < ds.n(); ++i)
    for (int j = 0; j < ds.t(); ++j)
      for (int c = 0; c < ds.d(); ++c) flat(i, j * ds.d() + c) = ds.samples(i, j, c);
  Matrix centroids(spec.g, dim);
  std::vector<int> counts(spec.g, 0);
  for (int i = 0; i < ds.n(); ++i) {
    counts[ds.labels[i]]++;
    for (int k = 0; k < dim; ++k) centroids(ds.labels[i], k) += flat(i, k);
  }
  for (int c = 0; c < spec.g; ++c)
    for (int k = 0; k < dim; ++k) centroids(c, k) /= counts[c];
  int correct = 0;
  for (int i = 0; i < ds.n(); ++i) {
    double best = 1e300;
    int arg = -1;
    for (int c = 0; c < spec.g; ++c) {
      double s = 0.0;
      for (int k = 0; k < dim; ++k) {
        double r = flat(i, k) - centroids(c, k);
        s += r * r;
      }
      if (s < best) {
        best = s;
        arg = c;
      }
    }
    if (arg == ds.labels[i]) correct++;
  }
  CHECK(correct == ds.n());
}

TEST_CASE("concat merges splits and pads to the longer length") {
  TimeSeriesDataset a;
  a.samples = Tensor3(2, 3, 1, 1.0);
  a.labels = {0, 1};
  a.g_hint = 2;
  TimeSeriesDataset b;
  b.samples = Tensor3(1, 5, 1, 2.0);
  b.labels = {1};
  b.g_hint = 2;
  TimeSeriesDataset m = concat(a, b);
  CHECK(m.n() == 3);
  CHECK(m.t() == 5);
  CHECK(m.samples(0, 4, 0) == 0.0);
  CHECK(m.samples(2, 4, 0) == 2.0);
  CHECK(m.labels == std::vector<int>{0, 1, 1});
}
