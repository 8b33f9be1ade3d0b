#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "emtc/experiments.hpp"

using namespace emtc;
namespace fs = std::filesystem;

namespace {

const char* kQuickSynth = "synth:g=3,n=4,T=16,D=2,red=0.5,noise=0.1,seed=3";

RunManifest quick_manifest(const std::string& out) {
  RunManifest m;
  m.dataset = kQuickSynth;
  m.out_dir = fs::temp_directory_path() / out;
  fs::remove_all(m.out_dir);
  m.config.views = 2;
  m.config.embed_dim = 8;
  m.config.attn_dim = 4;
  m.config.epochs = 3;
  m.config.seeds = {0, 1};
  return m;
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  int n = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) n++;
  return n;
}

}  // namespace

TEST_CASE("synthetic spec parsing") {
  SyntheticSpec s = parse_synth_spec("synth:g=4,n=7,T=48,D=5,red=0.25,noise=0.3,seed=9");
  CHECK(s.g == 4);
  CHECK(s.n_per_cluster == 7);
  CHECK(s.T == 48);
  CHECK(s.D == 5);
  CHECK(s.redundancy_fraction == 0.25);
  CHECK(s.noise_std == 0.3);
  CHECK(s.seed == 9);
  CHECK_THROWS_AS(parse_synth_spec("synth:bogus"), ArgumentError);
  CHECK_THROWS_AS(parse_synth_spec("synth:zap=1"), ArgumentError);
}

TEST_CASE("config json round trip") {
  ExperimentConfig c;
  c.views = 5;
  c.embed_dim = 12;
  c.attn_dim = 6;
  c.keep_ratio = 0.6;
  c.temperature = 0.7;
  c.alpha = 0.3;
  c.beta = 0.9;
  c.learning_rate = 2e-4;
  c.epochs = 17;
  c.mask_sharpness = 5.0;
  c.seeds = {3, 1, 4};
  c.clusters = 2;
  c.use_ivm = false;
  c.use_inter = false;
  c.mask_policy = MaskPolicy::variance;
  ExperimentConfig back = config_from_json(config_to_json(c));
  CHECK(back.views == c.views);
  CHECK(back.embed_dim == c.embed_dim);
  CHECK(back.attn_dim == c.attn_dim);
  CHECK(back.keep_ratio == c.keep_ratio);
  CHECK(back.temperature == c.temperature);
  CHECK(back.alpha == c.alpha);
  CHECK(back.beta == c.beta);
  CHECK(back.learning_rate == c.learning_rate);
  CHECK(back.epochs == c.epochs);
  CHECK(back.mask_sharpness == c.mask_sharpness);
  CHECK(back.seeds == c.seeds);
  CHECK(back.clusters == c.clusters);
  CHECK(back.use_ivm == c.use_ivm);
  CHECK(back.use_inter == c.use_inter);
  CHECK(back.mask_policy == c.mask_policy);
}

TEST_CASE("dataset resolution") {
  SUBCASE("synthetic specs resolve and normalize") {
    RunManifest m = quick_manifest("emtc_resolve");
    TimeSeriesDataset ds = resolve_dataset(m);
    CHECK(ds.n() == 12);
    CHECK(ds.g_hint == 3);
    // z-normalized: per-sample channel means ~0
    double mean0 = 0.0;
    for (int j = 0; j < ds.t(); ++j) mean0 += ds.samples(0, j, 0);
    CHECK(std::fabs(mean0 / ds.t()) < 1e-9);
  }
  SUBCASE("explicit .ts paths resolve") {
    SyntheticSpec spec;
    spec.n_per_cluster = 2;
    spec.g = 2;
    spec.T = 6;
    spec.D = 2;
    TimeSeriesDataset ds = generate_synthetic(spec);
    fs::path p = fs::temp_directory_path() / "emtc_resolve_file.ts";
    serialize_ts_file(ds, p.string());
    RunManifest m;
    m.dataset = p.string();
    m.normalize = false;
    TimeSeriesDataset back = resolve_dataset(m);
    CHECK(back.n() == 4);
    CHECK(back.t() == 6);
  }
  SUBCASE("misses list the searched paths") {
    RunManifest m;
    m.dataset = "NoSuchDataset";
    m.data_dir = "/nonexistent";
    try {
      resolve_dataset(m);
      FAIL("expected ArgumentError");
    } catch (const ArgumentError& e) {
      std::string msg = e.what();
      CHECK(msg.find("NoSuchDataset_TRAIN.ts") != std::string::npos);
      CHECK(msg.find("no downloads") != std::string::npos);
    }
  }
}

TEST_CASE("cmd_run writes the versioned results schema") {
  RunManifest m = quick_manifest("emtc_run_out");
  json out = cmd_run(m);

  CHECK(fs::exists(m.out_dir / "results.json"));
  CHECK(fs::exists(m.out_dir / "trace_seed0.csv"));
  CHECK(fs::exists(m.out_dir / "trace_seed1.csv"));
  CHECK(fs::exists(m.out_dir / "checkpoint.json"));

  std::ifstream in(m.out_dir / "results.json");
  json loaded = json::parse(in);
  CHECK(loaded["schema_version"] == kResultsSchemaVersion);
  CHECK(loaded["kind"] == "single");
  for (const char* key : {"dataset", "config", "results", "timing"}) CHECK(loaded.contains(key));
  CHECK(loaded["results"]["per_seed"].size() == 2);
  for (const char* metric : {"acc", "f1", "nmi", "ari"}) {
    CHECK(loaded["results"]["mean"].contains(metric));
    CHECK(loaded["results"]["std"].contains(metric));
  }
  CHECK(loaded["dataset"]["n"] == 12);

  // trace columns match the documented layout
  std::ifstream trace(m.out_dir / "trace_seed0.csv");
  std::string header;
  std::getline(trace, header);
  CHECK(header == "epoch,l_total,l_contra,l_intra,l_inter,acc,nmi,ari,mask_change,seconds");
  CHECK(count_lines(m.out_dir / "trace_seed0.csv") == 1 + 3);
}

TEST_CASE("cmd_run is deterministic across invocations") {
  RunManifest a = quick_manifest("emtc_det_a");
  RunManifest b = quick_manifest("emtc_det_b");
  json ja = cmd_run(a);
  json jb = cmd_run(b);
  CHECK(ja["results"] == jb["results"]);
  CHECK(ja["dataset"] == jb["dataset"]);
  CHECK(ja["config"] == jb["config"]);
}

TEST_CASE("mask dumps: -IVM runs keep everything") {
  RunManifest m = quick_manifest("emtc_mask_dump");
  m.export_masks = true;
  m.config.use_ivm = false;
  m.config.seeds = {0};
  cmd_run(m);
  std::ifstream in(m.out_dir / "masks_seed0.csv");
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,view,sample,mask");
  int rows = 0;
  while (std::getline(in, line)) {
    rows++;
    std::string bits = line.substr(line.rfind(',') + 1);
    CHECK(bits == std::string(16, '1'));
  }
  CHECK(rows == 3 * 2 * 12);  // epochs * views * samples
}

TEST_CASE("checkpoints round trip") {
  ModelParams m = init_model(2, 3, 6, 4, 99);
  ExperimentConfig cfg;
  cfg.views = 2;
  fs::path p = fs::temp_directory_path() / "emtc_ckpt.json";
  save_checkpoint(p, m, cfg, 7);
  int epoch = 0;
  ExperimentConfig cfg2;
  ModelParams back = load_checkpoint(p.string(), &cfg2, &epoch);
  CHECK(epoch == 7);
  auto torig = collect_tensors(m);
  auto tback = collect_tensors(back);
  REQUIRE(torig.size() == tback.size());
  for (std::size_t i = 0; i < torig.size(); ++i) {
    CHECK(torig[i].name == tback[i].name);
    CHECK(*torig[i].data == *tback[i].data);
  }
}

TEST_CASE("cmd_compare_masks emits five policy rows sharing keep_ratio") {
  RunManifest m = quick_manifest("emtc_cmp_out");
  m.config.epochs = 2;
  m.config.seeds = {0};
  m.config.keep_ratio = 0.5;
  json out = cmd_compare_masks(m);
  REQUIRE(out["policies"].size() == 5);
  const char* expected[5] = {"evolving", "random", "uniform", "variance", "frequency"};
  for (int i = 0; i < 5; ++i) {
    CHECK(out["policies"][i]["policy"] == expected[i]);
    CHECK(out["policies"][i]["keep_ratio"] == 0.5);
    for (const char* metric : {"acc", "f1", "nmi", "ari"})
      CHECK(out["policies"][i]["summary"]["mean"].contains(metric));
  }
  CHECK(out["static_average"].contains("acc"));
  CHECK(fs::exists(m.out_dir / "mask_compare.json"));
}

TEST_CASE("cmd_ablation emits the 2x2 grid in reporting order") {
  RunManifest m = quick_manifest("emtc_abl_out");
  m.config.epochs = 2;
  m.config.seeds = {0};
  json out = cmd_ablation(m);
  REQUIRE(out["cells"].size() == 4);
  CHECK(out["cells"][0]["ivm"] == true);
  CHECK(out["cells"][0]["mev"] == true);
  CHECK(out["cells"][1]["ivm"] == false);
  CHECK(out["cells"][1]["mev"] == true);
  CHECK(out["cells"][2]["ivm"] == true);
  CHECK(out["cells"][2]["mev"] == false);
  CHECK(out["cells"][3]["ivm"] == false);
  CHECK(out["cells"][3]["mev"] == false);
}

TEST_CASE("cmd_scaling: a single-point grid gives a single row per axis") {
  RunManifest m = quick_manifest("emtc_scale_out");
  m.scale_T = {16};
  m.scale_D = {};
  m.scale_N = {};
  m.scale_epochs = 2;
  json out = cmd_scaling(m);
  REQUIRE(out["points"].size() == 1);
  CHECK(out["points"][0]["axis"] == "T");
  CHECK(count_lines(m.out_dir / "timing.csv") == 2);  // header + one row
}

TEST_CASE("pca_2d") {
  SUBCASE("2-D input comes back as a rotation (distances preserved)") {
    Rng rng(5);
    Matrix F(12, 2);
    for (double& x : F.a) x = rng.normal();
    Matrix Y = pca_2d(F);
    for (int i = 0; i < 12; ++i)
      for (int j = i + 1; j < 12; ++j) {
        double din = std::hypot(F(i, 0) - F(j, 0), F(i, 1) - F(j, 1));
        double dout = std::hypot(Y(i, 0) - Y(j, 0), Y(i, 1) - Y(j, 1));
        CHECK(din == doctest::Approx(dout).epsilon(1e-6));
      }
  }
  SUBCASE("axis order follows variance") {
    Rng rng(7);
    Matrix F(40, 3);
    for (int i = 0; i < 40; ++i) {
      F(i, 0) = 10.0 * rng.normal();
      F(i, 1) = 1.0 * rng.normal();
      F(i, 2) = 0.1 * rng.normal();
    }
    Matrix Y = pca_2d(F);
    double v0 = 0.0, v1 = 0.0;
    for (int i = 0; i < 40; ++i) {
      v0 += Y(i, 0) * Y(i, 0);
      v1 += Y(i, 1) * Y(i, 1);
    }
    CHECK(v0 > v1);
  }
}

TEST_CASE("cmd_export_embedding writes plot-ready rows") {
  RunManifest m = quick_manifest("emtc_emb_out");
  m.config.epochs = 2;
  m.config.seeds = {0};
  json out = cmd_export_embedding(m);
  CHECK(out["rows"] == 12);
  std::ifstream in(m.out_dir / "embedding.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,y,cluster,label");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows++;
  CHECK(rows == 12);

  SUBCASE("checkpoint reuse path") {
    RunManifest run_m = quick_manifest("emtc_emb_ckpt_src");
    run_m.config.seeds = {0};
    cmd_run(run_m);
    RunManifest m2 = quick_manifest("emtc_emb_from_ckpt");
    m2.checkpoint = (run_m.out_dir / "checkpoint.json").string();
    json out2 = cmd_export_embedding(m2);
    CHECK(out2["rows"] == 12);
  }
}

TEST_CASE("separable synthetic data separates in the 2-D export") {
  RunManifest m = quick_manifest("emtc_emb_sep");
  m.dataset = "synth:g=2,n=6,T=24,D=2,red=0,noise=0.05,seed=5";
  m.config.epochs = 10;
  m.config.seeds = {0};
  m.config.keep_ratio = 0.75;
  cmd_export_embedding(m);

  std::ifstream in(m.out_dir / "embedding.csv");
  std::string line;
  std::getline(in, line);
  std::vector<double> xs, ys;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    double x, y;
    int c, l;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%d,%d", &x, &y, &c, &l) == 4);
    xs.push_back(x);
    ys.push_back(y);
    labels.push_back(l);
  }
  double cx[2] = {0, 0}, cy[2] = {0, 0};
  int cnt[2] = {0, 0};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cx[labels[i]] += xs[i];
    cy[labels[i]] += ys[i];
    cnt[labels[i]]++;
  }
  for (int c = 0; c < 2; ++c) {
    cx[c] /= cnt[c];
    cy[c] /= cnt[c];
  }
  double inter = std::hypot(cx[0] - cx[1], cy[0] - cy[1]);
  double intra = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    intra += std::hypot(xs[i] - cx[labels[i]], ys[i] - cy[labels[i]]);
  intra /= xs.size();
  CHECK(inter > intra);
}

TEST_CASE("every experiment kind completes on the quick config inside 60 s") {
  auto t0 = std::chrono::steady_clock::now();
  RunManifest m = quick_manifest("emtc_quick_all");
  m.config.epochs = 3;
  m.config.seeds = {0};
  cmd_run(m);
  m.out_dir = fs::temp_directory_path() / "emtc_quick_all2";
  cmd_compare_masks(m);
  cmd_ablation(m);
  m.scale_T = {16};
  m.scale_D = {2};
  m.scale_N = {12};
  m.scale_epochs = 2;
  cmd_scaling(m);
  cmd_export_embedding(m);
  double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(sec < 60.0);
}

TEST_CASE("tsne runs and stays finite") {
  Rng rng(11);
  Matrix F(20, 4);
  for (int i = 0; i < 20; ++i)
    for (int k = 0; k < 4; ++k) F(i, k) = (i < 10 ? 2.0 : -2.0) + 0.1 * rng.normal();
  Matrix Y = tsne_2d(F, 5.0, 120, 3);
  CHECK(Y.rows == 20);
  for (double v : Y.a) CHECK(std::isfinite(v));
}
