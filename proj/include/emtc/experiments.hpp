#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "emtc/common.hpp"
#include "emtc/projection.hpp"
#include "emtc/synthetic.hpp"
#include "emtc/trainer.hpp"
#include "emtc/ts_format.hpp"

namespace emtc {

using json = nlohmann::json;

constexpr int kResultsSchemaVersion = 1;

enum class ExperimentKind { single, compare_masks, ablation, scaling, export_embedding };

enum class SplitMode { combined, train, test };

/// One CLI invocation's worth of intent: which data, which config, where the
/// artifacts go.
struct RunManifest {
  std::string dataset;  // name, path, or "synth:g=3,n=10,T=64,D=3,red=0.5,noise=0.1,seed=7"
  std::string data_dir = "data";
  SplitMode split = SplitMode::combined;
  bool normalize = true;
  ExperimentConfig config;
  std::filesystem::path out_dir = "emtc_out";
  bool export_masks = false;
  std::string projection = "pca";  // or "tsne"
  std::string checkpoint;          // optional input checkpoint for export
  // scaling grids (one axis varied at a time from the synthetic base spec)
  std::vector<int> scale_T = {32, 64};
  std::vector<int> scale_D = {4, 8};
  std::vector<int> scale_N = {21, 42};
  int scale_epochs = 6;
};

// ---------------------------------------------------------------------------
// config <-> json

inline json config_to_json(const ExperimentConfig& c) {
  return json{{"views", c.views},
              {"embed_dim", c.embed_dim},
              {"attn_dim", c.attn_dim},
              {"keep_ratio", c.keep_ratio},
              {"temperature", c.temperature},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"mask_sharpness", c.mask_sharpness},
              {"seeds", c.seeds},
              {"clusters", c.clusters},
              {"use_ivm", c.use_ivm},
              {"use_mev", c.use_mev},
              {"use_intra", c.use_intra},
              {"use_inter", c.use_inter},
              {"use_contra", c.use_contra},
              {"mask_policy", mask_policy_name(c.mask_policy)},
              {"plateau_tol", c.plateau_tol},
              {"plateau_patience", c.plateau_patience}};
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.views = j.value("views", c.views);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.attn_dim = j.value("attn_dim", c.attn_dim);
  c.keep_ratio = j.value("keep_ratio", c.keep_ratio);
  c.temperature = j.value("temperature", c.temperature);
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.mask_sharpness = j.value("mask_sharpness", c.mask_sharpness);
  if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  c.clusters = j.value("clusters", c.clusters);
  c.use_ivm = j.value("use_ivm", c.use_ivm);
  c.use_mev = j.value("use_mev", c.use_mev);
  c.use_intra = j.value("use_intra", c.use_intra);
  c.use_inter = j.value("use_inter", c.use_inter);
  c.use_contra = j.value("use_contra", c.use_contra);
  if (j.contains("mask_policy")) c.mask_policy = mask_policy_from_name(j["mask_policy"]);
  c.plateau_tol = j.value("plateau_tol", c.plateau_tol);
  c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
  return c;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config file: " + path);
  json j = json::parse(in);
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// dataset resolution

inline SyntheticSpec parse_synth_spec(const std::string& s) {
  SyntheticSpec spec;
  std::size_t colon = s.find(':');
  std::string body = colon == std::string::npos ? "" : s.substr(colon + 1);
  std::istringstream in(body);
  std::string kv;
  while (std::getline(in, kv, ',')) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos) throw ArgumentError("bad synthetic spec token: " + kv);
    std::string key = kv.substr(0, eq);
    double val = std::stod(kv.substr(eq + 1));
    if (key == "g") spec.g = static_cast<int>(val);
    else if (key == "n") spec.n_per_cluster = static_cast<int>(val);
    else if (key == "T") spec.T = static_cast<int>(val);
    else if (key == "D") spec.D = static_cast<int>(val);
    else if (key == "red") spec.redundancy_fraction = val;
    else if (key == "noise") spec.noise_std = val;
    else if (key == "seed") spec.seed = static_cast<std::uint64_t>(val);
    else throw ArgumentError("unknown synthetic spec key: " + key);
  }
  return spec;
}

inline bool is_synth_spec(const std::string& s) {
  return s.rfind("synth:", 0) == 0 || s.rfind("synthetic:", 0) == 0;
}

/// Resolution order: synthetic spec -> explicit file path -> data_dir
/// conventions. No network access; a miss lists everything that was tried.
inline TimeSeriesDataset resolve_dataset(const RunManifest& m) {
  namespace fs = std::filesystem;
  TimeSeriesDataset ds;
  if (is_synth_spec(m.dataset)) {
    ds = generate_synthetic(parse_synth_spec(m.dataset));
  } else if (fs::exists(m.dataset) && fs::is_regular_file(m.dataset)) {
    ds = parse_ts_file(m.dataset);
  } else {
    const fs::path dir(m.data_dir);
    const fs::path train = dir / m.dataset / (m.dataset + "_TRAIN.ts");
    const fs::path test = dir / m.dataset / (m.dataset + "_TEST.ts");
    const fs::path flat = dir / (m.dataset + ".ts");
    if (m.split == SplitMode::train && fs::exists(train)) {
      ds = parse_ts_file(train.string());
    } else if (m.split == SplitMode::test && fs::exists(test)) {
      ds = parse_ts_file(test.string());
    } else if (m.split == SplitMode::combined && fs::exists(train) && fs::exists(test)) {
      ds = concat(parse_ts_file(train.string()), parse_ts_file(test.string()));
      ds.name = m.dataset;
    } else if (fs::exists(flat)) {
      ds = parse_ts_file(flat.string());
    } else {
      throw ArgumentError(
          "dataset '" + m.dataset + "' not found; tried: " + m.dataset + ", " + train.string() +
          " (+ _TEST.ts), " + flat.string() +
          ". Place UEA .ts files under the data directory or pass a file path; no downloads "
          "are attempted.");
    }
  }
  if (m.normalize) ds = znormalize(ds);
  return ds;
}

// ---------------------------------------------------------------------------
// checkpoints

inline json model_to_json(const ModelParams& m) {
  json tensors = json::object();
  ModelParams& mut = const_cast<ModelParams&>(m);
  for (const TensorRef& t : collect_tensors(mut)) tensors[t.name] = *t.data;
  std::vector<int> widths;
  for (const auto& v : m.encoder.views) widths.push_back(v.kernel_width());
  return json{{"V", m.V},           {"in_dim", m.in_dim},   {"embed_dim", m.embed_dim},
              {"attn_dim", m.attn_dim}, {"kernel_widths", widths}, {"tensors", tensors}};
}

inline ModelParams model_from_json(const json& j) {
  ModelParams m = init_model(j.at("V"), j.at("in_dim"), j.at("embed_dim"), j.at("attn_dim"), 0);
  const json& tensors = j.at("tensors");
  for (const TensorRef& t : collect_tensors(m)) {
    const json& arr = tensors.at(t.name);
    if (arr.size() != t.data->size())
      throw FormatError("checkpoint tensor size mismatch for " + t.name);
    *t.data = arr.get<std::vector<double>>();
  }
  return m;
}

inline void save_checkpoint(const std::filesystem::path& path, const ModelParams& model,
                            const ExperimentConfig& cfg, int epoch) {
  json j{{"schema_version", kResultsSchemaVersion},
         {"model", model_to_json(model)},
         {"config", config_to_json(cfg)},
         {"epoch", epoch}};
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write checkpoint: " + path.string());
  out << j.dump(2) << "\n";
}

inline ModelParams load_checkpoint(const std::string& path, ExperimentConfig* cfg_out = nullptr,
                                   int* epoch_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open checkpoint: " + path);
  json j = json::parse(in);
  if (cfg_out) *cfg_out = config_from_json(j.at("config"));
  if (epoch_out) *epoch_out = j.at("epoch");
  return model_from_json(j.at("model"));
}

// ---------------------------------------------------------------------------
// shared writers

namespace exp_detail {

inline void ensure_dir(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw ArgumentError("cannot create output directory: " + p.string());
}

inline json dataset_info(const TimeSeriesDataset& ds, int g) {
  return json{{"name", ds.name}, {"n", ds.n()}, {"t", ds.t()}, {"d", ds.d()}, {"g", g}};
}

inline json summary_to_json(const RunSummary& s) {
  json per_seed = json::array();
  for (const SeedRun& r : s.per_seed)
    per_seed.push_back(json{{"seed", r.seed},
                            {"acc", r.eval.acc},
                            {"f1", r.eval.f1},
                            {"nmi", r.eval.nmi},
                            {"ari", r.eval.ari},
                            {"epochs_run", r.epochs_run},
                            {"final_loss", r.final_loss}});
  return json{
      {"per_seed", per_seed},
      {"mean",
       {{"acc", s.acc.mean}, {"f1", s.f1.mean}, {"nmi", s.nmi_s.mean}, {"ari", s.ari_s.mean}}},
      {"std",
       {{"acc", s.acc.stdev}, {"f1", s.f1.stdev}, {"nmi", s.nmi_s.stdev}, {"ari", s.ari_s.stdev}}}};
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

inline void write_trace_csv(const std::filesystem::path& path, const TrainTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out << "epoch,l_total,l_contra,l_intra,l_inter,acc,nmi,ari,mask_change,seconds\n";
  char buf[320];
  for (const EpochRecord& r : trace.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.6f\n",
                  r.epoch, r.l_total, r.l_contra, r.l_intra, r.l_inter, r.acc, r.nmi, r.ari,
                  r.mask_change, r.seconds);
    out << buf;
  }
}

inline double seconds_total(const RunSummary& s) {
  double t = 0.0;
  for (const SeedRun& r : s.per_seed) t += r.seconds;
  return t;
}

}  // namespace exp_detail

// ---------------------------------------------------------------------------
// commands

/// `run`: train on one dataset over the seed list; writes results.json,
/// per-seed trace CSVs, a final-seed checkpoint, and optional mask dumps.
inline json cmd_run(const RunManifest& m) {
  using namespace exp_detail;
  ensure_dir(m.out_dir);
  TimeSeriesDataset ds = resolve_dataset(m);
  const int g = m.config.clusters > 0 ? m.config.clusters : ds.g_hint;

  RunSummary summary;
  std::vector<double> accs, f1s, nmis, aris;
  ModelParams last_model;
  int last_epoch = 0;
  for (std::uint64_t seed : m.config.seeds) {
    std::ofstream mask_out;
    MaskObserver observer;
    if (m.export_masks) {
      mask_out.open(m.out_dir / ("masks_seed" + std::to_string(seed) + ".csv"));
      mask_out << "epoch,view,sample,mask\n";
      observer = [&mask_out](int epoch, const MaskSet& masks) {
        for (std::size_t v = 0; v < masks.views.size(); ++v) {
          const Matrix& mk = masks.views[v].mask;
          for (int i = 0; i < mk.rows; ++i) {
            std::string bits(mk.cols, '0');
            for (int j = 0; j < mk.cols; ++j)
              if (mk(i, j) == 1.0) bits[j] = '1';
            mask_out << epoch << ',' << v << ',' << i << ',' << bits << '\n';
          }
        }
      };
    }
    TrainResult r = train(ds, m.config, seed, observer);
    SeedRun sr;
    sr.seed = seed;
    sr.eval = ds.has_labels() ? evaluate_clustering(ds.labels, r.clusters.labels) : EvalReport{};
    sr.epochs_run = r.epochs_run;
    sr.final_loss = r.trace.epochs.empty() ? 0.0 : r.trace.epochs.back().l_total;
    sr.seconds = r.seconds;
    accs.push_back(sr.eval.acc);
    f1s.push_back(sr.eval.f1);
    nmis.push_back(sr.eval.nmi);
    aris.push_back(sr.eval.ari);
    summary.per_seed.push_back(sr);
    write_trace_csv(m.out_dir / ("trace_seed" + std::to_string(seed) + ".csv"), r.trace);

    std::ofstream labels_out(m.out_dir / ("labels_seed" + std::to_string(seed) + ".csv"));
    labels_out << "sample,cluster\n";
    for (std::size_t i = 0; i < r.clusters.labels.size(); ++i)
      labels_out << i << ',' << r.clusters.labels[i] << '\n';

    last_model = std::move(r.model);
    last_epoch = r.epochs_run;
  }
  summary.acc = metric_stats(accs);
  summary.f1 = metric_stats(f1s);
  summary.nmi_s = metric_stats(nmis);
  summary.ari_s = metric_stats(aris);

  save_checkpoint(m.out_dir / "checkpoint.json", last_model, m.config, last_epoch);

  json out{{"schema_version", kResultsSchemaVersion},
           {"kind", "single"},
           {"dataset", dataset_info(ds, g)},
           {"config", config_to_json(m.config)},
           {"results", summary_to_json(summary)},
           {"timing", {{"total_seconds", seconds_total(summary)}}}};
  write_json(m.out_dir / "results.json", out);
  return out;
}

/// `compare-masks`: evolving vs the four static policies, shared config and
/// seeds; writes mask_compare.json with per-policy and policy-averaged rows.
inline json cmd_compare_masks(const RunManifest& m) {
  using namespace exp_detail;
  ensure_dir(m.out_dir);
  TimeSeriesDataset ds = resolve_dataset(m);
  const int g = m.config.clusters > 0 ? m.config.clusters : ds.g_hint;

  json rows = json::array();
  double static_acc = 0.0, static_f1 = 0.0, static_nmi = 0.0, static_ari = 0.0;
  int static_rows = 0;
  double total_seconds = 0.0;
  for (MaskPolicy pol : {MaskPolicy::evolving, MaskPolicy::random, MaskPolicy::uniform,
                         MaskPolicy::variance, MaskPolicy::frequency}) {
    ExperimentConfig cfg = m.config;
    cfg.mask_policy = pol;
    cfg.use_ivm = true;
    RunSummary s = run_seeds(ds, cfg);
    total_seconds += seconds_total(s);
    rows.push_back(json{{"policy", mask_policy_name(pol)},
                        {"keep_ratio", cfg.keep_ratio},
                        {"summary", summary_to_json(s)}});
    if (pol != MaskPolicy::evolving) {
      static_acc += s.acc.mean;
      static_f1 += s.f1.mean;
      static_nmi += s.nmi_s.mean;
      static_ari += s.ari_s.mean;
      static_rows++;
    }
  }
  json out{{"schema_version", kResultsSchemaVersion},
           {"kind", "compare_masks"},
           {"dataset", dataset_info(ds, g)},
           {"config", config_to_json(m.config)},
           {"policies", rows},
           {"static_average",
            {{"acc", static_acc / static_rows},
             {"f1", static_f1 / static_rows},
             {"nmi", static_nmi / static_rows},
             {"ari", static_ari / static_rows}}},
           {"timing", {{"total_seconds", total_seconds}}}};
  write_json(m.out_dir / "mask_compare.json", out);
  return out;
}

/// `ablation`: the {±IVM, ±MEV} grid with shared seeds; rows follow the
/// reporting order full, -IVM, -MEV, -both.
inline json cmd_ablation(const RunManifest& m) {
  using namespace exp_detail;
  ensure_dir(m.out_dir);
  TimeSeriesDataset ds = resolve_dataset(m);
  const int g = m.config.clusters > 0 ? m.config.clusters : ds.g_hint;

  std::vector<AblationCell> cells = run_ablation(ds, m.config);
  json rows = json::array();
  double total_seconds = 0.0;
  for (const AblationCell& c : cells) {
    total_seconds += seconds_total(c.summary);
    rows.push_back(json{{"ivm", c.use_ivm}, {"mev", c.use_mev},
                        {"summary", summary_to_json(c.summary)}});
  }
  json out{{"schema_version", kResultsSchemaVersion},
           {"kind", "ablation"},
           {"dataset", dataset_info(ds, g)},
           {"config", config_to_json(m.config)},
           {"cells", rows},
           {"timing", {{"total_seconds", total_seconds}}}};
  write_json(m.out_dir / "ablation.json", out);
  return out;
}

/// `scaling`: per-epoch wall time on synthetic data, varying T, D, N one
/// axis at a time from the manifest's synthetic base spec.
inline json cmd_scaling(const RunManifest& m) {
  using namespace exp_detail;
  ensure_dir(m.out_dir);
  SyntheticSpec base =
      is_synth_spec(m.dataset) ? parse_synth_spec(m.dataset) : SyntheticSpec{};

  ExperimentConfig cfg = m.config;
  cfg.epochs = m.scale_epochs;
  cfg.seeds = {m.config.seeds.empty() ? 0 : m.config.seeds.front()};

  std::ofstream csv(m.out_dir / "timing.csv");
  if (!csv) throw ArgumentError("cannot write timing.csv");
  csv << "axis,value,n,t,d,epochs,total_seconds,seconds_per_epoch\n";

  json rows = json::array();
  auto run_point = [&](const char* axis, int value, const SyntheticSpec& spec) {
    TimeSeriesDataset ds = znormalize(generate_synthetic(spec));
    TrainResult r = train(ds, cfg, cfg.seeds[0]);
    double per_epoch = r.epochs_run > 0 ? r.seconds / r.epochs_run : 0.0;
    char buf[240];
    std::snprintf(buf, sizeof(buf), "%s,%d,%d,%d,%d,%d,%.6f,%.6f\n", axis, value, ds.n(), ds.t(),
                  ds.d(), r.epochs_run, r.seconds, per_epoch);
    csv << buf;
    rows.push_back(json{{"axis", axis},
                        {"value", value},
                        {"n", ds.n()},
                        {"t", ds.t()},
                        {"d", ds.d()},
                        {"epochs", r.epochs_run},
                        {"total_seconds", r.seconds},
                        {"seconds_per_epoch", per_epoch}});
  };

  for (int T : m.scale_T) {
    SyntheticSpec s = base;
    s.T = T;
    run_point("T", T, s);
  }
  for (int D : m.scale_D) {
    SyntheticSpec s = base;
    s.D = D;
    run_point("D", D, s);
  }
  for (int N : m.scale_N) {
    SyntheticSpec s = base;
    s.n_per_cluster = std::max(1, N / s.g);
    run_point("N", s.n_per_cluster * s.g, s);
  }

  json out{{"schema_version", kResultsSchemaVersion},
           {"kind", "scaling"},
           {"config", config_to_json(cfg)},
           {"points", rows}};
  write_json(m.out_dir / "scaling.json", out);
  return out;
}

/// `export-embedding`: 2-D projection of the fused embedding with cluster
/// ids and true labels, plot-ready. Uses a checkpoint when given, otherwise
/// trains the first seed fresh.
inline json cmd_export_embedding(const RunManifest& m) {
  using namespace exp_detail;
  ensure_dir(m.out_dir);
  TimeSeriesDataset ds = resolve_dataset(m);
  const int g = m.config.clusters > 0 ? m.config.clusters : ds.g_hint;

  ModelParams model;
  ExperimentConfig cfg = m.config;
  if (!m.checkpoint.empty()) {
    model = load_checkpoint(m.checkpoint, &cfg);
  } else {
    TrainResult r = train(ds, cfg, cfg.seeds.empty() ? 0 : cfg.seeds.front());
    model = std::move(r.model);
  }

  PipelineConfig pcfg = cfg.pipeline();
  Matrix fixed;
  const Matrix* fixed_ptr = nullptr;
  if (pcfg.masking == MaskingMode::fixed) {
    std::uint64_t s0 = cfg.seeds.empty() ? 0 : cfg.seeds.front();
    StaticMaskPolicy policy{cfg.mask_policy, cfg.keep_ratio, mix_seed(s0, 0x5a717cULL)};
    fixed = static_mask(ds.samples, policy);
    fixed_ptr = &fixed;
  }
  PipelineState st = forward_repr(model, ds.samples, pcfg, fixed_ptr);
  ClusterState clusters = kmeans(st.fused, g, cfg.seeds.empty() ? 0 : cfg.seeds.front());

  Matrix xy = m.projection == "tsne"
                  ? tsne_2d(st.fused, 30.0, 500, cfg.seeds.empty() ? 0 : cfg.seeds.front())
                  : pca_2d(st.fused);

  std::ofstream csv(m.out_dir / "embedding.csv");
  if (!csv) throw ArgumentError("cannot write embedding.csv");
  csv << "x,y,cluster,label\n";
  char buf[160];
  for (int i = 0; i < xy.rows; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d,%d\n", xy(i, 0), xy(i, 1), clusters.labels[i],
                  ds.has_labels() ? ds.labels[i] : -1);
    csv << buf;
  }
  json out{{"schema_version", kResultsSchemaVersion},
           {"kind", "export_embedding"},
           {"dataset", dataset_info(ds, g)},
           {"projection", m.projection},
           {"rows", xy.rows}};
  write_json(m.out_dir / "embedding.json", out);
  return out;
}

}  // namespace emtc
