// emtc: experiment CLI for evolving-masked multivariate time-series
// clustering. Subcommands cover single runs, masking-policy comparison, the
// component ablation grid, efficiency scaling, and 2-D embedding export.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emtc/experiments.hpp"

namespace {

struct CliFlags {
  std::string dataset;
  std::string data_dir = "data";
  std::string config_file;
  std::string split = "combined";
  std::string mask_policy;
  std::string projection = "pca";
  std::string checkpoint;
  std::string out_dir = "emtc_out";
  std::vector<std::uint64_t> seeds;
  double keep_ratio = -1.0;
  int epochs = -1;
  int clusters = -1;
  int views = -1;
  int embed_dim = -1;
  int attn_dim = -1;
  double lr = -1.0;
  double alpha = -1.0;
  double beta = -1.0;
  double temperature = -1.0;
  bool no_ivm = false;
  bool no_mev = false;
  bool no_intra = false;
  bool no_inter = false;
  bool no_contra = false;
  bool no_normalize = false;
  bool export_masks = false;
  std::vector<int> scale_T;
  std::vector<int> scale_D;
  std::vector<int> scale_N;
  int scale_epochs = -1;
};

void add_common_options(CLI::App* cmd, CliFlags& f) {
  cmd->add_option("--dataset", f.dataset,
                  "UEA dataset name, .ts file path, or synth:g=..,n=..,T=..,D=..,red=..,noise=..");
  cmd->add_option("--data-dir", f.data_dir, "directory holding <name>/<name>_TRAIN.ts files");
  cmd->add_option("--config", f.config_file, "JSON config file (flags override its values)");
  cmd->add_option("--split", f.split, "combined | train | test")
      ->check(CLI::IsMember({"combined", "train", "test"}));
  cmd->add_option("--seeds", f.seeds, "run seeds, comma separated")->delimiter(',');
  cmd->add_option("--mask-policy", f.mask_policy,
                  "evolving | random | uniform | variance | frequency")
      ->check(CLI::IsMember({"evolving", "random", "uniform", "variance", "frequency"}));
  cmd->add_option("--keep-ratio", f.keep_ratio, "fraction of timestamps kept by masks");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--clusters", f.clusters, "cluster count g (default: from labels)");
  cmd->add_option("--views", f.views, "number of endogenous views V");
  cmd->add_option("--embed-dim", f.embed_dim, "embedding width d");
  cmd->add_option("--attn-dim", f.attn_dim, "attention projection width d_k");
  cmd->add_option("--lr", f.lr, "Adam learning rate");
  cmd->add_option("--alpha", f.alpha, "weight of the reconstruction loss");
  cmd->add_option("--beta", f.beta, "weight of the cross-view consistency loss");
  cmd->add_option("--temperature", f.temperature, "contrastive temperature");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_flag("--no-ivm", f.no_ivm, "ablate masking (all timestamps kept)");
  cmd->add_flag("--no-mev", f.no_mev, "ablate multi-view generation (V=1)");
  cmd->add_flag("--no-intra", f.no_intra, "drop the reconstruction loss term");
  cmd->add_flag("--no-inter", f.no_inter, "drop the cross-view consistency term");
  cmd->add_flag("--no-contra", f.no_contra, "drop the contrastive term");
  cmd->add_flag("--no-normalize", f.no_normalize, "skip per-sample per-channel z-normalization");
}

emtc::RunManifest build_manifest(const CLI::App* cmd, const CliFlags& f) {
  emtc::RunManifest m;
  if (!f.config_file.empty()) m.config = emtc::load_config_file(f.config_file);
  m.dataset = f.dataset;
  m.data_dir = f.data_dir;
  m.out_dir = f.out_dir;
  m.normalize = !f.no_normalize;
  m.export_masks = f.export_masks;
  m.projection = f.projection;
  m.checkpoint = f.checkpoint;
  if (f.split == "train") m.split = emtc::SplitMode::train;
  else if (f.split == "test") m.split = emtc::SplitMode::test;

  emtc::ExperimentConfig& c = m.config;
  if (cmd->count("--seeds")) c.seeds = f.seeds;
  if (cmd->count("--mask-policy")) c.mask_policy = emtc::mask_policy_from_name(f.mask_policy);
  if (cmd->count("--keep-ratio")) c.keep_ratio = f.keep_ratio;
  if (cmd->count("--epochs")) c.epochs = f.epochs;
  if (cmd->count("--clusters")) c.clusters = f.clusters;
  if (cmd->count("--views")) c.views = f.views;
  if (cmd->count("--embed-dim")) c.embed_dim = f.embed_dim;
  if (cmd->count("--attn-dim")) c.attn_dim = f.attn_dim;
  if (cmd->count("--lr")) c.learning_rate = f.lr;
  if (cmd->count("--alpha")) c.alpha = f.alpha;
  if (cmd->count("--beta")) c.beta = f.beta;
  if (cmd->count("--temperature")) c.temperature = f.temperature;
  if (f.no_ivm) c.use_ivm = false;
  if (f.no_mev) c.use_mev = false;
  if (f.no_intra) c.use_intra = false;
  if (f.no_inter) c.use_inter = false;
  if (f.no_contra) c.use_contra = false;

  auto has = [cmd](const char* name) {
    const CLI::Option* opt = cmd->get_option_no_throw(name);
    return opt && opt->count() > 0;
  };
  if (has("--scale-t")) m.scale_T = f.scale_T;
  if (has("--scale-d")) m.scale_D = f.scale_D;
  if (has("--scale-n")) m.scale_N = f.scale_N;
  if (f.scale_epochs > 0) m.scale_epochs = f.scale_epochs;
  return m;
}

void print_summary(const nlohmann::json& out) {
  if (out.contains("results")) {
    const auto& mean = out["results"]["mean"];
    const auto& sd = out["results"]["std"];
    std::printf("%s: ACC %.4f ± %.4f  F1 %.4f ± %.4f  NMI %.4f ± %.4f  ARI %.4f ± %.4f\n",
                out["dataset"]["name"].get<std::string>().c_str(), mean["acc"].get<double>(),
                sd["acc"].get<double>(), mean["f1"].get<double>(), sd["f1"].get<double>(),
                mean["nmi"].get<double>(), sd["nmi"].get<double>(), mean["ari"].get<double>(),
                sd["ari"].get<double>());
  }
  if (out.contains("policies")) {
    for (const auto& row : out["policies"]) {
      const auto& mean = row["summary"]["mean"];
      const auto& sd = row["summary"]["std"];
      std::printf("%-10s ACC %.4f ± %.4f  F1 %.4f ± %.4f\n",
                  row["policy"].get<std::string>().c_str(), mean["acc"].get<double>(),
                  sd["acc"].get<double>(), mean["f1"].get<double>(), sd["f1"].get<double>());
    }
  }
  if (out.contains("cells")) {
    for (const auto& row : out["cells"]) {
      const auto& mean = row["summary"]["mean"];
      const auto& sd = row["summary"]["std"];
      std::printf("IVM %s MEV %s  ACC %.4f ± %.4f  F1 %.4f ± %.4f\n",
                  row["ivm"].get<bool>() ? "+" : "-", row["mev"].get<bool>() ? "+" : "-",
                  mean["acc"].get<double>(), sd["acc"].get<double>(), mean["f1"].get<double>(),
                  sd["f1"].get<double>());
    }
  }
  if (out.contains("points")) {
    for (const auto& row : out["points"])
      std::printf("%s=%-6d N=%d T=%d D=%d  %.4f s/epoch\n",
                  row["axis"].get<std::string>().c_str(), row["value"].get<int>(),
                  row["n"].get<int>(), row["t"].get<int>(), row["d"].get<int>(),
                  row["seconds_per_epoch"].get<double>());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evolving-masked multivariate time-series clustering experiments"};
  app.require_subcommand(1);

  CliFlags run_f, cmp_f, abl_f, scl_f, exp_f;

  CLI::App* run = app.add_subcommand("run", "train and evaluate on one dataset");
  add_common_options(run, run_f);
  run->add_flag("--export-masks", run_f.export_masks, "dump per-epoch masks to CSV");

  CLI::App* cmp = app.add_subcommand("compare-masks", "evolving vs static masking policies");
  add_common_options(cmp, cmp_f);

  CLI::App* abl = app.add_subcommand("ablation", "the {±IVM, ±MEV} component grid");
  add_common_options(abl, abl_f);

  CLI::App* scl = app.add_subcommand("scaling", "training-time scaling on synthetic data");
  add_common_options(scl, scl_f);
  scl->add_option("--scale-t", scl_f.scale_T, "sequence lengths to time")->delimiter(',');
  scl->add_option("--scale-d", scl_f.scale_D, "variate counts to time")->delimiter(',');
  scl->add_option("--scale-n", scl_f.scale_N, "sample counts to time")->delimiter(',');
  scl->add_option("--scale-epochs", scl_f.scale_epochs, "epochs per scaling point");

  CLI::App* exp = app.add_subcommand("export-embedding", "2-D projection of the fused embedding");
  add_common_options(exp, exp_f);
  exp->add_option("--projection", exp_f.projection, "pca | tsne")
      ->check(CLI::IsMember({"pca", "tsne"}));
  exp->add_option("--checkpoint", exp_f.checkpoint, "reuse a trained checkpoint");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      print_summary(emtc::cmd_run(build_manifest(run, run_f)));
    } else if (cmp->parsed()) {
      print_summary(emtc::cmd_compare_masks(build_manifest(cmp, cmp_f)));
    } else if (abl->parsed()) {
      print_summary(emtc::cmd_ablation(build_manifest(abl, abl_f)));
    } else if (scl->parsed()) {
      print_summary(emtc::cmd_scaling(build_manifest(scl, scl_f)));
    } else if (exp->parsed()) {
      print_summary(emtc::cmd_export_embedding(build_manifest(exp, exp_f)));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
