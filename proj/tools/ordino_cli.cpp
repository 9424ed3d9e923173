// Command-line front end over the C API.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ordino/ordino.h"

namespace {

struct Failure {
  int status;
};

void check(int status) {
  if (status != ORDINO_OK) throw Failure{status};
}

struct Options {
  std::string config;
  std::string out;
  std::string matrix;
  std::string checkpoint;
  std::string preset;
  std::string stage = "both";
  std::string kind;
  std::string grid;
  std::vector<std::size_t> windows;
  std::uint64_t seed = 0;
  std::size_t seeds = 1;
  std::size_t cell = 8;
};

class ConfigHandle {
 public:
  ConfigHandle() = default;
  ~ConfigHandle() { ordino_config_free(cfg_); }
  ConfigHandle(const ConfigHandle&) = delete;
  ConfigHandle& operator=(const ConfigHandle&) = delete;
  ordino_config** out() { return &cfg_; }
  ordino_config* get() const { return cfg_; }

 private:
  ordino_config* cfg_ = nullptr;
};

// Loads --config (or the defaults) and applies --seed / --preset overrides.
void load_config(const Options& o, const CLI::App& sub, ConfigHandle& cfg) {
  if (o.config.empty())
    check(ordino_config_default(cfg.out()));
  else
    check(ordino_config_load(o.config.c_str(), cfg.out()));
  if (sub.count("--seed") > 0) check(ordino_config_set_seed(cfg.get(), o.seed));
  if (!o.preset.empty()) check(ordino_config_set_preset(cfg.get(), o.preset.c_str()));
}

void print_report(ordino_report* rep) {
  char* json = nullptr;
  check(ordino_report_json(rep, &json));
  std::printf("%s\n", json);
  ordino_string_free(json);
}

int cmd_generate(const Options& o, const CLI::App& sub) {
  ConfigHandle cfg;
  load_config(o, sub, cfg);
  check(ordino_generate_data(cfg.get(), o.out.c_str()));
  std::printf("wrote %s/train and %s/test\n", o.out.c_str(), o.out.c_str());
  return 0;
}

int cmd_train(const Options& o, const CLI::App& sub) {
  ConfigHandle cfg;
  load_config(o, sub, cfg);
  int stage = ORDINO_STAGE_BOTH;
  if (o.stage == "1") stage = ORDINO_STAGE_1;
  if (o.stage == "2") stage = ORDINO_STAGE_2;
  ordino_checkpoint* init = nullptr;
  if (!o.checkpoint.empty()) check(ordino_checkpoint_load(o.checkpoint.c_str(), &init));
  ordino_report* rep = nullptr;
  const int status = ordino_train(cfg.get(), o.out.c_str(), stage, init, &rep);
  ordino_checkpoint_free(init);
  check(status);
  print_report(rep);
  ordino_report_free(rep);
  return 0;
}

int cmd_eval(const Options& o, const CLI::App& sub) {
  ordino_checkpoint* ckpt = nullptr;
  check(ordino_checkpoint_load(o.checkpoint.c_str(), &ckpt));
  ConfigHandle data_cfg;
  int status = ORDINO_OK;
  if (!o.config.empty()) {
    try {
      load_config(o, sub, data_cfg);
    } catch (const Failure& f) {
      status = f.status;
    }
  }
  ordino_report* rep = nullptr;
  if (status == ORDINO_OK) status = ordino_evaluate(ckpt, data_cfg.get(), &rep);
  ordino_checkpoint_free(ckpt);
  check(status);
  if (!o.out.empty()) {
    std::filesystem::create_directories(o.out);
    const std::string json = (std::filesystem::path(o.out) / "report.json").string();
    const std::string csv = (std::filesystem::path(o.out) / "similarity.csv").string();
    status = ordino_report_write(rep, json.c_str(), csv.c_str());
  }
  if (status == ORDINO_OK) print_report(rep);
  ordino_report_free(rep);
  check(status);
  return 0;
}

int cmd_ordinality(const Options& o) {
  ordino_matrix* m = nullptr;
  if (!o.matrix.empty()) {
    check(ordino_matrix_load_csv(o.matrix.c_str(), &m));
  } else {
    ordino_checkpoint* ckpt = nullptr;
    check(ordino_checkpoint_load(o.checkpoint.c_str(), &ckpt));
    const int status = ordino_matrix_from_checkpoint(ckpt, &m);
    ordino_checkpoint_free(ckpt);
    check(status);
  }
  double os = 0.0;
  int status = ordino_ordinality_score(m, &os);
  if (status == ORDINO_OK) std::printf("OS=%.4f\n", os);
  for (std::size_t k : o.windows) {
    if (status != ORDINO_OK) break;
    double los = 0.0;
    status = ordino_local_ordinality_score(m, k, &los);
    if (status == ORDINO_OK) std::printf("LOS(%zu)=%.4f\n", k, los);
  }
  ordino_matrix_free(m);
  check(status);
  return 0;
}

int cmd_plot(const Options& o) {
  ordino_matrix* m = nullptr;
  check(ordino_matrix_load_csv(o.matrix.c_str(), &m));
  const int status = ordino_plot_heatmap(m, o.out.c_str(), o.cell);
  ordino_matrix_free(m);
  check(status);
  std::printf("wrote %s\n", o.out.c_str());
  return 0;
}

int cmd_sweep(const Options& o, const CLI::App& sub) {
  ConfigHandle cfg;
  load_config(o, sub, cfg);
  char* csv = nullptr;
  check(ordino_sweep(cfg.get(), o.kind.c_str(), o.grid.empty() ? nullptr : o.grid.c_str(), o.seeds,
                     o.out.empty() ? nullptr : o.out.c_str(), &csv));
  std::printf("%s", csv);
  ordino_string_free(csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ordinal classification with language-driven ordering alignment"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Options o;

  auto* gen = app.add_subcommand("generate-data", "Write the configured synthetic train/test sets to disk");
  gen->add_option("--config", o.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--seed", o.seed, "Override the configured seed");

  auto* train = app.add_subcommand("train", "Run two-stage training");
  train->add_option("--config", o.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "Output directory")->required();
  train->add_option("--seed", o.seed, "Override the configured seed");
  train->add_option("--stage", o.stage, "Stage to run")->check(CLI::IsMember({"1", "2", "both"}));
  train->add_option("--preset", o.preset, "Loss-weight preset")->check(CLI::IsMember({"morph", "default"}));
  train->add_option("--checkpoint", o.checkpoint, "Stage-1 checkpoint to continue from (--stage 2)")
      ->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--config", o.config, "Configuration whose test split is evaluated")->check(CLI::ExistingFile);
  eval->add_option("--seed", o.seed, "Override the data seed (with --config)");
  eval->add_option("--out", o.out, "Directory for report.json and similarity.csv");

  auto* ord = app.add_subcommand("ordinality", "Ordinality scores of a similarity matrix");
  auto* mat = ord->add_option("--matrix", o.matrix, "Similarity-matrix CSV")->check(CLI::ExistingFile);
  auto* ck = ord->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->check(CLI::ExistingFile);
  mat->excludes(ck);
  ord->add_option("--window", o.windows, "LOS window size (repeatable)");

  auto* plot = app.add_subcommand("plot", "Heatmap of a similarity-matrix CSV");
  plot->add_option("--matrix", o.matrix, "Similarity-matrix CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", o.out, "Output PPM image")->required();
  plot->add_option("--cell", o.cell, "Pixels per matrix entry");

  auto* sw = app.add_subcommand("sweep", "Run an experiment grid");
  sw->add_option("--config", o.config, "Base configuration (JSON)")->check(CLI::ExistingFile);
  sw->add_option("--kind", o.kind, "Sweep kind")->required()->check(CLI::IsMember({"few_shot", "shift", "ablation"}));
  sw->add_option("--grid", o.grid, "Comma-separated cells (default: standard axes)");
  sw->add_option("--seeds", o.seeds, "Seeds per cell");
  sw->add_option("--seed", o.seed, "Base seed");
  sw->add_option("--preset", o.preset, "Loss-weight preset")->check(CLI::IsMember({"morph", "default"}));
  sw->add_option("--out", o.out, "CSV output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(o, *gen);
    if (*train) return cmd_train(o, *train);
    if (*eval) return cmd_eval(o, *eval);
    if (*ord) {
      if (o.matrix.empty() && o.checkpoint.empty()) {
        std::fprintf(stderr, "error: ordinality needs --matrix or --checkpoint\n");
        return 2;
      }
      return cmd_ordinality(o);
    }
    if (*plot) return cmd_plot(o);
    if (*sw) return cmd_sweep(o, *sw);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s: %s\n", ordino_status_name(f.status), ordino_last_error());
    return 1;
  }
  return 0;
}
