#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ordino/losses.hpp"

namespace ordino {

struct TaskConfig {
  std::string template_text = "a bar of length {rank}";
  // Empty: derived from the data label values.
  std::vector<std::string> label_names;
  std::size_t n_max = 8;
};

struct DataConfig {
  std::string kind = "synthetic";  // "synthetic" | "folder"
  std::vector<double> label_values;
  // synthetic
  std::size_t num_classes = 10;
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 50;
  double noise_sigma = 2.0;
  // folder
  std::string train_root;
  std::string train_labels;
  std::string test_root;
  std::string test_labels;
  double test_fraction = 0.2;  // used when no test labels are given
  std::size_t channels = 3;
  // shared
  std::size_t image_size = 32;
  bool hflip = true;
};

struct ModelConfig {
  std::size_t d_embed = 32;
  std::size_t d_feat = 64;
  std::size_t text_hidden = 64;
  std::size_t image_hidden = 64;
  std::size_t heads = 8;
  std::size_t d_ff = 0;
  double alpha = 0.1;
  std::size_t context_len = 5;
  // Optional pretrained backbone plugin.
  std::string backbone_library;
  std::string backbone_entry = "ordino_backbone_create";
  std::string backbone_options;
};

struct AblationFlags {
  bool use_rankformer = true;
  bool use_cop = true;
  bool use_scop = true;
  // Context prompts + contrastive/CE only; overrides the three flags above.
  bool baseline_coop_mode = false;
};

struct TrainConfig {
  std::size_t stage1_epochs = 20;
  std::size_t stage2_epochs = 40;
  double lr_rankformer = 3.5e-4;
  double lr_visual = 1e-5;
  double lr_context = 0.0;  // 0 selects lr_rankformer
  std::size_t decay_epoch = 30;
  double decay_factor = 0.1;
  std::size_t batch_size = 64;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool prefetch = true;
  AblationFlags ablation;

  double context_lr() const { return lr_context > 0.0 ? lr_context : lr_rankformer; }
};

struct EvalConfig {
  std::vector<std::size_t> los_windows = {2, 4, 8, 16, 32};
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string preset = "default";
  TaskConfig task;
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  LossConfig loss;
  EvalConfig eval;

  void validate() const;
  // Effective ablation switches after baseline_coop_mode.
  bool rankformer_enabled() const { return train.ablation.use_rankformer && !train.ablation.baseline_coop_mode; }
  bool cop_enabled() const { return train.ablation.use_cop && !train.ablation.baseline_coop_mode; }
  bool scop_enabled() const { return train.ablation.use_scop && !train.ablation.baseline_coop_mode; }
  // Rank tokens are learned directly only when RankFormer is ablated outside CoOp mode.
  bool rank_tokens_trainable() const {
    return !train.ablation.use_rankformer && !train.ablation.baseline_coop_mode;
  }
};

// Stage-1 weights: "morph" → (0.03, 0.03, 3), "default" → (0.1, 0.1, 3);
// stage 2 is (1, 1) for both.
void apply_preset(RunConfig& cfg, std::string_view preset);

// JSON object with sections seed, preset, task, data, model, train, loss,
// eval. Unknown keys are rejected. An explicit "preset" is applied before the
// loss section, so explicit weights win.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& cfg, int indent = 2);
// FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

// True when ORDINO_DETERMINISTIC=1 is set in the environment.
bool deterministic_mode_forced();

}  // namespace ordino
