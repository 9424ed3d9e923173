#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ordino/autograd.hpp"
#include "ordino/config.hpp"
#include "ordino/data.hpp"
#include "ordino/encoders.hpp"
#include "ordino/metrics.hpp"
#include "ordino/prompt_space.hpp"
#include "ordino/rankformer.hpp"

namespace ordino {

// Everything needed to produce rank features and image features: the prompt
// scaffold, the learnable language-side parameters and both encoders.
class Model {
 public:
  // Builds toy encoders, or loads the backbone plugin named in the config.
  // label_values fixes M and the template labels.
  Model(const RunConfig& cfg, std::vector<double> label_values);

  const RunConfig& config() const { return cfg_; }
  const RankTemplateSet& templates() const { return templates_; }
  std::size_t num_ranks() const { return templates_.num_ranks(); }
  const ImageEncoder& image_encoder() const { return *image_; }
  const TextEncoder& text_encoder() const { return *text_; }
  RankFormerParams& rankformer() { return rankformer_; }
  ag::Var& context() { return context_; }
  std::vector<ag::Var>& rank_delta() { return rank_delta_; }

  // Differentiable unit-norm rank features (M × d_feat) under the current
  // language-side parameters and ablation switches.
  ag::Var text_features() const;
  // Unit-norm image features (B × d_feat).
  ag::Var image_features(const ag::Matrix& images) const;

  // Parameter groups.
  std::vector<ag::NamedParam> rankformer_params();
  std::vector<ag::NamedParam> context_params();
  std::vector<ag::NamedParam> rank_delta_params();
  std::vector<ag::NamedParam> image_params();
  std::vector<ag::NamedParam> text_encoder_params();
  // Every persisted tensor: the groups above in that order.
  std::vector<ag::NamedParam> all_params();

  // Cached rank features; set by snapshot/restore and by stage-2 training.
  const ag::Matrix& rank_features() const { return rank_features_; }
  void set_rank_features(ag::Matrix r) { rank_features_ = std::move(r); }
  int stage() const { return stage_; }
  void set_stage(int s) { stage_ = s; }

 private:
  RunConfig cfg_;
  std::shared_ptr<Backbone> backbone_;
  std::shared_ptr<const Tokenizer> tokenizer_;
  std::shared_ptr<const TextEncoder> text_;
  std::shared_ptr<ImageEncoder> image_;
  ag::Matrix table_;
  RankTemplateSet templates_;
  std::unique_ptr<PromptAssembler> assembler_;
  ag::Var context_;
  RankFormerParams rankformer_;
  std::vector<ag::Var> rank_delta_;
  ag::Matrix rank_features_;
  int stage_ = 0;
};

// Toy word-embedding table for the toy tokenizer, N(0, 1) entries.
ag::Matrix toy_embedding_table(std::size_t vocab, std::size_t d_embed, std::uint64_t seed);

// Label names used in the templates: config names, or the formatted values.
std::vector<std::string> label_names_for(const RunConfig& cfg, const std::vector<double>& label_values);

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  int stage = 0;
  RunConfig config;
  std::string config_hash;
  std::vector<double> label_values;
  std::string rng_state;
  std::vector<std::pair<std::string, ag::Matrix>> tensors;
  ag::Matrix rank_features;
};

Checkpoint snapshot(Model& model, const std::string& rng_state = {});
std::unique_ptr<Model> restore(const Checkpoint& ckpt);

// Little-endian binary container, written to a temporary file then renamed.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct StepRecord {
  int stage = 0;
  std::size_t epoch = 0;  // 1-indexed within the stage
  std::size_t step = 0;   // 0-indexed within the stage
  std::map<std::string, double> lr;
  std::vector<std::pair<std::string, double>> terms;
  double total = 0.0;
};

std::string to_json_line(const StepRecord& rec);

using StepObserver = std::function<void(const StepRecord&)>;

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<double> epoch_mean_loss;
};

// Stage 1 updates the RankFormer, context prompts (and rank tokens when the
// RankFormer is ablated) and the trainable image-encoder parameters.
TrainResult train_stage1(Model& model, const Dataset& train, const StepObserver& observer = {});
// Stage 2 caches the rank features once and updates only the image encoder.
TrainResult train_stage2(Model& model, const Dataset& train, const StepObserver& observer = {});

struct Report {
  double mae = 0.0;
  double accuracy = 0.0;
  double os = 0.0;
  std::vector<std::pair<std::size_t, double>> los;
  std::string config_hash;
  std::uint64_t seed = 0;
  SimilarityMatrix similarity;

  std::string to_json(int indent = -1) const;
};

// Uses the cached rank features when present, else the current text side.
Report evaluate(const Model& model, const Dataset& test);

struct ExperimentData {
  Dataset train;
  Dataset test;
};

// Synthetic generation and split, or folder ingestion, as configured.
ExperimentData load_experiment_data(const RunConfig& cfg);

struct ExperimentOutputs {
  Checkpoint stage1;
  Checkpoint stage2;
  Report initial;
  Report report;
};

// Initial evaluation, both stages, final evaluation. Writes logs, checkpoints,
// report JSON and similarity CSV under out_dir when it is non-empty.
ExperimentOutputs run_experiment(const RunConfig& cfg, const ExperimentData& data,
                                 const std::filesystem::path& out_dir = {}, const StepObserver& observer = {});

enum class SweepKind { kFewShot, kShift, kAblation };

SweepKind parse_sweep_kind(const std::string& s);

struct SweepRow {
  std::string cell;
  std::uint64_t seed = 0;
  Report report;
};

// Grid cells: few_shot "k"; shift "re_cls-re_smp"; ablation three 0/1 digits
// for (rankformer, cop, scop). An empty grid selects the standard axes.
std::vector<std::string> default_sweep_grid(SweepKind kind);
std::vector<SweepRow> sweep(SweepKind kind, const std::vector<std::string>& grid, const RunConfig& base,
                            std::size_t seeds = 1);
std::string sweep_csv(SweepKind kind, const std::vector<SweepRow>& rows);

}  // namespace ordino
