#include "ordino/config.hpp"

#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ordino/error.hpp"
#include "ordino/rng.hpp"

namespace ordino {

using nlohmann::json;

namespace {

// Reads keys of one JSON object and rejects anything it was not asked for.
class Section {
 public:
  Section(const json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
    require(obj_.is_object(), ErrorCode::kConfig, "config section '" + name_ + "' must be an object");
  }

  bool has(const char* key) const { return obj_.contains(key); }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception& e) {
      fail(ErrorCode::kConfig, "config key '" + name_ + "." + key + "': " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items())
      require(seen_.count(k) != 0, ErrorCode::kConfig, "unknown config key '" + name_ + "." + k + "'");
  }

 private:
  const json& obj_;
  std::string name_;
  std::set<std::string> seen_;
};

WeightForm parse_weight_form(const std::string& s) {
  if (s == "linear") return WeightForm::kLinearNormalized;
  if (s == "absolute") return WeightForm::kAbsolute;
  if (s == "squared") return WeightForm::kSquared;
  fail(ErrorCode::kConfig, "loss.weight_form must be linear, absolute or squared (got '" + s + "')");
}

std::string weight_form_name(WeightForm f) {
  switch (f) {
    case WeightForm::kLinearNormalized:
      return "linear";
    case WeightForm::kAbsolute:
      return "absolute";
    case WeightForm::kSquared:
      return "squared";
  }
  return "linear";
}

I2TDenominator parse_denominator(const std::string& s) {
  if (s == "all_ranks") return I2TDenominator::kAllRanks;
  if (s == "batch") return I2TDenominator::kBatch;
  fail(ErrorCode::kConfig, "loss.i2t_denominator must be all_ranks or batch (got '" + s + "')");
}

void parse_task(const json& j, TaskConfig& t) {
  Section s(j, "task");
  s.get("template", t.template_text);
  s.get("label_names", t.label_names);
  s.get("n_max", t.n_max);
  s.finish();
}

void parse_data(const json& j, DataConfig& d) {
  Section s(j, "data");
  s.get("kind", d.kind);
  s.get("label_values", d.label_values);
  s.get("num_classes", d.num_classes);
  s.get("train_per_class", d.train_per_class);
  s.get("test_per_class", d.test_per_class);
  s.get("noise_sigma", d.noise_sigma);
  s.get("train_root", d.train_root);
  s.get("train_labels", d.train_labels);
  s.get("test_root", d.test_root);
  s.get("test_labels", d.test_labels);
  s.get("test_fraction", d.test_fraction);
  s.get("channels", d.channels);
  s.get("image_size", d.image_size);
  s.get("hflip", d.hflip);
  s.finish();
}

void parse_model(const json& j, ModelConfig& m) {
  Section s(j, "model");
  s.get("d_embed", m.d_embed);
  s.get("d_feat", m.d_feat);
  s.get("text_hidden", m.text_hidden);
  s.get("image_hidden", m.image_hidden);
  s.get("heads", m.heads);
  s.get("d_ff", m.d_ff);
  s.get("alpha", m.alpha);
  s.get("context_len", m.context_len);
  s.get("backbone_library", m.backbone_library);
  s.get("backbone_entry", m.backbone_entry);
  s.get("backbone_options", m.backbone_options);
  s.finish();
}

void parse_train(const json& j, TrainConfig& t) {
  Section s(j, "train");
  s.get("stage1_epochs", t.stage1_epochs);
  s.get("stage2_epochs", t.stage2_epochs);
  s.get("lr_rankformer", t.lr_rankformer);
  s.get("lr_visual", t.lr_visual);
  s.get("lr_context", t.lr_context);
  s.get("decay_epoch", t.decay_epoch);
  s.get("decay_factor", t.decay_factor);
  s.get("batch_size", t.batch_size);
  s.get("adam_beta1", t.adam_beta1);
  s.get("adam_beta2", t.adam_beta2);
  s.get("adam_eps", t.adam_eps);
  s.get("prefetch", t.prefetch);
  if (const json* a = s.child("ablation")) {
    Section ab(*a, "train.ablation");
    ab.get("use_rankformer", t.ablation.use_rankformer);
    ab.get("use_cop", t.ablation.use_cop);
    ab.get("use_scop", t.ablation.use_scop);
    ab.get("baseline_coop_mode", t.ablation.baseline_coop_mode);
    ab.finish();
  }
  s.finish();
}

void parse_loss(const json& j, LossConfig& l) {
  Section s(j, "loss");
  s.get("lambda", l.lambda);
  s.get("gamma", l.gamma);
  s.get("tau", l.tau);
  s.get("eps_log", l.eps_log);
  std::string form = weight_form_name(l.weight_form);
  s.get("weight_form", form);
  l.weight_form = parse_weight_form(form);
  std::string denom = l.i2t_denominator == I2TDenominator::kAllRanks ? "all_ranks" : "batch";
  s.get("i2t_denominator", denom);
  l.i2t_denominator = parse_denominator(denom);
  std::vector<double> w1{l.stage1.t2i, l.stage1.i2t, l.stage1.cop};
  s.get("stage1_weights", w1);
  require(w1.size() == 3, ErrorCode::kConfig, "loss.stage1_weights must be [t2i, i2t, cop]");
  l.stage1 = {w1[0], w1[1], w1[2]};
  std::vector<double> w2{l.stage2.ce, l.stage2.scop};
  s.get("stage2_weights", w2);
  require(w2.size() == 2, ErrorCode::kConfig, "loss.stage2_weights must be [ce, scop]");
  l.stage2 = {w2[0], w2[1]};
  s.finish();
}

void parse_eval(const json& j, EvalConfig& e) {
  Section s(j, "eval");
  s.get("los_windows", e.los_windows);
  s.finish();
}

json to_json_object(const RunConfig& c) {
  const auto& ab = c.train.ablation;
  return json{
      {"seed", c.seed},
      {"preset", c.preset},
      {"task", {{"template", c.task.template_text}, {"label_names", c.task.label_names}, {"n_max", c.task.n_max}}},
      {"data",
       {{"kind", c.data.kind},
        {"label_values", c.data.label_values},
        {"num_classes", c.data.num_classes},
        {"train_per_class", c.data.train_per_class},
        {"test_per_class", c.data.test_per_class},
        {"noise_sigma", c.data.noise_sigma},
        {"train_root", c.data.train_root},
        {"train_labels", c.data.train_labels},
        {"test_root", c.data.test_root},
        {"test_labels", c.data.test_labels},
        {"test_fraction", c.data.test_fraction},
        {"channels", c.data.channels},
        {"image_size", c.data.image_size},
        {"hflip", c.data.hflip}}},
      {"model",
       {{"d_embed", c.model.d_embed},
        {"d_feat", c.model.d_feat},
        {"text_hidden", c.model.text_hidden},
        {"image_hidden", c.model.image_hidden},
        {"heads", c.model.heads},
        {"d_ff", c.model.d_ff},
        {"alpha", c.model.alpha},
        {"context_len", c.model.context_len},
        {"backbone_library", c.model.backbone_library},
        {"backbone_entry", c.model.backbone_entry},
        {"backbone_options", c.model.backbone_options}}},
      {"train",
       {{"stage1_epochs", c.train.stage1_epochs},
        {"stage2_epochs", c.train.stage2_epochs},
        {"lr_rankformer", c.train.lr_rankformer},
        {"lr_visual", c.train.lr_visual},
        {"lr_context", c.train.lr_context},
        {"decay_epoch", c.train.decay_epoch},
        {"decay_factor", c.train.decay_factor},
        {"batch_size", c.train.batch_size},
        {"adam_beta1", c.train.adam_beta1},
        {"adam_beta2", c.train.adam_beta2},
        {"adam_eps", c.train.adam_eps},
        {"prefetch", c.train.prefetch},
        {"ablation",
         {{"use_rankformer", ab.use_rankformer},
          {"use_cop", ab.use_cop},
          {"use_scop", ab.use_scop},
          {"baseline_coop_mode", ab.baseline_coop_mode}}}}},
      {"loss",
       {{"lambda", c.loss.lambda},
        {"gamma", c.loss.gamma},
        {"tau", c.loss.tau},
        {"eps_log", c.loss.eps_log},
        {"weight_form", weight_form_name(c.loss.weight_form)},
        {"i2t_denominator", c.loss.i2t_denominator == I2TDenominator::kAllRanks ? "all_ranks" : "batch"},
        {"stage1_weights", {c.loss.stage1.t2i, c.loss.stage1.i2t, c.loss.stage1.cop}},
        {"stage2_weights", {c.loss.stage2.ce, c.loss.stage2.scop}}}},
      {"eval", {{"los_windows", c.eval.los_windows}}},
  };
}

}  // namespace

void apply_preset(RunConfig& cfg, std::string_view preset) {
  if (preset == "morph") {
    cfg.loss.stage1 = {0.03, 0.03, 3.0};
  } else if (preset == "default") {
    cfg.loss.stage1 = {0.1, 0.1, 3.0};
  } else {
    fail(ErrorCode::kConfig, "unknown preset '" + std::string(preset) + "' (expected morph or default)");
  }
  cfg.loss.stage2 = {1.0, 1.0};
  cfg.preset = std::string(preset);
}

void RunConfig::validate() const {
  loss.validate();
  require(data.kind == "synthetic" || data.kind == "folder", ErrorCode::kConfig,
          "data.kind must be synthetic or folder");
  require(train.batch_size >= 1, ErrorCode::kConfig, "train.batch_size must be positive");
  require(train.lr_rankformer > 0 && train.lr_visual > 0 && train.lr_context >= 0, ErrorCode::kConfig,
          "learning rates must be positive");
  require(train.decay_epoch <= train.stage2_epochs, ErrorCode::kConfig,
          "train.decay_epoch must not exceed train.stage2_epochs");
  require(train.decay_factor > 0, ErrorCode::kConfig, "train.decay_factor must be positive");
  require(model.alpha >= 0.0 && model.alpha <= 1.0, ErrorCode::kConfig, "model.alpha must lie in [0, 1]");
  require(model.heads >= 1 && model.d_embed % model.heads == 0, ErrorCode::kConfig,
          "model.d_embed must be divisible by model.heads");
  require(model.d_embed > 0 && model.d_feat > 0 && model.text_hidden > 0 && model.image_hidden > 0,
          ErrorCode::kConfig, "model dimensions must be positive");
  if (data.kind == "synthetic") {
    require(data.num_classes >= 2, ErrorCode::kConfig, "data.num_classes must be at least 2");
    require(data.train_per_class >= 1 && data.test_per_class >= 1, ErrorCode::kConfig,
            "synthetic data needs train and test samples per class");
    require(data.label_values.empty() || data.label_values.size() == data.num_classes, ErrorCode::kConfig,
            "data.label_values must have num_classes entries");
  } else {
    require(!data.train_root.empty() && !data.train_labels.empty(), ErrorCode::kConfig,
            "folder data needs train_root and train_labels");
    require(data.label_values.size() >= 2, ErrorCode::kConfig, "folder data needs label_values");
  }
  for (std::size_t k : eval.los_windows) require(k >= 2, ErrorCode::kConfig, "eval.los_windows entries must be >= 2");
}

RunConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  Section top(j, "config");
  top.get("seed", cfg.seed);
  std::string preset = cfg.preset;
  top.get("preset", preset);
  apply_preset(cfg, preset);
  if (const json* t = top.child("task")) parse_task(*t, cfg.task);
  if (const json* d = top.child("data")) parse_data(*d, cfg.data);
  if (const json* m = top.child("model")) parse_model(*m, cfg.model);
  if (const json* t = top.child("train")) parse_train(*t, cfg.train);
  if (const json* l = top.child("loss")) parse_loss(*l, cfg.loss);
  if (const json* e = top.child("eval")) parse_eval(*e, cfg.eval);
  top.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const RunConfig& cfg, int indent) { return to_json_object(cfg).dump(indent); }

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(cfg, -1))));
  return buf;
}

bool deterministic_mode_forced() {
  const char* v = std::getenv("ORDINO_DETERMINISTIC");
  return v != nullptr && std::string_view(v) == "1";
}

}  // namespace ordino
