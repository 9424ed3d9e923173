#include "ordino/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "ordino/error.hpp"
#include "ordino/losses.hpp"
#include "ordino/rng.hpp"

namespace ordino {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Model

ag::Matrix toy_embedding_table(std::size_t vocab, std::size_t d_embed, std::uint64_t seed) {
  auto rng = make_rng(seed, "toy-embedding");
  std::normal_distribution<double> normal(0.0, 1.0);
  ag::Matrix t(vocab, d_embed);
  for (double& x : t.data) x = normal(rng);
  return t;
}

std::vector<std::string> label_names_for(const RunConfig& cfg, const std::vector<double>& label_values) {
  if (!cfg.task.label_names.empty()) {
    require(cfg.task.label_names.size() == label_values.size(), ErrorCode::kConfig,
            "task.label_names must have one entry per class");
    return cfg.task.label_names;
  }
  std::vector<std::string> names;
  for (double v : label_values) {
    std::ostringstream os;
    os << v;
    names.push_back(os.str());
  }
  return names;
}

namespace {

std::size_t toy_image_input(const RunConfig& cfg) {
  const std::size_t channels = cfg.data.kind == "synthetic" ? 1 : cfg.data.channels;
  return cfg.data.image_size * cfg.data.image_size * channels;
}

}  // namespace

Model::Model(const RunConfig& cfg, std::vector<double> label_values) : cfg_(cfg) {
  cfg_.validate();
  const auto& mc = cfg_.model;
  if (!mc.backbone_library.empty()) {
    backbone_ = Backbone::load({mc.backbone_library, mc.backbone_entry, mc.backbone_options});
    tokenizer_ = backbone_->tokenizer();
    text_ = backbone_->text_encoder();
    image_ = std::const_pointer_cast<ImageEncoder>(backbone_->image_encoder());
    table_ = backbone_->embedding_table();
  } else {
    tokenizer_ = std::make_shared<ToyTokenizer>();
    table_ = toy_embedding_table(tokenizer_->vocab_size(), mc.d_embed, cfg_.seed);
    text_ = std::make_shared<ToyTextEncoder>(mc.d_embed, mc.text_hidden, mc.d_feat, cfg_.seed);
    image_ = std::make_shared<ToyImageEncoder>(toy_image_input(cfg_), mc.image_hidden, mc.d_feat, cfg_.seed);
  }
  const std::size_t d = table_.cols;

  TaskDescriptor task;
  task.template_text = cfg_.task.template_text;
  task.label_names = label_names_for(cfg_, label_values);
  task.rank_values = std::move(label_values);
  task.n_max = cfg_.task.n_max;
  templates_ = build_templates(task, *tokenizer_);
  assembler_ = std::make_unique<PromptAssembler>(templates_, table_);

  auto ctx_rng = make_rng(cfg_.seed, "context-prompts");
  context_ = ag::Var::parameter(init_context_prompts(mc.context_len, d, ctx_rng).values);
  if (mc.context_len == 0) context_.mutable_value().cols = d;

  RankFormerConfig rc;
  rc.d_embed = d;
  rc.heads = mc.heads;
  rc.d_ff = mc.d_ff;
  rc.alpha = mc.alpha;
  auto rf_rng = make_rng(cfg_.seed, "rankformer");
  rankformer_ = init_rankformer(rc, rf_rng);

  for (std::size_t k = 0; k < templates_.span_len; ++k)
    rank_delta_.push_back(ag::Var::parameter(ag::Matrix(templates_.num_ranks(), d)));
}

ag::Var Model::text_features() const {
  std::vector<ag::Var> positions;
  for (auto& p : assembler_->rank_tokens().positions()) positions.push_back(ag::Var::constant(std::move(p)));
  std::vector<ag::Var> refined;
  if (cfg_.rankformer_enabled()) {
    refined = refine(positions, rankformer_);
  } else if (cfg_.rank_tokens_trainable()) {
    for (std::size_t k = 0; k < positions.size(); ++k) refined.push_back(ag::add(positions[k], rank_delta_[k]));
  } else {
    refined = positions;
  }
  return encode_text(assembler_->assemble(context_, refined), *text_);
}

ag::Var Model::image_features(const ag::Matrix& images) const { return encode_image(images, *image_); }

std::vector<ag::NamedParam> Model::rankformer_params() { return rankformer_.parameters(); }

std::vector<ag::NamedParam> Model::context_params() { return {{"context", &context_}}; }

std::vector<ag::NamedParam> Model::rank_delta_params() {
  std::vector<ag::NamedParam> out;
  for (std::size_t k = 0; k < rank_delta_.size(); ++k)
    out.push_back({"rank_delta." + std::to_string(k), &rank_delta_[k]});
  return out;
}

std::vector<ag::NamedParam> Model::image_params() { return image_->parameters(); }

std::vector<ag::NamedParam> Model::text_encoder_params() {
  return std::const_pointer_cast<TextEncoder>(text_)->parameters();
}

std::vector<ag::NamedParam> Model::all_params() {
  std::vector<ag::NamedParam> out;
  for (auto group : {rankformer_params(), context_params(), rank_delta_params(), image_params(),
                     text_encoder_params()})
    out.insert(out.end(), group.begin(), group.end());
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

Checkpoint snapshot(Model& model, const std::string& rng_state) {
  Checkpoint c;
  c.stage = model.stage();
  c.config = model.config();
  c.config_hash = config_hash(c.config);
  c.label_values = model.templates().rank_labels;
  c.rng_state = rng_state;
  for (const auto& p : model.all_params()) c.tensors.emplace_back(p.name, p.var->value());
  c.rank_features = model.rank_features().empty() ? model.text_features().value() : model.rank_features();
  return c;
}

std::unique_ptr<Model> restore(const Checkpoint& ckpt) {
  auto model = std::make_unique<Model>(ckpt.config, ckpt.label_values);
  auto params = model->all_params();
  for (const auto& [name, value] : ckpt.tensors) {
    auto it = std::find_if(params.begin(), params.end(), [&](const ag::NamedParam& p) { return p.name == name; });
    require(it != params.end(), ErrorCode::kParse, "checkpoint tensor '" + name + "' has no matching parameter");
    require(it->var->value().same_shape(value), ErrorCode::kShapeMismatch,
            "checkpoint tensor '" + name + "' has the wrong shape");
    it->var->mutable_value() = value;
  }
  require(ckpt.tensors.size() == params.size(), ErrorCode::kParse, "checkpoint is missing parameter tensors");
  model->set_rank_features(ckpt.rank_features);
  model->set_stage(ckpt.stage);
  return model;
}

namespace {

constexpr char kMagic[8] = {'O', 'R', 'D', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  void u64(std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os_.write(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void matrix(const ag::Matrix& m) {
    u64(m.rows);
    u64(m.cols);
    for (double x : m.data) f64(x);
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  std::uint64_t u64() {
    unsigned char b[8];
    is_.read(reinterpret_cast<char*>(b), 8);
    require(static_cast<bool>(is_), ErrorCode::kParse, "checkpoint is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint64_t n = u64();
    require(n < (1ULL << 32), ErrorCode::kParse, "checkpoint string length is implausible");
    std::string s(n, '\0');
    is_.read(s.data(), static_cast<std::streamsize>(n));
    require(static_cast<bool>(is_), ErrorCode::kParse, "checkpoint is truncated");
    return s;
  }
  ag::Matrix matrix() {
    const std::uint64_t r = u64(), c = u64();
    require(r < (1ULL << 28) && c < (1ULL << 28) && r * c < (1ULL << 30), ErrorCode::kParse,
            "checkpoint tensor shape is implausible");
    ag::Matrix m(r, c);
    for (double& x : m.data) x = f64();
    return m;
  }

 private:
  std::istream& is_;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(os), ErrorCode::kIo, "cannot write checkpoint " + tmp.string());
    os.write(kMagic, sizeof kMagic);
    Writer w(os);
    w.u64(Checkpoint::kVersion);
    w.u64(static_cast<std::uint64_t>(ckpt.stage));
    w.str(to_json(ckpt.config, -1));
    w.str(ckpt.config_hash);
    w.u64(ckpt.label_values.size());
    for (double v : ckpt.label_values) w.f64(v);
    w.str(ckpt.rng_state);
    w.u64(ckpt.tensors.size());
    for (const auto& [name, m] : ckpt.tensors) {
      w.str(name);
      w.matrix(m);
    }
    w.matrix(ckpt.rank_features);
    os.flush();
    require(static_cast<bool>(os), ErrorCode::kIo, "failed writing checkpoint " + tmp.string());
  }
  fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot read checkpoint " + path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  require(static_cast<bool>(is) && std::memcmp(magic, kMagic, sizeof kMagic) == 0, ErrorCode::kParse,
          path.string() + " is not a checkpoint");
  Reader r(is);
  const std::uint64_t version = r.u64();
  require(version == Checkpoint::kVersion, ErrorCode::kParse,
          "unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.stage = static_cast<int>(r.u64());
  c.config = parse_config(r.str());
  c.config_hash = r.str();
  require(c.config_hash == config_hash(c.config), ErrorCode::kParse, "checkpoint config hash does not match");
  const std::uint64_t m = r.u64();
  require(m < (1ULL << 24), ErrorCode::kParse, "checkpoint label count is implausible");
  for (std::uint64_t i = 0; i < m; ++i) c.label_values.push_back(r.f64());
  c.rng_state = r.str();
  const std::uint64_t n = r.u64();
  require(n < (1ULL << 16), ErrorCode::kParse, "checkpoint tensor count is implausible");
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string name = r.str();
    c.tensors.emplace_back(std::move(name), r.matrix());
  }
  c.rank_features = r.matrix();
  return c;
}

// ---------------------------------------------------------------------------
// Training

std::string to_json_line(const StepRecord& rec) {
  json j;
  j["stage"] = rec.stage;
  j["epoch"] = rec.epoch;
  j["step"] = rec.step;
  j["lr"] = rec.lr;
  json terms = json::object();
  for (const auto& [k, v] : rec.terms) terms[k] = v;
  j["terms"] = terms;
  j["total"] = rec.total;
  return j.dump();
}

namespace {

class Adam {
 public:
  Adam(const TrainConfig& tc) : beta1_(tc.adam_beta1), beta2_(tc.adam_beta2), eps_(tc.adam_eps) {}

  void add_group(std::string name, std::vector<ag::NamedParam> params, double lr) {
    Group g{std::move(name), lr, {}};
    for (const auto& p : params) {
      require(p.var->requires_grad(), ErrorCode::kInternal, "parameter " + p.name + " is not trainable");
      g.slots.push_back({p.var, ag::Matrix(p.var->rows(), p.var->cols()), ag::Matrix(p.var->rows(), p.var->cols())});
    }
    groups_.push_back(std::move(g));
  }

  void set_lr_scale(double s) { scale_ = s; }

  std::map<std::string, double> lrs() const {
    std::map<std::string, double> out;
    for (const auto& g : groups_) out[g.name] = g.lr * scale_;
    return out;
  }

  void zero_grad() {
    for (auto& g : groups_)
      for (auto& s : g.slots) s.var->zero_grad();
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& g : groups_) {
      const double lr = g.lr * scale_;
      for (auto& s : g.slots) {
        const ag::Matrix& grad = s.var->grad();
        if (grad.empty()) continue;
        ag::Matrix& w = s.var->mutable_value();
        for (std::size_t i = 0; i < w.size(); ++i) {
          const double gi = grad.data[i];
          s.m.data[i] = beta1_ * s.m.data[i] + (1.0 - beta1_) * gi;
          s.v.data[i] = beta2_ * s.v.data[i] + (1.0 - beta2_) * gi * gi;
          w.data[i] -= lr * (s.m.data[i] / c1) / (std::sqrt(s.v.data[i] / c2) + eps_);
        }
      }
    }
  }

 private:
  struct Slot {
    ag::Var* var;
    ag::Matrix m, v;
  };
  struct Group {
    std::string name;
    double lr;
    std::vector<Slot> slots;
  };
  double beta1_, beta2_, eps_;
  double scale_ = 1.0;
  std::size_t t_ = 0;
  std::vector<Group> groups_;
};

struct Batch {
  ag::Matrix images;
  std::vector<int> labels;
};

struct BatchPlan {
  std::vector<std::size_t> indices;
  std::vector<bool> flips;
};

Batch materialize(const Dataset& data, const BatchPlan& plan) {
  Batch b;
  b.images = ag::Matrix(plan.indices.size(), data.pixels_per_image());
  for (std::size_t i = 0; i < plan.indices.size(); ++i) {
    const OrdinalSample& s = data.samples[plan.indices[i]];
    Image img = sample_pixels(data, s);
    if (plan.flips[i]) flip_horizontal(img);
    require(img.size() == b.images.cols, ErrorCode::kShapeMismatch, "image has unexpected geometry");
    std::copy(img.pixels.begin(), img.pixels.end(), b.images.row(i).begin());
    b.labels.push_back(s.rank_index);
  }
  return b;
}

// Materializes planned batches in order, optionally on a producer thread with
// a bounded queue. The plan fixes order and flips, so both paths agree.
class BatchSource {
 public:
  BatchSource(const Dataset& data, std::vector<BatchPlan> plans, bool threaded)
      : data_(data), plans_(std::move(plans)) {
    if (threaded) worker_ = std::thread([this] { produce(); });
  }

  ~BatchSource() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
  }

  std::optional<Batch> next() {
    if (!worker_.joinable()) {
      if (cursor_ >= plans_.size()) return std::nullopt;
      return materialize(data_, plans_[cursor_++]);
    }
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [this] { return !queue_.empty() || done_; });
    if (error_) std::rethrow_exception(error_);
    if (queue_.empty()) return std::nullopt;
    Batch b = std::move(queue_.front());
    queue_.pop_front();
    cv_.notify_all();
    return b;
  }

 private:
  static constexpr std::size_t kCapacity = 4;

  void produce() {
    try {
      for (const auto& plan : plans_) {
        Batch b = materialize(data_, plan);
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [this] { return queue_.size() < kCapacity || stop_; });
        if (stop_) return;
        queue_.push_back(std::move(b));
        cv_.notify_all();
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      error_ = std::current_exception();
    }
    std::lock_guard<std::mutex> lock(mu_);
    done_ = true;
    cv_.notify_all();
  }

  const Dataset& data_;
  std::vector<BatchPlan> plans_;
  std::size_t cursor_ = 0;
  std::thread worker_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Batch> queue_;
  bool done_ = false;
  bool stop_ = false;
  std::exception_ptr error_;
};

std::vector<BatchPlan> plan_epoch(const Dataset& data, std::size_t batch_size, std::mt19937_64& rng) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution coin(0.5);
  std::vector<BatchPlan> plans;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    BatchPlan p;
    const std::size_t end = std::min(order.size(), start + batch_size);
    for (std::size_t i = start; i < end; ++i) {
      p.indices.push_back(order[i]);
      p.flips.push_back(data.hflip && coin(rng));
    }
    plans.push_back(std::move(p));
  }
  return plans;
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

bool prefetch_enabled(const RunConfig& cfg) { return cfg.train.prefetch && !deterministic_mode_forced(); }

template <class StepFn>
TrainResult run_stage(Model& model, const Dataset& train, int stage, std::size_t epochs, Adam& adam,
                      const StepObserver& observer, StepFn&& step_fn) {
  const RunConfig& cfg = model.config();
  require(train.size() > 0, ErrorCode::kInvalidArgument, "training set is empty");
  require(train.num_classes() == model.num_ranks(), ErrorCode::kShapeMismatch,
          "training set class count differs from the model's rank count");
  auto rng = make_rng(cfg.seed, stage == 1 ? "train-stage1" : "train-stage2");
  TrainResult result;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    if (stage == 2 && cfg.train.decay_epoch > 0 && epoch >= cfg.train.decay_epoch)
      adam.set_lr_scale(cfg.train.decay_factor);
    BatchSource source(train, plan_epoch(train, cfg.train.batch_size, rng), prefetch_enabled(cfg));
    double loss_sum = 0.0;
    std::size_t batches = 0;
    while (auto batch = source.next()) {
      StageLoss loss = step_fn(*batch);
      const double total = loss.total.item();
      if (!std::isfinite(total))
        fail(ErrorCode::kDivergence, "stage " + std::to_string(stage) + " diverged at step " + std::to_string(step) +
                                         " (epoch " + std::to_string(epoch) + "): non-finite loss");
      adam.zero_grad();
      loss.total.backward();
      adam.step();
      if (observer) observer(StepRecord{stage, epoch, step, adam.lrs(), loss.terms, total});
      loss_sum += total;
      ++batches;
      ++step;
    }
    result.epoch_mean_loss.push_back(loss_sum / static_cast<double>(std::max<std::size_t>(batches, 1)));
  }
  model.set_stage(stage);
  result.checkpoint = snapshot(model, rng_state(rng));
  return result;
}

}  // namespace

TrainResult train_stage1(Model& model, const Dataset& train, const StepObserver& observer) {
  const RunConfig& cfg = model.config();
  Adam adam(cfg.train);
  if (cfg.rankformer_enabled()) adam.add_group("rankformer", model.rankformer_params(), cfg.train.lr_rankformer);
  if (cfg.rank_tokens_trainable()) adam.add_group("rank_tokens", model.rank_delta_params(), cfg.train.lr_rankformer);
  if (model.config().model.context_len > 0) adam.add_group("context", model.context_params(), cfg.train.context_lr());
  if (model.image_encoder().trainable()) adam.add_group("visual", model.image_params(), cfg.train.lr_visual);
  model.set_rank_features({});
  const StageToggles toggles{cfg.cop_enabled(), false};
  return run_stage(model, train, 1, cfg.train.stage1_epochs, adam, observer, [&](const Batch& b) {
    EncodedBatch eb{model.image_features(b.images), model.text_features(), b.labels};
    return stage_loss(1, eb, cfg.loss, toggles);
  });
}

TrainResult train_stage2(Model& model, const Dataset& train, const StepObserver& observer) {
  const RunConfig& cfg = model.config();
  Adam adam(cfg.train);
  if (model.image_encoder().trainable()) adam.add_group("visual", model.image_params(), cfg.train.lr_visual);
  if (model.rank_features().empty()) model.set_rank_features(model.text_features().value());
  const ag::Var r = ag::Var::constant(model.rank_features());
  const StageToggles toggles{false, cfg.scop_enabled()};
  return run_stage(model, train, 2, cfg.train.stage2_epochs, adam, observer, [&](const Batch& b) {
    EncodedBatch eb{model.image_features(b.images), r, b.labels};
    return stage_loss(2, eb, cfg.loss, toggles);
  });
}

// ---------------------------------------------------------------------------
// Evaluation

std::string Report::to_json(int indent) const {
  json j;
  j["mae"] = mae;
  j["accuracy"] = accuracy;
  j["os"] = os;
  json l = json::object();
  for (const auto& [k, v] : los) l[std::to_string(k)] = v;
  j["los"] = l;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  return j.dump(indent);
}

Report evaluate(const Model& model, const Dataset& test) {
  require(test.size() > 0, ErrorCode::kInvalidArgument, "evaluation set is empty");
  require(test.num_classes() == model.num_ranks(), ErrorCode::kShapeMismatch,
          "evaluation set class count differs from the model's rank count");
  const ag::Matrix r = model.rank_features().empty() ? model.text_features().value() : model.rank_features();
  constexpr std::size_t kChunk = 256;
  std::vector<int> preds, labels;
  for (std::size_t start = 0; start < test.size(); start += kChunk) {
    BatchPlan plan;
    for (std::size_t i = start; i < std::min(test.size(), start + kChunk); ++i) {
      plan.indices.push_back(i);
      plan.flips.push_back(false);
    }
    const Batch b = materialize(test, plan);
    const auto p = predict_rank(model.image_features(b.images).value(), r);
    preds.insert(preds.end(), p.begin(), p.end());
    labels.insert(labels.end(), b.labels.begin(), b.labels.end());
  }
  Report rep;
  const MaeAccuracy ma = mae_accuracy(preds, labels, test.label_values);
  rep.mae = ma.mae;
  rep.accuracy = ma.accuracy;
  rep.similarity = similarity_matrix(r);
  rep.os = ordinality_score(rep.similarity);
  for (std::size_t k : model.config().eval.los_windows)
    if (k <= rep.similarity.size) rep.los.emplace_back(k, local_ordinality_score(rep.similarity, k));
  rep.config_hash = config_hash(model.config());
  rep.seed = model.config().seed;
  return rep;
}

// ---------------------------------------------------------------------------
// Experiments

ExperimentData load_experiment_data(const RunConfig& cfg) {
  cfg.validate();
  const DataConfig& dc = cfg.data;
  if (dc.kind == "synthetic") {
    DatasetSpec spec;
    spec.num_classes = dc.num_classes;
    spec.label_values = dc.label_values;
    spec.counts.assign(dc.num_classes, dc.train_per_class + dc.test_per_class);
    const double n = static_cast<double>(dc.train_per_class + dc.test_per_class);
    spec.split = {static_cast<double>(dc.train_per_class) / n, 0.0, static_cast<double>(dc.test_per_class) / n};
    spec.seed = cfg.seed;
    spec.image_size = dc.image_size;
    const Dataset all = generate_synthetic(spec, dc.noise_sigma, cfg.seed);
    DatasetSplits s = split_dataset(all, spec.split, cfg.seed);
    s.train.hflip = dc.hflip;
    return {std::move(s.train), std::move(s.test)};
  }
  Dataset train = load_image_folder(dc.train_root, dc.train_labels, dc.label_values, dc.image_size, dc.channels);
  if (!dc.test_labels.empty()) {
    Dataset test = load_image_folder(dc.test_root.empty() ? dc.train_root : dc.test_root, dc.test_labels,
                                     dc.label_values, dc.image_size, dc.channels);
    test.hflip = false;
    train.hflip = dc.hflip;
    return {std::move(train), std::move(test)};
  }
  DatasetSplits s = split_dataset(train, {1.0 - dc.test_fraction, 0.0, dc.test_fraction}, cfg.seed);
  s.train.hflip = dc.hflip;
  return {std::move(s.train), std::move(s.test)};
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    require(static_cast<bool>(os), ErrorCode::kIo, "cannot write " + tmp.string());
    os << text;
    require(static_cast<bool>(os), ErrorCode::kIo, "failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

ExperimentOutputs run_experiment(const RunConfig& cfg, const ExperimentData& data, const fs::path& out_dir,
                                 const StepObserver& observer) {
  Model model(cfg, data.train.label_values);
  std::ofstream log;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    log.open(out_dir / "train_log.jsonl", std::ios::trunc);
    require(static_cast<bool>(log), ErrorCode::kIo, "cannot write " + (out_dir / "train_log.jsonl").string());
  }
  const StepObserver both = [&](const StepRecord& rec) {
    if (log.is_open()) log << to_json_line(rec) << "\n";
    if (observer) observer(rec);
  };
  ExperimentOutputs out;
  out.initial = evaluate(model, data.test);
  out.stage1 = train_stage1(model, data.train, both).checkpoint;
  out.stage2 = train_stage2(model, data.train, both).checkpoint;
  out.report = evaluate(model, data.test);
  if (!out_dir.empty()) {
    log.close();
    save_checkpoint(out.stage1, out_dir / "stage1.ckpt");
    save_checkpoint(out.stage2, out_dir / "stage2.ckpt");
    write_text(out_dir / "report.json", out.report.to_json(2) + "\n");
    write_text(out_dir / "initial_report.json", out.initial.to_json(2) + "\n");
    save_similarity_csv(out.report.similarity, (out_dir / "similarity.csv").string());
  }
  return out;
}

SweepKind parse_sweep_kind(const std::string& s) {
  if (s == "few_shot") return SweepKind::kFewShot;
  if (s == "shift") return SweepKind::kShift;
  if (s == "ablation") return SweepKind::kAblation;
  fail(ErrorCode::kInvalidArgument, "sweep kind must be few_shot, shift or ablation (got '" + s + "')");
}

std::vector<std::string> default_sweep_grid(SweepKind kind) {
  switch (kind) {
    case SweepKind::kFewShot:
      return {"1", "2", "4", "8", "16", "32", "64"};
    case SweepKind::kShift:
      return {"10-80", "10-90", "20-80", "20-90", "30-80", "30-90", "40-80", "40-90"};
    case SweepKind::kAblation:
      return {"000", "100", "010", "001", "011", "110", "101", "111"};
  }
  return {};
}

namespace {

std::size_t parse_count(const std::string& s, const std::string& cell) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  require(pos == s.size() && !s.empty(), ErrorCode::kInvalidArgument, "bad sweep cell '" + cell + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<SweepRow> sweep(SweepKind kind, const std::vector<std::string>& grid_in, const RunConfig& base,
                            std::size_t seeds) {
  require(seeds >= 1, ErrorCode::kInvalidArgument, "sweep needs at least one seed");
  const std::vector<std::string> grid = grid_in.empty() ? default_sweep_grid(kind) : grid_in;
  std::vector<SweepRow> rows;
  for (const std::string& cell : grid) {
    for (std::size_t s = 0; s < seeds; ++s) {
      RunConfig cfg = base;
      cfg.seed = base.seed + s;
      if (kind == SweepKind::kAblation) {
        require(cell.size() == 3 && cell.find_first_not_of("01") == std::string::npos, ErrorCode::kInvalidArgument,
                "ablation cell must be three 0/1 digits (rankformer, cop, scop), got '" + cell + "'");
        auto& ab = cfg.train.ablation;
        ab.use_rankformer = cell[0] == '1';
        ab.use_cop = cell[1] == '1';
        ab.use_scop = cell[2] == '1';
        ab.baseline_coop_mode = cell == "000";
      }
      cfg.validate();
      ExperimentData data = load_experiment_data(cfg);
      if (kind == SweepKind::kFewShot) {
        data.train = few_shot_subsample(data.train, parse_count(cell, cell), cfg.seed);
      } else if (kind == SweepKind::kShift) {
        const auto dash = cell.find('-');
        require(dash != std::string::npos, ErrorCode::kInvalidArgument,
                "shift cell must be re_cls-re_smp, got '" + cell + "'");
        const std::size_t re_cls = parse_count(cell.substr(0, dash), cell);
        const std::size_t re_smp = parse_count(cell.substr(dash + 1), cell);
        data.train = distribution_shift_subsample(data.train, re_cls, static_cast<double>(re_smp), cfg.seed);
      }
      rows.push_back({cell, cfg.seed, run_experiment(cfg, data).report});
    }
  }
  return rows;
}

std::string sweep_csv(SweepKind kind, const std::vector<SweepRow>& rows) {
  const char* name = kind == SweepKind::kFewShot ? "few_shot" : kind == SweepKind::kShift ? "shift" : "ablation";
  std::ostringstream os;
  os << std::setprecision(9);
  os << "kind,cell,seed,mae,accuracy,os\n";
  for (const auto& r : rows)
    os << name << "," << r.cell << "," << r.seed << "," << r.report.mae << "," << r.report.accuracy << ","
       << r.report.os << "\n";
  return os.str();
}

}  // namespace ordino
