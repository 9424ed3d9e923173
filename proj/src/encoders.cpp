#include "ordino/encoders.hpp"

#include <dlfcn.h>

#include <cmath>
#include <random>

#include "ordino/backbone_adapter.h"
#include "ordino/error.hpp"
#include "ordino/rng.hpp"

namespace ordino {

namespace {

ag::Matrix gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  ag::Matrix m(rows, cols);
  for (double& x : m.data) x = normal(rng);
  return m;
}

}  // namespace

ToyTextEncoder::ToyTextEncoder(std::size_t d_embed, std::size_t hidden, std::size_t d_feat, std::uint64_t seed) {
  auto rng = make_rng(seed, "toy-text-encoder");
  w1_ = ag::Var::constant(gaussian(d_embed, hidden, 1.0 / std::sqrt(static_cast<double>(d_embed)), rng));
  b1_ = ag::Var::constant(gaussian(1, hidden, 0.1, rng));
  proj_ = ag::Var::constant(gaussian(hidden, d_feat, 1.0 / std::sqrt(static_cast<double>(hidden)), rng));
}

ag::Var ToyTextEncoder::encode(const ag::Var& sequence) const {
  require(sequence.cols() == d_embed(), ErrorCode::kShapeMismatch, "text encoder: sequence width != d_embed");
  require(sequence.rows() > 0, ErrorCode::kInvalidArgument, "text encoder: empty sequence");
  const ag::Var pooled = ag::mean_rows(sequence);
  return ag::matmul(ag::tanh(ag::add_row(ag::matmul(pooled, w1_), b1_)), proj_);
}

std::vector<ag::NamedParam> ToyTextEncoder::parameters() {
  return {{"text.w1", &w1_}, {"text.b1", &b1_}, {"text.proj", &proj_}};
}

ToyImageEncoder::ToyImageEncoder(std::size_t input_size, std::size_t hidden, std::size_t d_feat, std::uint64_t seed) {
  auto rng = make_rng(seed, "toy-image-encoder");
  w1_ = ag::Var::parameter(gaussian(input_size, hidden, 1.0 / std::sqrt(static_cast<double>(input_size)), rng));
  b1_ = ag::Var::parameter(gaussian(1, hidden, 0.1, rng));
  w2_ = ag::Var::parameter(gaussian(hidden, d_feat, 1.0 / std::sqrt(static_cast<double>(hidden)), rng));
  b2_ = ag::Var::parameter(gaussian(1, d_feat, 0.1, rng));
}

ag::Var ToyImageEncoder::encode(const ag::Matrix& images) const {
  require(images.cols == input_size(), ErrorCode::kShapeMismatch,
          "image encoder: expected " + std::to_string(input_size()) + " pixels per image, got " +
              std::to_string(images.cols));
  const ag::Var x = ag::Var::constant(images);
  const ag::Var h = ag::tanh(ag::add_row(ag::matmul(x, w1_), b1_));
  return ag::add_row(ag::matmul(h, w2_), b2_);
}

std::vector<ag::NamedParam> ToyImageEncoder::parameters() {
  return {{"image.w1", &w1_}, {"image.b1", &b1_}, {"image.w2", &w2_}, {"image.b2", &b2_}};
}

ag::Var encode_text(std::span<const ag::Var> prompts, const TextEncoder& encoder) {
  require(!prompts.empty(), ErrorCode::kInvalidArgument, "encode_text: no prompts");
  const std::size_t len = prompts.front().rows();
  std::vector<ag::Var> rows;
  rows.reserve(prompts.size());
  for (const auto& p : prompts) {
    require(p.rows() == len, ErrorCode::kShapeMismatch, "encode_text: prompt sequences differ in length");
    rows.push_back(encoder.encode(p));
  }
  ag::Var feats = ag::concat_rows(rows);
  require(feats.value().all_finite(), ErrorCode::kNonFinite, "encode_text: non-finite text feature");
  return ag::normalize_rows(feats, kNormEpsilon);
}

ag::Var encode_image(const ag::Matrix& images, const ImageEncoder& encoder) {
  ag::Var feats = encoder.encode(images);
  require(feats.value().all_finite(), ErrorCode::kNonFinite, "encode_image: non-finite image feature");
  return ag::normalize_rows(feats, kNormEpsilon);
}

std::vector<double> normalize(std::span<const double> x, double eps_norm) {
  double s = 0.0;
  for (double v : x) s += v * v;
  const double n = std::sqrt(s);
  if (!(n > eps_norm)) fail(ErrorCode::kZeroFeature, "cannot normalize a near-zero feature vector");
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v /= n;
  return out;
}

// ---------------------------------------------------------------------------
// Plugin-backed backbone

struct Backbone::Impl {
  void* handle = nullptr;
  ordino_backbone_v1 api{};

  ~Impl() {
    if (api.destroy) api.destroy(api.ctx);
    if (handle) dlclose(handle);
  }
};

namespace {

class PluginTokenizer final : public Tokenizer {
 public:
  explicit PluginTokenizer(std::shared_ptr<Backbone::Impl> impl) : impl_(std::move(impl)) {}

  std::vector<int> encode(std::string_view text) const override {
    const std::string s(text);
    std::vector<std::int32_t> ids(64);
    std::int32_t len = 0;
    for (;;) {
      if (impl_->api.tokenize(impl_->api.ctx, s.c_str(), ids.data(), static_cast<std::int32_t>(ids.size()), &len) != 0)
        fail(ErrorCode::kInvalidArgument, "backbone tokenizer rejected '" + s + "'");
      if (static_cast<std::size_t>(len) <= ids.size()) break;
      ids.resize(static_cast<std::size_t>(len));
    }
    return {ids.begin(), ids.begin() + len};
  }
  int pad_id() const override { return impl_->api.pad_id; }
  std::size_t vocab_size() const override { return static_cast<std::size_t>(impl_->api.vocab_size); }

 private:
  std::shared_ptr<Backbone::Impl> impl_;
};

class PluginTextEncoder final : public TextEncoder {
 public:
  explicit PluginTextEncoder(std::shared_ptr<Backbone::Impl> impl) : impl_(std::move(impl)) {}

  ag::Var encode(const ag::Var& sequence) const override {
    require(sequence.cols() == d_embed(), ErrorCode::kShapeMismatch, "backbone text encoder: width != d_embed");
    const auto len = static_cast<std::int32_t>(sequence.rows());
    ag::Matrix out(1, d_feat());
    if (impl_->api.encode_text(impl_->api.ctx, sequence.value().data.data(), len, out.data.data()) != 0)
      fail(ErrorCode::kInternal, "backbone encode_text failed");
    auto impl = impl_;
    auto seq_node = sequence.node();
    return ag::make_op(std::move(out), {sequence}, [impl, seq_node, len](ag::Node& self) {
      ag::Matrix grad(seq_node->value.rows, seq_node->value.cols);
      if (impl->api.encode_text_vjp(impl->api.ctx, seq_node->value.data.data(), len, self.grad.data.data(),
                                    grad.data.data()) != 0)
        fail(ErrorCode::kInternal, "backbone encode_text_vjp failed");
      ag::Matrix& g = seq_node->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += grad.data[i];
    });
  }
  std::size_t d_embed() const override { return static_cast<std::size_t>(impl_->api.d_embed); }
  std::size_t d_feat() const override { return static_cast<std::size_t>(impl_->api.d_feat); }

 private:
  std::shared_ptr<Backbone::Impl> impl_;
};

class PluginImageEncoder final : public ImageEncoder {
 public:
  explicit PluginImageEncoder(std::shared_ptr<Backbone::Impl> impl) : impl_(std::move(impl)) {}

  ag::Var encode(const ag::Matrix& images) const override {
    require(images.cols == input_size(), ErrorCode::kShapeMismatch, "backbone image encoder: wrong pixel count");
    ag::Matrix out(images.rows, d_feat());
    for (std::size_t i = 0; i < images.rows; ++i)
      if (impl_->api.encode_image(impl_->api.ctx, images.row(i).data(), out.row(i).data()) != 0)
        fail(ErrorCode::kInternal, "backbone encode_image failed");
    return ag::Var::constant(std::move(out));
  }
  std::size_t input_size() const override {
    return static_cast<std::size_t>(impl_->api.image_height) * static_cast<std::size_t>(impl_->api.image_width) *
           static_cast<std::size_t>(impl_->api.image_channels);
  }
  std::size_t d_feat() const override { return static_cast<std::size_t>(impl_->api.d_feat); }

 private:
  std::shared_ptr<Backbone::Impl> impl_;
};

}  // namespace

std::shared_ptr<Backbone> Backbone::load(const BackboneLoadOptions& options) {
  auto impl = std::make_shared<Impl>();
  impl->handle = dlopen(options.library_path.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (!impl->handle) {
    const char* why = dlerror();
    fail(ErrorCode::kConfig, "cannot load backbone library '" + options.library_path + "': " + (why ? why : "?"));
  }
  auto entry = reinterpret_cast<ordino_backbone_entry>(dlsym(impl->handle, options.entry_point.c_str()));
  require(entry != nullptr, ErrorCode::kConfig,
          "backbone library '" + options.library_path + "' has no entry point '" + options.entry_point + "'");
  if (entry(options.options.c_str(), &impl->api) != 0)
    fail(ErrorCode::kConfig, "backbone entry point '" + options.entry_point + "' reported failure");
  const auto& api = impl->api;
  require(api.abi_version == ORDINO_BACKBONE_ABI_VERSION, ErrorCode::kConfig, "backbone ABI version mismatch");
  require(api.tokenize && api.embedding_table && api.encode_text && api.encode_text_vjp && api.encode_image,
          ErrorCode::kConfig, "backbone table is missing required functions");
  require(api.d_embed > 0 && api.d_feat > 0 && api.vocab_size > 0 && api.image_height > 0 && api.image_width > 0 &&
              api.image_channels > 0,
          ErrorCode::kConfig, "backbone reports invalid dimensions");

  std::shared_ptr<Backbone> bb(new Backbone());
  bb->impl_ = impl;
  const double* table = api.embedding_table(api.ctx);
  require(table != nullptr, ErrorCode::kConfig, "backbone returned no embedding table");
  const auto rows = static_cast<std::size_t>(api.vocab_size), cols = static_cast<std::size_t>(api.d_embed);
  bb->table_ = ag::Matrix(rows, cols, std::vector<double>(table, table + rows * cols));
  bb->tokenizer_ = std::make_shared<PluginTokenizer>(impl);
  bb->text_ = std::make_shared<PluginTextEncoder>(impl);
  bb->image_ = std::make_shared<PluginImageEncoder>(impl);
  return bb;
}

Backbone::~Backbone() = default;

std::size_t Backbone::d_feat() const { return static_cast<std::size_t>(impl_->api.d_feat); }
std::size_t Backbone::image_height() const { return static_cast<std::size_t>(impl_->api.image_height); }
std::size_t Backbone::image_width() const { return static_cast<std::size_t>(impl_->api.image_width); }
std::size_t Backbone::image_channels() const { return static_cast<std::size_t>(impl_->api.image_channels); }

}  // namespace ordino
