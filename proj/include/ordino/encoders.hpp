#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ordino/autograd.hpp"
#include "ordino/prompt_space.hpp"

namespace ordino {

inline constexpr double kNormEpsilon = 1e-12;

// Token-embedding sequence (T × d_embed) → unnormalised feature (1 × d_feat).
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual ag::Var encode(const ag::Var& sequence) const = 0;
  virtual std::size_t d_embed() const = 0;
  virtual std::size_t d_feat() const = 0;
  virtual bool trainable() const { return false; }
  virtual std::vector<ag::NamedParam> parameters() { return {}; }
};

// Flattened images (B × pixels) → unnormalised features (B × d_feat).
class ImageEncoder {
 public:
  virtual ~ImageEncoder() = default;
  virtual ag::Var encode(const ag::Matrix& images) const = 0;
  virtual std::size_t input_size() const = 0;
  virtual std::size_t d_feat() const = 0;
  virtual bool trainable() const { return false; }
  virtual std::vector<ag::NamedParam> parameters() { return {}; }
};

// Mean-pool over tokens → tanh(affine) → linear projection. Frozen.
class ToyTextEncoder final : public TextEncoder {
 public:
  ToyTextEncoder(std::size_t d_embed, std::size_t hidden, std::size_t d_feat, std::uint64_t seed);
  ag::Var encode(const ag::Var& sequence) const override;
  std::size_t d_embed() const override { return w1_.rows(); }
  std::size_t d_feat() const override { return proj_.cols(); }
  std::vector<ag::NamedParam> parameters() override;

 private:
  ag::Var w1_, b1_, proj_;
};

// Flatten → tanh(affine) → affine. Trainable.
class ToyImageEncoder final : public ImageEncoder {
 public:
  ToyImageEncoder(std::size_t input_size, std::size_t hidden, std::size_t d_feat, std::uint64_t seed);
  ag::Var encode(const ag::Matrix& images) const override;
  std::size_t input_size() const override { return w1_.rows(); }
  std::size_t d_feat() const override { return w2_.cols(); }
  bool trainable() const override { return true; }
  std::vector<ag::NamedParam> parameters() override;

 private:
  ag::Var w1_, b1_, w2_, b2_;
};

// Row m of the result is normalize(encoder(prompts[m])).
ag::Var encode_text(std::span<const ag::Var> prompts, const TextEncoder& encoder);
ag::Var encode_image(const ag::Matrix& images, const ImageEncoder& encoder);

std::vector<double> normalize(std::span<const double> x, double eps_norm = kNormEpsilon);

struct BackboneLoadOptions {
  std::string library_path;
  std::string entry_point = "ordino_backbone_create";
  std::string options;
};

// A pretrained backbone loaded from a plugin shared library. Holds the
// library handle for as long as any of its encoders is alive.
class Backbone {
 public:
  struct Impl;
  static std::shared_ptr<Backbone> load(const BackboneLoadOptions& options);
  ~Backbone();
  Backbone(const Backbone&) = delete;
  Backbone& operator=(const Backbone&) = delete;

  std::shared_ptr<const Tokenizer> tokenizer() const { return tokenizer_; }
  std::shared_ptr<const TextEncoder> text_encoder() const { return text_; }
  std::shared_ptr<const ImageEncoder> image_encoder() const { return image_; }
  const ag::Matrix& embedding_table() const { return table_; }
  std::size_t d_feat() const;
  std::size_t image_height() const;
  std::size_t image_width() const;
  std::size_t image_channels() const;

 private:
  Backbone() = default;
  std::shared_ptr<Impl> impl_;
  std::shared_ptr<const Tokenizer> tokenizer_;
  std::shared_ptr<const TextEncoder> text_;
  std::shared_ptr<const ImageEncoder> image_;
  ag::Matrix table_;
};

}  // namespace ordino
