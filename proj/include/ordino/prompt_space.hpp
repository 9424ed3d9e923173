#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ordino/autograd.hpp"

namespace ordino {

// Text → token ids. The toy tokenizer ships with the library; a backbone
// adapter provides its own implementation.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<int> encode(std::string_view text) const = 0;
  virtual int pad_id() const = 0;
  virtual std::size_t vocab_size() const = 0;
};

// Whitespace tokenizer over a small fixed vocabulary. Known words map to one
// token, unknown alphabetic words fall back to single letters, digit runs are
// split greedily into the longest numbers in 0..99, punctuation is one token
// per character, anything else becomes <unk>.
class ToyTokenizer final : public Tokenizer {
 public:
  ToyTokenizer();
  std::vector<int> encode(std::string_view text) const override;
  int pad_id() const override { return 0; }
  int unk_id() const { return 1; }
  std::size_t vocab_size() const override { return vocab_.size(); }
  const std::string& token(int id) const { return vocab_.at(static_cast<std::size_t>(id)); }
  int id_of(std::string_view token) const;

 private:
  std::vector<std::string> vocab_;
};

struct TaskDescriptor {
  // Exactly one "{...}" slot, e.g. "A photo of {age} years old face."
  std::string template_text;
  std::vector<std::string> label_names;
  // Ordered numeric rank of each label; defaults to 1..M when empty.
  std::vector<double> rank_values;
  std::size_t n_max = 8;
};

struct RankTemplateSet {
  std::vector<std::string> templates;
  std::vector<double> rank_labels;
  // M × T token ids; the rank slot occupies [span_start, span_start + span_len).
  std::vector<std::vector<int>> token_ids;
  std::size_t span_start = 0;
  std::size_t span_len = 0;

  std::size_t num_ranks() const { return templates.size(); }
  std::size_t length() const { return token_ids.empty() ? 0 : token_ids.front().size(); }
};

RankTemplateSet build_templates(const TaskDescriptor& task, const Tokenizer& tokenizer);

// Plain-text listing: "M=<M> n=<n> span=<start>,<len> T=<T>" then one template per line.
std::string to_listing(const RankTemplateSet& set);

// M × n × d_embed rank-token embeddings, stored rank-major.
class RankTokenEmbeddings {
 public:
  RankTokenEmbeddings() = default;
  RankTokenEmbeddings(std::size_t num_ranks, std::size_t span_len, std::size_t d_embed);

  std::size_t num_ranks() const { return m_; }
  std::size_t span_len() const { return n_; }
  std::size_t d_embed() const { return d_; }
  double& at(std::size_t m, std::size_t k, std::size_t j) { return values_[(m * n_ + k) * d_ + j]; }
  double at(std::size_t m, std::size_t k, std::size_t j) const { return values_[(m * n_ + k) * d_ + j]; }
  const std::vector<double>& values() const { return values_; }

  // The M × d_embed slice at token position k (the attention sequence).
  ag::Matrix position(std::size_t k) const;
  std::vector<ag::Matrix> positions() const;
  static RankTokenEmbeddings from_positions(std::span<const ag::Matrix> positions);

 private:
  std::size_t m_ = 0, n_ = 0, d_ = 0;
  std::vector<double> values_;
};

RankTokenEmbeddings embed_rank_tokens(const RankTemplateSet& set, const ag::Matrix& table);

// Full token embedding of template m, without context prompts.
ag::Matrix embed_template(const RankTemplateSet& set, const ag::Matrix& table, std::size_t m);

struct ContextPrompts {
  ag::Matrix values;  // L × d_embed
  std::size_t count() const { return values.rows; }
};

ContextPrompts init_context_prompts(std::size_t count, std::size_t d_embed, std::mt19937_64& rng);

// Holds the frozen scaffold (non-rank) token embeddings of a template set and
// splices refined rank tokens plus shared context prompts into per-rank
// sequences of length L + T.
class PromptAssembler {
 public:
  PromptAssembler(const RankTemplateSet& set, const ag::Matrix& table);

  const RankTokenEmbeddings& rank_tokens() const { return rank_tokens_; }
  std::size_t d_embed() const { return d_embed_; }
  std::size_t template_length() const { return prefix_.rows + span_len_ + suffix_.rows; }

  // context: L × d_embed (L may be 0); refined: n matrices of M × d_embed.
  std::vector<ag::Var> assemble(const ag::Var& context, std::span<const ag::Var> refined) const;

 private:
  std::size_t d_embed_ = 0;
  std::size_t span_len_ = 0;
  ag::Matrix prefix_;
  ag::Matrix suffix_;
  RankTokenEmbeddings rank_tokens_;
};

std::vector<ag::Matrix> assemble_prompts(const ContextPrompts& context, const RankTokenEmbeddings& refined,
                                         const RankTemplateSet& set, const ag::Matrix& table);

}  // namespace ordino
