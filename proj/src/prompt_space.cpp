#include "ordino/prompt_space.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "ordino/error.hpp"

namespace ordino {

namespace {

constexpr const char* kWords[] = {
    "a",        "an",      "the",       "of",       "at",        "in",      "is",      "this",    "with",
    "and",      "photo",   "picture",   "image",    "portrait",  "face",    "person",  "people",  "man",
    "woman",    "years",   "year",      "old",      "age",       "aged",    "estimation", "rank",  "level",
    "grade",    "group",   "class",     "score",    "aesthetic", "quality", "beauty",  "beautiful", "decade",
    "historical", "color", "colour",    "taken",    "from",      "during",  "circa",   "era",     "bar",
    "length",   "long",    "short",     "stage",    "step",      "number",  "degree",  "severity", "rating",
};

constexpr std::string_view kPunct = ".,:;!?-'\"()/";

}  // namespace

ToyTokenizer::ToyTokenizer() {
  vocab_ = {"<pad>", "<unk>"};
  for (const char* w : kWords) vocab_.emplace_back(w);
  for (int i = 0; i < 100; ++i) vocab_.push_back(std::to_string(i));
  for (char c = 'a'; c <= 'z'; ++c) {
    std::string s(1, c);
    if (std::find(vocab_.begin(), vocab_.end(), s) == vocab_.end()) vocab_.push_back(s);
  }
  for (char c : kPunct) vocab_.emplace_back(1, c);
}

int ToyTokenizer::id_of(std::string_view token) const {
  auto it = std::find(vocab_.begin(), vocab_.end(), token);
  return it == vocab_.end() ? unk_id() : static_cast<int>(it - vocab_.begin());
}

std::vector<int> ToyTokenizer::encode(std::string_view text) const {
  std::vector<int> out;
  std::size_t i = 0;
  auto is_alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
  auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (is_alpha(c)) {
      std::size_t j = i;
      std::string word;
      while (j < text.size() && is_alpha(text[j])) word.push_back(static_cast<char>(std::tolower(text[j++])));
      const int id = id_of(word);
      if (id != unk_id()) {
        out.push_back(id);
      } else {
        for (char ch : word) out.push_back(id_of(std::string(1, ch)));
      }
      i = j;
    } else if (is_digit(c)) {
      std::size_t j = i;
      while (j < text.size() && is_digit(text[j])) ++j;
      std::string_view run = text.substr(i, j - i);
      std::size_t p = 0;
      while (p < run.size()) {
        // Longest canonical number first: "19" before "1"; "05" is not canonical.
        if (p + 1 < run.size() && run[p] != '0') {
          out.push_back(id_of(run.substr(p, 2)));
          p += 2;
        } else {
          out.push_back(id_of(run.substr(p, 1)));
          p += 1;
        }
      }
      i = j;
    } else {
      out.push_back(id_of(std::string_view(&text[i], 1)));
      ++i;
    }
  }
  return out;
}

RankTemplateSet build_templates(const TaskDescriptor& task, const Tokenizer& tokenizer) {
  const std::string& tpl = task.template_text;
  const auto open = tpl.find('{');
  const auto close = tpl.find('}');
  require(open != std::string::npos && close != std::string::npos && close > open, ErrorCode::kInvalidArgument,
          "template has no {slot}: " + tpl);
  require(tpl.find('{', open + 1) == std::string::npos && tpl.find('}', close + 1) == std::string::npos,
          ErrorCode::kInvalidArgument, "template must contain exactly one {slot}: " + tpl);
  const std::size_t m = task.label_names.size();
  require(m >= 2, ErrorCode::kInvalidArgument, "at least two rank labels are required");
  require(task.n_max >= 1, ErrorCode::kInvalidArgument, "n_max must be at least 1");

  RankTemplateSet set;
  set.rank_labels = task.rank_values;
  if (set.rank_labels.empty()) {
    for (std::size_t i = 0; i < m; ++i) set.rank_labels.push_back(static_cast<double>(i + 1));
  }
  require(set.rank_labels.size() == m, ErrorCode::kInvalidArgument, "rank_values and label_names differ in length");
  for (std::size_t i = 1; i < m; ++i)
    require(set.rank_labels[i] > set.rank_labels[i - 1], ErrorCode::kInvalidArgument,
            "rank values must be strictly increasing");

  const std::string prefix = tpl.substr(0, open);
  const std::string suffix = tpl.substr(close + 1);
  const std::vector<int> prefix_ids = tokenizer.encode(prefix);
  const std::vector<int> suffix_ids = tokenizer.encode(suffix);

  std::vector<std::vector<int>> label_ids;
  std::size_t n = 1;
  for (const std::string& label : task.label_names) {
    auto ids = tokenizer.encode(label);
    require(!ids.empty(), ErrorCode::kInvalidArgument, "label tokenizes to nothing: '" + label + "'");
    require(ids.size() <= task.n_max, ErrorCode::kOutOfRange,
            "label '" + label + "' tokenizes to " + std::to_string(ids.size()) + " tokens, more than n_max=" +
                std::to_string(task.n_max));
    n = std::max(n, ids.size());
    label_ids.push_back(std::move(ids));
  }

  set.span_start = prefix_ids.size();
  set.span_len = n;
  for (std::size_t i = 0; i < m; ++i) {
    set.templates.push_back(prefix + task.label_names[i] + suffix);
    std::vector<int> ids = prefix_ids;
    ids.insert(ids.end(), label_ids[i].begin(), label_ids[i].end());
    ids.insert(ids.end(), n - label_ids[i].size(), tokenizer.pad_id());
    ids.insert(ids.end(), suffix_ids.begin(), suffix_ids.end());
    set.token_ids.push_back(std::move(ids));
  }
  return set;
}

std::string to_listing(const RankTemplateSet& set) {
  std::ostringstream os;
  os << "M=" << set.num_ranks() << " n=" << set.span_len << " span=" << set.span_start << "," << set.span_len
     << " T=" << set.length() << "\n";
  for (const auto& t : set.templates) os << t << "\n";
  return os.str();
}

RankTokenEmbeddings::RankTokenEmbeddings(std::size_t num_ranks, std::size_t span_len, std::size_t d_embed)
    : m_(num_ranks), n_(span_len), d_(d_embed), values_(num_ranks * span_len * d_embed, 0.0) {}

ag::Matrix RankTokenEmbeddings::position(std::size_t k) const {
  require(k < n_, ErrorCode::kOutOfRange, "token position out of range");
  ag::Matrix out(m_, d_);
  for (std::size_t m = 0; m < m_; ++m)
    for (std::size_t j = 0; j < d_; ++j) out(m, j) = at(m, k, j);
  return out;
}

std::vector<ag::Matrix> RankTokenEmbeddings::positions() const {
  std::vector<ag::Matrix> out;
  for (std::size_t k = 0; k < n_; ++k) out.push_back(position(k));
  return out;
}

RankTokenEmbeddings RankTokenEmbeddings::from_positions(std::span<const ag::Matrix> positions) {
  require(!positions.empty(), ErrorCode::kInvalidArgument, "no token positions");
  const std::size_t m = positions.front().rows, d = positions.front().cols;
  RankTokenEmbeddings out(m, positions.size(), d);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    require(positions[k].rows == m && positions[k].cols == d, ErrorCode::kShapeMismatch,
            "token positions differ in shape");
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t j = 0; j < d; ++j) out.at(r, k, j) = positions[k](r, j);
  }
  return out;
}

namespace {

void copy_row(const ag::Matrix& table, int id, std::span<double> dst) {
  require(id >= 0 && static_cast<std::size_t>(id) < table.rows, ErrorCode::kOutOfRange,
          "token id " + std::to_string(id) + " outside the embedding table");
  std::copy_n(table.data.data() + static_cast<std::size_t>(id) * table.cols, table.cols, dst.begin());
}

}  // namespace

RankTokenEmbeddings embed_rank_tokens(const RankTemplateSet& set, const ag::Matrix& table) {
  RankTokenEmbeddings out(set.num_ranks(), set.span_len, table.cols);
  for (std::size_t m = 0; m < set.num_ranks(); ++m)
    for (std::size_t k = 0; k < set.span_len; ++k)
      copy_row(table, set.token_ids[m][set.span_start + k],
               std::span<double>(&out.at(m, k, 0), table.cols));
  return out;
}

ag::Matrix embed_template(const RankTemplateSet& set, const ag::Matrix& table, std::size_t m) {
  require(m < set.num_ranks(), ErrorCode::kOutOfRange, "template index out of range");
  const auto& ids = set.token_ids[m];
  ag::Matrix out(ids.size(), table.cols);
  for (std::size_t t = 0; t < ids.size(); ++t) copy_row(table, ids[t], out.row(t));
  return out;
}

ContextPrompts init_context_prompts(std::size_t count, std::size_t d_embed, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 0.02);
  ContextPrompts ctx{ag::Matrix(count, d_embed)};
  for (double& x : ctx.values.data) x = normal(rng);
  return ctx;
}

PromptAssembler::PromptAssembler(const RankTemplateSet& set, const ag::Matrix& table)
    : d_embed_(table.cols), span_len_(set.span_len) {
  require(set.num_ranks() >= 1 && set.span_len >= 1, ErrorCode::kInvalidArgument, "empty template set");
  const ag::Matrix first = embed_template(set, table, 0);
  const std::size_t tail = set.span_start + set.span_len;
  prefix_ = ag::Matrix(set.span_start, d_embed_);
  std::copy_n(first.data.data(), set.span_start * d_embed_, prefix_.data.data());
  suffix_ = ag::Matrix(first.rows - tail, d_embed_);
  std::copy_n(first.data.data() + tail * d_embed_, suffix_.size(), suffix_.data.data());
  rank_tokens_ = embed_rank_tokens(set, table);
}

std::vector<ag::Var> PromptAssembler::assemble(const ag::Var& context, std::span<const ag::Var> refined) const {
  require(refined.size() == span_len_, ErrorCode::kShapeMismatch, "refined rank tokens have the wrong span length");
  const std::size_t m = refined.front().rows();
  for (const auto& r : refined)
    require(r.rows() == m && r.cols() == d_embed_, ErrorCode::kShapeMismatch, "refined rank tokens: d_embed mismatch");
  require(context.rows() == 0 || context.cols() == d_embed_, ErrorCode::kShapeMismatch,
          "context prompts: d_embed mismatch");

  const ag::Var prefix = ag::Var::constant(prefix_);
  const ag::Var suffix = ag::Var::constant(suffix_);
  std::vector<ag::Var> out;
  out.reserve(m);
  for (std::size_t r = 0; r < m; ++r) {
    std::vector<ag::Var> parts;
    if (context.rows() > 0) parts.push_back(context);
    if (prefix_.rows > 0) parts.push_back(prefix);
    for (const auto& pos : refined) parts.push_back(ag::slice_rows(pos, r, 1));
    if (suffix_.rows > 0) parts.push_back(suffix);
    out.push_back(ag::concat_rows(parts));
  }
  return out;
}

std::vector<ag::Matrix> assemble_prompts(const ContextPrompts& context, const RankTokenEmbeddings& refined,
                                         const RankTemplateSet& set, const ag::Matrix& table) {
  require(refined.num_ranks() == set.num_ranks() && refined.span_len() == set.span_len,
          ErrorCode::kShapeMismatch, "refined rank tokens do not match the template set");
  require(refined.d_embed() == table.cols, ErrorCode::kShapeMismatch, "refined rank tokens: d_embed mismatch");
  PromptAssembler assembler(set, table);
  std::vector<ag::Var> refined_vars;
  for (auto& p : refined.positions()) refined_vars.push_back(ag::Var::constant(std::move(p)));
  ag::Matrix ctx = context.values;
  if (ctx.rows == 0) ctx.cols = table.cols;
  std::vector<ag::Matrix> out;
  for (const auto& v : assembler.assemble(ag::Var::constant(std::move(ctx)), refined_vars)) out.push_back(v.value());
  return out;
}

}  // namespace ordino
