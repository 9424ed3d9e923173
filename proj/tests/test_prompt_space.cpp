#include <random>
#include <string>

#include "doctest.h"
#include "ordino/error.hpp"
#include "ordino/prompt_space.hpp"
#include "test_util.hpp"

using namespace ordino;
using ag::Matrix;

namespace {

TaskDescriptor age_task() {
  TaskDescriptor t;
  t.template_text = "A photo of {age} years old face.";
  for (int a = 0; a <= 100; ++a) t.label_names.push_back(std::to_string(a));
  return t;
}

Matrix table_for(const Tokenizer& tok, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return testutil::random_matrix(tok.vocab_size(), d, rng);
}

}  // namespace

TEST_CASE("toy tokenizer basics") {
  ToyTokenizer tok;
  CHECK(tok.token(tok.pad_id()) == "<pad>");
  const auto ids = tok.encode("A photo of 23 years old face.");
  REQUIRE(ids.size() == 8);
  CHECK(tok.token(ids[0]) == "a");
  CHECK(tok.token(ids[3]) == "23");
  CHECK(tok.token(ids[7]) == ".");
  // Unknown words fall back to letters; digit runs split into canonical numbers.
  const auto xyz = tok.encode("xyz");
  CHECK(xyz.size() == 3);
  const auto hundred = tok.encode("100");
  REQUIRE(hundred.size() == 2);
  CHECK(tok.token(hundred[0]) == "10");
  CHECK(tok.token(hundred[1]) == "0");
  CHECK(tok.encode("#").front() == tok.unk_id());
}

TEST_CASE("age templates: 101 templates with a common span") {
  ToyTokenizer tok;
  const RankTemplateSet set = build_templates(age_task(), tok);
  CHECK(set.num_ranks() == 101);
  CHECK(set.templates[30] == "A photo of 30 years old face.");
  CHECK(set.span_start == 3);
  CHECK(set.span_len == 2);  // "100" is two tokens; shorter labels are padded
  for (const auto& ids : set.token_ids) CHECK(ids.size() == set.length());
  CHECK(set.token_ids[5][set.span_start + 1] == tok.pad_id());
  CHECK(set.rank_labels.front() == 1.0);
  CHECK(set.rank_labels.back() == 101.0);
}

TEST_CASE("minimal two-rank template") {
  ToyTokenizer tok;
  TaskDescriptor t{"rank {r}", {"1", "2"}, {}, 8};
  const RankTemplateSet set = build_templates(t, tok);
  CHECK(set.num_ranks() == 2);
  CHECK(set.token_ids[0].size() == set.token_ids[1].size());
  CHECK(set.span_len == 1);
}

TEST_CASE("decade labels share a padded span") {
  ToyTokenizer tok;
  TaskDescriptor t{"a photo taken in the {decade}.", {"1930s", "1940s", "1950s", "1960s", "1970s"}, {}, 8};
  const RankTemplateSet set = build_templates(t, tok);
  CHECK(set.num_ranks() == 5);
  // Each decade tokenizes as ["19", "<d>0", "s"].
  for (const auto& label : t.label_names) CHECK(tok.encode(label).size() == 3);
  CHECK(set.span_len == 3);
  CHECK(set.span_start == 5);
}

TEST_CASE("build_templates errors") {
  ToyTokenizer tok;
  CHECK_THROWS_AS(build_templates({"no slot here", {"1", "2"}, {}, 8}, tok), Error);
  CHECK_THROWS_AS(build_templates({"{a} and {b}", {"1", "2"}, {}, 8}, tok), Error);
  CHECK_THROWS_AS(build_templates({"rank {r}", {"1"}, {}, 8}, tok), Error);
  try {
    build_templates({"rank {r}", {"1", "abcdefghij"}, {}, 4}, tok);
    FAIL("expected n_max error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOutOfRange);
  }
}

TEST_CASE("build_templates is deterministic and lists cleanly") {
  ToyTokenizer tok;
  const auto a = build_templates(age_task(), tok);
  const auto b = build_templates(age_task(), tok);
  CHECK(a.token_ids == b.token_ids);
  CHECK(to_listing(a) == to_listing(b));
  const std::string listing = to_listing(build_templates({"rank {r}", {"1", "2"}, {}, 8}, tok));
  CHECK(listing == "M=2 n=1 span=1,1 T=2\nrank 1\nrank 2\n");
}

TEST_CASE("embed_rank_tokens looks up table rows") {
  ToyTokenizer tok;
  const Matrix table = table_for(tok, 8, 7);
  const RankTemplateSet set = build_templates(age_task(), tok);
  const RankTokenEmbeddings e = embed_rank_tokens(set, table);
  CHECK(e.num_ranks() == 101);
  CHECK(e.span_len() == 2);
  CHECK(e.d_embed() == 8);
  const int id = set.token_ids[42][set.span_start];
  for (std::size_t j = 0; j < 8; ++j) CHECK(e.at(42, 0, j) == table(id, j));
  // Padded position carries the pad row.
  for (std::size_t j = 0; j < 8; ++j) CHECK(e.at(7, 1, j) == table(tok.pad_id(), j));

  TaskDescriptor two{"rank {r}", {"1", "2"}, {}, 8};
  const RankTemplateSet s2 = build_templates(two, tok);
  const RankTokenEmbeddings e2 = embed_rank_tokens(s2, table);
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(e2.at(0, 0, j) == table(tok.id_of("1"), j));
    CHECK(e2.at(1, 0, j) == table(tok.id_of("2"), j));
  }
  const Matrix small(3, 8);
  CHECK_THROWS_AS(embed_rank_tokens(s2, small), Error);
}

TEST_CASE("assemble_prompts splices context and rank tokens") {
  ToyTokenizer tok;
  const Matrix table = table_for(tok, 6, 9);
  const RankTemplateSet set = build_templates(age_task(), tok);
  const RankTokenEmbeddings orig = embed_rank_tokens(set, table);

  SUBCASE("L = 0 with original rank tokens equals the plain template embedding") {
    ContextPrompts ctx{Matrix(0, 6)};
    const auto seqs = assemble_prompts(ctx, orig, set, table);
    REQUIRE(seqs.size() == 101);
    for (std::size_t m = 0; m < 101; m += 10) {
      const Matrix direct = embed_template(set, table, m);
      CHECK(seqs[m].data == direct.data);
    }
  }
  SUBCASE("L = 5 prepends the shared context to every rank") {
    std::mt19937_64 rng(4);
    const ContextPrompts ctx = init_context_prompts(5, 6, rng);
    const auto seqs = assemble_prompts(ctx, orig, set, table);
    for (const auto& s : seqs) {
      CHECK(s.rows == 5 + set.length());
      for (std::size_t i = 0; i < 5 * 6; ++i) CHECK(s.data[i] == ctx.values.data[i]);
    }
  }
  SUBCASE("refined tokens replace only the span") {
    RankTokenEmbeddings refined = orig;
    refined.at(3, 0, 2) += 1.0;
    ContextPrompts ctx{Matrix(0, 6)};
    const auto seqs = assemble_prompts(ctx, refined, set, table);
    const Matrix direct = embed_template(set, table, 3);
    for (std::size_t t = 0; t < direct.rows; ++t)
      for (std::size_t j = 0; j < 6; ++j) {
        const double expect = direct(t, j) + ((t == set.span_start && j == 2) ? 1.0 : 0.0);
        CHECK(seqs[3](t, j) == expect);
      }
  }
  SUBCASE("d_embed mismatch is rejected") {
    ContextPrompts ctx{Matrix(2, 4)};
    CHECK_THROWS_AS(assemble_prompts(ctx, orig, set, table), Error);
  }
}

TEST_CASE("context prompts are small Gaussian draws") {
  std::mt19937_64 rng(11);
  const ContextPrompts ctx = init_context_prompts(50, 40, rng);
  double sum = 0.0, sq = 0.0;
  for (double x : ctx.values.data) {
    sum += x;
    sq += x * x;
  }
  const double n = static_cast<double>(ctx.values.size());
  CHECK(std::abs(sum / n) < 0.002);
  CHECK(std::sqrt(sq / n) == doctest::Approx(0.02).epsilon(0.05));
}
