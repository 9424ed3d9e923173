#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "ordino/encoders.hpp"
#include "ordino/error.hpp"
#include "test_util.hpp"

using namespace ordino;
using ag::Matrix;
using ag::Var;

TEST_CASE("normalize") {
  const auto u = normalize(std::vector<double>{3.0, 4.0});
  CHECK(u[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(u[1] == doctest::Approx(0.8).epsilon(1e-15));
  const auto again = normalize(u);
  CHECK(std::abs(again[0] - u[0]) < 1e-12);
  CHECK(std::abs(again[1] - u[1]) < 1e-12);
  const auto e = normalize(std::vector<double>{0.0, 1.0, 0.0});
  CHECK(e == std::vector<double>{0.0, 1.0, 0.0});
  try {
    normalize(std::vector<double>{0.0, 0.0});
    FAIL("expected ZeroFeature");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::kZeroFeature);
  }
}

TEST_CASE("toy text encoder on a constant sequence depends only on the constant") {
  ToyTextEncoder enc(6, 10, 5, 3);
  std::mt19937_64 rng(1);
  const Matrix c = testutil::random_matrix(1, 6, rng);
  Matrix seq(4, 6);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t j = 0; j < 6; ++j) seq(t, j) = c(0, j);
  const Matrix short_seq = c;
  std::vector<Var> prompts{Var::constant(seq)};
  std::vector<Var> single{Var::constant(short_seq)};
  const Matrix a = encode_text(prompts, enc).value();
  const Matrix b = encode_text(single, enc).value();
  for (std::size_t j = 0; j < 5; ++j) CHECK(a(0, j) == doctest::Approx(b(0, j)).epsilon(1e-14));
  double n = 0.0;
  for (double x : a.data) n += x * x;
  CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identical prompts and duplicate images give identical rows") {
  ToyTextEncoder text(4, 8, 3, 11);
  ToyImageEncoder image(9, 8, 3, 11);
  std::mt19937_64 rng(2);
  const Matrix seq = testutil::random_matrix(5, 4, rng);
  std::vector<Var> prompts{Var::constant(seq), Var::constant(seq)};
  const Matrix t = encode_text(prompts, text).value();
  for (std::size_t j = 0; j < 3; ++j) CHECK(t(0, j) == t(1, j));

  const Matrix img = testutil::random_matrix(1, 9, rng);
  Matrix batch(2, 9);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t j = 0; j < 9; ++j) batch(r, j) = img(0, j);
  const Matrix v = encode_image(batch, image).value();
  for (std::size_t j = 0; j < 3; ++j) CHECK(v(0, j) == v(1, j));
}

TEST_CASE("zero image maps to the normalised output bias path") {
  ToyImageEncoder image(9, 8, 3, 5);
  const Matrix zero(1, 9);
  const Matrix v = encode_image(zero, image).value();
  // At x = 0 the output is tanh(b1) W2 + b2.
  auto params = image.parameters();
  const Matrix& b1 = params[1].var->value();
  const Matrix& w2 = params[2].var->value();
  const Matrix& b2 = params[3].var->value();
  std::vector<double> raw(3);
  for (std::size_t f = 0; f < 3; ++f) {
    raw[f] = b2(0, f);
    for (std::size_t h = 0; h < 8; ++h) raw[f] += std::tanh(b1(0, h)) * w2(h, f);
  }
  const auto expect = normalize(raw);
  for (std::size_t f = 0; f < 3; ++f) CHECK(v(0, f) == doctest::Approx(expect[f]).epsilon(1e-13));
}

TEST_CASE("toy encoders are deterministic under a seed and match recorded golden vectors") {
  ToyTextEncoder text(4, 6, 3, 42);
  ToyImageEncoder image(4, 6, 3, 42);
  Matrix seq(2, 4, {0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8});
  Matrix img(1, 4, {0.25, 0.5, 0.75, 1.0});
  std::vector<Var> prompts{Var::constant(seq)};
  const Matrix t = encode_text(prompts, text).value();
  const Matrix v = encode_image(img, image).value();
  ToyTextEncoder text2(4, 6, 3, 42);
  const Matrix t2 = encode_text(prompts, text2).value();
  CHECK(t.data == t2.data);
  const double golden_text[3] = {0.82685828292786645, 0.56090692951310628, -0.041094967791199331};
  const double golden_image[3] = {0.49764221710622053, 0.46112319448716027, 0.73465476467491975};
  for (int f = 0; f < 3; ++f) {
    CHECK(t.data[f] == doctest::Approx(golden_text[f]).epsilon(1e-9));
    CHECK(v.data[f] == doctest::Approx(golden_image[f]).epsilon(1e-9));
  }
}

TEST_CASE("encoders validate shapes and parameter trainability") {
  ToyTextEncoder text(4, 6, 3, 1);
  ToyImageEncoder image(4, 6, 3, 1);
  CHECK_FALSE(text.trainable());
  CHECK(image.trainable());
  std::vector<Var> wrong{Var::constant(Matrix(2, 5))};
  CHECK_THROWS_AS(encode_text(wrong, text), Error);
  std::vector<Var> ragged{Var::constant(Matrix(2, 4, 0.1)), Var::constant(Matrix(3, 4, 0.1))};
  CHECK_THROWS_AS(encode_text(ragged, text), Error);
  CHECK_THROWS_AS(encode_image(Matrix(1, 5), image), Error);
  for (auto& p : text.parameters()) CHECK_FALSE(p.var->requires_grad());
  for (auto& p : image.parameters()) CHECK(p.var->requires_grad());
}

TEST_CASE("toy text encoder gradients reach the prompt sequence") {
  ToyTextEncoder text(4, 6, 3, 8);
  for (int seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    Var seq = Var::parameter(testutil::random_matrix(3, 4, rng));
    const Matrix probe = testutil::random_matrix(1, 3, rng);
    auto f = [&] {
      std::vector<Var> prompts{seq};
      return ag::sum(ag::mul(encode_text(prompts, text), Var::constant(probe)));
    };
    CHECK(testutil::gradient_error(f, {&seq}) < 1e-6);
  }
}

#ifdef ORDINO_TEST_PLUGIN
TEST_CASE("backbone plugin loads and its text VJP matches finite differences") {
  BackboneLoadOptions opts;
  opts.library_path = ORDINO_TEST_PLUGIN;
  const auto bb = Backbone::load(opts);
  CHECK(bb->d_feat() == 3);
  CHECK(bb->image_height() == 4);
  CHECK(bb->image_channels() == 1);
  CHECK(bb->embedding_table().rows == 256);
  CHECK(bb->embedding_table().cols == 4);
  const auto ids = bb->tokenizer()->encode("ab");
  REQUIRE(ids.size() == 2);
  CHECK(ids[0] == 'a');

  for (int seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(50 + seed);
    Var seq = Var::parameter(testutil::random_matrix(3, 4, rng));
    const Matrix probe = testutil::random_matrix(1, 3, rng);
    auto f = [&] {
      std::vector<Var> prompts{seq};
      return ag::sum(ag::mul(encode_text(prompts, *bb->text_encoder()), Var::constant(probe)));
    };
    CHECK(testutil::gradient_error(f, {&seq}) < 1e-6);
  }

  const Matrix v = encode_image(Matrix(2, 16, 0.5), *bb->image_encoder()).value();
  for (std::size_t f = 0; f < 3; ++f) CHECK(v(0, f) == v(1, f));
  CHECK_FALSE(bb->image_encoder()->trainable());
}

TEST_CASE("backbone loading errors") {
  BackboneLoadOptions missing;
  missing.library_path = "/nonexistent/libnothing.so";
  try {
    Backbone::load(missing);
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
  }
  BackboneLoadOptions bad_entry;
  bad_entry.library_path = ORDINO_TEST_PLUGIN;
  bad_entry.entry_point = "no_such_symbol";
  CHECK_THROWS_AS(Backbone::load(bad_entry), Error);
  BackboneLoadOptions refused;
  refused.library_path = ORDINO_TEST_PLUGIN;
  refused.options = "fail";
  CHECK_THROWS_AS(Backbone::load(refused), Error);
}
#endif
