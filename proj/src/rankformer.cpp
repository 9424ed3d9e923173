#include "ordino/rankformer.hpp"

#include <cmath>
#include <string>

#include "ordino/error.hpp"

namespace ordino {

namespace {

ag::Var gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  ag::Matrix m(rows, cols);
  for (double& x : m.data) x = normal(rng);
  return ag::Var::parameter(std::move(m));
}

ag::Var filled(std::size_t rows, std::size_t cols, double value) {
  return ag::Var::parameter(ag::Matrix(rows, cols, value));
}

}  // namespace

std::vector<ag::NamedParam> RankFormerParams::parameters() {
  return {{"rankformer.ln_gain", &ln_gain}, {"rankformer.ln_bias", &ln_bias}, {"rankformer.wq", &wq},
          {"rankformer.bq", &bq},           {"rankformer.wk", &wk},           {"rankformer.bk", &bk},
          {"rankformer.wv", &wv},           {"rankformer.bv", &bv},           {"rankformer.wo", &wo},
          {"rankformer.bo", &bo},           {"rankformer.w1", &w1},           {"rankformer.b1", &b1},
          {"rankformer.w2", &w2},           {"rankformer.b2", &b2}};
}

RankFormerParams RankFormerParams::clone() const {
  RankFormerParams out = *this;
  for (auto& p : out.parameters()) *p.var = ag::clone_leaf(*p.var);
  return out;
}

void RankFormerParams::validate() const {
  require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::kInvalidArgument, "rankformer alpha must lie in [0, 1]");
  const std::size_t d = wq.rows();
  require(heads >= 1 && d % heads == 0, ErrorCode::kInvalidArgument, "d_embed must be divisible by the head count");
  auto self = const_cast<RankFormerParams*>(this)->parameters();
  for (const auto& p : self) {
    require(p.var->defined(), ErrorCode::kInvalidArgument, p.name + " is not initialised");
    require(p.var->value().all_finite(), ErrorCode::kNonFinite, p.name + " has non-finite entries");
  }
  const std::size_t f = w1.cols();
  auto shape_is = [](const ag::Var& v, std::size_t r, std::size_t c) { return v.rows() == r && v.cols() == c; };
  bool ok = shape_is(ln_gain, 1, d) && shape_is(ln_bias, 1, d);
  for (const ag::Var* w : {&wq, &wk, &wv, &wo}) ok = ok && shape_is(*w, d, d);
  for (const ag::Var* b : {&bq, &bk, &bv, &bo, &b2}) ok = ok && shape_is(*b, 1, d);
  ok = ok && shape_is(w1, d, f) && shape_is(b1, 1, f) && shape_is(w2, f, d);
  require(ok, ErrorCode::kShapeMismatch, "rankformer parameter shapes are inconsistent");
}

RankFormerParams init_rankformer(const RankFormerConfig& cfg, std::mt19937_64& rng) {
  const std::size_t d = cfg.d_embed;
  const std::size_t f = cfg.d_ff == 0 ? 4 * d : cfg.d_ff;
  RankFormerParams p;
  p.alpha = cfg.alpha;
  p.heads = cfg.heads;
  p.ln_eps = cfg.ln_eps;
  const double s_in = 1.0 / std::sqrt(static_cast<double>(d));
  p.ln_gain = filled(1, d, 1.0);
  p.ln_bias = filled(1, d, 0.0);
  p.wq = gaussian(d, d, s_in, rng);
  p.bq = filled(1, d, 0.0);
  p.wk = gaussian(d, d, s_in, rng);
  p.bk = filled(1, d, 0.0);
  p.wv = gaussian(d, d, s_in, rng);
  p.bv = filled(1, d, 0.0);
  p.wo = gaussian(d, d, s_in, rng);
  p.bo = filled(1, d, 0.0);
  p.w1 = gaussian(d, f, s_in, rng);
  p.b1 = filled(1, f, 0.0);
  p.w2 = filled(f, d, 0.0);
  p.b2 = filled(1, d, 0.0);
  p.validate();
  return p;
}

namespace {

ag::Var block(const ag::Var& x, const RankFormerParams& p) {
  const std::size_t d = p.d_embed();
  const std::size_t dh = d / p.heads;
  const ag::Var h = ag::layer_norm_rows(x, p.ln_gain, p.ln_bias, p.ln_eps);
  const ag::Var q = ag::add_row(ag::matmul(h, p.wq), p.bq);
  const ag::Var k = ag::add_row(ag::matmul(h, p.wk), p.bk);
  const ag::Var v = ag::add_row(ag::matmul(h, p.wv), p.bv);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<ag::Var> heads;
  heads.reserve(p.heads);
  for (std::size_t head = 0; head < p.heads; ++head) {
    const ag::Var qh = ag::slice_cols(q, head * dh, dh);
    const ag::Var kh = ag::slice_cols(k, head * dh, dh);
    const ag::Var vh = ag::slice_cols(v, head * dh, dh);
    const ag::Var attn = ag::softmax_rows(ag::scale(ag::matmul(qh, ag::transpose(kh)), inv_sqrt));
    heads.push_back(ag::matmul(attn, vh));
  }
  const ag::Var msa = ag::add_row(ag::matmul(ag::concat_cols(heads), p.wo), p.bo);
  const ag::Var hidden = ag::gelu(ag::add_row(ag::matmul(msa, p.w1), p.b1));
  return ag::add_row(ag::matmul(hidden, p.w2), p.b2);
}

}  // namespace

std::vector<ag::Var> refine(std::span<const ag::Var> positions, const RankFormerParams& params) {
  params.validate();
  require(!positions.empty(), ErrorCode::kShapeMismatch, "refine: no rank-token positions");
  const std::size_t m = positions.front().rows();
  std::vector<ag::Var> out;
  out.reserve(positions.size());
  for (const ag::Var& x : positions) {
    require(x.rows() == m && x.cols() == params.d_embed(), ErrorCode::kShapeMismatch,
            "refine: rank-token positions must be M x d_embed");
    require(x.value().all_finite(), ErrorCode::kNonFinite, "refine: non-finite rank-token embedding");
    const ag::Var branch = block(x, params);
    out.push_back(ag::add(ag::scale(x, 1.0 - params.alpha), ag::scale(branch, params.alpha)));
  }
  return out;
}

RankTokenEmbeddings refine(const RankTokenEmbeddings& rank_tokens, const RankFormerParams& params) {
  std::vector<ag::Var> in;
  for (auto& p : rank_tokens.positions()) in.push_back(ag::Var::constant(std::move(p)));
  std::vector<ag::Matrix> out;
  for (const auto& v : refine(in, params)) out.push_back(v.value());
  return RankTokenEmbeddings::from_positions(out);
}

}  // namespace ordino
