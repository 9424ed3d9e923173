#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "ordino/autograd.hpp"
#include "ordino/prompt_space.hpp"

namespace ordino {

struct RankFormerConfig {
  std::size_t d_embed = 32;
  std::size_t heads = 8;
  std::size_t d_ff = 0;  // 0 selects 4 * d_embed
  double alpha = 0.1;
  double ln_eps = 1e-5;
};

// One attention block over the template axis: for every rank-token position
// the M rank tokens form the attention sequence.
//   R' = (1 - alpha) * R + alpha * FFN(MSA(LN(R)))
// No positional encoding is applied, so the block is permutation-equivariant
// along the template axis.
struct RankFormerParams {
  double alpha = 0.1;
  std::size_t heads = 1;
  double ln_eps = 1e-5;
  ag::Var ln_gain, ln_bias;
  ag::Var wq, bq, wk, bk, wv, bv, wo, bo;
  ag::Var w1, b1, w2, b2;

  std::size_t d_embed() const { return wq.rows(); }
  std::size_t d_ff() const { return w1.cols(); }
  std::vector<ag::NamedParam> parameters();
  RankFormerParams clone() const;
  void validate() const;
};

// Fan-in scaled Gaussian weights, zero biases, unit LN gain, and a
// zero-initialised FFN output projection.
RankFormerParams init_rankformer(const RankFormerConfig& cfg, std::mt19937_64& rng);

// Differentiable refinement of n token positions, each M × d_embed.
std::vector<ag::Var> refine(std::span<const ag::Var> positions, const RankFormerParams& params);

RankTokenEmbeddings refine(const RankTokenEmbeddings& rank_tokens, const RankFormerParams& params);

}  // namespace ordino
