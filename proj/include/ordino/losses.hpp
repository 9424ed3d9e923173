#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ordino/autograd.hpp"

namespace ordino {

// How the label-distance weight w_ab between ranks a and b is formed.
enum class WeightForm {
  kLinearNormalized,  // |a - b| / (M - 1)
  kAbsolute,          // |a - b|
  kSquared,           // (|a - b| / (M - 1))^2
};

// Denominator of the image-to-text contrastive term.
enum class I2TDenominator {
  kAllRanks,  // softmax over all M rank features
  kBatch,     // softmax over the batch's label features r_{y_j}
};

struct Stage1Weights {
  double t2i = 0.1;
  double i2t = 0.1;
  double cop = 3.0;
};

struct Stage2Weights {
  double ce = 1.0;
  double scop = 1.0;
};

struct LossConfig {
  double lambda = 1.0;
  double gamma = 0.1;
  double tau = 0.07;
  double eps_log = 1e-6;
  WeightForm weight_form = WeightForm::kLinearNormalized;
  I2TDenominator i2t_denominator = I2TDenominator::kAllRanks;
  Stage1Weights stage1;
  Stage2Weights stage2;

  void validate() const;
};

// Unit-norm image features v (B × d_feat), rank text features r (M × d_feat)
// and integer labels in [0, M).
struct EncodedBatch {
  ag::Var v;
  ag::Var r;
  std::vector<int> labels;

  std::size_t batch_size() const { return labels.size(); }
  std::size_t num_ranks() const { return r.rows(); }
  // Checks shapes, label range and unit norms (1 ± 1e-6).
  void validate() const;
};

double label_weight(int a, int b, std::size_t num_ranks, WeightForm form);

// p[i,k] = softmax_k(v_i · r_k / tau).
ag::Var softmax_probs(const ag::Var& v, const ag::Var& r, double tau);

// -(1/B) Σ log max(p[i, y_i], eps_log).
ag::Var cross_entropy(const ag::Var& probs, std::span<const int> labels, double eps_log = 1e-12);

// Text-to-image term with all same-label images as positives.
ag::Var asym_contrastive_t2i(const EncodedBatch& batch, double tau);

// Image-to-text term against the label's rank feature.
ag::Var asym_contrastive_i2t(const EncodedBatch& batch, double tau,
                             I2TDenominator denominator = I2TDenominator::kAllRanks);

// -(1/B) Σ v_i · r_{y_i}.
ag::Var cpce_tightness(const EncodedBatch& batch);

// (D / (B(B-1))) Σ_i Σ_{j≠i} log max(v_i·r_{y_j} + r_{y_i}·r_{y_j}, eps_log), D = feature width.
ag::Var cpce_diversity(const EncodedBatch& batch, double eps_log);

// Mean over anchors of (1/(B-1)) Σ_{j≠i} w_{y_i y_j} (v_i + γ r_{y_i})·r_{y_j} - v_i·r_{y_i}.
// gamma is a 1×1 Var so that its gradient is available.
ag::Var cop_loss(const EncodedBatch& batch, const ag::Var& gamma, WeightForm form);
ag::Var cop_loss(const EncodedBatch& batch, const LossConfig& cfg);

// cop_loss with γ = 0 and the text features treated as constants.
ag::Var scop_loss(const EncodedBatch& batch, const LossConfig& cfg);

struct PceTerms {
  double tightness = 0.0;
  double diversity = 0.0;
  double total = 0.0;
};

// Pairwise cross-entropy bound over features z (N × d) with soft assignments
// p (N × K). Value-only; used as an analysis reference.
PceTerms pce_reference(const ag::Matrix& z, std::span<const int> labels, const ag::Matrix& p, double lambda);
// Same, with p = softmax(z · c̄ᵀ / tau) against the hard class means c̄.
PceTerms pce_reference(const ag::Matrix& z, std::span<const int> labels, std::size_t num_classes, double lambda,
                       double tau);

struct StageToggles {
  bool use_cop = true;
  bool use_scop = true;
};

struct StageLoss {
  ag::Var total;
  // Term name → unweighted value, in evaluation order.
  std::vector<std::pair<std::string, double>> terms;
};

// Stage 1: a_t2i·L_t2i + a_i2t·L_i2t + b_cop·L_cop.
// Stage 2: c_ce·L_ce + c_scop·L_scop.
StageLoss stage_loss(int stage, const EncodedBatch& batch, const LossConfig& cfg, StageToggles toggles = {});

}  // namespace ordino
