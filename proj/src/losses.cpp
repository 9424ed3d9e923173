#include "ordino/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "ordino/error.hpp"

namespace ordino {

void LossConfig::validate() const {
  require(lambda > 0.0, ErrorCode::kConfig, "loss.lambda must be positive");
  require(tau > 0.0, ErrorCode::kConfig, "loss.tau must be positive");
  require(gamma >= 0.0, ErrorCode::kConfig, "loss.gamma must be non-negative");
  require(eps_log > 0.0, ErrorCode::kConfig, "loss.eps_log must be positive");
  for (double w : {stage1.t2i, stage1.i2t, stage1.cop, stage2.ce, stage2.scop})
    require(w >= 0.0, ErrorCode::kConfig, "loss weights must be non-negative");
}

void EncodedBatch::validate() const {
  require(!labels.empty(), ErrorCode::kInvalidArgument, "empty batch");
  require(v.defined() && r.defined(), ErrorCode::kInvalidArgument, "batch features are not set");
  require(v.rows() == labels.size(), ErrorCode::kShapeMismatch, "batch: one image feature per label required");
  require(r.rows() >= 1 && v.cols() == r.cols(), ErrorCode::kShapeMismatch, "batch: image/text feature widths differ");
  for (int y : labels)
    require(y >= 0 && static_cast<std::size_t>(y) < r.rows(), ErrorCode::kOutOfRange, "batch: label out of range");
  auto check_unit = [](const ag::Matrix& m, const char* what) {
    for (std::size_t i = 0; i < m.rows; ++i) {
      double s = 0.0;
      for (double x : m.row(i)) s += x * x;
      require(std::abs(std::sqrt(s) - 1.0) <= 1e-6, ErrorCode::kInvalidArgument,
              std::string("batch: ") + what + " rows must be unit-norm");
    }
  };
  check_unit(v.value(), "image feature");
  check_unit(r.value(), "text feature");
}

double label_weight(int a, int b, std::size_t num_ranks, WeightForm form) {
  const double d = std::abs(a - b);
  const double span = num_ranks > 1 ? static_cast<double>(num_ranks - 1) : 1.0;
  switch (form) {
    case WeightForm::kLinearNormalized:
      return d / span;
    case WeightForm::kAbsolute:
      return d;
    case WeightForm::kSquared:
      return (d / span) * (d / span);
  }
  return d / span;
}

namespace {

ag::Var constant(ag::Matrix m) { return ag::Var::constant(std::move(m)); }

ag::Var label_features(const EncodedBatch& b) { return ag::gather_rows(b.r, b.labels); }

}  // namespace

ag::Var softmax_probs(const ag::Var& v, const ag::Var& r, double tau) {
  require(tau > 0.0, ErrorCode::kInvalidArgument, "tau must be positive");
  const ag::Var logits = ag::scale(ag::matmul(v, ag::transpose(r)), 1.0 / tau);
  require(logits.value().all_finite(), ErrorCode::kNonFinite, "softmax_probs: non-finite logits");
  return ag::softmax_rows(logits);
}

ag::Var cross_entropy(const ag::Var& probs, std::span<const int> labels, double eps_log) {
  require(!labels.empty() && probs.rows() == labels.size(), ErrorCode::kShapeMismatch,
          "cross_entropy: one probability row per label required");
  require(eps_log > 0.0, ErrorCode::kInvalidArgument, "cross_entropy: eps_log must be positive");
  ag::Matrix onehot(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < probs.cols(), ErrorCode::kOutOfRange,
            "cross_entropy: label out of range");
    onehot(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  const ag::Var picked = ag::sum_cols(ag::mul(probs, constant(std::move(onehot))));
  return ag::scale(ag::mean(ag::log_clamped(picked, eps_log)), -1.0);
}

ag::Var asym_contrastive_t2i(const EncodedBatch& batch, double tau) {
  batch.validate();
  const std::size_t b = batch.batch_size();
  const ag::Var ry = label_features(batch);
  // s[i, j] = r_{y_i} · v_j / tau; anchor i normalises over the batch images.
  const ag::Var s = ag::scale(ag::matmul(ry, ag::transpose(batch.v)), 1.0 / tau);
  const ag::Var ls = ag::log_softmax_rows(s);
  ag::Matrix mask(b, b);
  for (std::size_t i = 0; i < b; ++i) {
    double count = 0.0;
    for (std::size_t j = 0; j < b; ++j) count += batch.labels[j] == batch.labels[i] ? 1.0 : 0.0;
    for (std::size_t j = 0; j < b; ++j)
      if (batch.labels[j] == batch.labels[i]) mask(i, j) = 1.0 / count;
  }
  return ag::scale(ag::sum(ag::mul(ls, constant(std::move(mask)))), -1.0 / static_cast<double>(b));
}

ag::Var asym_contrastive_i2t(const EncodedBatch& batch, double tau, I2TDenominator denominator) {
  batch.validate();
  const std::size_t b = batch.batch_size();
  if (denominator == I2TDenominator::kAllRanks) {
    const ag::Var ls = ag::log_softmax_rows(ag::scale(ag::matmul(batch.v, ag::transpose(batch.r)), 1.0 / tau));
    ag::Matrix onehot(b, batch.num_ranks());
    for (std::size_t i = 0; i < b; ++i) onehot(i, static_cast<std::size_t>(batch.labels[i])) = 1.0;
    return ag::scale(ag::sum(ag::mul(ls, constant(std::move(onehot)))), -1.0 / static_cast<double>(b));
  }
  const ag::Var ry = label_features(batch);
  const ag::Var ls = ag::log_softmax_rows(ag::scale(ag::matmul(batch.v, ag::transpose(ry)), 1.0 / tau));
  ag::Matrix diag(b, b);
  for (std::size_t i = 0; i < b; ++i) diag(i, i) = 1.0;
  return ag::scale(ag::sum(ag::mul(ls, constant(std::move(diag)))), -1.0 / static_cast<double>(b));
}

ag::Var cpce_tightness(const EncodedBatch& batch) {
  batch.validate();
  return ag::scale(ag::mean(ag::row_dot(batch.v, label_features(batch))), -1.0);
}

ag::Var cpce_diversity(const EncodedBatch& batch, double eps_log) {
  batch.validate();
  const std::size_t b = batch.batch_size();
  require(b >= 2, ErrorCode::kInvalidArgument, "cpce_diversity needs at least two samples");
  const ag::Var ry = label_features(batch);
  // arg[i, j] = (v_i + r_{y_i}) · r_{y_j}
  const ag::Var arg = ag::matmul(ag::add(batch.v, ry), ag::transpose(ry));
  ag::Matrix off(b, b, 1.0);
  for (std::size_t i = 0; i < b; ++i) off(i, i) = 0.0;
  const double d = static_cast<double>(batch.v.cols());
  const double k = d / (static_cast<double>(b) * static_cast<double>(b - 1));
  return ag::scale(ag::sum(ag::mul(ag::log_clamped(arg, eps_log), constant(std::move(off)))), k);
}

ag::Var cop_loss(const EncodedBatch& batch, const ag::Var& gamma, WeightForm form) {
  batch.validate();
  require(gamma.value().size() == 1, ErrorCode::kShapeMismatch, "cop_loss: gamma must be a scalar");
  const std::size_t b = batch.batch_size();
  const ag::Var ry = label_features(batch);
  const ag::Var attract = ag::sum(ag::row_dot(batch.v, ry));
  if (b == 1) return ag::scale(attract, -1.0);

  const ag::Var anchor = ag::add(batch.v, ag::scale_by(ry, gamma));
  const ag::Var pair = ag::matmul(anchor, ag::transpose(ry));
  ag::Matrix w(b, b);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j)
      if (i != j) w(i, j) = label_weight(batch.labels[i], batch.labels[j], batch.num_ranks(), form);
  const ag::Var repel = ag::scale(ag::sum(ag::mul(pair, constant(std::move(w)))), 1.0 / static_cast<double>(b - 1));
  return ag::scale(ag::sub(repel, attract), 1.0 / static_cast<double>(b));
}

ag::Var cop_loss(const EncodedBatch& batch, const LossConfig& cfg) {
  return cop_loss(batch, constant(ag::Matrix(1, 1, cfg.gamma)), cfg.weight_form);
}

ag::Var scop_loss(const EncodedBatch& batch, const LossConfig& cfg) {
  EncodedBatch frozen{batch.v, ag::detach(batch.r), batch.labels};
  return cop_loss(frozen, constant(ag::Matrix(1, 1, 0.0)), cfg.weight_form);
}

PceTerms pce_reference(const ag::Matrix& z, std::span<const int> labels, const ag::Matrix& p, double lambda) {
  const std::size_t n = z.rows;
  require(n >= 2, ErrorCode::kInvalidArgument, "pce_reference needs N >= 2");
  require(labels.size() == n && p.rows == n && p.cols >= 1, ErrorCode::kShapeMismatch,
          "pce_reference: labels and p must have one row per feature");
  require(lambda > 0.0, ErrorCode::kInvalidArgument, "pce_reference: lambda must be positive");
  const double nd = static_cast<double>(n);
  const ag::Matrix gram = ag::matmul_nt(z, z);

  double same = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (labels[i] == labels[j]) same += gram(i, j);

  const ag::Matrix affinity = ag::matmul(gram, p);  // [i,k] = Σ_j p_jk z_i·z_j
  double lse_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = affinity.row(i);
    double mx = -INFINITY;
    for (double a : row) mx = std::max(mx, a / (lambda * nd));
    double acc = 0.0;
    for (double a : row) acc += std::exp(a / (lambda * nd) - mx);
    lse_sum += mx + std::log(acc);
  }
  const ag::Matrix centers = ag::matmul_tn(p, z);  // c_k = Σ_i p_ik z_i
  double norms = 0.0;
  for (std::size_t k = 0; k < centers.rows; ++k) {
    double s = 0.0;
    for (double x : centers.row(k)) s += x * x;
    norms += std::sqrt(s);
  }

  PceTerms t;
  t.tightness = -same / (2.0 * lambda * nd * nd);
  t.diversity = lse_sum / nd - norms / (2.0 * lambda);
  t.total = t.tightness + t.diversity;
  return t;
}

PceTerms pce_reference(const ag::Matrix& z, std::span<const int> labels, std::size_t num_classes, double lambda,
                       double tau) {
  require(num_classes >= 1, ErrorCode::kInvalidArgument, "pce_reference: need at least one class");
  ag::Matrix means(num_classes, z.cols);
  std::vector<double> counts(num_classes, 0.0);
  for (std::size_t i = 0; i < z.rows; ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < num_classes, ErrorCode::kOutOfRange,
            "pce_reference: label out of range");
    counts[labels[i]] += 1.0;
    for (std::size_t j = 0; j < z.cols; ++j) means(labels[i], j) += z(i, j);
  }
  for (std::size_t k = 0; k < num_classes; ++k)
    if (counts[k] > 0)
      for (double& x : means.row(k)) x /= counts[k];
  const ag::Matrix p =
      softmax_probs(ag::Var::constant(z), ag::Var::constant(means), tau).value();
  return pce_reference(z, labels, p, lambda);
}

StageLoss stage_loss(int stage, const EncodedBatch& batch, const LossConfig& cfg, StageToggles toggles) {
  require(stage == 1 || stage == 2, ErrorCode::kInvalidArgument, "stage must be 1 or 2");
  cfg.validate();
  StageLoss out;
  std::vector<ag::Var> weighted;
  auto add_term = [&](const char* name, double weight, const ag::Var& term) {
    out.terms.emplace_back(name, term.item());
    weighted.push_back(ag::scale(term, weight));
  };
  if (stage == 1) {
    add_term("t2i", cfg.stage1.t2i, asym_contrastive_t2i(batch, cfg.tau));
    add_term("i2t", cfg.stage1.i2t, asym_contrastive_i2t(batch, cfg.tau, cfg.i2t_denominator));
    if (toggles.use_cop) add_term("cop", cfg.stage1.cop, cop_loss(batch, cfg));
  } else {
    add_term("ce", cfg.stage2.ce, cross_entropy(softmax_probs(batch.v, batch.r, cfg.tau), batch.labels));
    if (toggles.use_scop) add_term("scop", cfg.stage2.scop, scop_loss(batch, cfg));
  }
  ag::Var total = weighted.front();
  for (std::size_t i = 1; i < weighted.size(); ++i) total = ag::add(total, weighted[i]);
  out.total = total;
  return out;
}

}  // namespace ordino
