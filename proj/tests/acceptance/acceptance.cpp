// Acceptance checks. Prints one PASS/FAIL (or SKIP) line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ordino/config.hpp"
#include "ordino/data.hpp"
#include "ordino/encoders.hpp"
#include "ordino/harness.hpp"
#include "ordino/losses.hpp"
#include "ordino/metrics.hpp"
#include "ordino/rankformer.hpp"
#include "test_util.hpp"

using namespace ordino;
using ag::Matrix;
using ag::Var;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void skip(const std::string& id, const std::string& detail) {
  std::printf("SKIP criterion %s: %s\n", id.c_str(), detail.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Case {
  Var v_raw, r_raw;
  std::vector<int> y;
  EncodedBatch batch() const {
    return {ag::normalize_rows(v_raw, kNormEpsilon), ag::normalize_rows(r_raw, kNormEpsilon), y};
  }
};

Case random_case(std::mt19937_64& rng, std::size_t b, std::size_t m, std::size_t d) {
  return {Var::parameter(testutil::random_matrix(b, d, rng)), Var::parameter(testutil::random_matrix(m, d, rng)),
          testutil::random_labels(b, m, rng)};
}

// ----- 1: gradients ----------------------------------------------------------

void criterion_gradients() {
  const auto t0 = Clock::now();
  constexpr int kSeeds = 20;
  constexpr double kTol = 1e-4;
  std::vector<std::pair<std::string, double>> worst = {
      {"softmax+ce", 0.0}, {"t2i", 0.0},  {"i2t", 0.0},  {"tightness", 0.0},
      {"diversity", 0.0},  {"cop", 0.0},  {"scop", 0.0}, {"rankformer", 0.0}};
  auto bump = [&](std::size_t k, double e) { worst[k].second = std::max(worst[k].second, std::isfinite(e) ? e : 1e9); };
  LossConfig cfg;
  cfg.gamma = 0.3;
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const std::size_t b = 2 + seed % 6, m = 3 + seed % 8, d = 4 + seed % 3;
    Case c = random_case(rng, b, m, d);
    const std::vector<Var*> leaves{&c.v_raw, &c.r_raw};
    const double tau = 0.2 + 0.05 * (seed % 4);
    bump(0, testutil::gradient_error(
                [&] {
                  const EncodedBatch e = c.batch();
                  return cross_entropy(softmax_probs(e.v, e.r, tau), e.labels);
                },
                leaves));
    bump(1, testutil::gradient_error([&] { return asym_contrastive_t2i(c.batch(), tau); }, leaves));
    bump(2, testutil::gradient_error([&] { return asym_contrastive_i2t(c.batch(), tau); }, leaves));
    bump(3, testutil::gradient_error([&] { return cpce_tightness(c.batch()); }, leaves));
    // Features kept near each other so every diversity log argument stays above the clamp.
    Case near = c;
    near.v_raw = Var::parameter(testutil::random_matrix(b, d, rng, 0.1));
    near.r_raw = Var::parameter(testutil::random_matrix(m, d, rng, 0.1));
    for (Var* p : {&near.v_raw, &near.r_raw})
      for (std::size_t i = 0; i < p->rows(); ++i) p->mutable_value()(i, 0) += 1.0;
    bump(4, testutil::gradient_error([&] { return cpce_diversity(near.batch(), 1e-6); }, {&near.v_raw, &near.r_raw}));
    Var gamma = Var::parameter(Matrix(1, 1, {0.3}));
    bump(5, testutil::gradient_error([&] { return cop_loss(c.batch(), gamma, WeightForm::kLinearNormalized); },
                                     {&c.v_raw, &c.r_raw, &gamma}));
    bump(6, testutil::gradient_error([&] { return scop_loss(c.batch(), cfg); }, {&c.v_raw}));

    RankFormerConfig rc;
    rc.d_embed = 4 * (1 + seed % 2);
    rc.heads = 2;
    rc.d_ff = 2 * rc.d_embed;
    rc.alpha = 0.4;
    RankFormerParams p = init_rankformer(rc, rng);
    for (auto& np : p.parameters())
      np.var->mutable_value() = testutil::random_matrix(np.var->rows(), np.var->cols(), rng, 0.5);
    std::vector<Var> pos;
    std::vector<Matrix> weights;
    for (std::size_t k = 0; k < 2; ++k) {
      pos.push_back(Var::parameter(testutil::random_matrix(m, rc.d_embed, rng)));
      weights.push_back(testutil::random_matrix(m, rc.d_embed, rng));
    }
    std::vector<Var*> rf_leaves{&pos[0], &pos[1]};
    for (auto& np : p.parameters()) rf_leaves.push_back(np.var);
    bump(7, testutil::gradient_error(
                [&] {
                  const std::vector<Var> out = refine(pos, p);
                  Var total = ag::sum(ag::mul(out[0], Var::constant(weights[0])));
                  return ag::add(total, ag::sum(ag::mul(out[1], Var::constant(weights[1]))));
                },
                rf_leaves));
  }
  const double secs = seconds_since(t0);
  bool ok = secs < 120.0;
  std::string detail = "finite-difference relative error over " + std::to_string(kSeeds) + " seeds:";
  for (const auto& [name, e] : worst) {
    ok = ok && e <= kTol;
    detail += " " + name + "=" + fmt("%.2e", e);
  }
  report(1, ok, detail + fmt(" (limit 1e-4), %.1fs (limit 120s)", secs));
}

// ----- 2: oracles ------------------------------------------------------------

void criterion_oracles() {
  const auto t0 = Clock::now();
  constexpr int kInstances = 120;
  double os_err = 0.0, los_err = 0.0, cop_err = 0.0, pce_err = 0.0;
  for (int seed = 0; seed < kInstances; ++seed) {
    std::mt19937_64 rng(5000 + seed);
    const std::size_t m = 2 + seed % 11, b = 1 + seed % 8, d = 3 + seed % 4;
    const SimilarityMatrix s = testutil::random_similarity(m, rng);
    const auto rows = testutil::to_rows(s);
    os_err = std::max(os_err, std::abs(ordinality_score(s) - testutil::ref_ordinality(rows)));
    for (std::size_t k = 2; k <= m; ++k)
      los_err = std::max(los_err, std::abs(local_ordinality_score(s, k) - testutil::ref_local_ordinality(rows, k)));

    const Matrix v = testutil::normalized(testutil::random_matrix(b, d, rng));
    const Matrix r = testutil::normalized(testutil::random_matrix(m, d, rng));
    const std::vector<int> y = testutil::random_labels(b, m, rng);
    const double gamma = 0.05 * (seed % 7);
    const auto form = static_cast<WeightForm>(seed % 3);
    const EncodedBatch e{Var::constant(v), Var::constant(r), y};
    const double cop = cop_loss(e, Var::constant(Matrix(1, 1, {gamma})), form).item();
    cop_err = std::max(cop_err, std::abs(cop - testutil::ref_cop(v, r, y, gamma, form)));

    const std::size_t n = 2 + seed % 7, kc = 1 + seed % 4;
    const Matrix z = testutil::random_matrix(n, d, rng, 0.5);
    std::vector<int> yz = testutil::random_labels(n, kc, rng);
    Matrix p(n, kc);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      double total = 0.0;
      for (std::size_t k = 0; k < kc; ++k) total += p(i, k) = u(rng);
      for (std::size_t k = 0; k < kc; ++k) p(i, k) /= total;
    }
    const double lambda = 0.5 + 0.25 * (seed % 3);
    const PceTerms got = pce_reference(z, yz, p, lambda);
    const PceTerms want = testutil::ref_pce(z, yz, p, lambda);
    pce_err = std::max({pce_err, std::abs(got.tightness - want.tightness), std::abs(got.diversity - want.diversity),
                        std::abs(got.total - want.total)});
  }
  const double secs = seconds_since(t0);
  const bool ok = os_err <= 1e-10 && los_err <= 1e-10 && cop_err <= 1e-10 && pce_err <= 1e-10 && secs < 60.0;
  report(2, ok,
         std::to_string(kInstances) + " instances, max |diff|: OS=" + fmt("%.1e", os_err) + " LOS=" +
             fmt("%.1e", los_err) + " cop=" + fmt("%.1e", cop_err) + " pce=" + fmt("%.1e", pce_err) +
             fmt(" (limit 1e-10), %.1fs (limit 60s)", secs));
}

// ----- 3: identities ---------------------------------------------------------

void criterion_identities() {
  bool alpha0 = true, scop_eq = true, scop_grad = true, los_eq = true;
  double t2i_err = 0.0, b1 = 0.0;
  LossConfig cfg;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(9000 + seed);
    RankFormerConfig rc;
    rc.d_embed = 8;
    rc.heads = 2;
    rc.alpha = 0.0;
    RankFormerParams p = init_rankformer(rc, rng);
    for (auto& np : p.parameters())
      np.var->mutable_value() = testutil::random_matrix(np.var->rows(), np.var->cols(), rng, 0.5);
    std::vector<Matrix> pos{testutil::random_matrix(6, 8, rng), testutil::random_matrix(6, 8, rng)};
    const RankTokenEmbeddings tokens = RankTokenEmbeddings::from_positions(pos);
    alpha0 = alpha0 && refine(tokens, p).values() == tokens.values();

    const std::size_t b = 2 + seed % 6, m = 8;
    const Matrix v = testutil::normalized(testutil::random_matrix(b, 5, rng));
    const Matrix r = testutil::normalized(testutil::random_matrix(m, 5, rng));
    const std::vector<int> y = testutil::random_labels(b, m, rng);
    Var vp = Var::parameter(v), rp = Var::parameter(r);
    const Var scop = scop_loss({vp, rp, y}, cfg);
    const Var cop0 = cop_loss({Var::constant(v), Var::constant(r), y}, Var::constant(Matrix(1, 1, {0.0})),
                              cfg.weight_form);
    scop_eq = scop_eq && scop.item() == cop0.item();
    scop.backward();
    scop_grad = scop_grad && std::all_of(rp.grad().data.begin(), rp.grad().data.end(), [](double g) { return g == 0.0; });

    // Distinct labels: compare against the standard one-positive contrastive loss.
    std::vector<int> distinct(m);
    for (std::size_t k = 0; k < m; ++k) distinct[k] = static_cast<int>(k);
    std::shuffle(distinct.begin(), distinct.end(), rng);
    distinct.resize(b);
    const double tau = 0.1;
    double ref = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      double denom = 0.0;
      for (std::size_t j = 0; j < b; ++j) denom += std::exp(testutil::dot(v, j, r, distinct[i]) / tau);
      ref -= std::log(std::exp(testutil::dot(v, i, r, distinct[i]) / tau) / denom);
    }
    ref /= static_cast<double>(b);
    const double got = asym_contrastive_t2i({Var::constant(v), Var::constant(r), distinct}, tau).item();
    t2i_err = std::max(t2i_err, std::abs(got - ref));

    const Matrix one = testutil::normalized(testutil::random_matrix(1, 5, rng));
    b1 = std::max(b1, std::abs(asym_contrastive_t2i({Var::constant(one), Var::constant(r), {seed % 8}}, tau).item()));

    const SimilarityMatrix s = testutil::random_similarity(2 + seed % 11, rng);
    los_eq = los_eq && local_ordinality_score(s, s.size) == ordinality_score(s);
  }
  const bool ok = alpha0 && scop_eq && scop_grad && t2i_err <= 1e-12 && b1 == 0.0 && los_eq;
  report(3, ok,
         std::string("alpha=0 identity ") + (alpha0 ? "exact" : "differs") + ", scop==cop(0) " +
             (scop_eq ? "exact" : "differs") + ", scop text grad " + (scop_grad ? "zero" : "nonzero") +
             ", t2i vs standard " + fmt("%.1e", t2i_err) + " (limit 1e-12), B=1 t2i " + fmt("%.1e", b1) +
             ", LOS(M)==OS " + (los_eq ? "yes" : "no"));
}

// ----- 4: metric arithmetic --------------------------------------------------

void criterion_metric_arithmetic() {
  bool ok = true;
  std::string detail;
  for (std::size_t m : {2u, 10u, 101u}) {
    SimilarityMatrix s;
    s.size = m;
    s.s.resize(m * m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) s(i, j) = std::exp(-0.3 * std::abs(double(i) - double(j)));
    const double os = ordinality_score(s);
    ok = ok && os == 100.0;
    detail += "monotone M=" + std::to_string(m) + " OS=" + fmt("%.4f", os) + "; ";
  }
  report(4, ok, detail + "vanilla-backbone fixture checked separately");

  const std::filesystem::path fixture = std::filesystem::path(ORDINO_FIXTURE_DIR) / "vanilla_age_similarity.csv";
  if (!std::filesystem::exists(fixture)) {
    skip("4b", "no vanilla-backbone similarity fixture at " + fixture.string());
    return;
  }
  const double os = ordinality_score(load_similarity_csv(fixture.string()));
  report(4, std::abs(os - 55.36) <= 0.01, "vanilla-backbone fixture OS=" + fmt("%.4f", os) + " (target 55.36 ± 0.01)");
}

// ----- 5: end-to-end ---------------------------------------------------------

RunConfig desk_config(std::uint64_t seed, bool baseline) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.data.num_classes = 10;
  cfg.data.train_per_class = 200;
  cfg.data.test_per_class = 50;
  cfg.train.ablation.baseline_coop_mode = baseline;
  return cfg;
}

void criterion_end_to_end() {
  constexpr int kSeeds = 3;
  double full_os = 0.0, init_os = 0.0, full_mae = 0.0, base_mae = 0.0, slowest = 0.0;
  bool each_improves = true;
  std::string per_seed;
  for (int s = 0; s < kSeeds; ++s) {
    const std::uint64_t seed = 1 + s;
    for (bool baseline : {false, true}) {
      const RunConfig cfg = desk_config(seed, baseline);
      const auto t0 = Clock::now();
      const ExperimentData data = load_experiment_data(cfg);
      const ExperimentOutputs out = run_experiment(cfg, data);
      const double secs = seconds_since(t0);
      if (baseline) {
        base_mae += out.report.mae / kSeeds;
        per_seed += fmt(" base MAE=%.3f;", out.report.mae);
      } else {
        slowest = std::max(slowest, secs);
        full_os += out.report.os / kSeeds;
        init_os += out.initial.os / kSeeds;
        full_mae += out.report.mae / kSeeds;
        each_improves = each_improves && out.report.os > out.initial.os;
        per_seed += fmt(" seed %.0f:", double(seed)) + fmt(" full MAE=%.3f", out.report.mae) +
                    fmt(" OS %.2f", out.initial.os) + fmt("->%.2f", out.report.os) + fmt(" (%.0fs),", secs);
      }
    }
  }
  const double reduction = base_mae > 0.0 ? 1.0 - full_mae / base_mae : 0.0;
  const bool a = full_os >= 90.0;
  const bool b = reduction >= 0.20;
  const bool c = full_os > init_os && each_improves;
  const bool t = slowest < 600.0;
  report(5, a && b && c && t,
         fmt("(a) mean OS=%.2f (>=90)", full_os) + fmt(", (b) MAE %.3f", full_mae) + fmt(" vs baseline %.3f", base_mae) +
             fmt(" = %.1f%% lower (>=20%%)", 100.0 * reduction) + fmt(", (c) initial OS %.2f", init_os) +
             fmt(" -> %.2f", full_os) + fmt(", slowest full run %.0fs (<600s);", slowest) + per_seed);
}

// ----- 6: protocol harness ---------------------------------------------------

void criterion_protocols() {
  DatasetSpec spec;
  spec.num_classes = 5;
  spec.counts = {1, 3, 20, 64, 100};
  spec.image_size = 4;
  const Dataset small = generate_synthetic(spec, 0.0, 3);
  bool few_ok = true;
  for (std::size_t k : {1u, 2u, 4u, 8u, 16u, 32u, 64u}) {
    const auto hist = few_shot_subsample(small, k, 11).histogram();
    for (std::size_t c = 0; c < spec.num_classes; ++c) few_ok = few_ok && hist[c] == std::min(k, spec.counts[c]);
  }

  DatasetSpec big;
  big.num_classes = 101;
  big.counts.assign(101, 100);
  big.image_size = 2;
  const Dataset uniform = generate_synthetic(big, 0.0, 4);
  const Dataset shifted = distribution_shift_subsample(uniform, 10, 90.0, 12);
  const std::size_t want = 91 * 100 + 10 * 10;
  report(6, few_ok && shifted.size() == want,
         std::string("few-shot min(k, n_c) for k in {1..64}: ") + (few_ok ? "exact" : "wrong") +
             "; shift (10, 90%) on 101x100 gives " + std::to_string(shifted.size()) + " (want " +
             std::to_string(want) + ")");
}

// ----- 7: determinism and persistence ----------------------------------------

void criterion_determinism() {
  ::setenv("ORDINO_DETERMINISTIC", "1", 1);
  RunConfig cfg;
  cfg.seed = 21;
  cfg.data.num_classes = 5;
  cfg.data.train_per_class = 20;
  cfg.data.test_per_class = 6;
  cfg.data.image_size = 12;
  cfg.train.stage1_epochs = 2;
  cfg.train.stage2_epochs = 2;
  cfg.train.decay_epoch = 0;
  cfg.eval.los_windows = {2, 4};
  const ExperimentData data = load_experiment_data(cfg);
  const ExperimentOutputs a = run_experiment(cfg, data);
  const ExperimentOutputs b = run_experiment(cfg, load_experiment_data(cfg));
  const bool same_runs = a.report.to_json() == b.report.to_json();

  const auto path = std::filesystem::temp_directory_path() / "ordino_acceptance.ckpt";
  save_checkpoint(a.stage2, path);
  const Report reloaded = evaluate(*restore(load_checkpoint(path)), data.test);
  std::filesystem::remove(path);
  const bool same_eval = reloaded.to_json() == a.report.to_json() && reloaded.similarity.s == a.report.similarity.s;
  ::unsetenv("ORDINO_DETERMINISTIC");
  report(7, same_runs && same_eval,
         std::string("repeated seeded run report JSON ") + (same_runs ? "identical" : "differs") +
             "; checkpoint round-trip evaluation " + (same_eval ? "identical" : "differs"));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  const auto guarded = [](int id, void (*fn)()) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("threw: ") + e.what());
    }
  };
  guarded(1, criterion_gradients);
  guarded(2, criterion_oracles);
  guarded(3, criterion_identities);
  guarded(4, criterion_metric_arithmetic);
  guarded(6, criterion_protocols);
  guarded(7, criterion_determinism);
  guarded(5, criterion_end_to_end);
  std::printf("%d criterion failure(s), %.0fs total\n", g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
