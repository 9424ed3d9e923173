#pragma once

// Shared helpers for the test suites: random inputs, a central-difference
// gradient checker, and brute-force reference implementations written as
// plain loops independent of the library code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ordino/autograd.hpp"
#include "ordino/losses.hpp"
#include "ordino/metrics.hpp"

namespace testutil {

using ordino::ag::Matrix;
using ordino::ag::Var;

inline Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (double& x : m.data) x = n(rng);
  return m;
}

inline Matrix normalized(Matrix m) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (double x : m.row(i)) s += x * x;
    s = std::sqrt(s);
    for (double& x : m.row(i)) x /= s;
  }
  return m;
}

inline std::vector<int> random_labels(std::size_t b, std::size_t m, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, static_cast<int>(m) - 1);
  std::vector<int> out(b);
  for (int& y : out) y = d(rng);
  return out;
}

// Largest per-tensor relative error ||analytic - numeric|| / max(||analytic|| + ||numeric||, floor)
// over the given leaves, using central differences with step h. The floor keeps
// gradients that vanish identically (pure round-off on both sides) from scoring 1.
inline double gradient_error(const std::function<Var()>& f, const std::vector<Var*>& leaves, double h = 1e-6,
                             double floor = 1e-3) {
  for (Var* p : leaves) p->zero_grad();
  Var out = f();
  out.backward();
  double worst = 0.0;
  for (Var* p : leaves) {
    const Matrix analytic = p->grad().empty() ? Matrix(p->rows(), p->cols()) : p->grad();
    Matrix numeric(p->rows(), p->cols());
    for (std::size_t i = 0; i < p->value().size(); ++i) {
      const double orig = p->value().data[i];
      p->mutable_value().data[i] = orig + h;
      const double fp = f().item();
      p->mutable_value().data[i] = orig - h;
      const double fm = f().item();
      p->mutable_value().data[i] = orig;
      numeric.data[i] = (fp - fm) / (2.0 * h);
    }
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      diff += (analytic.data[i] - numeric.data[i]) * (analytic.data[i] - numeric.data[i]);
      na += analytic.data[i] * analytic.data[i];
      nn += numeric.data[i] * numeric.data[i];
    }
    worst = std::max(worst, std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nn), floor));
  }
  return worst;
}

// ----- brute-force references ----------------------------------------------

inline double dot(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
  return s;
}

inline double ref_weight(int a, int b, std::size_t m, ordino::WeightForm form) {
  const double d = std::abs(a - b);
  switch (form) {
    case ordino::WeightForm::kAbsolute:
      return d;
    case ordino::WeightForm::kSquared:
      return (d / (m - 1.0)) * (d / (m - 1.0));
    default:
      return d / (m - 1.0);
  }
}

// Pairs (i, j) with 0 ≤ i < m, i ≤ j < m - 1 and s[i][j] > s[i][j+1], over m(m-1)/2.
inline double ref_ordinality(const std::vector<std::vector<double>>& s) {
  const std::size_t m = s.size();
  int good = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j + 1 < m; ++j)
      if (s[i][j] > s[i][j + 1]) ++good;
  return 100.0 * good / (m * (m - 1) / 2.0);
}

inline double ref_local_ordinality(const std::vector<std::vector<double>>& s, std::size_t k) {
  const std::size_t m = s.size();
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t t = 0; t + k <= m; ++t) {
    std::vector<std::vector<double>> w(k, std::vector<double>(k));
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) w[i][j] = s[t + i][t + j];
    total += ref_ordinality(w);
    ++windows;
  }
  return total / windows;
}

inline double ref_cop(const Matrix& v, const Matrix& r, const std::vector<int>& y, double gamma,
                      ordino::WeightForm form) {
  const std::size_t b = y.size(), m = r.rows;
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double pair = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      double d = 0.0;
      for (std::size_t k = 0; k < v.cols; ++k) d += (v(i, k) + gamma * r(y[i], k)) * r(y[j], k);
      pair += ref_weight(y[i], y[j], m, form) * d;
    }
    const double attract = dot(v, i, r, y[i]);
    total += (b > 1 ? pair / (b - 1.0) : 0.0) - attract;
  }
  return total / b;
}

inline ordino::PceTerms ref_pce(const Matrix& z, const std::vector<int>& y, const Matrix& p, double lambda) {
  const std::size_t n = z.rows, kc = p.cols, d = z.cols;
  ordino::PceTerms t;
  double same = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (y[i] == y[j]) same += dot(z, i, z, j);
  t.tightness = -same / (2.0 * lambda * n * n);
  double lse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < kc; ++k) {
      double a = 0.0;
      for (std::size_t j = 0; j < n; ++j) a += p(j, k) * dot(z, i, z, j);
      acc += std::exp(a / (lambda * n));
    }
    lse += std::log(acc);
  }
  double norms = 0.0;
  for (std::size_t k = 0; k < kc; ++k) {
    double sq = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      double ck = 0.0;
      for (std::size_t i = 0; i < n; ++i) ck += p(i, k) * z(i, c);
      sq += ck * ck;
    }
    norms += std::sqrt(sq);
  }
  t.diversity = lse / n - norms / (2.0 * lambda);
  t.total = t.tightness + t.diversity;
  return t;
}

inline std::vector<std::vector<double>> to_rows(const ordino::SimilarityMatrix& s) {
  std::vector<std::vector<double>> out(s.size, std::vector<double>(s.size));
  for (std::size_t i = 0; i < s.size; ++i)
    for (std::size_t j = 0; j < s.size; ++j) out[i][j] = s(i, j);
  return out;
}

inline ordino::SimilarityMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  ordino::SimilarityMatrix s;
  s.size = rows.size();
  for (const auto& r : rows) s.s.insert(s.s.end(), r.begin(), r.end());
  return s;
}

inline ordino::SimilarityMatrix random_similarity(std::size_t m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  // Coarse values so ties occur and exercise the strict inequality.
  std::uniform_int_distribution<int> coarse(0, 3);
  ordino::SimilarityMatrix s;
  s.size = m;
  s.s.resize(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      const double x = i == j ? 1.0 : (coarse(rng) == 0 ? 0.5 : u(rng));
      s(i, j) = s(j, i) = x;
    }
  return s;
}

}  // namespace testutil
