#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ordino/autograd.hpp"

namespace ordino {

// M × M cosine similarities between rank text features.
struct SimilarityMatrix {
  std::size_t size = 0;
  std::vector<double> s;

  double operator()(std::size_t i, std::size_t j) const { return s[i * size + j]; }
  double& operator()(std::size_t i, std::size_t j) { return s[i * size + j]; }
};

SimilarityMatrix similarity_matrix(const ag::Matrix& rank_features);

// Percentage of (i, j), i ≤ j ≤ M-1, with s[i][j] > s[i][j+1] (1-based), out
// of M(M-1)/2. Ties count as violations.
double ordinality_score(const SimilarityMatrix& s);

// Mean ordinality score over every K × K principal window along the diagonal.
double local_ordinality_score(const SimilarityMatrix& s, std::size_t window);

// argmax_k v_i · r_k, ties to the smallest index.
std::vector<int> predict_rank(const ag::Matrix& v, const ag::Matrix& r);

struct MaeAccuracy {
  double mae = 0.0;
  double accuracy = 0.0;  // percent
};

MaeAccuracy mae_accuracy(std::span<const int> preds, std::span<const int> labels, std::span<const double> rank_values);

// "m=<M>" header then M rows of M values with 9 significant digits.
void write_similarity_csv(const SimilarityMatrix& s, std::ostream& os);
SimilarityMatrix read_similarity_csv(std::istream& is);
void save_similarity_csv(const SimilarityMatrix& s, const std::string& path);
SimilarityMatrix load_similarity_csv(const std::string& path);

// Binary PPM heatmap, one cell per entry scaled by `cell` pixels, values
// mapped from [-1, 1] onto a blue-white-red ramp.
void write_heatmap_ppm(const SimilarityMatrix& s, const std::string& path, std::size_t cell = 8);

}  // namespace ordino
