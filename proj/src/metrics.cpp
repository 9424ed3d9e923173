#include "ordino/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ordino/error.hpp"

namespace ordino {

SimilarityMatrix similarity_matrix(const ag::Matrix& rank_features) {
  const ag::Matrix g = ag::matmul_nt(rank_features, rank_features);
  return {g.rows, g.data};
}

namespace {

double window_score(const SimilarityMatrix& s, std::size_t start, std::size_t k) {
  std::size_t good = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j + 1 < k; ++j)
      if (s(start + i, start + j) > s(start + i, start + j + 1)) ++good;
  return 100.0 * static_cast<double>(good) / (static_cast<double>(k) * static_cast<double>(k - 1) / 2.0);
}

}  // namespace

double ordinality_score(const SimilarityMatrix& s) {
  require(s.size >= 2, ErrorCode::kInvalidArgument, "ordinality score needs M >= 2");
  return window_score(s, 0, s.size);
}

double local_ordinality_score(const SimilarityMatrix& s, std::size_t window) {
  require(window >= 2 && window <= s.size, ErrorCode::kOutOfRange,
          "window size must satisfy 2 <= K <= M (K=" + std::to_string(window) + ", M=" + std::to_string(s.size) +
              ")");
  double acc = 0.0;
  const std::size_t count = s.size - window + 1;
  for (std::size_t t = 0; t < count; ++t) acc += window_score(s, t, window);
  return acc / static_cast<double>(count);
}

std::vector<int> predict_rank(const ag::Matrix& v, const ag::Matrix& r) {
  require(v.cols == r.cols && r.rows >= 1, ErrorCode::kShapeMismatch, "predict_rank: feature widths differ");
  const ag::Matrix scores = ag::matmul_nt(v, r);
  std::vector<int> out(v.rows);
  for (std::size_t i = 0; i < v.rows; ++i) {
    auto row = scores.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

MaeAccuracy mae_accuracy(std::span<const int> preds, std::span<const int> labels, std::span<const double> rank_values) {
  require(preds.size() == labels.size() && !preds.empty(), ErrorCode::kShapeMismatch,
          "mae_accuracy: predictions and labels differ in length");
  double err = 0.0, hits = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    require(preds[i] >= 0 && static_cast<std::size_t>(preds[i]) < rank_values.size() && labels[i] >= 0 &&
                static_cast<std::size_t>(labels[i]) < rank_values.size(),
            ErrorCode::kOutOfRange, "mae_accuracy: rank index out of range");
    err += std::abs(rank_values[preds[i]] - rank_values[labels[i]]);
    hits += preds[i] == labels[i] ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(preds.size());
  return {err / n, 100.0 * hits / n};
}

void write_similarity_csv(const SimilarityMatrix& s, std::ostream& os) {
  os << "m=" << s.size << "\n" << std::setprecision(9);
  for (std::size_t i = 0; i < s.size; ++i) {
    for (std::size_t j = 0; j < s.size; ++j) os << (j ? "," : "") << s(i, j);
    os << "\n";
  }
}

SimilarityMatrix read_similarity_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)) && line.rfind("m=", 0) == 0, ErrorCode::kParse,
          "similarity CSV: missing 'm=<M>' header");
  SimilarityMatrix s;
  try {
    s.size = std::stoul(line.substr(2));
  } catch (const std::exception&) {
    fail(ErrorCode::kParse, "similarity CSV: bad header '" + line + "'");
  }
  s.s.reserve(s.size * s.size);
  for (std::size_t i = 0; i < s.size; ++i) {
    require(static_cast<bool>(std::getline(is, line)), ErrorCode::kParse,
            "similarity CSV: expected " + std::to_string(s.size) + " rows");
    std::stringstream row(line);
    std::string cell;
    std::size_t n = 0;
    while (std::getline(row, cell, ',')) {
      try {
        s.s.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorCode::kParse, "similarity CSV: bad value '" + cell + "' in row " + std::to_string(i + 1));
      }
      ++n;
    }
    require(n == s.size, ErrorCode::kParse, "similarity CSV: row " + std::to_string(i + 1) + " has wrong width");
  }
  return s;
}

void save_similarity_csv(const SimilarityMatrix& s, const std::string& path) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot write " + path);
  write_similarity_csv(s, os);
}

SimilarityMatrix load_similarity_csv(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::kIo, "cannot read " + path);
  return read_similarity_csv(is);
}

void write_heatmap_ppm(const SimilarityMatrix& s, const std::string& path, std::size_t cell) {
  require(s.size > 0 && cell > 0, ErrorCode::kInvalidArgument, "heatmap: empty matrix");
  const std::size_t side = s.size * cell;
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::kIo, "cannot write " + path);
  os << "P6\n" << side << " " << side << "\n255\n";
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const double v = std::clamp(s(y / cell, x / cell), -1.0, 1.0);
      unsigned char rgb[3];
      if (v >= 0) {
        rgb[0] = 255;
        rgb[1] = rgb[2] = static_cast<unsigned char>(std::lround(255.0 * (1.0 - v)));
      } else {
        rgb[2] = 255;
        rgb[0] = rgb[1] = static_cast<unsigned char>(std::lround(255.0 * (1.0 + v)));
      }
      os.write(reinterpret_cast<const char*>(rgb), 3);
    }
  }
}

}  // namespace ordino
