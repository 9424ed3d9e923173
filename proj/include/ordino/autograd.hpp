#pragma once

// Minimal reverse-mode automatic differentiation over dense row-major
// double matrices. Every training objective and the RankFormer block are
// expressed through these ops, so one backward pass yields the analytic
// gradient that the finite-difference suites check.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ordino::ag {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;
};

// Plain (non-differentiable) kernels, shared by ops and by callers that only
// need values.
Matrix matmul(const Matrix& a, const Matrix& b);
// a · bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// aᵀ · b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  Matrix& grad_buffer();
};

class Var {
 public:
  Var() = default;
  Var(Matrix value, bool requires_grad);

  static Var parameter(Matrix value) { return Var(std::move(value), true); }
  static Var constant(Matrix value) { return Var(std::move(value), false); }

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  // Mutating the value of a leaf is how optimizers update parameters.
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  std::size_t rows() const { return node_->value.rows; }
  std::size_t cols() const { return node_->value.cols; }
  double item() const;

  // Seeds d(self)/d(self) = 1 and accumulates into every reachable leaf.
  void backward() const;
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// Broadcasts a 1×c row over every row of a.
Var add_row(const Var& a, const Var& row);
Var scale(const Var& a, double s);
// a * s where s is a differentiable 1×1 scalar.
Var scale_by(const Var& a, const Var& s);
Var sum(const Var& a);
Var mean(const Var& a);
// Column-wise reduction over rows: r×c → 1×c.
Var sum_rows(const Var& a);
Var mean_rows(const Var& a);
// Row-wise reduction over columns: r×c → r×1.
Var sum_cols(const Var& a);
// Row-wise inner product: r×c, r×c → r×1.
Var row_dot(const Var& a, const Var& b);
Var gather_rows(const Var& a, std::span<const int> index);
Var slice_rows(const Var& a, std::size_t start, std::size_t count);
Var slice_cols(const Var& a, std::size_t start, std::size_t count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);
// log(max(a, floor)); gradient is zero wherever the floor is active.
Var log_clamped(const Var& a, double floor);
Var tanh(const Var& a);
// tanh-approximated GELU.
Var gelu(const Var& a);
Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps);
// Each row divided by its Euclidean norm; throws ZeroFeature when a norm is
// below eps_norm.
Var normalize_rows(const Var& a, double eps_norm);
Var detach(const Var& a);

// Builds a node for an op defined outside this module. The backward callback
// receives the finished node (value and upstream gradient) and must
// accumulate into the grad_buffer() of those inputs that require grad.
Var make_op(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn);

// A trainable leaf together with its stable checkpoint name.
struct NamedParam {
  std::string name;
  Var* var;
};

// Copies parameter values into fresh leaves so that two modules never share
// storage.
Var clone_leaf(const Var& v);

}  // namespace ordino::ag
