#include "ordino/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include "ordino/error.hpp"

namespace ordino::ag {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  require(data.size() == r * c, ErrorCode::kShapeMismatch, "matrix data size does not match shape");
}

bool Matrix::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double x) { return std::isfinite(x); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, ErrorCode::kShapeMismatch, "matmul: inner dimensions differ");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* o = out.data.data() + i * out.cols;
    for (std::size_t p = 0; p < a.cols; ++p) {
      const double s = a(i, p);
      if (s == 0.0) continue;
      const double* br = b.data.data() + p * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) o[j] += s * br[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols == b.cols, ErrorCode::kShapeMismatch, "matmul_nt: inner dimensions differ");
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ar = a.data.data() + i * a.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* br = b.data.data() + j * b.cols;
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) s += ar[p] * br[p];
      out(i, j) = s;
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows == b.rows, ErrorCode::kShapeMismatch, "matmul_tn: inner dimensions differ");
  Matrix out(a.cols, b.cols);
  for (std::size_t p = 0; p < a.rows; ++p) {
    const double* ar = a.data.data() + p * a.cols;
    const double* br = b.data.data() + p * b.cols;
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double s = ar[i];
      if (s == 0.0) continue;
      double* o = out.data.data() + i * out.cols;
      for (std::size_t j = 0; j < b.cols; ++j) o[j] += s * br[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

Matrix& Node::grad_buffer() {
  if (grad.empty() && !value.empty()) grad = Matrix(value.rows, value.cols);
  return grad;
}

Var::Var(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

double Var::item() const {
  require(node_->value.size() == 1, ErrorCode::kShapeMismatch, "item() requires a 1x1 value");
  return node_->value.data[0];
}

void Var::zero_grad() { node_->grad = Matrix(); }

void Var::backward() const {
  require(node_->value.size() == 1, ErrorCode::kShapeMismatch, "backward() requires a scalar root");
  if (!node_->requires_grad) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->grad_buffer().data[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
  // Intermediate gradients are not needed after the pass.
  for (Node* n : order)
    if (n->backward_fn) n->grad = Matrix();
}

namespace {

using Backward = std::function<void(Node&)>;

Var make_result(Matrix value, std::vector<std::shared_ptr<Node>> parents, Backward fn) {
  bool needs = std::any_of(parents.begin(), parents.end(), [](const auto& p) { return p->requires_grad; });
  Var out(std::move(value), needs);
  if (needs) {
    out.node()->parents = std::move(parents);
    out.node()->backward_fn = std::move(fn);
  }
  return out;
}

void accumulate(Node& target, const Matrix& g) {
  if (!target.requires_grad) return;
  Matrix& buf = target.grad_buffer();
  for (std::size_t i = 0; i < g.data.size(); ++i) buf.data[i] += g.data[i];
}

void check_same(const Matrix& a, const Matrix& b, const char* op) {
  require(a.same_shape(b), ErrorCode::kShapeMismatch, std::string(op) + ": operand shapes differ");
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  auto an = a.node(), bn = b.node();
  return make_result(matmul(an->value, bn->value), {an, bn}, [an, bn](Node& self) {
    if (an->requires_grad) accumulate(*an, matmul_nt(self.grad, bn->value));
    if (bn->requires_grad) accumulate(*bn, matmul_tn(an->value, self.grad));
  });
}

Var transpose(const Var& a) {
  auto an = a.node();
  return make_result(transpose(an->value), {an}, [an](Node& self) { accumulate(*an, transpose(self.grad)); });
}

Var add(const Var& a, const Var& b) {
  check_same(a.value(), b.value(), "add");
  auto an = a.node(), bn = b.node();
  Matrix v = an->value;
  for (std::size_t i = 0; i < v.size(); ++i) v.data[i] += bn->value.data[i];
  return make_result(std::move(v), {an, bn}, [an, bn](Node& self) {
    accumulate(*an, self.grad);
    accumulate(*bn, self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same(a.value(), b.value(), "sub");
  auto an = a.node(), bn = b.node();
  Matrix v = an->value;
  for (std::size_t i = 0; i < v.size(); ++i) v.data[i] -= bn->value.data[i];
  return make_result(std::move(v), {an, bn}, [an, bn](Node& self) {
    accumulate(*an, self.grad);
    if (bn->requires_grad) {
      Matrix& g = bn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] -= self.grad.data[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_same(a.value(), b.value(), "mul");
  auto an = a.node(), bn = b.node();
  Matrix v = an->value;
  for (std::size_t i = 0; i < v.size(); ++i) v.data[i] *= bn->value.data[i];
  return make_result(std::move(v), {an, bn}, [an, bn](Node& self) {
    if (an->requires_grad) {
      Matrix& g = an->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += self.grad.data[i] * bn->value.data[i];
    }
    if (bn->requires_grad) {
      Matrix& g = bn->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += self.grad.data[i] * an->value.data[i];
    }
  });
}

Var add_row(const Var& a, const Var& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), ErrorCode::kShapeMismatch, "add_row: bias must be 1 x cols");
  auto an = a.node(), rn = row.node();
  Matrix v = an->value;
  for (std::size_t i = 0; i < v.rows; ++i)
    for (std::size_t j = 0; j < v.cols; ++j) v(i, j) += rn->value.data[j];
  return make_result(std::move(v), {an, rn}, [an, rn](Node& self) {
    accumulate(*an, self.grad);
    if (rn->requires_grad) {
      Matrix& g = rn->grad_buffer();
      for (std::size_t i = 0; i < self.grad.rows; ++i)
        for (std::size_t j = 0; j < self.grad.cols; ++j) g.data[j] += self.grad(i, j);
    }
  });
}

Var scale(const Var& a, double s) {
  auto an = a.node();
  Matrix v = an->value;
  for (double& x : v.data) x *= s;
  return make_result(std::move(v), {an}, [an, s](Node& self) {
    Matrix& g = an->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += s * self.grad.data[i];
  });
}

Var scale_by(const Var& a, const Var& s) {
  require(s.value().size() == 1, ErrorCode::kShapeMismatch, "scale_by: scalar must be 1x1");
  auto an = a.node(), sn = s.node();
  const double k = sn->value.data[0];
  Matrix v = an->value;
  for (double& x : v.data) x *= k;
  return make_result(std::move(v), {an, sn}, [an, sn](Node& self) {
    const double k = sn->value.data[0];
    if (an->requires_grad) {
      Matrix& g = an->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += k * self.grad.data[i];
    }
    if (sn->requires_grad) {
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad.data[i] * an->value.data[i];
      sn->grad_buffer().data[0] += acc;
    }
  });
}

Var sum(const Var& a) {
  auto an = a.node();
  double s = 0.0;
  for (double x : an->value.data) s += x;
  return make_result(Matrix(1, 1, s), {an}, [an](Node& self) {
    Matrix& g = an->grad_buffer();
    for (double& x : g.data) x += self.grad.data[0];
  });
}

Var mean(const Var& a) {
  require(a.value().size() > 0, ErrorCode::kInvalidArgument, "mean of an empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var sum_rows(const Var& a) {
  auto an = a.node();
  Matrix v(1, an->value.cols);
  for (std::size_t i = 0; i < an->value.rows; ++i)
    for (std::size_t j = 0; j < an->value.cols; ++j) v.data[j] += an->value(i, j);
  return make_result(std::move(v), {an}, [an](Node& self) {
    Matrix& g = an->grad_buffer();
    for (std::size_t i = 0; i < g.rows; ++i)
      for (std::size_t j = 0; j < g.cols; ++j) g(i, j) += self.grad.data[j];
  });
}

Var mean_rows(const Var& a) {
  require(a.rows() > 0, ErrorCode::kInvalidArgument, "mean_rows of an empty matrix");
  return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows()));
}

Var sum_cols(const Var& a) {
  auto an = a.node();
  Matrix v(an->value.rows, 1);
  for (std::size_t i = 0; i < an->value.rows; ++i)
    for (std::size_t j = 0; j < an->value.cols; ++j) v.data[i] += an->value(i, j);
  return make_result(std::move(v), {an}, [an](Node& self) {
    Matrix& g = an->grad_buffer();
    for (std::size_t i = 0; i < g.rows; ++i)
      for (std::size_t j = 0; j < g.cols; ++j) g(i, j) += self.grad.data[i];
  });
}

Var row_dot(const Var& a, const Var& b) {
  check_same(a.value(), b.value(), "row_dot");
  auto an = a.node(), bn = b.node();
  Matrix v(an->value.rows, 1);
  for (std::size_t i = 0; i < an->value.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < an->value.cols; ++j) s += an->value(i, j) * bn->value(i, j);
    v.data[i] = s;
  }
  return make_result(std::move(v), {an, bn}, [an, bn](Node& self) {
    for (auto [src, dst] : {std::pair{bn, an}, std::pair{an, bn}}) {
      if (!dst->requires_grad) continue;
      Matrix& g = dst->grad_buffer();
      for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j) g(i, j) += self.grad.data[i] * src->value(i, j);
    }
  });
}

Var gather_rows(const Var& a, std::span<const int> index) {
  auto an = a.node();
  const Matrix& src = an->value;
  Matrix v(index.size(), src.cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] >= 0 && static_cast<std::size_t>(index[i]) < src.rows, ErrorCode::kOutOfRange,
            "gather_rows: index out of range");
    std::copy_n(src.data.data() + index[i] * src.cols, src.cols, v.data.data() + i * src.cols);
  }
  std::vector<int> idx(index.begin(), index.end());
  return make_result(std::move(v), {an}, [an, idx = std::move(idx)](Node& self) {
    Matrix& g = an->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < g.cols; ++j) g(idx[i], j) += self.grad(i, j);
  });
}

Var slice_rows(const Var& a, std::size_t start, std::size_t count) {
  require(start + count <= a.rows(), ErrorCode::kOutOfRange, "slice_rows: range exceeds rows");
  auto an = a.node();
  const std::size_t c = an->value.cols;
  Matrix v(count, c);
  std::copy_n(an->value.data.data() + start * c, count * c, v.data.data());
  return make_result(std::move(v), {an}, [an, start, count, c](Node& self) {
    Matrix& g = an->grad_buffer();
    for (std::size_t i = 0; i < count * c; ++i) g.data[start * c + i] += self.grad.data[i];
  });
}

Var slice_cols(const Var& a, std::size_t start, std::size_t count) {
  require(start + count <= a.cols(), ErrorCode::kOutOfRange, "slice_cols: range exceeds cols");
  auto an = a.node();
  Matrix v(an->value.rows, count);
  for (std::size_t i = 0; i < v.rows; ++i)
    for (std::size_t j = 0; j < count; ++j) v(i, j) = an->value(i, start + j);
  return make_result(std::move(v), {an}, [an, start, count](Node& self) {
    Matrix& g = an->grad_buffer();
    for (std::size_t i = 0; i < g.rows; ++i)
      for (std::size_t j = 0; j < count; ++j) g(i, start + j) += self.grad(i, j);
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), ErrorCode::kInvalidArgument, "concat_rows: no parts");
  const std::size_t c = parts.front().cols();
  std::size_t total = 0;
  std::vector<std::shared_ptr<Node>> nodes;
  for (const Var& p : parts) {
    require(p.cols() == c, ErrorCode::kShapeMismatch, "concat_rows: column counts differ");
    total += p.rows();
    nodes.push_back(p.node());
  }
  Matrix v(total, c);
  std::size_t off = 0;
  for (const auto& n : nodes) {
    std::copy(n->value.data.begin(), n->value.data.end(), v.data.begin() + off);
    off += n->value.size();
  }
  auto parents = nodes;
  return make_result(std::move(v), std::move(parents), [nodes](Node& self) {
    std::size_t off = 0;
    for (const auto& n : nodes) {
      if (n->requires_grad) {
        Matrix& g = n->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g.data[i] += self.grad.data[off + i];
      }
      off += n->value.size();
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), ErrorCode::kInvalidArgument, "concat_cols: no parts");
  const std::size_t r = parts.front().rows();
  std::size_t total = 0;
  std::vector<std::shared_ptr<Node>> nodes;
  for (const Var& p : parts) {
    require(p.rows() == r, ErrorCode::kShapeMismatch, "concat_cols: row counts differ");
    total += p.cols();
    nodes.push_back(p.node());
  }
  Matrix v(r, total);
  std::size_t off = 0;
  for (const auto& n : nodes) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < n->value.cols; ++j) v(i, off + j) = n->value(i, j);
    off += n->value.cols;
  }
  auto parents = nodes;
  return make_result(std::move(v), std::move(parents), [nodes](Node& self) {
    std::size_t off = 0;
    for (const auto& n : nodes) {
      if (n->requires_grad) {
        Matrix& g = n->grad_buffer();
        for (std::size_t i = 0; i < g.rows; ++i)
          for (std::size_t j = 0; j < g.cols; ++j) g(i, j) += self.grad(i, off + j);
      }
      off += n->value.cols;
    }
  });
}

Var softmax_rows(const Var& a) {
  auto an = a.node();
  Matrix v = an->value;
  for (std::size_t i = 0; i < v.rows; ++i) {
    auto r = v.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double z = 0.0;
    for (double& x : r) z += (x = std::exp(x - m));
    for (double& x : r) x /= z;
  }
  auto out = make_result(v, {an}, nullptr);
  if (out.requires_grad()) {
    out.node()->backward_fn = [an](Node& self) {
      Matrix& g = an->grad_buffer();
      for (std::size_t i = 0; i < g.rows; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < g.cols; ++j) dot += self.grad(i, j) * self.value(i, j);
        for (std::size_t j = 0; j < g.cols; ++j) g(i, j) += self.value(i, j) * (self.grad(i, j) - dot);
      }
    };
  }
  return out;
}

Var log_softmax_rows(const Var& a) {
  auto an = a.node();
  Matrix v = an->value;
  for (std::size_t i = 0; i < v.rows; ++i) {
    auto r = v.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double z = 0.0;
    for (double x : r) z += std::exp(x - m);
    const double lse = m + std::log(z);
    for (double& x : r) x -= lse;
  }
  auto out = make_result(v, {an}, nullptr);
  if (out.requires_grad()) {
    out.node()->backward_fn = [an](Node& self) {
      Matrix& g = an->grad_buffer();
      for (std::size_t i = 0; i < g.rows; ++i) {
        double gs = 0.0;
        for (std::size_t j = 0; j < g.cols; ++j) gs += self.grad(i, j);
        for (std::size_t j = 0; j < g.cols; ++j) g(i, j) += self.grad(i, j) - std::exp(self.value(i, j)) * gs;
      }
    };
  }
  return out;
}

Var log_clamped(const Var& a, double floor) {
  auto an = a.node();
  Matrix v = an->value;
  for (double& x : v.data) x = std::log(std::max(x, floor));
  return make_result(std::move(v), {an}, [an, floor](Node& self) {
    Matrix& g = an->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = an->value.data[i];
      if (x > floor) g.data[i] += self.grad.data[i] / x;
    }
  });
}

Var tanh(const Var& a) {
  auto an = a.node();
  Matrix v = an->value;
  for (double& x : v.data) x = std::tanh(x);
  auto out = make_result(v, {an}, nullptr);
  if (out.requires_grad()) {
    out.node()->backward_fn = [an](Node& self) {
      Matrix& g = an->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = self.value.data[i];
        g.data[i] += self.grad.data[i] * (1.0 - t * t);
      }
    };
  }
  return out;
}

namespace {
constexpr double kGeluC = 0.044715;
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);
}  // namespace

Var gelu(const Var& a) {
  auto an = a.node();
  Matrix v = an->value;
  for (double& x : v.data) x = 0.5 * x * (1.0 + std::tanh(kSqrt2OverPi * (x + kGeluC * x * x * x)));
  return make_result(std::move(v), {an}, [an](Node& self) {
    Matrix& g = an->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = an->value.data[i];
      const double u = kSqrt2OverPi * (x + kGeluC * x * x * x);
      const double t = std::tanh(u);
      const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluC * x * x);
      g.data[i] += self.grad.data[i] * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du);
    }
  });
}

Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps) {
  const std::size_t c = x.cols();
  require(gain.rows() == 1 && gain.cols() == c && bias.rows() == 1 && bias.cols() == c, ErrorCode::kShapeMismatch,
          "layer_norm: gain/bias must be 1 x cols");
  auto xn = x.node(), gn = gain.node(), bn = bias.node();
  const std::size_t r = x.rows();
  Matrix xhat(r, c);
  std::vector<double> inv_std(r);
  Matrix v(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += xn->value(i, j);
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (xn->value(i, j) - mu) * (xn->value(i, j) - mu);
    var /= static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat(i, j) = (xn->value(i, j) - mu) * inv_std[i];
      v(i, j) = xhat(i, j) * gn->value.data[j] + bn->value.data[j];
    }
  }
  return make_result(std::move(v), {xn, gn, bn}, [xn, gn, bn, xhat, inv_std](Node& self) {
    const std::size_t r = xhat.rows, c = xhat.cols;
    if (gn->requires_grad || bn->requires_grad) {
      Matrix& gg = gn->grad_buffer();
      Matrix& gb = bn->grad_buffer();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          if (gn->requires_grad) gg.data[j] += self.grad(i, j) * xhat(i, j);
          if (bn->requires_grad) gb.data[j] += self.grad(i, j);
        }
    }
    if (xn->requires_grad) {
      Matrix& gx = xn->grad_buffer();
      const double inv_c = 1.0 / static_cast<double>(c);
      for (std::size_t i = 0; i < r; ++i) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          const double dxh = self.grad(i, j) * gn->value.data[j];
          s1 += dxh;
          s2 += dxh * xhat(i, j);
        }
        for (std::size_t j = 0; j < c; ++j) {
          const double dxh = self.grad(i, j) * gn->value.data[j];
          gx(i, j) += inv_std[i] * (dxh - inv_c * s1 - xhat(i, j) * inv_c * s2);
        }
      }
    }
  });
}

Var normalize_rows(const Var& a, double eps_norm) {
  auto an = a.node();
  const std::size_t r = a.rows(), c = a.cols();
  Matrix v = an->value;
  std::vector<double> norms(r);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += v(i, j) * v(i, j);
    norms[i] = std::sqrt(s);
    if (!(norms[i] > eps_norm)) fail(ErrorCode::kZeroFeature, "cannot normalize a near-zero feature vector");
    for (std::size_t j = 0; j < c; ++j) v(i, j) /= norms[i];
  }
  auto out = make_result(v, {an}, nullptr);
  if (out.requires_grad()) {
    out.node()->backward_fn = [an, norms](Node& self) {
      Matrix& g = an->grad_buffer();
      for (std::size_t i = 0; i < g.rows; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < g.cols; ++j) dot += self.grad(i, j) * self.value(i, j);
        for (std::size_t j = 0; j < g.cols; ++j) g(i, j) += (self.grad(i, j) - self.value(i, j) * dot) / norms[i];
      }
    };
  }
  return out;
}

Var detach(const Var& a) { return Var::constant(a.value()); }

Var make_op(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn) {
  std::vector<std::shared_ptr<Node>> parents;
  for (const Var& v : inputs) parents.push_back(v.node());
  return make_result(std::move(value), std::move(parents), std::move(backward_fn));
}

Var clone_leaf(const Var& v) { return Var(v.value(), v.requires_grad()); }

}  // namespace ordino::ag
