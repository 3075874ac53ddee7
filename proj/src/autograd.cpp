// Copyright 2026 The debias-bench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "debias/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "debias/error.hpp"

namespace debias::ad {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("tensor data has " + std::to_string(data_.size()) + " entries, expected " +
                     std::to_string(rows_ * cols_));
  }
}

std::string Tensor::shape_str() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Node::grad_buffer() {
  if (!grad.same_shape(value)) grad = Tensor(value.rows(), value.cols());
  return grad;
}

Value Value::constant(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->op = "constant";
  return Value(std::move(n));
}

Value Value::parameter(Tensor t) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->op = "parameter";
  n->requires_grad = true;
  return Value(std::move(n));
}

Tensor Value::grad() const {
  if (node_->grad.same_shape(node_->value)) return node_->grad;
  return Tensor(rows(), cols());
}

double Value::item() const {
  if (node_->value.size() != 1) {
    throw ShapeError(std::string("item() on non-scalar ") + node_->value.shape_str());
  }
  return node_->value[0];
}

void Value::zero_grad() const {
  if (node_->grad.same_shape(node_->value)) node_->grad.fill(0.0);
}

void Value::backward() const {
  if (node_->value.size() != 1) {
    throw ShapeError(std::string("backward() from non-scalar ") + node_->value.shape_str());
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
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

  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad.same_shape(n->value)) n->backward_fn(*n);
  }
}

namespace {

void check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
}

// Builds an interior node. The backward closure is attached only when some
// input requires a gradient.
Value make_node(Tensor value, std::vector<Value> inputs, const char* op,
                std::function<void(Node&)> backward) {
  check_finite(value, op);
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = op;
  for (const auto& in : inputs) n->requires_grad = n->requires_grad || in.requires_grad();
  if (n->requires_grad) {
    n->parents.reserve(inputs.size());
    for (auto& in : inputs) n->parents.push_back(in.node());
    n->backward_fn = std::move(backward);
  }
  return Value(std::move(n));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  }
}

// Accumulates `g` (shape of the broadcast output) into the gradient of an
// operand that may have been broadcast along rows and/or columns.
void accumulate_broadcast(Node& target, const Tensor& g, const Tensor& factor, bool use_factor) {
  if (!target.requires_grad) return;
  Tensor& tg = target.grad_buffer();
  const bool brow = tg.rows() == 1 && g.rows() != 1;
  const bool bcol = tg.cols() == 1 && g.cols() != 1;
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      const double v = use_factor ? g(r, c) * factor(r, c) : g(r, c);
      tg(brow ? 0 : r, bcol ? 0 : c) += v;
    }
  }
}

std::size_t broadcast_dim(std::size_t a, std::size_t b, const char* op, const Tensor& ta,
                          const Tensor& tb) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  throw ShapeError(std::string(op) + ": cannot broadcast " + ta.shape_str() + " with " +
                   tb.shape_str());
}

template <typename F>
Tensor broadcast_apply(const Tensor& a, const Tensor& b, const char* op, F f) {
  const std::size_t rows = broadcast_dim(a.rows(), b.rows(), op, a, b);
  const std::size_t cols = broadcast_dim(a.cols(), b.cols(), op, a, b);
  Tensor out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t ra = a.rows() == 1 ? 0 : r;
    const std::size_t rb = b.rows() == 1 ? 0 : r;
    for (std::size_t c = 0; c < cols; ++c) {
      out(r, c) = f(a(ra, a.cols() == 1 ? 0 : c), b(rb, b.cols() == 1 ? 0 : c));
    }
  }
  return out;
}

// Expands an operand to the broadcast output shape.
Tensor expand(const Tensor& t, std::size_t rows, std::size_t cols) {
  if (t.rows() == rows && t.cols() == cols) return t;
  Tensor out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out(r, c) = t(t.rows() == 1 ? 0 : r, t.cols() == 1 ? 0 : c);
  return out;
}

void matmul_into(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = &out(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      const double* brow = b.row_span(p).data();
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

// out += a^T * g
void matmul_at_into(const Tensor& a, const Tensor& g, Tensor& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = g.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* grow = g.row_span(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      double* orow = &out(p, 0);
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * grow[j];
    }
  }
}

// out += g * b^T
void matmul_bt_into(const Tensor& g, const Tensor& b, Tensor& out) {
  const std::size_t n = g.rows(), m = g.cols(), k = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* grow = g.row_span(i).data();
    double* orow = &out(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b.row_span(p).data();
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
      orow[p] += acc;
    }
  }
}

}  // namespace

Value matmul(const Value& a, const Value& b) {
  const Tensor& ta = a.data();
  const Tensor& tb = b.data();
  if (ta.cols() != tb.rows()) {
    throw ShapeError("matmul: " + ta.shape_str() + " x " + tb.shape_str());
  }
  Tensor out(ta.rows(), tb.cols());
  matmul_into(ta, tb, out);
  return make_node(std::move(out), {a, b}, "matmul", [](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    if (pa.requires_grad) matmul_bt_into(n.grad, pb.value, pa.grad_buffer());
    if (pb.requires_grad) matmul_at_into(pa.value, n.grad, pb.grad_buffer());
  });
}

Value affine(const Value& x, const Value& w, const Value& b) {
  const Tensor& tx = x.data();
  const Tensor& tw = w.data();
  const Tensor& tb = b.data();
  if (tx.cols() != tw.rows() || tb.rows() != 1 || tb.cols() != tw.cols()) {
    throw ShapeError("affine: x" + tx.shape_str() + " w" + tw.shape_str() + " b" +
                     tb.shape_str());
  }
  Tensor out(tx.rows(), tw.cols());
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = tb(0, c);
  matmul_into(tx, tw, out);
  return make_node(std::move(out), {x, w, b}, "affine", [](Node& n) {
    Node& px = *n.parents[0];
    Node& pw = *n.parents[1];
    Node& pb = *n.parents[2];
    if (px.requires_grad) matmul_bt_into(n.grad, pw.value, px.grad_buffer());
    if (pw.requires_grad) matmul_at_into(px.value, n.grad, pw.grad_buffer());
    if (pb.requires_grad) {
      Tensor& gb = pb.grad_buffer();
      for (std::size_t r = 0; r < n.grad.rows(); ++r)
        for (std::size_t c = 0; c < n.grad.cols(); ++c) gb(0, c) += n.grad(r, c);
    }
  });
}

Value transpose(const Value& a) {
  const Tensor& t = a.data();
  Tensor out(t.cols(), t.rows());
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) out(c, r) = t(r, c);
  return make_node(std::move(out), {a}, "transpose", [](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) g(r, c) += n.grad(c, r);
  });
}

Value relu(const Value& x) {
  Tensor out = x.data();
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  return make_node(std::move(out), {x}, "relu", [](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    const Tensor& in = n.parents[0]->value;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (in[i] > 0.0) g[i] += n.grad[i];
  });
}

Value sigmoid(const Value& x) {
  Tensor out = x.data();
  for (auto& v : out.values()) {
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return make_node(std::move(out), {x}, "sigmoid", [](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = n.value[i];
      g[i] += n.grad[i] * s * (1.0 - s);
    }
  });
}

Value softmax_rows(const Value& x) {
  const Tensor& t = x.data();
  Tensor out(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    auto in = t.row_span(r);
    auto o = out.row_span(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      o[c] = std::exp(in[c] - mx);
      z += o[c];
    }
    for (auto& v : o) v /= z;
  }
  return make_node(std::move(out), {x}, "softmax", [](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < n.value.rows(); ++r) {
      auto s = n.value.row_span(r);
      auto go = n.grad.row_span(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < s.size(); ++c) dot += go[c] * s[c];
      for (std::size_t c = 0; c < s.size(); ++c) g(r, c) += s[c] * (go[c] - dot);
    }
  });
}

Value log(const Value& x) {
  Tensor out = x.data();
  for (auto& v : out.values()) {
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
    v = std::log(v);
  }
  return make_node(std::move(out), {x}, "log", [](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    const Tensor& in = n.parents[0]->value;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] / in[i];
  });
}

Value pow(const Value& x, double p) {
  Tensor out = x.data();
  for (auto& v : out.values()) {
    if (v < 0.0) throw DomainError("pow of negative base " + std::to_string(v));
    v = std::pow(v, p);
  }
  return make_node(std::move(out), {x}, "pow", [p](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    const Tensor& in = n.parents[0]->value;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (n.grad[i] == 0.0) continue;
      const double d = p * std::pow(in[i], p - 1.0);
      if (!std::isfinite(d)) throw NumericError("pow: infinite derivative at base 0");
      g[i] += n.grad[i] * d;
    }
  });
}

Value clamp(const Value& x, double lo, double hi) {
  Tensor out = x.data();
  for (auto& v : out.values()) v = std::clamp(v, lo, hi);
  return make_node(std::move(out), {x}, "clamp", [lo, hi](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    const Tensor& in = n.parents[0]->value;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (in[i] >= lo && in[i] <= hi) g[i] += n.grad[i];
  });
}

Value add(const Value& a, const Value& b) {
  Tensor out = broadcast_apply(a.data(), b.data(), "add", [](double x, double y) { return x + y; });
  return make_node(std::move(out), {a, b}, "add", [](Node& n) {
    accumulate_broadcast(*n.parents[0], n.grad, n.grad, false);
    accumulate_broadcast(*n.parents[1], n.grad, n.grad, false);
  });
}

Value sub(const Value& a, const Value& b) {
  Tensor out = broadcast_apply(a.data(), b.data(), "sub", [](double x, double y) { return x - y; });
  return make_node(std::move(out), {a, b}, "sub", [](Node& n) {
    accumulate_broadcast(*n.parents[0], n.grad, n.grad, false);
    if (n.parents[1]->requires_grad) {
      Tensor neg = n.grad;
      for (auto& v : neg.values()) v = -v;
      accumulate_broadcast(*n.parents[1], neg, neg, false);
    }
  });
}

Value mul(const Value& a, const Value& b) {
  Tensor out = broadcast_apply(a.data(), b.data(), "mul", [](double x, double y) { return x * y; });
  return make_node(std::move(out), {a, b}, "mul", [](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    if (pa.requires_grad)
      accumulate_broadcast(pa, n.grad, expand(pb.value, n.grad.rows(), n.grad.cols()), true);
    if (pb.requires_grad)
      accumulate_broadcast(pb, n.grad, expand(pa.value, n.grad.rows(), n.grad.cols()), true);
  });
}

Value scale(const Value& x, double c) {
  Tensor out = x.data();
  for (auto& v : out.values()) v *= c;
  return make_node(std::move(out), {x}, "scale", [c](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * n.grad[i];
  });
}

Value add_scalar(const Value& x, double c) {
  Tensor out = x.data();
  for (auto& v : out.values()) v += c;
  return make_node(std::move(out), {x}, "add_scalar", [](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  });
}

Value sum(const Value& x) {
  double acc = 0.0;
  for (double v : x.data().values()) acc += v;
  return make_node(Tensor::scalar(acc), {x}, "sum", [](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    for (auto& v : g.values()) v += n.grad[0];
  });
}

Value mean(const Value& x) {
  const double count = static_cast<double>(x.data().size());
  if (count == 0) throw ShapeError("mean of empty tensor");
  double acc = 0.0;
  for (double v : x.data().values()) acc += v;
  return make_node(Tensor::scalar(acc / count), {x}, "mean", [count](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    for (auto& v : g.values()) v += n.grad[0] / count;
  });
}

Value row_sum(const Value& x) {
  const Tensor& t = x.data();
  Tensor out(t.rows(), 1);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    double acc = 0.0;
    for (double v : t.row_span(r)) acc += v;
    out(r, 0) = acc;
  }
  return make_node(std::move(out), {x}, "row_sum", [](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) g(r, c) += n.grad(r, 0);
  });
}

Value squared_l2(const Value& x) {
  double acc = 0.0;
  for (double v : x.data().values()) acc += v * v;
  return make_node(Tensor::scalar(acc), {x}, "squared_l2", [](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    const Tensor& in = n.parents[0]->value;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * in[i] * n.grad[0];
  });
}

Value grad_reverse(const Value& x, double lambda) {
  return make_node(x.data(), {x}, "grad_reverse", [lambda](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= lambda * n.grad[i];
  });
}

namespace {

// Active only on the thread running grad_check.
struct DetachTape {
  bool replay = false;
  std::size_t cursor = 0;
  std::vector<Tensor> values;
};
thread_local DetachTape* g_tape = nullptr;

class TapeScope {
 public:
  explicit TapeScope(DetachTape& t) : prev_(g_tape) { g_tape = &t; }
  ~TapeScope() { g_tape = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  DetachTape* prev_;
};

}  // namespace

Value detach(const Value& x) {
  if (g_tape == nullptr) return Value::constant(x.data());
  if (!g_tape->replay) {
    g_tape->values.push_back(x.data());
    return Value::constant(x.data());
  }
  if (g_tape->cursor >= g_tape->values.size()) {
    throw Error("grad_check: graph made more detach() calls than on the analytic pass");
  }
  const Tensor& t = g_tape->values[g_tape->cursor++];
  require_same_shape(t, x.data(), "detach replay");
  return Value::constant(t);
}

Value concat_cols(const Value& a, const Value& b) {
  const Tensor& ta = a.data();
  const Tensor& tb = b.data();
  if (ta.rows() != tb.rows()) {
    throw ShapeError("concat_cols: " + ta.shape_str() + " and " + tb.shape_str());
  }
  Tensor out(ta.rows(), ta.cols() + tb.cols());
  for (std::size_t r = 0; r < ta.rows(); ++r) {
    for (std::size_t c = 0; c < ta.cols(); ++c) out(r, c) = ta(r, c);
    for (std::size_t c = 0; c < tb.cols(); ++c) out(r, ta.cols() + c) = tb(r, c);
  }
  const std::size_t split = ta.cols();
  return make_node(std::move(out), {a, b}, "concat_cols", [split](Node& n) {
    Node& pa = *n.parents[0];
    Node& pb = *n.parents[1];
    for (std::size_t r = 0; r < n.grad.rows(); ++r) {
      if (pa.requires_grad) {
        Tensor& g = pa.grad_buffer();
        for (std::size_t c = 0; c < split; ++c) g(r, c) += n.grad(r, c);
      }
      if (pb.requires_grad) {
        Tensor& g = pb.grad_buffer();
        for (std::size_t c = split; c < n.grad.cols(); ++c) g(r, c - split) += n.grad(r, c);
      }
    }
  });
}

Value slice_cols(const Value& x, std::size_t begin, std::size_t end) {
  const Tensor& t = x.data();
  if (begin >= end || end > t.cols()) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") of " + t.shape_str());
  }
  Tensor out(t.rows(), end - begin);
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = t(r, c);
  return make_node(std::move(out), {x}, "slice_cols", [begin](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < n.grad.rows(); ++r)
      for (std::size_t c = 0; c < n.grad.cols(); ++c) g(r, begin + c) += n.grad(r, c);
  });
}

Value gather_rows(const Value& x, std::span<const std::size_t> rows) {
  const Tensor& t = x.data();
  Tensor out(rows.size(), t.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= t.rows()) throw ShapeError("gather_rows: index out of range");
    for (std::size_t c = 0; c < t.cols(); ++c) out(i, c) = t(rows[i], c);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return make_node(std::move(out), {x}, "gather_rows", [idx = std::move(idx)](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < n.grad.cols(); ++c) g(idx[i], c) += n.grad(i, c);
  });
}

Value bce_with_logits(const Value& z, const Tensor& targets) {
  require_same_shape(z.data(), targets, "bce_with_logits");
  Tensor out = z.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = out[i];
    out[i] = std::max(v, 0.0) - v * targets[i] + std::log1p(std::exp(-std::abs(v)));
  }
  return make_node(std::move(out), {z}, "bce_with_logits", [targets](Node& n) {
    Tensor& g = n.parents[0]->grad_buffer();
    const Tensor& in = n.parents[0]->value;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = in[i];
      const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      g[i] += n.grad[i] * (s - targets[i]);
    }
  });
}

double grad_check(const std::function<Value()>& loss, std::span<const Value> params, double eps) {
  return grad_check(loss, [&loss] { return loss().item(); }, params, eps);
}

double grad_check(const std::function<Value()>& graph, const std::function<double()>& objective,
                  std::span<const Value> params, double eps) {
  if (eps < 1e-6 || eps > 1e-3) throw ConfigError("grad_check: eps must lie in [1e-6, 1e-3]");
  DetachTape tape;
  TapeScope scope(tape);

  for (const auto& p : params) p.zero_grad();
  graph().backward();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p.grad());
  tape.replay = true;

  auto eval = [&]() {
    tape.cursor = 0;
    const double v = objective();
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
    return v;
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& data = params[k].node()->value;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + eps;
      const double up = eval();
      data[i] = orig - eps;
      const double down = eval();
      data[i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = std::abs(analytic[k][i] - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  for (const auto& p : params) p.zero_grad();
  return worst;
}

}  // namespace debias::ad
