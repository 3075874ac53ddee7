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

// Minimal reverse-mode differentiation over dense row-major matrices.
//
// Every tensor is two dimensional (a scalar is 1x1, a vector is 1xN or Nx1).
// A Value owns a node of the computation graph; operations create new nodes
// that remember their inputs, and Value::backward() walks the graph in
// reverse topological order accumulating exact analytic gradients.
//
// Reductions always run sequentially in index order so that results are
// bit-reproducible.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace debias::ad {

class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor(1, 1, v); }
  static Tensor row(std::vector<double> values) {
    const auto n = values.size();
    return Tensor(1, n, std::move(values));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_str() const;

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<const double> row_span(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  std::span<double> row_span(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily on first accumulation
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  const char* op = "leaf";
  bool requires_grad = false;

  // Returns the gradient buffer, zero-initialized to value's shape if needed.
  Tensor& grad_buffer();
};

class Value {
 public:
  Value() = default;
  explicit Value(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Value constant(Tensor t);
  static Value parameter(Tensor t);

  const Tensor& data() const { return node_->value; }
  Tensor& mutable_data() { return node_->value; }
  // Zero tensor of the right shape if no gradient has reached this node.
  Tensor grad() const;
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  bool valid() const { return node_ != nullptr; }
  const char* op() const { return node_->op; }
  const std::shared_ptr<Node>& node() const { return node_; }

  // Value of a 1x1 tensor.
  double item() const;

  // Back-propagates from this 1x1 value with seed gradient 1.
  void backward() const;
  void zero_grad() const;

 private:
  std::shared_ptr<Node> node_;
};

// ---- primitives ----------------------------------------------------------

Value matmul(const Value& a, const Value& b);
// x (B x in) * w (in x out) + b (1 x out)
Value affine(const Value& x, const Value& w, const Value& b);
Value transpose(const Value& a);

Value relu(const Value& x);
Value sigmoid(const Value& x);
Value softmax_rows(const Value& x);
// Natural log; throws DomainError for any entry <= 0.
Value log(const Value& x);
// Elementwise x^p with real p; throws DomainError for negative bases.
Value pow(const Value& x, double p);
// Clamp into [lo, hi]; gradient passes only where the input is inside.
Value clamp(const Value& x, double lo, double hi);

// Binary elementwise ops. Shapes must agree, except that either operand may
// have a single row and/or a single column and is then broadcast.
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value scale(const Value& x, double c);
Value add_scalar(const Value& x, double c);

Value sum(const Value& x);       // -> 1x1
Value mean(const Value& x);      // -> 1x1
Value row_sum(const Value& x);   // B x N -> B x 1
Value squared_l2(const Value& x);  // -> 1x1

// Identity forward; backward multiplies the incoming gradient by -lambda.
Value grad_reverse(const Value& x, double lambda);
// Identity forward; no gradient flows back. Inside grad_check the outputs of
// detach() are recorded on the analytic pass and replayed on every
// finite-difference pass, so stop-gradient quantities stay constant.
Value detach(const Value& x);

Value concat_cols(const Value& a, const Value& b);
Value slice_cols(const Value& x, std::size_t begin, std::size_t end);
Value gather_rows(const Value& x, std::span<const std::size_t> rows);

// Elementwise binary cross-entropy of logits z against targets t in [0, 1],
// in the stable form max(z, 0) - z t + log(1 + exp(-|z|)).
Value bce_with_logits(const Value& z, const Tensor& targets);

// ---- validation ----------------------------------------------------------

// Maximum over all parameter entries of
//   |analytic - central difference| / max(1, |central difference|).
// `loss` must rebuild the graph on every call.
double grad_check(const std::function<Value()>& loss, std::span<const Value> params,
                  double eps = 1e-5);

// As above, but the analytic gradient comes from back-propagating `graph`
// while the finite differences are taken of `objective`. Used where the
// applied update is not the gradient of the reported loss (gradient
// reversal): `objective` is then the potential that update descends.
double grad_check(const std::function<Value()>& graph, const std::function<double()>& objective,
                  std::span<const Value> params, double eps = 1e-5);

}  // namespace debias::ad
